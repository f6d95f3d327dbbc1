"""Command-line interface: ingestion, dispatch, and report serialization.

Commands: diagnose, mc-table, flag-curve, analytic, oracle.  Every command
is a pure function of (input files, config, seed); reports embed the
effective configuration (never the worker count, which must not affect
output bytes).  Exit codes: 0 success, 2 validation error, 3 numerical
degeneracy, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    StylizedParams,
    enumerate_assignment_variance,
    eps_fixed_variance_ratio_limit,
    randomization_variance_robust,
    randomization_variance_true,
    y_fixed_variance_ratio_limit,
)
from .data import Dataset, contiguous_partition, validate_dataset
from .dgp import (
    GroupedDGP,
    PANEL_PARAMS,
    crossed_shares,
    run_flagging_curve,
    run_grouped_experiment,
)
from .engines import SimConfig, SimReport, run_eps_fixed, run_placebo, run_y_fixed
from .errors import BudgetError, DegeneracyError, ValidationError
from .estimators import ESTIMATORS, ols_simple
from .parallel import resolve_workers
from .rng import derive_seed

_OUTCOME_OPTIONAL_COLUMNS = ("y_placebo", "cluster", "x_realized")


# ---------------------------------------------------------------------------
# ingestion


def _read_rows(path: Path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            table = [(lineno, row) for lineno, row in enumerate(reader, start=1) if row]
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if not table:
        raise ValidationError(f"{path}: empty file")
    (_, header), body = table[0], table[1:]
    return [h.strip() for h in header], body


def _parse_float(path: Path, lineno: int, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValidationError(
            f"{path} line {lineno}: could not parse {value!r} as a number"
        ) from None


def _parse_int(path: Path, lineno: int, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValidationError(
            f"{path} line {lineno}: could not parse {value!r} as an integer"
        ) from None


def ingest(shares_path, outcomes_path) -> tuple[Dataset, np.ndarray | None]:
    """Load and join the shares and outcomes files into a validated Dataset.

    Returns the dataset plus the realized regressor column when present.
    Row order follows the outcomes file.
    """
    shares_path, outcomes_path = Path(shares_path), Path(outcomes_path)
    header, body = _read_rows(shares_path)
    n_sectors = len(header) - 1
    expected = ["region_id"] + [f"s_{j}" for j in range(1, n_sectors + 1)]
    if header != expected or n_sectors < 1:
        raise ValidationError(
            f"{shares_path}: header must be region_id,s_1,...,s_F (got {','.join(header)})"
        )
    share_rows: dict[str, list[float]] = {}
    for lineno, row in body:
        if len(row) != len(header):
            raise ValidationError(
                f"{shares_path} line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        region = row[0].strip()
        if region in share_rows:
            raise ValidationError(f"{shares_path} line {lineno}: duplicate region id {region!r}")
        share_rows[region] = [_parse_float(shares_path, lineno, v) for v in row[1:]]

    header, body = _read_rows(outcomes_path)
    if len(header) < 2 or header[0] != "region_id" or header[1] != "y":
        raise ValidationError(
            f"{outcomes_path}: header must start with region_id,y (got {','.join(header)})"
        )
    extras = header[2:]
    unknown = [c for c in extras if c not in _OUTCOME_OPTIONAL_COLUMNS]
    if unknown or len(set(extras)) != len(extras):
        raise ValidationError(
            f"{outcomes_path}: optional columns must be among "
            f"{', '.join(_OUTCOME_OPTIONAL_COLUMNS)} (got {','.join(extras)})"
        )
    col = {name: i + 2 for i, name in enumerate(extras)}

    region_ids: list[str] = []
    y: list[float] = []
    y_placebo: list[float] = []
    clusters: list[int] = []
    x_realized: list[float] = []
    seen: set[str] = set()
    for lineno, row in body:
        if len(row) != len(header):
            raise ValidationError(
                f"{outcomes_path} line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        region = row[0].strip()
        if region in seen:
            raise ValidationError(
                f"{outcomes_path} line {lineno}: duplicate region id {region!r}"
            )
        seen.add(region)
        if region not in share_rows:
            raise ValidationError(
                f"region {region!r} present in outcomes but missing from shares"
            )
        region_ids.append(region)
        y.append(_parse_float(outcomes_path, lineno, row[1]))
        if "y_placebo" in col:
            y_placebo.append(_parse_float(outcomes_path, lineno, row[col["y_placebo"]]))
        if "cluster" in col:
            clusters.append(_parse_int(outcomes_path, lineno, row[col["cluster"]]))
        if "x_realized" in col:
            x_realized.append(_parse_float(outcomes_path, lineno, row[col["x_realized"]]))

    orphans = set(share_rows) - seen
    if orphans:
        raise ValidationError(
            f"region {sorted(orphans)[0]!r} present in shares but missing from outcomes"
        )

    shares = np.array([share_rows[r] for r in region_ids], dtype=float)
    dataset = validate_dataset(
        region_ids,
        y,
        shares,
        clusters=clusters if "cluster" in col else None,
        y_placebo=y_placebo if "y_placebo" in col else None,
    )
    return dataset, (np.array(x_realized) if "x_realized" in col else None)


# ---------------------------------------------------------------------------
# output helpers


def _emit_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _emit_json(payload: dict, out: str | None) -> None:
    _emit_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", out)


def _emit_csv(comment: str, columns: list[str], rows: list[list], out: str | None) -> None:
    lines = [f"# {comment}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    _emit_text("\n".join(lines) + "\n", out)


def _echo(pairs: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in pairs.items())


def _rate_se(rate: float, n: int) -> float:
    return float(np.sqrt(rate * (1.0 - rate) / n)) if n else 0.0


def _report_block(report: SimReport, threshold: float) -> dict:
    estimators = {}
    for est, rate in report.rates.items():
        estimators[est] = {
            "rejections": report.rejections[est],
            "rate": rate,
            "mc_se": _rate_se(rate, report.b_effective),
            "flag": bool(rate > threshold),
        }
    return {
        "seed": report.seed,
        "replications": report.replications,
        "b_effective": report.b_effective,
        "skipped_degenerate": report.skipped_degenerate,
        "estimators": estimators,
    }


# ---------------------------------------------------------------------------
# configuration plumbing


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{p}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ValidationError(f"{p}: config must be a JSON object")
    return cfg


class _Settings:
    """Flag > command section > config top level > default."""

    def __init__(self, args: argparse.Namespace, command: str):
        self.args = args
        self.config = _load_config(args.config)
        self.section = self.config.get(command, {})
        if not isinstance(self.section, dict):
            raise ValidationError(f"config section {command!r} must be an object")

    def get(self, key: str, default=None, cast=None):
        value = getattr(self.args, key.replace("-", "_"), None)
        if value is None:
            value = self.section.get(key, self.config.get(key, default))
        if value is not None and cast is not None:
            value = cast(value)
        return value

    def require_seed(self) -> int:
        seed = self.get("seed")
        if seed is None:
            raise ValidationError("--seed is required for simulation commands")
        return int(seed)

    def workers(self) -> int:
        configured = self.get("workers")
        return resolve_workers(None if configured is None else int(configured))

    def require_path(self, key: str) -> Path:
        value = self.get(key)
        if value is None:
            raise ValidationError(f"--{key} is required")
        path = Path(value)
        if not path.exists():
            raise ValidationError(f"{key} file not found: {path}")
        return path


def _split_list(value, cast):
    if value is None:
        return None
    if isinstance(value, str):
        items = [v for v in value.split(",") if v.strip()]
    else:
        items = list(value)
    return [cast(v) for v in items]


# ---------------------------------------------------------------------------
# commands


def cmd_diagnose(settings: _Settings) -> None:
    seed = settings.require_seed()
    alpha = settings.get("alpha", 0.05, float)
    threshold = settings.get("threshold", 0.1, float)
    perms = settings.get("perms", 2000, int)
    data, x_realized = ingest(
        settings.require_path("shares"), settings.require_path("outcomes")
    )

    requested = _split_list(settings.get("estimators"), str)
    if requested is None:
        menu = ["robust-hc1", "robust-hc3", "score-agg", "score-agg-null"]
        if data.clusters is not None:
            menu[2:2] = ["crve", "crve-hc3"]
    else:
        unknown = [e for e in requested if e not in ESTIMATORS]
        if unknown:
            raise ValidationError(f"unknown estimators {unknown}")
        menu = requested

    modes = _split_list(settings.get("modes"), str)
    auto = modes is None
    if auto:
        modes = ["y-fixed"]
        if x_realized is not None:
            modes.append("eps-fixed")
        if data.y_placebo is not None:
            modes.append("placebo")
    unknown_modes = [m for m in modes if m not in ("y-fixed", "eps-fixed", "placebo")]
    if unknown_modes:
        raise ValidationError(f"unknown modes {unknown_modes}")

    workers = settings.workers()
    cfg = SimConfig(
        replications=perms,
        seed=seed,
        alpha=alpha,
        estimators=tuple(menu),
        flag_threshold=threshold,
    )
    crve_cfg = SimConfig(
        replications=perms,
        seed=seed,
        alpha=alpha,
        estimators=("crve",),
        flag_threshold=threshold,
    )

    blocks: dict[str, dict] = {}
    for mode in modes:
        if mode == "y-fixed":
            blocks[mode] = _report_block(run_y_fixed(data, cfg, workers), threshold)
        elif mode == "eps-fixed":
            if x_realized is None:
                raise ValidationError("missing realized shocks (x_realized column)")
            if data.clusters is None:
                raise ValidationError("eps-fixed diagnosis assesses crve; cluster column required")
            beta_hat = ols_simple(data.y, x_realized).slope
            report = run_eps_fixed(data, x_realized, beta_hat, crve_cfg, workers)
            block = _report_block(report, threshold)
            block["beta_hat"] = beta_hat
            blocks[mode] = block
        else:
            if data.y_placebo is None:
                raise ValidationError("placebo outcome missing (y_placebo column)")
            if data.clusters is None:
                raise ValidationError("placebo diagnosis assesses crve; cluster column required")
            blocks[mode] = _report_block(run_placebo(data, crve_cfg, workers), threshold)

    _emit_json(
        {
            "version": __version__,
            "command": "diagnose",
            "seed": seed,
            "config": {
                "alpha": alpha,
                "threshold": threshold,
                "perms": perms,
                "estimators": menu,
                "modes": modes,
            },
            "data": {
                "n_regions": data.n_regions,
                "n_sectors": data.n_sectors,
                "n_clusters": data.n_clusters,
                "has_placebo": data.y_placebo is not None,
                "has_x_realized": x_realized is not None,
            },
            "modes": blocks,
        },
        settings.get("out"),
    )


def cmd_mc_table(settings: _Settings) -> None:
    seed = settings.require_seed()
    alpha = settings.get("alpha", 0.05, float)
    threshold = settings.get("threshold", 0.1, float)
    outer_reps = settings.get("reps", 2000, int)
    perms = settings.get("perms", 200, int)
    per_state = settings.get("per_state", 10, int)
    states = _split_list(settings.get("states", [20, 100]), int)
    workers = settings.workers()

    rows = []
    cell = 0
    for panel, params in PANEL_PARAMS.items():
        for n_states in states:
            dgp = GroupedDGP(n_states=n_states, per_state=per_state, **params)
            cfg = SimConfig(
                replications=perms,
                seed=derive_seed(seed, cell),
                alpha=alpha,
                estimators=("robust-hc1",),
                flag_threshold=threshold,
            )
            result = run_grouped_experiment(dgp, outer_reps, cfg, workers)
            rows.append(
                [
                    panel,
                    n_states,
                    result.size,
                    result.size_se,
                    result.pr_flag_y,
                    result.pr_flag_y_se,
                    result.pr_flag_eps,
                    result.pr_flag_eps_se,
                ]
            )
            cell += 1

    comment = _echo(
        {
            "ssdiag": __version__,
            "command": "mc-table",
            "seed": seed,
            "reps": outer_reps,
            "perms": perms,
            "alpha": alpha,
            "threshold": threshold,
            "per_state": per_state,
        }
    )
    _emit_csv(
        comment,
        [
            "panel",
            "n_states",
            "size",
            "size_mc_se",
            "pr_gamma_y",
            "pr_gamma_y_mc_se",
            "pr_gamma_eps",
            "pr_gamma_eps_mc_se",
        ],
        rows,
        settings.get("out"),
    )


def cmd_flag_curve(settings: _Settings) -> None:
    seed = settings.require_seed()
    alpha = settings.get("alpha", 0.05, float)
    threshold = settings.get("threshold", 0.1, float)
    outer_reps = settings.get("reps", 500, int)
    perms = settings.get("perms", 200, int)
    gammas = _split_list(settings.get("gammas", [0.0, 0.25, 0.5, 1.0]), float)
    gammas = sorted(set(gammas))
    workers = settings.workers()

    shares_arg = settings.get("shares")
    if shares_arg is not None:
        data, _ = ingest(settings.require_path("shares"), settings.require_path("outcomes"))
        if data.clusters is None:
            raise ValidationError("flag-curve on user shares requires a cluster column")
        shares, clusters = data.shares, data.clusters
        source = "user"
    else:
        n_clusters = settings.get("clusters", 25, int)
        n_sectors = settings.get("sectors", 20, int)
        shares, clusters = crossed_shares(n_clusters, n_sectors)
        source = f"synthetic-crossed:{n_clusters}x{n_sectors}"

    cfg = SimConfig(
        replications=perms,
        seed=seed,
        alpha=alpha,
        estimators=("crve",),
        flag_threshold=threshold,
    )
    points = run_flagging_curve(shares, clusters, gammas, outer_reps, cfg, workers)

    comment = _echo(
        {
            "ssdiag": __version__,
            "command": "flag-curve",
            "seed": seed,
            "reps": outer_reps,
            "perms": perms,
            "alpha": alpha,
            "threshold": threshold,
            "shares": source,
        }
    )
    _emit_csv(
        comment,
        [
            "gamma",
            "size",
            "size_mc_se",
            "pr_flag_y",
            "pr_flag_y_mc_se",
            "pr_flag_eps",
            "pr_flag_eps_mc_se",
        ],
        [
            [p.gamma, p.size, p.size_se, p.pr_flag_y, p.pr_flag_y_se, p.pr_flag_eps, p.pr_flag_eps_se]
            for p in points
        ],
        settings.get("out"),
    )


def cmd_analytic(settings: _Settings) -> None:
    params = StylizedParams(
        beta=settings.get("beta", 0.0, float),
        sigma2=settings.get("sigma2", 1.0, float),
        rho=settings.get("rho", 0.0, float),
        group_size=settings.get("group_size", 1, int),
    )
    _emit_json(
        {
            "version": __version__,
            "command": "analytic",
            "params": {
                "beta": params.beta,
                "sigma2": params.sigma2,
                "rho": params.rho,
                "group_size": params.group_size,
            },
            "y_fixed_limit": y_fixed_variance_ratio_limit(params),
            "eps_fixed_limit": eps_fixed_variance_ratio_limit(params),
        },
        settings.get("out"),
    )


def cmd_oracle(settings: _Settings) -> None:
    outcomes = settings.require_path("outcomes")
    group_size = settings.get("group_size", 1, int)
    header, body = _read_rows(outcomes)
    if len(header) < 2 or header[0] != "region_id" or header[1] != "y":
        raise ValidationError(
            f"{outcomes}: header must start with region_id,y (got {','.join(header)})"
        )
    for lineno, row in body:
        if len(row) < 2:
            raise ValidationError(f"{outcomes} line {lineno}: expected at least 2 fields")
    y = np.array([_parse_float(outcomes, lineno, row[1]) for lineno, row in body])
    n = y.shape[0]
    if group_size < 1 or n % group_size:
        raise ValidationError(f"{n} units do not split into groups of {group_size}")
    n_groups = n // group_size
    if n_groups % 2 or n_groups <= 2:
        raise ValidationError("oracle needs an even group count above 2")
    design = contiguous_partition(n_groups, group_size)
    enum = enumerate_assignment_variance(y, design)
    formula_true = randomization_variance_true(y, design)
    formula_robust = randomization_variance_robust(y, design)
    _emit_json(
        {
            "version": __version__,
            "command": "oracle",
            "config": {"group_size": group_size, "n_groups": n_groups, "n_units": n},
            "enumeration": {
                "mean": enum.mean,
                "variance": enum.variance,
                "n_assignments": enum.n_assignments,
            },
            "formula_true": formula_true,
            "formula_robust": formula_robust,
            "ratio_formula_to_enumeration": (
                formula_true / enum.variance if enum.variance > 0 else None
            ),
            "finite_sample_factor": (n_groups - 1) / (n_groups - 2),
        },
        settings.get("out"),
    )


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssdiag",
        description="Design-based simulation diagnostics for shift-share regressions.",
    )
    parser.add_argument("--version", action="version", version=f"ssdiag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, budget: bool = True):
        p.add_argument("--config", help="JSON config file; flags override its keys")
        p.add_argument("--seed", type=int, help="RNG seed (required for simulation commands)")
        p.add_argument("--workers", type=int, help="worker processes (or SSDIAG_WORKERS)")
        p.add_argument("--out", help="output path (default: stdout)")
        if budget:
            p.add_argument("--alpha", type=float, help="test level (default 0.05)")
            p.add_argument("--threshold", type=float, help="flag threshold on the rejection rate (default 0.1)")
            p.add_argument("--reps", type=int, help="outer replications")
            p.add_argument("--perms", type=int, help="simulation replications per run")

    p = sub.add_parser("diagnose", help="run the simulation diagnostics on a dataset")
    common(p)
    p.add_argument("--shares", help="shares CSV (region_id,s_1,...,s_F)")
    p.add_argument("--outcomes", help="outcomes CSV (region_id,y[,y_placebo][,cluster][,x_realized])")
    p.add_argument("--estimators", help="comma-separated estimator menu for the y-fixed run")
    p.add_argument("--modes", help="comma-separated subset of y-fixed,eps-fixed,placebo")

    p = sub.add_parser("mc-table", help="grouped-scenario experiment table")
    common(p)
    p.add_argument("--states", help="comma-separated state counts (default 20,100)")
    p.add_argument("--per-state", type=int, dest="per_state", help="units per state (default 10)")

    p = sub.add_parser("flag-curve", help="flagging probability vs confound strength")
    common(p)
    p.add_argument("--gammas", help="comma-separated confound strengths")
    p.add_argument("--shares", help="optional user shares CSV")
    p.add_argument("--outcomes", help="outcomes CSV providing cluster labels (user shares)")
    p.add_argument("--clusters", type=int, help="synthetic crossed design: cluster count (default 25)")
    p.add_argument("--sectors", type=int, help="synthetic crossed design: sector count (default 20)")

    p = sub.add_parser("analytic", help="closed-form variance-ratio limits")
    common(p, budget=False)
    p.add_argument("--beta", type=float, help="treatment effect (default 0)")
    p.add_argument("--sigma2", type=float, help="error variance (default 1)")
    p.add_argument("--rho", type=float, help="within-group covariance (default 0)")
    p.add_argument("--group-size", type=int, dest="group_size", help="group size m (default 1)")

    p = sub.add_parser("oracle", help="compare exact-form variance against enumeration")
    common(p, budget=False)
    p.add_argument("--outcomes", help="outcomes CSV (region_id,y,...)")
    p.add_argument("--group-size", type=int, dest="group_size", help="group size m (default 1)")

    return parser


_DISPATCH = {
    "diagnose": cmd_diagnose,
    "mc-table": cmd_mc_table,
    "flag-curve": cmd_flag_curve,
    "analytic": cmd_analytic,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        settings = _Settings(args, args.command)
        _DISPATCH[args.command](settings)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegeneracyError as exc:
        print(f"degeneracy: {exc}", file=sys.stderr)
        return 3
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
