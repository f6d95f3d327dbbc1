"""Design-based simulation engines.

Three outcome-fixed procedures for shift-share data (y-fixed, eps-fixed,
placebo) plus a treatment-permutation engine for partition designs.  Each
replication resamples the regressor, refits the bivariate OLS, and tests a
zero slope with every requested variance estimator; reports carry rejection
frequencies.

Determinism contract: replication b draws from substream(seed, b) only, and
rejection counts are integers, so reports are identical for any worker
count or execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from itertools import combinations

import numpy as np
from scipy import stats

from .data import SHOCK_LAWS, Dataset, PartitionDesign, partition_to_shares, unit_treatment
from .errors import ValidationError
from .estimators import ESTIMATORS
from .parallel import chunk_bounds, map_chunks
from .rng import substream

_CHUNK = 256
_EXHAUSTIVE_MAX_GROUPS = 12


@dataclass(frozen=True)
class SimConfig:
    """Replication budget and test menu for one simulation run."""

    replications: int
    seed: int
    shock_law: str = "iid-standard-normal"
    alpha: float = 0.05
    estimators: tuple[str, ...] = ("robust-hc1",)
    flag_threshold: float = 0.1

    def __post_init__(self):
        if self.replications < 1:
            raise ValidationError("need at least 1 replication")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError("alpha must be in (0, 1)")
        if self.shock_law not in SHOCK_LAWS:
            raise ValidationError(f"unknown shock law {self.shock_law!r}")
        if not self.estimators:
            raise ValidationError("estimator menu is empty")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise ValidationError(f"unknown estimators {unknown}")


@dataclass(frozen=True)
class SimReport:
    """Per-estimator rejection tallies for one simulation run."""

    mode: str
    seed: int
    replications: int
    b_effective: int
    skipped_degenerate: int
    rejections: dict[str, int]
    rates: dict[str, float]


# ---------------------------------------------------------------------------
# regressor draws


def draw_shock_values(law: str, n_sectors: int, rng: np.random.Generator) -> np.ndarray:
    """One shock vector under the named law (parity checked at draw time)."""
    if law == "iid-standard-normal":
        return rng.standard_normal(n_sectors)
    if law == "balanced-binary":
        if n_sectors % 2:
            raise ValidationError("balanced-binary shocks require an even sector count")
        values = np.zeros(n_sectors)
        values[rng.permutation(n_sectors)[: n_sectors // 2]] = 1.0
        return values
    raise ValidationError(f"unknown shock law {law!r}")


def draw_balanced_assignment(n_groups: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random treated set of exactly half the groups."""
    treated = np.zeros(n_groups, dtype=bool)
    treated[rng.permutation(n_groups)[: n_groups // 2]] = True
    return treated


def _shares_regressors(shares, law, seed, lo, hi) -> np.ndarray:
    shocks = np.empty((hi - lo, shares.shape[1]))
    for b in range(lo, hi):
        shocks[b - lo] = draw_shock_values(law, shares.shape[1], substream(seed, b))
    return shocks @ shares.T


def _partition_regressors(group_of, n_groups, seed, lo, hi) -> np.ndarray:
    out = np.empty((hi - lo, group_of.shape[0]))
    for b in range(lo, hi):
        treated = draw_balanced_assignment(n_groups, substream(seed, b))
        out[b - lo] = treated[group_of]
    return out


def enumerate_balanced_assignments(n_groups: int) -> np.ndarray:
    """All C(F, F/2) balanced treated sets as a boolean matrix."""
    if n_groups % 2:
        raise ValidationError("balanced assignment requires an even group count")
    if n_groups > _EXHAUSTIVE_MAX_GROUPS:
        raise ValidationError(
            f"exhaustive mode supports at most {_EXHAUSTIVE_MAX_GROUPS} groups"
        )
    rows = np.zeros((math.comb(n_groups, n_groups // 2), n_groups), dtype=bool)
    for i, treated in enumerate(combinations(range(n_groups), n_groups // 2)):
        rows[i, list(treated)] = True
    return rows


# ---------------------------------------------------------------------------
# vectorized test kernel


@dataclass(frozen=True)
class _Kernel:
    """Precomputed context for testing a zero slope over a block of draws."""

    y: np.ndarray
    estimators: tuple[str, ...]
    crits: np.ndarray  # t critical value per estimator
    cluster_onehot: np.ndarray | None  # (N, G)
    shares: np.ndarray | None


def _make_kernel(y, estimators, alpha, clusters, shares) -> _Kernel:
    n = y.shape[0]
    cluster_onehot = None
    dofs = []
    for est in estimators:
        if est in ("robust-hc1", "robust-hc3"):
            dofs.append(n - 2)
        elif est in ("crve", "crve-hc3"):
            if clusters is None:
                raise ValidationError(f"{est} requires cluster labels")
            n_clusters = int(clusters.max()) + 1
            if n_clusters < 2:
                raise ValidationError("need at least 2 clusters")
            if cluster_onehot is None:
                cluster_onehot = np.zeros((n, n_clusters))
                cluster_onehot[np.arange(n), clusters] = 1.0
            dofs.append(n_clusters - 1)
        else:  # score-agg family
            if shares is None:
                raise ValidationError(f"{est} requires a share matrix")
            if shares.shape[1] < 2:
                raise ValidationError("need at least 2 sectors")
            dofs.append(shares.shape[1] - 1)
    crits = stats.t.ppf(1.0 - alpha / 2.0, np.asarray(dofs, dtype=float))
    return _Kernel(
        y=y,
        estimators=tuple(estimators),
        crits=crits,
        cluster_onehot=cluster_onehot,
        shares=shares,
    )


def _kernel_counts(kernel: _Kernel, X: np.ndarray) -> tuple[np.ndarray, int]:
    """Rejection counts per estimator plus the skipped-replication count.

    Mirrors the scalar path (ols_simple + var_* + t_test) replication by
    replication; the estimator test suite pins that agreement.
    """
    y = kernel.y
    n = y.shape[0]
    xbar = X.mean(axis=1)
    Xc = X - xbar[:, None]
    ssq = np.einsum("bn,bn->b", Xc, Xc)
    usable = ssq > 1e-12 * np.einsum("bn,bn->b", X, X)

    need_leverage = any(e in ("robust-hc3", "crve-hc3") for e in kernel.estimators)
    with np.errstate(divide="ignore", invalid="ignore"):
        yc = y - y.mean()
        slope = np.where(usable, (Xc @ yc) / ssq, 0.0)
        E = yc[None, :] - slope[:, None] * Xc
        if need_leverage:
            H = 1.0 / n + Xc * Xc / ssq[:, None]
            usable &= ~np.any(H >= 1.0 - 1e-12, axis=1)
            D = E / (1.0 - H)

        counts = np.zeros(len(kernel.estimators), dtype=np.int64)
        ssq2 = ssq * ssq
        for k, est in enumerate(kernel.estimators):
            if est == "robust-hc1":
                value = n / (n - 2) * np.einsum("bn,bn->b", Xc * Xc, E * E) / ssq2
            elif est == "robust-hc3":
                value = n / (n - 2) * np.einsum("bn,bn->b", Xc * Xc, D * D) / ssq2
            elif est in ("crve", "crve-hc3"):
                res = E if est == "crve" else D
                scores = (Xc * res) @ kernel.cluster_onehot
                G = kernel.cluster_onehot.shape[1]
                factor = G / (G - 1) * (n - 1) / (n - 2)
                value = factor * np.einsum("bg,bg->b", scores, scores) / ssq2
            else:  # score-agg / score-agg-null
                res = E + slope[:, None] * Xc if est == "score-agg-null" else E
                scores = (Xc * res) @ kernel.shares
                F = kernel.shares.shape[1]
                value = F / (F - 1) * np.einsum("bf,bf->b", scores, scores) / ssq2
            tstat = slope / np.sqrt(value)
            reject = np.where(value > 0.0, np.abs(tstat) >= kernel.crits[k], slope != 0.0)
            counts[k] = int(np.count_nonzero(reject & usable))

    return counts, int(np.count_nonzero(~usable))


def _sim_chunk(kernel, draw, bounds) -> tuple[np.ndarray, int]:
    X = draw(*bounds)
    return _kernel_counts(kernel, X)


def _run_sim(y, mode, cfg, workers, draw, clusters, shares, regressors=None) -> SimReport:
    kernel = _make_kernel(np.asarray(y, dtype=float), cfg.estimators, cfg.alpha, clusters, shares)
    if regressors is not None:
        n_reps = regressors.shape[0]
        results = [_kernel_counts(kernel, regressors)]
    else:
        n_reps = cfg.replications
        bounds = chunk_bounds(n_reps, _CHUNK)
        results = map_chunks(partial(_sim_chunk, kernel, draw), bounds, workers)
    counts = np.zeros(len(cfg.estimators), dtype=np.int64)
    skipped = 0
    for chunk_counts, chunk_skipped in results:
        counts += chunk_counts
        skipped += chunk_skipped
    b_effective = n_reps - skipped
    rejections = {est: int(c) for est, c in zip(cfg.estimators, counts)}
    rates = {
        est: (c / b_effective if b_effective else 0.0) for est, c in rejections.items()
    }
    return SimReport(
        mode=mode,
        seed=cfg.seed,
        replications=n_reps,
        b_effective=b_effective,
        skipped_degenerate=skipped,
        rejections=rejections,
        rates=rates,
    )


# ---------------------------------------------------------------------------
# public engines


def run_y_fixed(data: Dataset, cfg: SimConfig, workers: int = 1) -> SimReport:
    """Hold the realized outcomes fixed and resample sector shocks."""
    if cfg.shock_law == "balanced-binary" and data.n_sectors % 2:
        raise ValidationError("balanced-binary shocks require an even sector count")
    draw = partial(_shares_regressors, data.shares, cfg.shock_law, cfg.seed)
    return _run_sim(data.y, "y-fixed", cfg, workers, draw, data.clusters, data.shares)


def run_eps_fixed(
    data: Dataset,
    x_realized,
    beta_hat: float,
    cfg: SimConfig,
    workers: int = 1,
) -> SimReport:
    """Resample shocks holding the residualized outcome y - beta_hat*x fixed."""
    x_realized = np.asarray(x_realized, dtype=float)
    if x_realized.shape != data.y.shape:
        raise ValidationError("realized regressor does not match outcomes")
    if cfg.shock_law == "balanced-binary" and data.n_sectors % 2:
        raise ValidationError("balanced-binary shocks require an even sector count")
    ydot = data.y - beta_hat * x_realized
    draw = partial(_shares_regressors, data.shares, cfg.shock_law, cfg.seed)
    return _run_sim(ydot, "eps-fixed", cfg, workers, draw, data.clusters, data.shares)


def run_placebo(data: Dataset, cfg: SimConfig, workers: int = 1) -> SimReport:
    """y-fixed simulation on the pre-treatment outcome."""
    if data.y_placebo is None:
        raise ValidationError("placebo outcome missing")
    if cfg.shock_law == "balanced-binary" and data.n_sectors % 2:
        raise ValidationError("balanced-binary shocks require an even sector count")
    draw = partial(_shares_regressors, data.shares, cfg.shock_law, cfg.seed)
    return _run_sim(
        data.y_placebo, "placebo", cfg, workers, draw, data.clusters, data.shares
    )


def run_partition_permutation(
    y,
    design: PartitionDesign,
    mode: str,
    cfg: SimConfig,
    beta_hat: float | None = None,
    workers: int = 1,
    exhaustive: bool = False,
) -> SimReport:
    """Resample balanced group-level assignments for a partition design.

    ``mode`` selects the fixed outcome: the realized y, or the residualized
    y - beta_hat * treatment (``beta_hat`` required).  With ``exhaustive``
    every balanced assignment is evaluated exactly once (small designs only),
    replacing the replication budget.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[0] != design.n_units:
        raise ValidationError("outcome length does not match the design")
    if mode not in ("y-fixed", "eps-fixed"):
        raise ValidationError(f"unknown mode {mode!r}")
    if mode == "eps-fixed":
        if beta_hat is None:
            raise ValidationError("eps-fixed mode requires beta_hat")
        y = y - beta_hat * unit_treatment(design)

    # groups double as clusters and as one-hot shares when those menus ask
    needs_clusters = any(e in ("crve", "crve-hc3") for e in cfg.estimators)
    clusters = design.group_of if needs_clusters else None
    needs_shares = any(e.startswith("score-agg") for e in cfg.estimators)
    shares = partition_to_shares(design) if needs_shares else None

    if exhaustive:
        treated_rows = enumerate_balanced_assignments(design.n_groups)
        regressors = treated_rows[:, design.group_of].astype(float)
        return _run_sim(y, mode, cfg, workers, None, clusters, shares, regressors=regressors)

    draw = partial(_partition_regressors, design.group_of, design.n_groups, cfg.seed)
    return _run_sim(y, mode, cfg, workers, draw, clusters, shares)
