"""Monte Carlo experiment generators.

Two data-generating processes drive the experiments:

* a grouped DGP (states of equal size, balanced state-level treatment,
  optional state shocks and state-heterogeneous effects) used to study the
  distribution of the simulation diagnostics across repeated draws;
* a spatial-confound DGP over a fixed share matrix used to trace the
  probability of flagging a problem as the confound strength varies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from .data import Dataset, PartitionDesign, partition_design, unit_treatment
from .engines import SimConfig, run_eps_fixed, run_partition_permutation, run_y_fixed
from .errors import ValidationError
from .estimators import ols_simple, t_test, var_cluster, var_robust
from .parallel import chunk_bounds, map_chunks
from .rng import derive_seed, substream

_OUTER_CHUNK = 64

# scenario panels for the grouped experiment table
PANEL_PARAMS = {
    "A": {"beta": 0.5, "omega": 0.0, "het_loading": 0.0},
    "B": {"beta": 0.5, "omega": 0.3, "het_loading": 0.0},
    "C": {"beta": 0.0, "omega": 0.3, "het_loading": 0.0},
    "D": {"beta": 0.0, "omega": 0.0, "het_loading": 0.0},
    "E": {"beta": 0.0, "omega": 0.0, "het_loading": 0.4},
}


@dataclass(frozen=True)
class GroupedDGP:
    """States of ``per_state`` units each; half the states are treated.

    Untreated outcome: omega * state_shock + unit_noise (both standard
    normal).  Treated outcome adds beta plus het_loading * state_shock, so a
    nonzero het_loading yields state-heterogeneous effects with zero mean.
    """

    n_states: int
    per_state: int = 10
    omega: float = 0.0
    beta: float = 0.0
    het_loading: float = 0.0

    def __post_init__(self):
        if self.n_states < 2 or self.n_states % 2:
            raise ValidationError("n_states must be even and at least 2")
        if self.per_state < 1:
            raise ValidationError("per_state must be at least 1")
        if self.omega < 0 or self.het_loading < 0:
            raise ValidationError("loadings must be nonnegative")


@dataclass(frozen=True)
class GroupedDraw:
    y: np.ndarray
    design: PartitionDesign
    sate: float


def draw_grouped(dgp: GroupedDGP, rng: np.random.Generator) -> GroupedDraw:
    """One realized sample: outcomes, design, and the realized SATE."""
    n_states, m = dgp.n_states, dgp.per_state
    state_shock = rng.standard_normal(n_states)
    noise = rng.standard_normal(n_states * m)
    treated = np.zeros(n_states, dtype=bool)
    treated[rng.permutation(n_states)[: n_states // 2]] = True
    group_of = np.repeat(np.arange(n_states), m)
    y0 = dgp.omega * state_shock[group_of] + noise
    effect = dgp.beta + dgp.het_loading * state_shock[group_of]
    y = np.where(treated[group_of], y0 + effect, y0)
    design = partition_design(group_of, treated)
    return GroupedDraw(y=y, design=design, sate=float(effect.mean()))


@dataclass(frozen=True)
class GroupedExperimentResult:
    size: float
    size_se: float
    pr_flag_y: float
    pr_flag_y_se: float
    pr_flag_eps: float
    pr_flag_eps_se: float
    outer_reps: int


def _proportion_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def _grouped_chunk(dgp, cfg, bounds) -> np.ndarray:
    lo, hi = bounds
    counts = np.zeros(3, dtype=np.int64)
    flag_estimator = cfg.estimators[0]
    for j in range(lo, hi):
        draw = draw_grouped(dgp, substream(cfg.seed, j, 0))
        x = unit_treatment(draw.design)
        fit = ols_simple(draw.y, x)
        # size column: test the true effect with plain robust inference
        result = t_test(fit.slope, dgp.beta, var_robust(fit, "hc1"), cfg.alpha)
        counts[0] += result.reject
        report_y = run_partition_permutation(
            draw.y,
            draw.design,
            "y-fixed",
            replace(cfg, seed=derive_seed(cfg.seed, j, 1)),
        )
        counts[1] += report_y.rates[flag_estimator] > cfg.flag_threshold
        report_eps = run_partition_permutation(
            draw.y,
            draw.design,
            "eps-fixed",
            replace(cfg, seed=derive_seed(cfg.seed, j, 2)),
            beta_hat=fit.slope,
        )
        counts[2] += report_eps.rates[flag_estimator] > cfg.flag_threshold
    return counts


def run_grouped_experiment(
    dgp: GroupedDGP,
    outer_reps: int,
    cfg: SimConfig,
    workers: int = 1,
) -> GroupedExperimentResult:
    """Distribution of the simulation diagnostics across repeated samples.

    Per outer draw: (a) one realized-data test of the true effect with
    robust-hc1 (size tally); (b) y-fixed and eps-fixed permutation
    simulations, flag-tallied against cfg.flag_threshold using the first
    estimator in cfg.estimators.  eps-fixed residualizes with the realized
    OLS slope.
    """
    if outer_reps < 1:
        raise ValidationError("need at least 1 outer replication")
    parts = map_chunks(
        partial(_grouped_chunk, dgp, cfg),
        chunk_bounds(outer_reps, _OUTER_CHUNK),
        workers,
    )
    counts = np.sum(parts, axis=0)
    size, pr_y, pr_eps = (float(c) / outer_reps for c in counts)
    return GroupedExperimentResult(
        size=size,
        size_se=_proportion_se(size, outer_reps),
        pr_flag_y=pr_y,
        pr_flag_y_se=_proportion_se(pr_y, outer_reps),
        pr_flag_eps=pr_eps,
        pr_flag_eps_se=_proportion_se(pr_eps, outer_reps),
        outer_reps=outer_reps,
    )


# ---------------------------------------------------------------------------
# spatial-confound (flagging) experiment


def crossed_shares(n_clusters: int, n_sectors: int) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic crossed design: unit (c, s) belongs to cluster c and sector s.

    Sectors cut across clusters (each cluster spans every sector), so a
    sector-level confound induces correlation that cluster-robust inference
    cannot absorb.  Clusters equal to sectors would make the confound purely
    within-cluster and leave nothing for the diagnostics to detect.
    """
    if n_clusters < 2 or n_sectors < 2:
        raise ValidationError("need at least 2 clusters and 2 sectors")
    n = n_clusters * n_sectors
    shares = np.zeros((n, n_sectors))
    shares[np.arange(n), np.tile(np.arange(n_sectors), n_clusters)] = 1.0
    return shares, np.repeat(np.arange(n_clusters), n_sectors)


@dataclass(frozen=True)
class FlaggingDGP:
    """Outcome with a latent shift-share confound of strength gamma_sc.

    y*_i = z_i + gamma_sc * sum_f w_if * u_f with z and the latent shocks u
    iid standard normal.  The regressor uses an independent shock draw over
    the same shares, so the regression slope has mean zero while the errors
    inherit share-driven spatial correlation scaled by |gamma_sc|.
    """

    shares: np.ndarray
    clusters: np.ndarray
    gamma_sc: float

    def __post_init__(self):
        shares = np.asarray(self.shares, dtype=float)
        clusters = np.asarray(self.clusters, dtype=np.int64)
        if shares.ndim != 2:
            raise ValidationError("shares must be a matrix")
        if clusters.shape != (shares.shape[0],):
            raise ValidationError("cluster labels do not match shares")
        object.__setattr__(self, "shares", shares)
        object.__setattr__(self, "clusters", clusters)


@dataclass(frozen=True)
class FlaggingDraw:
    y_star: np.ndarray
    x: np.ndarray


def draw_flagging(dgp: FlaggingDGP, rng: np.random.Generator) -> FlaggingDraw:
    """One (outcome, regressor) pair; observed and latent shocks independent."""
    n, n_sectors = dgp.shares.shape
    z = rng.standard_normal(n)
    latent = rng.standard_normal(n_sectors)
    observed = rng.standard_normal(n_sectors)
    return FlaggingDraw(
        y_star=z + dgp.gamma_sc * (dgp.shares @ latent),
        x=dgp.shares @ observed,
    )


@dataclass(frozen=True)
class FlagCurvePoint:
    gamma: float
    size: float
    size_se: float
    pr_flag_y: float
    pr_flag_y_se: float
    pr_flag_eps: float
    pr_flag_eps_se: float
    outer_reps: int


def _flagging_chunk(shares, clusters, region_ids, gammas, cfg, bounds) -> np.ndarray:
    lo, hi = bounds
    counts = np.zeros((len(gammas), 3), dtype=np.int64)
    inner_cfg = replace(cfg, estimators=("crve",))
    for j in range(lo, hi):
        rng = substream(cfg.seed, j, 0)
        n, n_sectors = shares.shape
        z = rng.standard_normal(n)
        latent_x = shares @ rng.standard_normal(n_sectors)
        x = shares @ rng.standard_normal(n_sectors)
        seed_y = derive_seed(cfg.seed, j, 1)
        seed_eps = derive_seed(cfg.seed, j, 2)
        for gi, gamma in enumerate(gammas):
            y_star = z + gamma * latent_x
            fit = ols_simple(y_star, x)
            result = t_test(fit.slope, 0.0, var_cluster(fit, clusters, "cr1"), cfg.alpha)
            counts[gi, 0] += result.reject
            data = Dataset(region_ids=region_ids, y=y_star, shares=shares, clusters=clusters)
            report_y = run_y_fixed(data, replace(inner_cfg, seed=seed_y))
            counts[gi, 1] += report_y.rates["crve"] > cfg.flag_threshold
            report_eps = run_eps_fixed(
                data, x, fit.slope, replace(inner_cfg, seed=seed_eps)
            )
            counts[gi, 2] += report_eps.rates["crve"] > cfg.flag_threshold
    return counts


def run_flagging_curve(
    shares,
    clusters,
    gamma_grid,
    outer_reps: int,
    cfg: SimConfig,
    workers: int = 1,
) -> list[FlagCurvePoint]:
    """Flagging probabilities and test size along a confound-strength grid.

    Per gamma and outer draw: test a zero slope with cluster-robust inference
    (size tally) and run y-fixed plus eps-fixed shock simulations for the
    crve estimator, flagging when the rejection rate exceeds the threshold.
    Draws are paired across gamma values (same substream per outer index), so
    curve differences are low-noise.
    """
    shares = np.asarray(shares, dtype=float)
    clusters = np.asarray(clusters, dtype=np.int64)
    gammas = [float(g) for g in gamma_grid]
    if not gammas:
        raise ValidationError("gamma grid is empty")
    if outer_reps < 1:
        raise ValidationError("need at least 1 outer replication")
    region_ids = tuple(f"r{i}" for i in range(shares.shape[0]))
    parts = map_chunks(
        partial(_flagging_chunk, shares, clusters, region_ids, gammas, cfg),
        chunk_bounds(outer_reps, _OUTER_CHUNK),
        workers,
    )
    counts = np.sum(parts, axis=0)
    points = []
    for gi, gamma in enumerate(gammas):
        size, pr_y, pr_eps = (float(c) / outer_reps for c in counts[gi])
        points.append(
            FlagCurvePoint(
                gamma=gamma,
                size=size,
                size_se=_proportion_se(size, outer_reps),
                pr_flag_y=pr_y,
                pr_flag_y_se=_proportion_se(pr_y, outer_reps),
                pr_flag_eps=pr_eps,
                pr_flag_eps_se=_proportion_se(pr_eps, outer_reps),
                outer_reps=outer_reps,
            )
        )
    return points
