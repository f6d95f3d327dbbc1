"""Domain types: datasets, partition designs, shock draws, and regressor construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SHOCK_LAWS = ("iid-standard-normal", "balanced-binary")


def _frozen_array(values, dtype=float) -> np.ndarray:
    """Copy into a read-only contiguous array (all domain types are immutable)."""
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """One cross-section: outcomes, exposure shares, optional clusters and placebo.

    Construct through :func:`validate_dataset`; the raw constructor performs
    no checks and is reserved for internal pre-validated inputs.
    """

    region_ids: tuple[str, ...]
    y: np.ndarray
    shares: np.ndarray  # (N, F), nonnegative, no all-zero row
    clusters: np.ndarray | None = None  # contiguous int labels 0..G-1
    y_placebo: np.ndarray | None = None

    @property
    def n_regions(self) -> int:
        return self.y.shape[0]

    @property
    def n_sectors(self) -> int:
        return self.shares.shape[1]

    @property
    def n_clusters(self) -> int | None:
        if self.clusters is None:
            return None
        return int(self.clusters.max()) + 1


@dataclass(frozen=True)
class PartitionDesign:
    """Equal-size grouping of units with a balanced binary group assignment.

    ``n_groups`` groups of ``group_size`` units each; exactly half the groups
    are treated.  Construct through :func:`partition_design` or
    :func:`contiguous_partition`.
    """

    n_groups: int
    group_size: int
    group_of: np.ndarray  # (N,) int, values in 0..n_groups-1
    treated: np.ndarray  # (n_groups,) bool, exactly n_groups/2 True

    @property
    def n_units(self) -> int:
        return self.n_groups * self.group_size


@dataclass(frozen=True)
class ShockDraw:
    """One realization of the sector-level shock vector under a named law."""

    values: np.ndarray
    law: str

    def __post_init__(self):
        if self.law not in SHOCK_LAWS:
            raise ValidationError(f"unknown shock law {self.law!r}")
        values = _frozen_array(self.values)
        if values.ndim != 1:
            raise ValidationError("shock values must be a vector")
        if not np.all(np.isfinite(values)):
            raise ValidationError("non-finite shock value")
        if self.law == "balanced-binary":
            if not np.all((values == 0.0) | (values == 1.0)):
                raise ValidationError("balanced-binary shocks must be 0/1")
            if values.size % 2 or values.sum() != values.size // 2:
                raise ValidationError(
                    "balanced-binary shocks must have exactly half the entries equal to 1"
                )
        object.__setattr__(self, "values", values)


def validate_dataset(
    region_ids,
    y,
    shares,
    clusters=None,
    y_placebo=None,
) -> Dataset:
    """Check array shapes and invariants, returning an immutable Dataset.

    Cluster labels are relabeled to contiguous 0..G-1 in order of first
    appearance so downstream accumulators can index arrays directly.
    Idempotent: validating the fields of a validated Dataset reproduces it.
    """
    y = _frozen_array(y)
    shares = _frozen_array(shares)
    if y.ndim != 1:
        raise ValidationError("outcome must be a vector")
    n = y.shape[0]
    if shares.ndim != 2:
        raise ValidationError("shares must be a matrix")
    if shares.shape[0] != n:
        raise ValidationError(
            f"shares rows ({shares.shape[0]}) do not match outcomes ({n})"
        )
    if n < 3:
        raise ValidationError("need at least 3 regions")
    if shares.shape[1] < 2:
        raise ValidationError("need at least 2 sectors")
    if region_ids is None:
        region_ids = tuple(f"r{i}" for i in range(n))
    else:
        region_ids = tuple(str(r) for r in region_ids)
    if len(region_ids) != n:
        raise ValidationError(f"region ids ({len(region_ids)}) do not match outcomes ({n})")
    if len(set(region_ids)) != n:
        raise ValidationError("duplicate region id")
    if not np.all(np.isfinite(y)):
        raise ValidationError("non-finite outcome")
    if not np.all(np.isfinite(shares)):
        raise ValidationError("non-finite share")
    if np.any(shares < 0):
        raise ValidationError("negative share")
    if np.any(~np.any(shares > 0, axis=1)):
        raise ValidationError("degenerate exposure row (all shares zero)")

    if clusters is not None:
        labels = np.asarray(clusters)
        if labels.shape != (n,):
            raise ValidationError(f"cluster labels ({labels.shape}) do not match outcomes ({n})")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.floor(labels)):
                raise ValidationError("cluster labels must be integers")
            labels = labels.astype(np.int64)
        # relabel by first appearance
        _, first_index, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first_index))
        clusters = _frozen_array(order[inverse], dtype=np.int64)

    if y_placebo is not None:
        y_placebo = _frozen_array(y_placebo)
        if y_placebo.shape != (n,):
            raise ValidationError(f"placebo outcome ({y_placebo.shape}) does not match outcomes ({n})")
        if not np.all(np.isfinite(y_placebo)):
            raise ValidationError("non-finite placebo outcome")

    return Dataset(
        region_ids=region_ids,
        y=y,
        shares=shares,
        clusters=clusters,
        y_placebo=y_placebo,
    )


def partition_design(group_of, treated) -> PartitionDesign:
    """Validating constructor from a unit->group map and a group assignment."""
    group_of = _frozen_array(group_of, dtype=np.int64)
    treated = _frozen_array(treated, dtype=bool)
    if group_of.ndim != 1 or treated.ndim != 1:
        raise ValidationError("group map and treatment must be vectors")
    n_groups = treated.shape[0]
    if n_groups < 2:
        raise ValidationError("need at least 2 groups")
    if n_groups % 2:
        raise ValidationError("balanced assignment requires an even group count")
    if group_of.size == 0 or group_of.min() < 0 or group_of.max() >= n_groups:
        raise ValidationError("group labels out of range")
    counts = np.bincount(group_of, minlength=n_groups)
    if not np.all(counts == counts[0]):
        raise ValidationError("groups must have equal size")
    group_size = int(counts[0])
    if int(treated.sum()) != n_groups // 2:
        raise ValidationError("exactly half the groups must be treated")
    return PartitionDesign(
        n_groups=n_groups,
        group_size=group_size,
        group_of=group_of,
        treated=treated,
    )


def contiguous_partition(n_groups: int, group_size: int, treated=None) -> PartitionDesign:
    """Design with units 0..m-1 in group 0, the next m in group 1, and so on.

    When ``treated`` is omitted the first half of the groups is treated (a
    placeholder assignment for callers that only need the grouping).
    """
    if treated is None:
        treated = np.arange(n_groups) < n_groups // 2
    group_of = np.repeat(np.arange(n_groups), group_size)
    return partition_design(group_of, treated)


def unit_treatment(design: PartitionDesign) -> np.ndarray:
    """Unit-level 0/1 treatment implied by the group assignment."""
    return design.treated[design.group_of].astype(float)


def build_shift_share(shares, shocks) -> np.ndarray:
    """Exposure-weighted shock aggregate x_i = sum_f w_if * X_f.

    ``shocks`` may be a :class:`ShockDraw` or a plain vector.
    """
    values = shocks.values if isinstance(shocks, ShockDraw) else np.asarray(shocks, dtype=float)
    shares = np.asarray(shares, dtype=float)
    if shares.ndim != 2:
        raise ValidationError("shares must be a matrix")
    if values.ndim != 1 or values.shape[0] != shares.shape[1]:
        raise ValidationError(
            f"shock vector ({values.shape[0] if values.ndim == 1 else values.shape}) "
            f"does not match share columns ({shares.shape[1]})"
        )
    return shares @ values


def partition_to_shares(design: PartitionDesign) -> np.ndarray:
    """0/1 share matrix with one 1 per row, at each unit's group column."""
    out = np.zeros((design.n_units, design.n_groups))
    out[np.arange(design.n_units), design.group_of] = 1.0
    return out
