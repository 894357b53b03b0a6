"""Synthetic populations drawn i.i.d. from fixed (degree, group, outcome) laws."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from .types import Population, ValidationError


# --- degree laws --------------------------------------------------------------


@dataclass(frozen=True)
class UniformDegrees:
    K: int
    low: int = 1

    def probabilities(self) -> np.ndarray:
        if not 1 <= self.low <= self.K:
            raise ValidationError(f"uniform degrees need 1 <= low <= K, got {self.low}..{self.K}")
        p = np.zeros(self.K)
        p[self.low - 1 :] = 1.0 / (self.K - self.low + 1)
        return p


@dataclass(frozen=True)
class TruncatedPowerLaw:
    exponent: float
    K: int

    def probabilities(self) -> np.ndarray:
        if self.K < 1:
            raise ValidationError("K must be >= 1")
        w = np.arange(1, self.K + 1, dtype=np.float64) ** (-self.exponent)
        return w / w.sum()


@dataclass(frozen=True)
class DegreeTable:
    """Probabilities over 1..K; ``probs[k-1]`` is Pr[D = k]."""

    probs: Tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(x) for x in self.probs)
        if not p or min(p) < 0 or not math.isclose(sum(p), 1.0, abs_tol=1e-9):
            raise ValidationError("degree table must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", p)

    @property
    def K(self) -> int:
        return len(self.probs)

    def probabilities(self) -> np.ndarray:
        return np.array(self.probs)


DegreeDistribution = Union[UniformDegrees, TruncatedPowerLaw, DegreeTable]


# --- outcome laws -------------------------------------------------------------


@dataclass(frozen=True)
class LogisticInDegree:
    intercept: float
    slope: float

    def means(self, K: int) -> np.ndarray:
        return expit(self.intercept + self.slope * np.arange(1, K + 1))


@dataclass(frozen=True)
class TableMean:
    means_by_degree: Mapping[int, float]

    def __post_init__(self):
        object.__setattr__(
            self,
            "means_by_degree",
            {int(k): float(v) for k, v in sorted(dict(self.means_by_degree).items())},
        )

    def __hash__(self):
        return hash(tuple(self.means_by_degree.items()))

    def means(self, K: int) -> np.ndarray:
        missing = [k for k in range(1, K + 1) if k not in self.means_by_degree]
        if missing:
            raise ValidationError(f"outcome table has no mean for degree classes {missing}")
        return np.array([self.means_by_degree[k] for k in range(1, K + 1)])


@dataclass(frozen=True)
class GroupShift:
    """Base degree-mean law plus an additive shift per group label."""

    base: Union[LogisticInDegree, TableMean]
    shifts: Tuple[float, ...]

    def means(self, K: int) -> np.ndarray:
        return self.base.means(K)


@dataclass(frozen=True)
class OutcomeModel:
    """Conditional-mean law plus noise.

    ``noise="bernoulli"`` draws binary outcomes with the given mean;
    ``noise="additive"`` adds N(0, noise_sd) and clips to the outcome bounds
    (``noise_sd=0`` gives outcomes equal to the mean).
    """

    kind: Union[LogisticInDegree, TableMean, GroupShift]
    noise: str = "bernoulli"
    noise_sd: float = 0.0

    def __post_init__(self):
        if self.noise not in ("bernoulli", "additive"):
            raise ValidationError(f"unknown noise kind {self.noise!r}")
        if self.noise_sd < 0:
            raise ValidationError("noise_sd must be nonnegative")

    def mean_table(self, K: int, n_groups: int = 1) -> np.ndarray:
        """Implied E[Y | D=k, G=g] as a (groups, K) array."""
        base = self.kind.means(K)
        if isinstance(self.kind, GroupShift):
            shifts = np.array(self.kind.shifts, dtype=np.float64)
            if shifts.size < n_groups:
                raise ValidationError("group-shift model needs one shift per group")
            return base[None, :] + shifts[:n_groups, None]
        return np.broadcast_to(base, (n_groups, K))

    def check_bounds(self, K: int, bounds: Tuple[float, float], n_groups: int = 1) -> None:
        m = self.mean_table(K, n_groups)
        lo, hi = bounds
        if self.noise == "bernoulli" and (lo > 0 or hi < 1):
            raise ValidationError("bernoulli outcomes need bounds containing [0, 1]")
        if m.min() < lo or m.max() > hi:
            raise ValidationError(f"implied conditional means leave outcome bounds [{lo}, {hi}]")


# --- generation -------------------------------------------------------------


def generate_population(
    size: int,
    dd: DegreeDistribution,
    om: OutcomeModel,
    group_spec: Optional[Sequence[float]] = None,
    rng_seed=None,
    outcome_bounds: Tuple[float, float] = (0.0, 1.0),
) -> Population:
    """Draw ``size`` units i.i.d.: degree ~ dd, group ~ group_spec, outcome ~ om.

    Reported degree equals true degree; misreporting is applied later.
    """
    if size < 1:
        raise ValidationError("population size must be >= 1")
    rng = np.random.default_rng(rng_seed)
    K = dd.K
    p = dd.probabilities()
    n_groups = 1 if group_spec is None else len(group_spec)
    om.check_bounds(K, outcome_bounds, n_groups)
    if K >= size:
        warnings.warn(
            f"K={K} >= population size {size}: a simple-graph realization may be infeasible",
            stacklevel=2,
        )

    degree = rng.choice(np.arange(1, K + 1), size=size, p=p)
    if group_spec is None:
        group = None
        gidx = np.zeros(size, dtype=np.int64)
    else:
        gp = np.asarray(group_spec, dtype=np.float64)
        if gp.min() < 0 or not math.isclose(gp.sum(), 1.0, abs_tol=1e-9):
            raise ValidationError("group proportions must be nonnegative and sum to 1")
        group = rng.choice(gp.size, size=size, p=gp / gp.sum())
        gidx = group

    mean = om.mean_table(K, n_groups)[gidx, degree - 1]
    lo, hi = outcome_bounds
    if om.noise == "bernoulli":
        y = (rng.random(size) < mean).astype(np.float64)
    elif om.noise_sd > 0:
        y = np.clip(mean + rng.normal(0.0, om.noise_sd, size), lo, hi)
    else:
        y = np.array(mean, dtype=np.float64)
    return Population(y, degree, degree, K, outcome_bounds, group)


def true_mean(pop: Population) -> float:
    return math.fsum(pop.outcome) / pop.size


def conditional_means(pop: Population) -> Dict[int, Tuple[float, int]]:
    """Exact per-class outcome means over the whole population, keyed by reported degree."""
    out = {}
    d = pop.reported_degree
    for k in np.unique(d):
        ys = pop.outcome[d == k]
        out[int(k)] = (math.fsum(ys) / ys.size, int(ys.size))
    return out


def outcome_degree_correlation(pop: Population) -> float:
    return float(np.corrcoef(pop.outcome, pop.reported_degree)[0, 1])
