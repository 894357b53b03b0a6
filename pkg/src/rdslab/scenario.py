"""Scenario description: everything needed to regenerate a Monte Carlo study."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .network import Bottleneck
from .population import DegreeDistribution, OutcomeModel
from .sampling import BernoulliDegree, DesignSpec, Misreport, NonIgnorableTilt, needs_graph
from .types import FSpec, ValidationError, f_values


@dataclass(frozen=True)
class PopulationSpec:
    size: int
    degrees: DegreeDistribution
    outcome: OutcomeModel
    groups: Optional[Tuple[float, ...]] = None
    bounds: Tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.size < 1:
            raise ValidationError("population size must be >= 1")
        if self.groups is not None:
            object.__setattr__(self, "groups", tuple(float(g) for g in self.groups))
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        n_groups = 1 if self.groups is None else len(self.groups)
        self.outcome.check_bounds(self.degrees.K, self.bounds, n_groups)

    @property
    def K(self) -> int:
        return self.degrees.K


@dataclass(frozen=True)
class NetworkSpec:
    homophily: float = 0.0
    bottleneck: Optional[Bottleneck] = None
    simple: bool = False

    def __post_init__(self):
        if not 0.0 <= self.homophily <= 1.0:
            raise ValidationError("homophily must lie in [0, 1]")


@dataclass(frozen=True)
class EstimatorSpec:
    name: str
    kind: str
    f: Optional[FSpec] = None

    def __post_init__(self):
        if self.kind not in ("naive", "vh", "generalized"):
            raise ValidationError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "generalized" and self.f is None:
            raise ValidationError(f"estimator {self.name!r} needs an f-spec")


@dataclass(frozen=True)
class Scenario:
    """A full generative configuration.

    ``population_mode="redraw"`` draws a fresh population (and network) for
    every replicate; ``"fixed"`` conditions on a single realization.
    """

    population: PopulationSpec
    design: DesignSpec
    estimators: Tuple[EstimatorSpec, ...]
    sizes: Tuple[int, ...]
    replicates: int = 100
    seed: int = 0
    network: Optional[NetworkSpec] = None
    misreport: Optional[Misreport] = None
    population_mode: str = "redraw"

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if not self.sizes or min(self.sizes) < 1:
            raise ValidationError("sizes must be a nonempty list of positive integers")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValidationError("sizes must be strictly ascending")
        if not self.estimators:
            raise ValidationError("at least one estimator is required")
        names = [e.name for e in self.estimators]
        if len(set(names)) != len(names):
            raise ValidationError(f"estimator names must be unique, got {names}")
        if self.seed < 0:
            raise ValidationError("seed must be a nonnegative integer")
        if self.population_mode not in ("redraw", "fixed"):
            raise ValidationError("population_mode must be 'redraw' or 'fixed'")
        support = np.arange(1, self.population.K + 1)
        for e in self.estimators:
            if e.f is not None:
                f_values(e.f, support)
        if isinstance(self.design, (BernoulliDegree, NonIgnorableTilt)):
            fk = f_values(self.design.f, support)
            c = self.design.c
            if c is not None:
                if c <= 0:
                    raise ValidationError("design scale c must be positive")
                if not self.design.with_replacement:
                    tilt = 1.0
                    if isinstance(self.design, NonIgnorableTilt):
                        hi = self.population.bounds[1] if self.design.gamma > 0 else self.population.bounds[0]
                        tilt = float(np.exp(self.design.gamma * hi))
                    bad = np.flatnonzero(c * fk * tilt > 1.0)
                    if bad.size:
                        raise ValidationError(
                            f"c * f(k) > 1 for degree class {int(support[bad[-1]])} "
                            f"(c={c!r}); inclusion probabilities must not exceed 1"
                        )
        if needs_graph(self.design) and self.network is None:
            raise ValidationError(f"{type(self.design).__name__} designs need a network spec")
        if self.network is not None and (
            self.network.homophily > 0 or self.network.bottleneck is not None
        ):
            if self.population.groups is None:
                raise ValidationError("homophily and bottleneck modes need population groups")
