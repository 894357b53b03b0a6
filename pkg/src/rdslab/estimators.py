"""Point estimators of the population mean and exact population-level oracles.

The estimators only ever read a sample's ``reported_degree``. The oracle
functions (``identification_oracle``, ``plim_oracle``,
``ignorability_audit``) take the whole population, including units that
were never sampled. They compute quantities that no real survey can
observe, and exist to check the estimators.
"""

from __future__ import annotations

import math
from typing import Dict, Optional, Tuple

import numpy as np

from .network import Graph
from .sampling import (
    DesignSpec,
    NonIgnorableTilt,
    UnsupportedDesignError,
    design_fspec,
    inclusion_probabilities,
)
from .types import Constant, EstimateResult, FSpec, Population, Power, Sample, ValidationError, f_values


def _class_counts(d: np.ndarray) -> Dict[int, int]:
    ks, counts = np.unique(d, return_counts=True)
    return dict(zip(ks.tolist(), counts.tolist()))


def _require_nonempty(sample: Sample) -> None:
    if sample.n == 0:
        raise ValidationError("cannot estimate from an empty sample")


def _ratio(y: np.ndarray, f: np.ndarray) -> float:
    """(sum y_i / f_i) / (sum 1 / f_i) with compensated sums, clipped to [min y, max y]."""
    value = math.fsum(y / f) / math.fsum(1.0 / f)
    return min(max(value, float(y.min())), float(y.max()))


def naive_estimate(sample: Sample) -> EstimateResult:
    _require_nonempty(sample)
    y = sample.outcome
    value = min(max(math.fsum(y) / y.size, float(y.min())), float(y.max()))
    return EstimateResult("naive", value, sample.n, _class_counts(sample.reported_degree))


def vh_estimate(sample: Sample) -> EstimateResult:
    """Inverse-degree weighted mean of the sampled outcomes (one weight per record)."""
    _require_nonempty(sample)
    d = sample.reported_degree
    value = _ratio(sample.outcome, d.astype(np.float64))
    return EstimateResult("vh", value, sample.n, _class_counts(d))


def generalized_estimate(sample: Sample, f: FSpec, name: Optional[str] = None) -> EstimateResult:
    """Record-level plug-in: weight each record by 1 / f(reported degree).

    Constant f gives the naive mean, Power(1) gives the VH estimate, and a
    rescaled f gives the same value (the unknown scale cancels).
    """
    _require_nonempty(sample)
    d = sample.reported_degree
    value = _ratio(sample.outcome, f_values(f, d))
    return EstimateResult(name or "generalized", value, sample.n, _class_counts(d))


def generalized_estimate_grouped(sample: Sample, f: FSpec) -> float:
    """The same plug-in computed class by class.

    Sums, over observed degree classes k, the within-class sample mean times
    (class share / f(k)), normalized by the sum of (class share / f(k)).
    Classes absent from the sample contribute nothing.
    """
    _require_nonempty(sample)
    d = sample.reported_degree
    ks, inverse, counts = np.unique(d, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=sample.outcome)
    cond_mean = sums / counts
    share = counts / sample.n
    fk = f_values(f, ks)
    num = math.fsum(cond_mean * share / fk)
    den = math.fsum(share / fk)
    return num / den


# --- oracles ------------------------------------------------------------------


def _class_sums(pop: Population, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per reported-degree class: (classes, counts, sum of weights, sum of weight * y)."""
    d = pop.reported_degree
    ks, inverse, counts = np.unique(d, return_inverse=True, return_counts=True)
    w = np.bincount(inverse, weights=weights)
    wy = np.bincount(inverse, weights=weights * pop.outcome)
    return ks, counts, w, wy


def identification_oracle(
    pop: Population, design: DesignSpec, graph: Optional[Graph] = None
) -> float:
    """Evaluate the identification formula from exact population quantities.

    Uses the sampled-class means E[Y | S=1, D=k] and the sampled degree law
    Pr[D=k | S=1], both computed exactly from the design's inclusion law,
    together with the design's f. Refuses designs that break the formula's
    premises: outcome-dependent inclusion, or an inclusion law that is not
    proportional to f(reported degree). Under valid designs the result equals
    ``true_mean(pop)`` up to rounding.
    """
    if isinstance(design, NonIgnorableTilt) and design.gamma != 0.0:
        raise UnsupportedDesignError(
            "design inclusion depends on the outcome; the identification formula does not apply"
        )
    pi = inclusion_probabilities(pop, design, graph)
    f = design_fspec(design)
    fd = f_values(f, pop.reported_degree)
    ratio = pi / fd
    if not np.allclose(ratio, ratio[0], rtol=1e-9, atol=0.0):
        raise UnsupportedDesignError(
            "inclusion law is not proportional to f(reported degree); "
            "the identification formula does not apply"
        )
    if pi.min() <= 0:
        raise UnsupportedDesignError("some degree class has zero inclusion probability")

    ks, _, w, wy = _class_sums(pop, pi)
    sampled_mean = wy / w
    sampled_share = w / math.fsum(w)
    fk = f_values(f, ks)
    num = math.fsum(sampled_mean * sampled_share / fk)
    den = math.fsum(sampled_share / fk)
    return num / den


def plim_oracle(
    pop: Population, design: DesignSpec, f_assumed: FSpec, graph: Optional[Graph] = None
) -> float:
    """Probability limit of the plug-in estimator using ``f_assumed`` under ``design``.

    (sum_i y_i pi_i / f(d_i)) / (sum_i pi_i / f(d_i)); correct specification
    returns the population mean, misspecification returns the value the
    estimator converges to instead.
    """
    pi = inclusion_probabilities(pop, design, graph)
    w = pi / f_values(f_assumed, pop.reported_degree)
    return math.fsum(w * pop.outcome) / math.fsum(w)


def ignorability_audit(
    pop: Population, design: DesignSpec, graph: Optional[Graph] = None
) -> Dict[int, Tuple[float, float, float]]:
    """Per class k: (E[Y | D=k], E[Y | S=1, D=k], sampled minus population).

    Needs outcomes of unsampled units, so this is a simulation-only check.
    All gaps are zero exactly when sampling is ignorable given degree.
    """
    pi = inclusion_probabilities(pop, design, graph)
    ks, counts, w, wy = _class_sums(pop, pi)
    _, _, _, ysum = _class_sums(pop, np.ones(pop.size))
    out = {}
    for k, n_k, w_k, wy_k, y_k in zip(ks.tolist(), counts, w, wy, ysum):
        pop_mean = y_k / n_k
        sampled = wy_k / w_k
        out[k] = (float(pop_mean), float(sampled), float(sampled - pop_mean))
    return out


ESTIMATORS = {
    "naive": lambda s, f=None: naive_estimate(s),
    "vh": lambda s, f=None: vh_estimate(s),
}


def run_estimator(kind: str, sample: Sample, f: Optional[FSpec] = None, name: Optional[str] = None) -> EstimateResult:
    if kind == "generalized":
        if f is None:
            raise ValidationError("generalized estimator needs an f-spec")
        return generalized_estimate(sample, f, name)
    try:
        res = ESTIMATORS[kind](sample)
    except KeyError:
        raise ValidationError(f"unknown estimator kind {kind!r}") from None
    if name and name != res.estimator_name:
        res = EstimateResult(name, res.value, res.n, res.degree_class_counts)
    return res


def implied_fspec(kind: str, f: Optional[FSpec]) -> FSpec:
    """The f an estimator implicitly assumes (used for plim predictions)."""
    if kind == "naive":
        return Constant()
    if kind == "vh":
        return Power(1.0)
    return f
