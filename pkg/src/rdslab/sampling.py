"""Sampling processes: degree-driven Bernoulli designs, random walks, coupon chains.

Every sampler is a pure function of its inputs and ``rng_seed`` (anything
accepted by :func:`numpy.random.default_rng`).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, replace
from itertools import accumulate
from typing import Optional, Union

import numpy as np

from .network import Graph
from .types import FSpec, Population, Power, Sample, ValidationError, f_values


class UnsupportedDesignError(ValueError):
    """The design has no tractable exact inclusion law (or breaks an oracle's premise)."""


# --- design specifications ----------------------------------------------------


@dataclass(frozen=True)
class BernoulliDegree:
    """Independent inclusion with probability c * f(reported degree).

    ``c=None`` means "calibrate to the nominal sample size" (see
    :func:`calibrate`). With ``with_replacement=True`` each unit contributes
    a Poisson(c * f(d)) number of records instead, which lifts the
    c * f(k) <= 1 restriction while keeping the expected record count per
    unit proportional to f.
    """

    f: FSpec = Power(1.0)
    c: Optional[float] = None
    with_replacement: bool = False


@dataclass(frozen=True)
class NonIgnorableTilt:
    """Inclusion probability c * f(d) * exp(gamma * y): depends on the outcome itself."""

    f: FSpec = Power(1.0)
    c: Optional[float] = None
    gamma: float = 0.0
    with_replacement: bool = False


@dataclass(frozen=True)
class RandomWalk:
    steps: Optional[int] = None
    seeds: int = 1
    seed_rule: Union[str, int] = "uniform"
    with_replacement: bool = True
    referral: str = "uniform"
    referral_bias: float = 4.0
    restart: bool = True


@dataclass(frozen=True)
class CouponRDS:
    seeds: int = 1
    coupons: int = 3
    max_waves: Optional[int] = None
    target_n: Optional[int] = None
    with_replacement: bool = False
    seed_rule: Union[str, int] = "uniform"


DesignSpec = Union[BernoulliDegree, NonIgnorableTilt, RandomWalk, CouponRDS]

SEED_RULES = ("uniform", "degree")
REFERRALS = ("uniform", "degree", "group")


def needs_graph(design: DesignSpec) -> bool:
    return isinstance(design, (RandomWalk, CouponRDS))


def _tilt_weights(pop: Population, f: FSpec, gamma: float) -> np.ndarray:
    w = f_values(f, pop.reported_degree)
    if gamma != 0.0:
        w = w * np.exp(gamma * pop.outcome)
    return w


def calibrate(design: DesignSpec, pop: Population, n: int) -> DesignSpec:
    """Fill in the size-dependent field so the design targets ``n`` records.

    Bernoulli-type designs get c = n / sum_i w_i (so E[n] = n); walks get
    ``steps = n``; coupon chains get ``target_n = n``.
    """
    if isinstance(design, BernoulliDegree):
        return replace(design, c=n / math.fsum(_tilt_weights(pop, design.f, 0.0)))
    if isinstance(design, NonIgnorableTilt):
        return replace(design, c=n / math.fsum(_tilt_weights(pop, design.f, design.gamma)))
    if isinstance(design, RandomWalk):
        return replace(design, steps=n)
    if isinstance(design, CouponRDS):
        return replace(design, target_n=n)
    raise TypeError(f"not a design: {design!r}")


# --- Bernoulli-type samplers ----------------------------------------------------


def _check_probabilities(pop: Population, p: np.ndarray, c: float) -> None:
    over = p > 1.0
    if over.any():
        k = int(pop.reported_degree[over].max())
        raise ValidationError(
            f"inclusion probability exceeds 1 for degree class {k} with c={c!r}; "
            "lower c or sample with replacement"
        )


def _independent_sample(
    pop: Population, p: np.ndarray, c: float, rng_seed, with_replacement: bool
) -> Sample:
    if not c or c <= 0:
        raise ValidationError(f"scale c must be positive, got {c!r}")
    rng = np.random.default_rng(rng_seed)
    if with_replacement:
        idx = np.repeat(np.arange(pop.size), rng.poisson(p))
    else:
        _check_probabilities(pop, p, c)
        idx = np.flatnonzero(rng.random(pop.size) < p)
    return Sample(
        pop.outcome[idx], pop.reported_degree[idx], idx, with_replacement=with_replacement
    )


def bernoulli_degree_sample(
    pop: Population, f: FSpec, c: float, rng_seed=None, with_replacement: bool = False
) -> Sample:
    """Include unit i independently with probability c * f(reported_degree_i).

    No network is involved; inclusion depends on degree only.
    """
    return _independent_sample(
        pop, c * _tilt_weights(pop, f, 0.0), c, rng_seed, with_replacement
    )


def nonignorable_sample(
    pop: Population,
    f: FSpec,
    c: float,
    gamma: float,
    rng_seed=None,
    with_replacement: bool = False,
) -> Sample:
    """Like :func:`bernoulli_degree_sample` but tilted by exp(gamma * y)."""
    return _independent_sample(
        pop, c * _tilt_weights(pop, f, gamma), c, rng_seed, with_replacement
    )


# --- network samplers ---------------------------------------------------------


class _Uniforms:
    """Block-buffered U(0,1) stream; consumption order alone fixes the values."""

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self._rng = rng
        self._block = block
        self._buf = []
        self._i = 0

    def __call__(self) -> float:
        if self._i == len(self._buf):
            self._buf = self._rng.random(self._block).tolist()
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        return u


def _pick_seed(u: float, rule, degrees: np.ndarray, eligible: Optional[np.ndarray]) -> int:
    """Seed node by rule, among ``eligible`` nodes (all nodes when None)."""
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        if not 0 <= rule < degrees.size:
            raise ValidationError(f"fixed seed index {rule} outside the population")
        if eligible is not None and not np.any(eligible == rule):
            raise ValidationError(f"fixed seed index {rule} is no longer eligible")
        return int(rule)
    nodes = np.arange(degrees.size) if eligible is None else eligible
    if rule == "uniform":
        return int(nodes[min(int(u * nodes.size), nodes.size - 1)])
    if rule == "degree":
        cum = np.cumsum(degrees[nodes])
        return int(nodes[min(int(np.searchsorted(cum, u * cum[-1], side="right")), nodes.size - 1)])
    raise ValidationError(f"unknown seed rule {rule!r}; use uniform, degree or a node index")


def _reseed_rule(rule):
    # a fixed index can only seed once; later seeds fall back to uniform
    return rule if isinstance(rule, str) else "uniform"


def _referral_weights(graph: Graph, pop: Population, referral: str, bias: float):
    """Per-slot (CSR-aligned) edge weights, or None for uniform referral.

    Weights are symmetric in (i, j), so the walk is reversible with
    stationary law proportional to each node's total weight. Degree-biased
    referral uses d_i * d_j, which gives the same transitions as d_j.
    """
    if referral == "uniform":
        return None
    deg = graph.degrees
    src = np.repeat(np.arange(graph.n_nodes), deg)
    if referral == "degree":
        return (deg[src] * deg[graph.indices]).astype(np.float64)
    if referral == "group":
        if pop.group is None:
            raise ValidationError("group-biased referral needs group labels")
        if bias <= 0:
            raise ValidationError("referral_bias must be positive")
        return np.where(pop.group[src] == pop.group[graph.indices], float(bias), 1.0)
    raise ValidationError(f"unknown referral rule {referral!r}")


def _slot_weights(graph: Graph, pop: Population, referral: str, bias: float):
    w = _referral_weights(graph, pop, referral, bias)
    if w is None:
        return None
    wl = w.tolist()
    ptr = graph.indptr.tolist()
    return [wl[ptr[i] : ptr[i + 1]] for i in range(graph.n_nodes)]


def _choose(u: float, options: list, weights: Optional[list]) -> int:
    if weights is None:
        return options[int(u * len(options))]
    cum = list(accumulate(weights))
    return options[min(bisect_right(cum, u * cum[-1]), len(options) - 1)]


def random_walk_sample(
    graph: Graph,
    pop: Population,
    steps: int,
    seed_rule: Union[str, int] = "uniform",
    with_replacement: bool = True,
    referral: str = "uniform",
    rng_seed=None,
    *,
    seeds: int = 1,
    referral_bias: float = 4.0,
    restart: bool = True,
) -> Sample:
    """Non-branching recruitment chain(s) over ``graph``.

    With replacement, records are the visited nodes including repeats and
    ``wave`` is the step index along the chain. Without replacement the
    next node is drawn from unvisited neighbors only; a stuck chain restarts
    at a fresh seed (counted in ``Sample.restarts``, wave reset to 0) or, if
    ``restart`` is False or nothing is left, the sample is returned short
    with ``truncated=True``. ``seeds > 1`` runs that many chains, splitting
    ``steps`` between them.
    """
    if graph.n_nodes == 0 or graph.n_nodes != pop.size:
        raise ValidationError("graph must be nonempty and match the population")
    if steps < 1 or seeds < 1:
        raise ValidationError("steps and seeds must be >= 1")
    rng = np.random.default_rng(rng_seed)
    uni = _Uniforms(rng)
    adj = graph.adjacency
    deg = graph.degrees
    slot_w = _slot_weights(graph, pop, referral, referral_bias)

    nodes, recruiter, wave = [], [], []
    visited = np.zeros(graph.n_nodes, dtype=bool)
    restarts = 0
    truncated = False
    quotas = [steps // seeds + (1 if c < steps % seeds else 0) for c in range(seeds)]

    for chain, quota in enumerate(quotas):
        if quota == 0:
            continue
        eligible = None if with_replacement else np.flatnonzero(~visited)
        if eligible is not None and eligible.size == 0:
            truncated = True
            break
        cur = _pick_seed(uni(), seed_rule if chain == 0 else _reseed_rule(seed_rule), deg, eligible)
        nodes.append(cur)
        recruiter.append(-1)
        wave.append(0)
        visited[cur] = True
        taken = 1
        while taken < quota:
            nbrs = adj[cur]
            w = None if slot_w is None else slot_w[cur]
            if not with_replacement:
                keep = [j for j, v in enumerate(nbrs) if not visited[v]]
                nbrs = [nbrs[j] for j in keep]
                if w is not None:
                    w = [w[j] for j in keep]
            if not nbrs:
                fresh = np.flatnonzero(~visited)
                if not restart or fresh.size == 0:
                    truncated = True
                    break
                restarts += 1
                cur = _pick_seed(uni(), _reseed_rule(seed_rule), deg, fresh)
                nodes.append(cur)
                recruiter.append(-1)
                wave.append(0)
                visited[cur] = True
                taken += 1
                continue
            nxt = _choose(uni(), nbrs, w)
            recruiter.append(len(nodes) - 1)
            wave.append(wave[-1] + 1)
            nodes.append(nxt)
            visited[nxt] = True
            cur = nxt
            taken += 1
        if truncated:
            break

    idx = np.array(nodes, dtype=np.int64)
    return Sample(
        pop.outcome[idx],
        pop.reported_degree[idx],
        idx,
        recruiter,
        wave,
        with_replacement=with_replacement,
        truncated=truncated,
        restarts=restarts,
    )


def coupon_rds_sample(
    graph: Graph,
    pop: Population,
    seeds: int = 1,
    coupons: int = 3,
    max_waves: Optional[int] = None,
    target_n: int = 500,
    with_replacement: bool = False,
    rng_seed=None,
    *,
    seed_rule: Union[str, int] = "uniform",
) -> Sample:
    """Breadth-first branching recruitment.

    Recruits are processed in order of recruitment; each passes up to
    ``coupons`` coupons to distinct eligible neighbors (every coupon is
    redeemed). Without replacement, already-sampled nodes are ineligible.
    Subjects at wave ``max_waves`` do not recruit. Stops at ``target_n``
    records or when no coupon can be redeemed (then ``truncated=True``).
    """
    if seeds < 1 or coupons < 1:
        raise ValidationError("seeds and coupons must be >= 1")
    if graph.n_nodes != pop.size:
        raise ValidationError("graph must match the population")
    rng = np.random.default_rng(rng_seed)
    uni = _Uniforms(rng)
    adj = graph.adjacency
    deg = graph.degrees

    nodes, recruiter, wave = [], [], []
    sampled = np.zeros(graph.n_nodes, dtype=bool)
    queue = deque()
    chosen = np.zeros(graph.n_nodes, dtype=bool)
    for s in range(min(seeds, target_n)):
        eligible = np.flatnonzero(~chosen)
        if eligible.size == 0:
            break
        if s == 0:
            node = _pick_seed(uni(), seed_rule, deg, None)
        else:
            node = _pick_seed(uni(), _reseed_rule(seed_rule), deg, eligible)
        chosen[node] = True
        sampled[node] = True
        queue.append(len(nodes))
        nodes.append(node)
        recruiter.append(-1)
        wave.append(0)

    while queue and len(nodes) < target_n:
        r = queue.popleft()
        if max_waves is not None and wave[r] >= max_waves:
            continue
        eligible = adj[nodes[r]]
        if not with_replacement:
            eligible = [v for v in eligible if not sampled[v]]
        for _ in range(coupons):
            if not eligible or len(nodes) >= target_n:
                break
            pick = eligible[int(uni() * len(eligible))]
            queue.append(len(nodes))
            nodes.append(pick)
            recruiter.append(r)
            wave.append(wave[r] + 1)
            sampled[pick] = True
            if coupons > 1:
                eligible = [v for v in eligible if v != pick]

    idx = np.array(nodes, dtype=np.int64)
    return Sample(
        pop.outcome[idx],
        pop.reported_degree[idx],
        idx,
        recruiter,
        wave,
        with_replacement=with_replacement,
        truncated=len(nodes) < target_n,
    )


def draw_sample(pop: Population, design: DesignSpec, rng_seed=None, graph: Optional[Graph] = None) -> Sample:
    """Dispatch on the design type; size fields must already be set."""
    if isinstance(design, BernoulliDegree):
        return bernoulli_degree_sample(pop, design.f, design.c, rng_seed, design.with_replacement)
    if isinstance(design, NonIgnorableTilt):
        return nonignorable_sample(
            pop, design.f, design.c, design.gamma, rng_seed, design.with_replacement
        )
    if graph is None:
        raise ValidationError(f"{type(design).__name__} needs a network")
    if isinstance(design, RandomWalk):
        return random_walk_sample(
            graph,
            pop,
            design.steps,
            design.seed_rule,
            design.with_replacement,
            design.referral,
            rng_seed,
            seeds=design.seeds,
            referral_bias=design.referral_bias,
            restart=design.restart,
        )
    if isinstance(design, CouponRDS):
        return coupon_rds_sample(
            graph,
            pop,
            design.seeds,
            design.coupons,
            design.max_waves,
            design.target_n,
            design.with_replacement,
            rng_seed,
            seed_rule=design.seed_rule,
        )
    raise TypeError(f"not a design: {design!r}")


# --- degree misreporting --------------------------------------------------------


@dataclass(frozen=True)
class Misreport:
    """Degree-reporting error model.

    kinds: ``identity``; ``multiplicative`` (round(d * factor));
    ``jitter`` (d + U{-m..m}); ``heaping`` (nearest multiple of ``base``).
    Results are floored at 1.
    """

    kind: str = "identity"
    factor: float = 1.0
    m: int = 1
    base: int = 5

    def __post_init__(self):
        if self.kind not in ("identity", "multiplicative", "jitter", "heaping"):
            raise ValidationError(f"unknown misreport model {self.kind!r}")
        if self.kind == "multiplicative" and self.factor <= 0:
            raise ValidationError("multiplicative factor must be positive")
        if self.m < 0 or self.base < 1:
            raise ValidationError("jitter m must be >= 0 and heaping base >= 1")


def misreport_degrees(sample: Sample, model: Misreport, rng_seed=None) -> Sample:
    if model.kind == "identity":
        return sample
    d = sample.reported_degree
    if model.kind == "multiplicative":
        new = np.floor(d * model.factor + 0.5).astype(np.int64)
    elif model.kind == "jitter":
        rng = np.random.default_rng(rng_seed)
        new = d + rng.integers(-model.m, model.m + 1, size=d.size)
    else:
        new = model.base * np.floor(d / model.base + 0.5).astype(np.int64)
    return sample.replace_degrees(np.maximum(new, 1))


# --- exact inclusion laws -------------------------------------------------------


def inclusion_probabilities(
    pop: Population, design: DesignSpec, graph: Optional[Graph] = None
) -> np.ndarray:
    """Exact per-unit inclusion law.

    Bernoulli designs: c * f(d_i) (times exp(gamma * y_i) when tilted); for
    the with-replacement variants this is the expected record count. Random
    walks: the per-step stationary visit probability, d_i / sum_j d_j under
    uniform referral.
    """
    if isinstance(design, (BernoulliDegree, NonIgnorableTilt)):
        if design.c is None:
            raise ValidationError("design scale c is not set; calibrate the design first")
        gamma = design.gamma if isinstance(design, NonIgnorableTilt) else 0.0
        p = design.c * _tilt_weights(pop, design.f, gamma)
        if not design.with_replacement:
            _check_probabilities(pop, p, design.c)
        return p
    if isinstance(design, RandomWalk):
        if not design.with_replacement:
            raise UnsupportedDesignError("without-replacement walks have no stationary visit law")
        if graph is None:
            raise ValidationError("random-walk inclusion law needs the network")
        if not graph.connected or graph.bipartite:
            raise UnsupportedDesignError(
                "random walk on a disconnected or bipartite graph has no unique stationary law"
            )
        w = _referral_weights(graph, pop, design.referral, design.referral_bias)
        if w is None:
            strength = graph.degrees.astype(np.float64)
        else:
            strength = np.add.reduceat(w, graph.indptr[:-1])
        return strength / math.fsum(strength)
    if isinstance(design, CouponRDS):
        raise UnsupportedDesignError(
            "coupon-chain designs have no tractable exact inclusion law; use Monte Carlo"
        )
    raise TypeError(f"not a design: {design!r}")


def design_fspec(design: DesignSpec) -> FSpec:
    """The f the design is built around (degree-proportional for walks)."""
    if isinstance(design, (BernoulliDegree, NonIgnorableTilt)):
        return design.f
    return Power(1.0)


def is_ignorable(design: DesignSpec) -> bool:
    if isinstance(design, NonIgnorableTilt):
        return design.gamma == 0.0
    return True

