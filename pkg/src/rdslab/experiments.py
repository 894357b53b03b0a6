"""Monte Carlo driver: replicate (population, design, estimators) and summarize bias.

Every replicate draws from its own generator, derived by hashing
``(seed, size, replicate_index, stream)`` through
:class:`numpy.random.SeedSequence`. Nothing is shared between replicates,
so the merged report does not depend on how many threads ran them.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import scenario_from_dict, scenario_to_dict
from .estimators import implied_fspec, plim_oracle, run_estimator
from .network import Graph, build_network
from .population import generate_population, true_mean
from .sampling import (
    BernoulliDegree,
    NonIgnorableTilt,
    UnsupportedDesignError,
    calibrate,
    draw_sample,
    misreport_degrees,
    needs_graph,
)
from .scenario import Scenario
from .types import Population, ValidationError

REPORT_SCHEMA = "rdslab.report/1"

# stream tags for derived generators
_POPULATION, _NETWORK, _SAMPLE, _MISREPORT = range(4)
_FIXED = 2**32 - 1


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class Realization:
    population: Population
    graph: Optional[Graph] = None


def realize(scenario: Scenario, *key: int) -> Realization:
    """Population (and network, if configured) for one derivation key."""
    ps = scenario.population
    pop = generate_population(
        ps.size,
        ps.degrees,
        ps.outcome,
        ps.groups,
        derive_rng(scenario.seed, *key, _POPULATION),
        ps.bounds,
    )
    graph = None
    if scenario.network is not None:
        net = scenario.network
        if int(pop.true_degree.sum()) % 2:
            # drop one stub from a max-degree unit so a realization exists
            d = pop.true_degree.copy()
            i = int(np.argmax(d))
            if d[i] == 1:
                raise ValidationError("all degrees are 1 and the population size is odd; no network exists")
            d[i] -= 1
            pop = Population(pop.outcome, d, d, pop.K, pop.outcome_bounds, pop.group)
        graph = build_network(
            pop,
            net.homophily,
            net.bottleneck,
            derive_rng(scenario.seed, *key, _NETWORK),
            simple=net.simple,
        )
    return Realization(pop, graph)


def fixed_realization(scenario: Scenario) -> Realization:
    return realize(scenario, _FIXED)


@dataclass(frozen=True)
class ReplicateResult:
    size: int
    replicate: int
    truth: float
    n_realized: int
    estimates: Dict[str, Optional[float]]
    plims: Dict[str, Optional[float]]
    truncated: bool = False
    restarts: int = 0
    components: Optional[int] = None
    connected: Optional[bool] = None
    bipartite: Optional[bool] = None


def _design_for(scenario: Scenario, pop: Population, size: int):
    d = scenario.design
    if isinstance(d, (BernoulliDegree, NonIgnorableTilt)) and d.c is not None:
        return d
    return calibrate(d, pop, size)


def run_replicate(
    scenario: Scenario,
    size: int,
    replicate_index: int,
    realization: Optional[Realization] = None,
) -> ReplicateResult:
    """Draw one sample of nominal size ``size`` and apply every estimator.

    In fixed-population mode pass the shared ``realization`` (built by
    :func:`fixed_realization`) to avoid rebuilding it.
    """
    key = (size, replicate_index)
    if realization is None:
        if scenario.population_mode == "fixed":
            realization = fixed_realization(scenario)
        else:
            realization = realize(scenario, *key)
    pop, graph = realization.population, realization.graph
    design = _design_for(scenario, pop, size)
    sample = draw_sample(pop, design, derive_rng(scenario.seed, *key, _SAMPLE), graph)
    misreported = scenario.misreport is not None and scenario.misreport.kind != "identity"
    if misreported:
        sample = misreport_degrees(sample, scenario.misreport, derive_rng(scenario.seed, *key, _MISREPORT))

    estimates, plims = {}, {}
    for est in scenario.estimators:
        estimates[est.name] = (
            run_estimator(est.kind, sample, est.f, est.name).value if sample.n else None
        )
        plim = None
        if not misreported:
            try:
                plim = plim_oracle(pop, design, implied_fspec(est.kind, est.f), graph)
            except UnsupportedDesignError:
                plim = None
        plims[est.name] = plim

    return ReplicateResult(
        size=size,
        replicate=replicate_index,
        truth=true_mean(pop),
        n_realized=sample.n,
        estimates=estimates,
        plims=plims,
        truncated=sample.truncated,
        restarts=sample.restarts,
        components=None if graph is None else graph.n_components,
        connected=None if graph is None else graph.connected,
        bipartite=None if graph is None else graph.bipartite,
    )


@dataclass(frozen=True)
class ReportRow:
    estimator: str
    n_nominal: int
    n_realized_mean: float
    mean_estimate: float
    bias: float
    sd: float
    rmse: float
    mc_se: float
    plim: Optional[float]
    plim_bias: Optional[float]
    replicates: int
    empty_samples: int


@dataclass(frozen=True)
class StudyReport:
    """Aggregated results.

    ``bias``, ``sd`` and ``rmse`` are computed from the per-replicate error
    (estimate minus that replicate's population mean). ``sd`` uses ddof=0,
    so rmse**2 == bias**2 + sd**2 and ``mc_se == sd / sqrt(replicates)``.
    """

    scenario: Dict
    truth: float
    rows: Tuple[ReportRow, ...]
    diagnostics: Dict
    schema: str = REPORT_SCHEMA

    def row(self, estimator: str, size: int) -> ReportRow:
        for r in self.rows:
            if r.estimator == estimator and r.n_nominal == size:
                return r
        raise KeyError((estimator, size))

    def to_dict(self) -> Dict:
        return {
            "schema": self.schema,
            "scenario": self.scenario,
            "truth": self.truth,
            "rows": [asdict(r) for r in self.rows],
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "StudyReport":
        if d.get("schema") != REPORT_SCHEMA:
            raise ValidationError(f"unsupported report schema {d.get('schema')!r}")
        return cls(
            scenario=d["scenario"],
            truth=d["truth"],
            rows=tuple(ReportRow(**r) for r in d["rows"]),
            diagnostics=d["diagnostics"],
            schema=d["schema"],
        )


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


def _summarize(name: str, size: int, results: List[ReplicateResult]) -> ReportRow:
    ok = [r for r in results if r.estimates[name] is not None]
    empty = len(results) - len(ok)
    if not ok:
        nan = float("nan")
        return ReportRow(name, size, 0.0, nan, nan, nan, nan, nan, None, None, 0, empty)
    est = [r.estimates[name] for r in ok]
    err = [r.estimates[name] - r.truth for r in ok]
    bias = _mean(err)
    sd = math.sqrt(_mean([(e - bias) ** 2 for e in err]))
    rmse = math.sqrt(_mean([e * e for e in err]))
    plim = plim_bias = None
    if all(r.plims[name] is not None for r in ok):
        plim = _mean([r.plims[name] for r in ok])
        plim_bias = _mean([r.plims[name] - r.truth for r in ok])
    return ReportRow(
        estimator=name,
        n_nominal=size,
        n_realized_mean=_mean([float(r.n_realized) for r in results]),
        mean_estimate=_mean(est),
        bias=bias,
        sd=sd,
        rmse=rmse,
        mc_se=sd / math.sqrt(len(ok)),
        plim=plim,
        plim_bias=plim_bias,
        replicates=len(ok),
        empty_samples=empty,
    )


def run_study(scenario: Scenario, threads: int = 1) -> StudyReport:
    """Run every (size, replicate) cell and aggregate per (estimator, size).

    ``threads`` only changes wall time; results are merged in
    (size, replicate) order.
    """
    if threads < 1:
        raise ValidationError("threads must be >= 1")
    shared = fixed_realization(scenario) if scenario.population_mode == "fixed" else None
    tasks = [(n, r) for n in scenario.sizes for r in range(scenario.replicates)]

    def work(task):
        return run_replicate(scenario, task[0], task[1], shared)

    if threads == 1:
        results = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tasks))
    results.sort(key=lambda r: (r.size, r.replicate))

    rows = []
    for est in scenario.estimators:
        for n in scenario.sizes:
            rows.append(_summarize(est.name, n, [r for r in results if r.size == n]))

    diagnostics = {
        "replicates_total": len(results),
        "truncated_samples": sum(r.truncated for r in results),
        "restarts_total": sum(r.restarts for r in results),
        "empty_samples": sum(r.n_realized == 0 for r in results),
    }
    with_graph = [r for r in results if r.components is not None]
    if with_graph:
        diagnostics.update(
            connected_fraction=_mean([float(r.connected) for r in with_graph]),
            bipartite_fraction=_mean([float(r.bipartite) for r in with_graph]),
            components_mean=_mean([float(r.components) for r in with_graph]),
            components_min=min(r.components for r in with_graph),
        )

    return StudyReport(
        scenario=scenario_to_dict(scenario),
        truth=_mean([r.truth for r in results]),
        rows=tuple(rows),
        diagnostics=diagnostics,
    )


# --- grids ------------------------------------------------------------------------

AXES = {
    "gamma": ("design", "gamma"),
    "design_f": ("design", "f"),
    "c": ("design", "c"),
    "with_replacement": ("design", "with_replacement"),
    "coupons": ("design", "coupons"),
    "seeds": ("design", "seeds"),
    "max_waves": ("design", "max_waves"),
    "referral": ("design", "referral"),
    "seed_rule": ("design", "seed_rule"),
    "homophily": ("network", "homophily"),
    "cross_fraction": ("network", "bottleneck", "cross_fraction"),
    "population_size": ("population", "size"),
    "groups": ("population", "groups"),
    "sizes": ("sizes",),
    "replicates": ("replicates",),
    "population_mode": ("population_mode",),
    "misreport": ("misreport",),
}


def _axis_path(name: str) -> Tuple[str, ...]:
    if name in AXES:
        return AXES[name]
    raise ValidationError(f"unknown grid axis {name!r}; known axes: {sorted(AXES)}")


def _set_path(cfg: Dict, path: Tuple[str, ...], value) -> None:
    node = cfg
    for part in path[:-1]:
        nxt = node.get(part)
        if not isinstance(nxt, dict):
            raise ValidationError(f"grid axis {'.'.join(path)!r} does not apply: {part!r} is not set")
        node = nxt
    if len(path) > 1 and path[-1] not in node:
        raise ValidationError(f"grid axis {'.'.join(path)!r} does not apply to this scenario")
    node[path[-1]] = value


def scenario_grid(
    base: Scenario,
    overrides: Mapping[str, Sequence],
    derive_seeds: bool = True,
) -> List[Scenario]:
    """Cartesian expansion of ``base`` over axis values.

    Cells are ordered like :func:`itertools.product` over the axes in the
    given order. With ``derive_seeds`` each cell gets its own seed hashed
    from (base seed, cell index); otherwise all cells share the base seed
    (common random numbers).
    """
    if not overrides:
        return [base]
    names = list(overrides)
    paths = [_axis_path(n) for n in names]
    out = []
    for i, combo in enumerate(itertools.product(*(list(overrides[n]) for n in names))):
        cfg = scenario_to_dict(base)
        for path, value in zip(paths, combo):
            _set_path(cfg, path, value)
        if derive_seeds:
            cfg["seed"] = int(np.random.SeedSequence(base.seed, spawn_key=(i,)).generate_state(1, np.uint64)[0])
        out.append(scenario_from_dict(cfg))
    return out
