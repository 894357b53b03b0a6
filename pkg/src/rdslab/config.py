"""Scenario config files (YAML, strict) and their dict form.

A config is a mapping; every key is checked against the schema below and
unknown keys are rejected. ``scenario_to_dict`` emits the fully resolved
form (all defaults filled in) that is echoed into study reports, and
``scenario_from_dict`` accepts exactly that form back.

Top level::

    schema: rdslab.scenario/1      # optional, must match if present
    seed: 0
    replicates: 100
    sizes: [100]
    population_mode: redraw        # or fixed
    population: {size, degrees, outcome, groups, bounds}
    network: null                  # or {homophily, bottleneck, simple}
    design: {kind: bernoulli, f: "power:1", c: null, with_replacement: false}
    misreport: null                # or {kind, factor, m, base}
    estimators: [vh, naive, {name: g2, f: "power:2"}]
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Iterable, Mapping

import yaml

from .network import Bottleneck
from .population import (
    DegreeTable,
    GroupShift,
    LogisticInDegree,
    OutcomeModel,
    TableMean,
    TruncatedPowerLaw,
    UniformDegrees,
)
from .sampling import BernoulliDegree, CouponRDS, Misreport, NonIgnorableTilt, RandomWalk
from .scenario import EstimatorSpec, NetworkSpec, PopulationSpec, Scenario
from .types import ValidationError, format_fspec, parse_fspec

SCENARIO_SCHEMA = "rdslab.scenario/1"

DEFAULT_OUTCOME = {"kind": "logistic", "intercept": -1.0, "slope": 0.2, "noise": "bernoulli"}


def _check_keys(d: Any, allowed: Iterable[str], required: Iterable[str], where: str) -> Dict:
    if not isinstance(d, Mapping):
        raise ValidationError(f"{where}: expected a mapping, got {type(d).__name__}")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ValidationError(f"{where}: unknown keys {unknown}")
    missing = [k for k in required if k not in d]
    if missing:
        raise ValidationError(f"{where}: missing required keys {missing}")
    return dict(d)


def _degrees_from(d) -> Any:
    kind = d.get("kind") if isinstance(d, Mapping) else None
    if kind == "uniform":
        d = _check_keys(d, ("kind", "K", "low"), ("K",), "population.degrees")
        return UniformDegrees(int(d["K"]), int(d.get("low", 1)))
    if kind == "power_law":
        d = _check_keys(d, ("kind", "exponent", "K"), ("exponent", "K"), "population.degrees")
        return TruncatedPowerLaw(float(d["exponent"]), int(d["K"]))
    if kind == "table":
        d = _check_keys(d, ("kind", "probs"), ("probs",), "population.degrees")
        probs = d["probs"]
        if isinstance(probs, Mapping):
            K = max(int(k) for k in probs)
            probs = [float(probs.get(k, probs.get(str(k), 0.0))) for k in range(1, K + 1)]
        return DegreeTable(tuple(probs))
    raise ValidationError(f"population.degrees: unknown kind {kind!r} (uniform, power_law, table)")


def _degrees_to(dd) -> Dict:
    if isinstance(dd, UniformDegrees):
        return {"kind": "uniform", "K": dd.K, "low": dd.low}
    if isinstance(dd, TruncatedPowerLaw):
        return {"kind": "power_law", "exponent": dd.exponent, "K": dd.K}
    return {"kind": "table", "probs": list(dd.probs)}


def _mean_law_from(d, where: str):
    kind = d.get("kind") if isinstance(d, Mapping) else None
    if kind == "logistic":
        d = _check_keys(d, ("kind", "intercept", "slope"), ("intercept", "slope"), where)
        return LogisticInDegree(float(d["intercept"]), float(d["slope"]))
    if kind == "table":
        d = _check_keys(d, ("kind", "means"), ("means",), where)
        return TableMean({int(k): float(v) for k, v in d["means"].items()})
    raise ValidationError(f"{where}: unknown outcome kind {kind!r} (logistic, table, group_shift)")


def _mean_law_to(m) -> Dict:
    if isinstance(m, LogisticInDegree):
        return {"kind": "logistic", "intercept": m.intercept, "slope": m.slope}
    return {"kind": "table", "means": {str(k): v for k, v in m.means_by_degree.items()}}


def _outcome_from(d) -> OutcomeModel:
    where = "population.outcome"
    if not isinstance(d, Mapping):
        raise ValidationError(f"{where}: expected a mapping")
    noise = {k: d[k] for k in ("noise", "noise_sd") if k in d}
    law = {k: v for k, v in d.items() if k not in ("noise", "noise_sd")}
    if law.get("kind") == "group_shift":
        law = _check_keys(law, ("kind", "base", "shifts"), ("base", "shifts"), where)
        kind = GroupShift(_mean_law_from(law["base"], where + ".base"), tuple(float(s) for s in law["shifts"]))
    else:
        kind = _mean_law_from(law, where)
    return OutcomeModel(kind, str(noise.get("noise", "bernoulli")), float(noise.get("noise_sd", 0.0)))


def _outcome_to(om: OutcomeModel) -> Dict:
    if isinstance(om.kind, GroupShift):
        out = {"kind": "group_shift", "base": _mean_law_to(om.kind.base), "shifts": list(om.kind.shifts)}
    else:
        out = _mean_law_to(om.kind)
    out.update(noise=om.noise, noise_sd=om.noise_sd)
    return out


def _opt_int(v):
    return None if v is None else int(v)


def _seed_rule(v):
    return v if isinstance(v, str) else int(v)


def _design_from(d) -> Any:
    kind = d.get("kind", "bernoulli") if isinstance(d, Mapping) else None
    w = "design"
    if kind == "bernoulli":
        d = _check_keys(d, ("kind", "f", "c", "with_replacement"), (), w)
        return BernoulliDegree(
            parse_fspec(str(d.get("f", "power:1"))),
            None if d.get("c") is None else float(d["c"]),
            bool(d.get("with_replacement", False)),
        )
    if kind == "tilt":
        d = _check_keys(d, ("kind", "f", "c", "gamma", "with_replacement"), ("gamma",), w)
        return NonIgnorableTilt(
            parse_fspec(str(d.get("f", "power:1"))),
            None if d.get("c") is None else float(d["c"]),
            float(d["gamma"]),
            bool(d.get("with_replacement", False)),
        )
    if kind == "random_walk":
        keys = ("kind", "seeds", "seed_rule", "with_replacement", "referral", "referral_bias", "restart")
        d = _check_keys(d, keys, (), w)
        design = RandomWalk(
            None,
            int(d.get("seeds", 1)),
            _seed_rule(d.get("seed_rule", "uniform")),
            bool(d.get("with_replacement", True)),
            str(d.get("referral", "uniform")),
            float(d.get("referral_bias", 4.0)),
            bool(d.get("restart", True)),
        )
        if design.referral not in ("uniform", "degree", "group"):
            raise ValidationError(f"design: unknown referral rule {design.referral!r}")
        return design
    if kind == "coupon":
        keys = ("kind", "seeds", "coupons", "max_waves", "with_replacement", "seed_rule")
        d = _check_keys(d, keys, (), w)
        return CouponRDS(
            int(d.get("seeds", 1)),
            int(d.get("coupons", 3)),
            _opt_int(d.get("max_waves")),
            None,
            bool(d.get("with_replacement", False)),
            _seed_rule(d.get("seed_rule", "uniform")),
        )
    raise ValidationError(f"design: unknown kind {kind!r} (bernoulli, tilt, random_walk, coupon)")


def _design_to(design) -> Dict:
    if isinstance(design, BernoulliDegree):
        return {
            "kind": "bernoulli",
            "f": format_fspec(design.f),
            "c": design.c,
            "with_replacement": design.with_replacement,
        }
    if isinstance(design, NonIgnorableTilt):
        return {
            "kind": "tilt",
            "f": format_fspec(design.f),
            "c": design.c,
            "gamma": design.gamma,
            "with_replacement": design.with_replacement,
        }
    if isinstance(design, RandomWalk):
        return {
            "kind": "random_walk",
            "seeds": design.seeds,
            "seed_rule": design.seed_rule,
            "with_replacement": design.with_replacement,
            "referral": design.referral,
            "referral_bias": design.referral_bias,
            "restart": design.restart,
        }
    return {
        "kind": "coupon",
        "seeds": design.seeds,
        "coupons": design.coupons,
        "max_waves": design.max_waves,
        "with_replacement": design.with_replacement,
        "seed_rule": design.seed_rule,
    }


def _estimator_from(e, i: int) -> EstimatorSpec:
    if isinstance(e, str):
        if e in ("naive", "vh"):
            return EstimatorSpec(e, e)
        f = parse_fspec(e)
        return EstimatorSpec(f"generalized[{format_fspec(f)}]", "generalized", f)
    d = _check_keys(e, ("name", "kind", "f"), (), f"estimators[{i}]")
    f = None if d.get("f") is None else parse_fspec(str(d["f"]))
    kind = d.get("kind", "generalized" if f is not None else None)
    if kind is None:
        raise ValidationError(f"estimators[{i}]: give a kind or an f-spec")
    name = d.get("name") or (kind if f is None else f"{kind}[{format_fspec(f)}]")
    return EstimatorSpec(str(name), str(kind), f)


def scenario_from_dict(cfg: Mapping) -> Scenario:
    top = (
        "schema",
        "seed",
        "replicates",
        "sizes",
        "population_mode",
        "population",
        "network",
        "design",
        "misreport",
        "estimators",
    )
    cfg = _check_keys(cfg, top, ("population", "estimators"), "scenario")
    schema = cfg.get("schema", SCENARIO_SCHEMA)
    if schema != SCENARIO_SCHEMA:
        raise ValidationError(f"unsupported scenario schema {schema!r}; expected {SCENARIO_SCHEMA!r}")

    p = _check_keys(
        cfg["population"], ("size", "degrees", "outcome", "groups", "bounds"), ("size", "degrees"), "population"
    )
    groups = p.get("groups")
    population = PopulationSpec(
        int(p["size"]),
        _degrees_from(p["degrees"]),
        _outcome_from(p.get("outcome", DEFAULT_OUTCOME)),
        None if groups is None else tuple(float(g) for g in groups),
        tuple(float(b) for b in p.get("bounds", (0.0, 1.0))),
    )

    network = None
    if cfg.get("network") is not None:
        n = _check_keys(cfg["network"], ("homophily", "bottleneck", "simple"), (), "network")
        bn = None
        if n.get("bottleneck") is not None:
            b = _check_keys(n["bottleneck"], ("cross_fraction", "communities"), ("cross_fraction",), "network.bottleneck")
            bn = Bottleneck(float(b["cross_fraction"]), int(b.get("communities", 2)))
        network = NetworkSpec(float(n.get("homophily", 0.0)), bn, bool(n.get("simple", False)))

    misreport = None
    if cfg.get("misreport") is not None:
        m = _check_keys(cfg["misreport"], ("kind", "factor", "m", "base"), ("kind",), "misreport")
        misreport = Misreport(str(m["kind"]), float(m.get("factor", 1.0)), int(m.get("m", 1)), int(m.get("base", 5)))

    estimators = cfg["estimators"]
    if isinstance(estimators, (str, Mapping)):
        estimators = [estimators]

    return Scenario(
        population=population,
        design=_design_from(cfg.get("design", {"kind": "bernoulli"})),
        estimators=tuple(_estimator_from(e, i) for i, e in enumerate(estimators)),
        sizes=tuple(int(s) for s in cfg.get("sizes", [100])),
        replicates=int(cfg.get("replicates", 100)),
        seed=int(cfg.get("seed", 0)),
        network=network,
        misreport=misreport,
        population_mode=str(cfg.get("population_mode", "redraw")),
    )


def scenario_to_dict(s: Scenario) -> Dict:
    pop = s.population
    net = None
    if s.network is not None:
        bn = s.network.bottleneck
        net = {
            "homophily": s.network.homophily,
            "bottleneck": None if bn is None else {"cross_fraction": bn.cross_fraction, "communities": bn.communities},
            "simple": s.network.simple,
        }
    mis = None
    if s.misreport is not None:
        m = s.misreport
        mis = {"kind": m.kind, "factor": m.factor, "m": m.m, "base": m.base}
    return {
        "schema": SCENARIO_SCHEMA,
        "seed": s.seed,
        "replicates": s.replicates,
        "sizes": list(s.sizes),
        "population_mode": s.population_mode,
        "population": {
            "size": pop.size,
            "degrees": _degrees_to(pop.degrees),
            "outcome": _outcome_to(pop.outcome),
            "groups": None if pop.groups is None else list(pop.groups),
            "bounds": list(pop.bounds),
        },
        "network": net,
        "design": _design_to(s.design),
        "misreport": mis,
        "estimators": [
            {"name": e.name, "kind": e.kind, "f": None if e.f is None else format_fspec(e.f)}
            for e in s.estimators
        ],
    }


def parse_scenario(path) -> Scenario:
    """Load and validate a YAML (or JSON) scenario file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: not a valid YAML document: {exc}") from None
    try:
        return scenario_from_dict(cfg)
    except ValidationError:
        raise
    except (TypeError, AttributeError, ValueError, KeyError) as exc:
        raise ValidationError(f"{path}: malformed scenario: {exc}") from None
