"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line that is printed as it runs and
again in the terminal summary. The Monte Carlo criteria (4 to 7) take a few
minutes in total.
"""

import json
import math
from contextlib import nullcontext

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, make_sample
from helpers import brute_force_identification, thinned_visit_chisquare
from rdslab.cli import cli_main
from rdslab.config import parse_scenario, scenario_from_dict
from rdslab.estimators import (
    generalized_estimate,
    identification_oracle,
    ignorability_audit,
    naive_estimate,
    plim_oracle,
    vh_estimate,
)
from rdslab.experiments import derive_rng, fixed_realization, run_replicate, run_study
from rdslab.io import emit_report, write_rds_csv
from rdslab.network import build_network
from rdslab.population import (
    DegreeTable,
    GroupShift,
    LogisticInDegree,
    OutcomeModel,
    TableMean,
    TruncatedPowerLaw,
    UniformDegrees,
    generate_population,
    outcome_degree_correlation,
    true_mean,
)
from rdslab.sampling import BernoulliDegree, calibrate, draw_sample, random_walk_sample
from rdslab.types import Constant, Power, Table, ValidationError, f_values


def verdict(number, title, checks, detail=""):
    ok = all(checks.values())
    failed = [name for name, passed in checks.items() if not passed]
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}"
    if detail:
        line += f" | {detail}"
    if failed:
        line += f" | failed: {', '.join(failed)}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _random_fspec(rng, K):
    kind = rng.integers(3)
    if kind == 0:
        return Power(float(rng.uniform(-2.0, 3.0)))
    if kind == 1:
        return Constant()
    return Table({k: float(np.exp(rng.uniform(-4, 4))) for k in range(1, K + 1)})


def _random_outcome_model(rng, K):
    kind = rng.integers(3)
    if kind == 0:
        law = LogisticInDegree(float(rng.normal(0, 2)), float(rng.normal(0, 0.5)))
    elif kind == 1:
        law = TableMean({k: float(rng.uniform(0.05, 0.95)) for k in range(1, K + 1)})
    else:
        law = GroupShift(TableMean({k: float(rng.uniform(0.2, 0.8)) for k in range(1, K + 1)}), (0.0, 0.15))
    if rng.random() < 0.5:
        return OutcomeModel(law, "bernoulli"), kind == 2
    return OutcomeModel(law, "additive", float(rng.uniform(0, 0.3))), kind == 2


# --- 1 ---------------------------------------------------------------------------------------


def test_criterion_1_identification_exactness():
    rng = np.random.default_rng(101)
    worst = worst_brute = 0.0
    for _ in range(200):
        N, K = int(rng.integers(1, 201)), int(rng.integers(1, 11))
        om, grouped = _random_outcome_model(rng, K)
        dd = DegreeTable(tuple(rng.dirichlet(np.ones(K))))
        with pytest.warns(UserWarning) if K >= N else nullcontext():
            pop = generate_population(N, dd, om, (0.6, 0.4) if grouped else None, rng_seed=rng)
        f = _random_fspec(rng, K)
        fk = f_values(f, np.arange(1, K + 1))
        c = float(rng.uniform(0.01, 1.0)) / fk.max()
        value = identification_oracle(pop, BernoulliDegree(f, c))
        worst = max(worst, abs(value - true_mean(pop)))
        d = pop.reported_degree.tolist()
        pi = (c * f_values(f, pop.reported_degree)).tolist()
        ref = brute_force_identification(pop.outcome.tolist(), d, pi, lambda k: float(f_values(f, [k])[0]))
        worst_brute = max(worst_brute, abs(value - ref))
    verdict(
        1,
        "identification oracle equals true mean",
        {"oracle vs truth <= 1e-10": worst <= 1e-10, "oracle vs loop reference <= 1e-10": worst_brute <= 1e-10},
        f"200 populations, max |oracle - truth| = {worst:.2e}",
    )


# --- 2 and 3 ---------------------------------------------------------------------------------


def _random_sample(rng, K=None):
    n = int(rng.integers(1, 201))
    K = K or int(rng.integers(1, 51))
    y = rng.integers(0, 2, n).astype(float) if rng.random() < 0.5 else rng.uniform(-5, 5, n)
    return make_sample(y, rng.integers(1, K + 1, n)), K


def test_criterion_2_reduction_identities():
    rng = np.random.default_rng(202)
    worst_vh = worst_naive = 0.0
    for _ in range(1000):
        s, _ = _random_sample(rng)
        worst_vh = max(worst_vh, abs(generalized_estimate(s, Power(1)).value - vh_estimate(s).value))
        worst_naive = max(worst_naive, abs(generalized_estimate(s, Constant()).value - naive_estimate(s).value))
    verdict(
        2,
        "generalized estimator reduces to VH and naive",
        {"Power(1) == VH": worst_vh <= 1e-12, "Constant == naive": worst_naive <= 1e-12},
        f"1000 samples, max gaps {worst_vh:.1e} / {worst_naive:.1e}",
    )


def test_criterion_3_scale_invariance():
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(1000):
        s, K = _random_sample(rng)
        table = Table({k: float(np.exp(rng.uniform(-5, 5))) for k in range(1, K + 1)})
        factor = float(np.exp(rng.uniform(-12, 12)))
        worst = max(worst, abs(generalized_estimate(s, table).value - generalized_estimate(s, table.scaled(factor)).value))
    verdict(3, "table f-spec scale invariance", {"max gap <= 1e-12": worst <= 1e-12}, f"1000 trials, max gap {worst:.1e}")


# --- 4 and 7 ---------------------------------------------------------------------------------

SIZES = (250, 1000, 4000)
LINEAR_MEANS = {k: 0.05 + 0.9 * (k - 1) / 49 for k in range(1, 51)}


def consistency_scenario(**over):
    cfg = {
        "seed": 4,
        "replicates": 500,
        "sizes": list(SIZES),
        "population": {
            "size": 100_000,
            "degrees": {"kind": "power_law", "exponent": 2.5, "K": 50},
            "outcome": {"kind": "table", "means": LINEAR_MEANS, "noise": "additive", "noise_sd": 0.05},
        },
        # with replacement: each unit contributes Poisson(c * d) records, see README
        "design": {"kind": "bernoulli", "f": "power:1", "with_replacement": True},
        "estimators": ["vh", "naive"],
    }
    cfg.update(over)
    return scenario_from_dict(cfg)


def vh_bias_checks(report):
    rows = [report.row("vh", n) for n in SIZES]
    checks = {"VH |bias| at n=4000 <= 2 MC SE": abs(rows[-1].bias) <= 2 * rows[-1].mc_se}
    for a, b in zip(rows, rows[1:]):
        checks[f"|bias| n={b.n_nominal} <= |bias| n={a.n_nominal} + 1 MC SE"] = abs(b.bias) <= abs(a.bias) + a.mc_se
    detail = ", ".join(f"n={r.n_nominal}: bias {r.bias:+.2e} (MC SE {r.mc_se:.1e})" for r in rows)
    return checks, detail


@pytest.mark.slow
def test_criterion_4_consistency_without_network():
    scenario = consistency_scenario()
    pop = fixed_realization(scenario).population
    corr = outcome_degree_correlation(pop)

    strict = consistency_scenario(design={"kind": "bernoulli", "f": "power:1"})
    with pytest.raises(ValidationError, match="inclusion probability exceeds 1"):
        run_replicate(strict, 4000, 0)

    report = run_study(scenario)
    checks, detail = vh_bias_checks(report)
    naive = report.row("naive", SIZES[-1])
    checks["outcome-degree correlation >= 0.5"] = corr >= 0.5
    checks["naive |bias| >= 5 MC SE"] = abs(naive.bias) >= 5 * naive.mc_se
    checks["naive bias within 3 MC SE of plim"] = abs(naive.bias - naive.plim_bias) <= 3 * naive.mc_se
    verdict(
        4,
        "VH consistent, naive biased as predicted",
        checks,
        f"corr {corr:.3f}; {detail}; naive bias {naive.bias:.4f} vs plim {naive.plim_bias:.4f} (MC SE {naive.mc_se:.1e})",
    )


@pytest.mark.slow
def test_criterion_7_fragmented_graph():
    scenario = consistency_scenario(seed=7, population_mode="fixed", network={"homophily": 0.0})
    graph = fixed_realization(scenario).graph
    report = run_study(scenario)
    checks, detail = vh_bias_checks(report)
    checks["graph has >= 5 components"] = graph.n_components >= 5
    assert report.diagnostics["components_min"] == graph.n_components
    verdict(7, "Bernoulli design ignores a fragmented graph", checks, f"{graph.n_components} components; {detail}")


# --- 5 ---------------------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_5_random_walk_consistency():
    dd = DegreeTable((0.0, 0.0) + (1 / 8,) * 8)
    om = OutcomeModel(LogisticInDegree(-3.0, 0.35))
    seed = next(s for s in range(500, 600) if generate_population(2000, dd, om, rng_seed=s).true_degree.sum() % 2 == 0)
    pop = generate_population(2000, dd, om, rng_seed=seed)
    graph = build_network(pop, rng_seed=1)
    truth = true_mean(pop)

    visits, estimates = [], []
    for r in range(200):
        s = random_walk_sample(graph, pop, 20_000, seed_rule="degree", rng_seed=derive_rng(5, r))
        visits.append(s.unit_index)
        estimates.append(vh_estimate(s).value)
    test = thinned_visit_chisquare(visits, graph.degrees, lag=20)
    est = np.asarray(estimates)
    mc_se = est.std() / math.sqrt(est.size)
    gap = est.mean() - truth
    naive_plim = float(np.average(pop.outcome, weights=pop.true_degree))
    verdict(
        5,
        "random-walk visits and VH estimate",
        {
            "graph connected": graph.connected,
            "graph not bipartite": not graph.bipartite,
            "visit chi-square p > 0.01": test.pvalue > 0.01,
            "VH within 3 MC SE of truth": abs(gap) <= 3 * mc_se,
        },
        f"chi-square p = {test.pvalue:.3f}; VH - truth = {gap:+.2e} (MC SE {mc_se:.1e}); "
        f"degree-weighted mean would be off by {naive_plim - truth:+.3f}",
    )


# --- 6 ---------------------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_6_ignorability_violation():
    scenario = scenario_from_dict(
        {
            "seed": 6,
            "replicates": 500,
            "sizes": [500],
            "population_mode": "fixed",
            "population": {
                "size": 5000,
                "degrees": {"kind": "uniform", "K": 10},
                "outcome": {"kind": "logistic", "intercept": -1.0, "slope": 0.15},
            },
            "design": {"kind": "tilt", "f": "power:1", "gamma": 1.0},
            "estimators": ["vh"],
        }
    )
    pop = fixed_realization(scenario).population
    design = calibrate(scenario.design, pop, 500)
    variances = [pop.outcome[pop.reported_degree == k].var() for k in np.unique(pop.reported_degree)]
    audit = ignorability_audit(pop, design)
    plim = plim_oracle(pop, design, Power(1))
    truth = true_mean(pop)
    row = run_study(scenario).row("vh", 500)
    max_gap = max(abs(g) for _, _, g in audit.values())
    verdict(
        6,
        "tilted design detected by the audit, VH tracks plim",
        {
            "binary outcome": set(np.unique(pop.outcome)) <= {0.0, 1.0},
            "within-class variance > 0": min(variances) > 0,
            "audit gap > 0.01": max_gap > 0.01,
            "VH within 3 MC SE of plim": abs(row.mean_estimate - plim) <= 3 * row.mc_se,
            "|plim - truth| > 0.01": abs(plim - truth) > 0.01,
        },
        f"max gap {max_gap:.3f}; plim - truth = {plim - truth:+.4f}; VH - plim = {row.mean_estimate - plim:+.1e} "
        f"(MC SE {row.mc_se:.1e})",
    )


# --- 8 ---------------------------------------------------------------------------------------

WALK_SCENARIO = {
    "seed": 88,
    "replicates": 12,
    "sizes": [50, 400],
    "population": {"size": 400, "degrees": {"kind": "table", "probs": [0.1, 0.3, 0.3, 0.3]}, "groups": [0.5, 0.5]},
    "network": {"homophily": 0.6},
    "design": {"kind": "random_walk", "referral": "degree"},
    "estimators": ["vh", "naive", "power:0.5"],
}


def test_criterion_8_determinism_and_threads(fixtures_dir, tmp_path, capsys):
    scenarios = [parse_scenario(fixtures_dir / "golden_scenario.yaml"), scenario_from_dict(WALK_SCENARIO)]
    lib_ok = True
    for s in scenarios:
        a = emit_report(run_study(s), "structured")
        b = emit_report(run_study(s), "structured")
        c = emit_report(run_study(s, threads=8), "structured")
        lib_ok &= a == b == c

    cfg = tmp_path / "walk.yaml"
    cfg.write_text(json.dumps(WALK_SCENARIO))
    outputs = []
    for i, threads in enumerate(("1", "1", "8")):
        out = tmp_path / f"r{i}.json"
        code = cli_main(["simulate", str(cfg), "--seed", "123", "--threads", threads, "--out", str(out)])
        outputs.append((code, out.read_bytes()))
    capsys.readouterr()
    cli_ok = all(code == 0 for code, _ in outputs) and len({body for _, body in outputs}) == 1
    verdict(
        8,
        "byte-identical reports across reruns and thread counts",
        {"library reports identical": lib_ok, "CLI reports identical": cli_ok},
        "2 scenarios via library, 1 via CLI with --threads 8",
    )


# --- 9 ---------------------------------------------------------------------------------------


def test_criterion_9_cli_round_trip(fixtures_dir, tmp_path, capsys):
    scenario = scenario_from_dict(dict(WALK_SCENARIO, design={"kind": "coupon", "seeds": 4, "coupons": 3}))
    real = fixed_realization(scenario)
    design = calibrate(scenario.design, real.population, 300)
    sample = draw_sample(real.population, design, derive_rng(9, 0), real.graph)
    path = tmp_path / "sample.csv"
    write_rds_csv(sample, path)

    code = cli_main(["estimate", str(path), "--f", "power:0.5", "--f", "table:1=3,2=1,3=4,4=1"])
    doc = json.loads(capsys.readouterr().out)
    expected = {
        "naive": naive_estimate(sample).value,
        "vh": vh_estimate(sample).value,
        "generalized[power:0.5]": generalized_estimate(sample, Power(0.5)).value,
        "generalized[table:1=3.0,2=1.0,3=4.0,4=1.0]": generalized_estimate(
            sample, Table({1: 3.0, 2: 1.0, 3: 4.0, 4: 1.0})
        ).value,
    }
    bad_codes = {}
    for name in ("degree_zero.csv", "duplicate_id.csv", "dangling.csv", "malformed.csv", "bad_header.csv"):
        bad_codes[name] = cli_main(["estimate", str(fixtures_dir / name)])
    capsys.readouterr()
    verdict(
        9,
        "CSV round trip through the estimate subcommand",
        {
            "estimate exits 0": code == 0,
            "bit-for-bit equal to library": doc["estimates"] == expected and doc["n"] == sample.n,
            "malformed fixtures exit 3": set(bad_codes.values()) == {3},
        },
        f"{sample.n} records, {len(bad_codes)} malformed fixtures",
    )
