"""Command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import yaml

from .config import parse_scenario
from .estimators import (
    identification_oracle,
    ignorability_audit,
    implied_fspec,
    naive_estimate,
    plim_oracle,
    generalized_estimate,
    vh_estimate,
)
from .experiments import _design_for, fixed_realization, run_study, scenario_grid
from .io import emit_report, ingest_rds_csv
from .population import true_mean
from .sampling import UnsupportedDesignError
from .types import ValidationError, format_fspec, parse_fspec

EXIT_RUNTIME, EXIT_USAGE, EXIT_VALIDATION = 1, 2, 3


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load(args):
    scenario = parse_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    return scenario


def cmd_simulate(args) -> int:
    report = run_study(_load(args), threads=args.threads)
    _write(emit_report(report, args.format), args.out)
    return 0


def cmd_estimate(args) -> int:
    sample = ingest_rds_csv(args.csv)
    results = [naive_estimate(sample), vh_estimate(sample)]
    for text in args.f or []:
        f = parse_fspec(text)
        results.append(generalized_estimate(sample, f, f"generalized[{format_fspec(f)}]"))
    if args.format == "structured":
        doc = {"n": sample.n, "estimates": {r.estimator_name: r.value for r in results}}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = "estimator,value\n" + "".join(f"{r.estimator_name},{r.value!r}\n" for r in results)
    _write(text, args.out)
    return 0


def _guard(fn, *a):
    try:
        return fn(*a)
    except UnsupportedDesignError as exc:
        return {"unavailable": str(exc)}


def cmd_oracle(args) -> int:
    scenario = _load(args)
    real = fixed_realization(scenario)
    pop, graph = real.population, real.graph
    design = _design_for(scenario, pop, scenario.sizes[0])
    audit = _guard(ignorability_audit, pop, design, graph)
    if isinstance(audit, dict) and "unavailable" not in audit:
        audit = {
            str(k): {"population_mean": a, "sampled_mean": b, "gap": g} for k, (a, b, g) in audit.items()
        }
    doc = {
        "seed": scenario.seed,
        "truth": true_mean(pop),
        "population_size": pop.size,
        "graph": None if graph is None else graph.summary(),
        "identification": _guard(identification_oracle, pop, design, graph),
        "plim": {
            e.name: _guard(plim_oracle, pop, design, implied_fspec(e.kind, e.f), graph)
            for e in scenario.estimators
        },
        "ignorability_audit": audit,
    }
    _write(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _parse_axis(text: str):
    name, sep, values = text.partition("=")
    if not sep or not name:
        raise ValidationError(f"axis must look like name=[v1, v2], got {text!r}")
    parsed = yaml.safe_load(values)
    if not isinstance(parsed, list):
        parsed = [parsed]
    return name.strip(), parsed


def cmd_grid(args) -> int:
    base = _load(args)
    overrides = dict(_parse_axis(a) for a in args.axis or [])
    cells = scenario_grid(base, overrides, derive_seeds=not args.common_seed)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = "json" if args.format == "structured" else "csv"
    for i, cell in enumerate(cells):
        report = run_study(cell, threads=args.threads)
        emit_report(report, args.format, out_dir / f"cell_{i:03d}.{ext}")
    sys.stdout.write(f"wrote {len(cells)} reports to {out_dir}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdslab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", help="scenario config (YAML or JSON)")
            sp.add_argument("--seed", type=int, help="root seed (overrides the config)")
            sp.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
        sp.add_argument("--out", help="output path (stdout if omitted; a directory for grid)")
        sp.add_argument("--format", choices=("structured", "tabular"), default="structured")

    sp = sub.add_parser("simulate", help="run a scenario and emit a study report")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="point estimates from an RDS CSV file")
    sp.add_argument("csv")
    sp.add_argument("--f", action="append", help="extra f-spec: power:<a>, constant, table:<k=v,...>")
    common(sp, scenario=False)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("oracle", help="exact identification, plim and ignorability audit")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("grid", help="expand a scenario over axes and run every cell")
    common(sp)
    sp.add_argument("--axis", action="append", help="name=[v1, v2] (YAML list)")
    sp.add_argument("--common-seed", action="store_true", help="reuse the base seed in every cell")
    sp.set_defaults(func=cmd_grid)
    return p


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "threads", 1) < 1:
        parser.print_usage(sys.stderr)
        sys.stderr.write("rdslab: error: --threads must be >= 1\n")
        return EXIT_USAGE
    try:
        return args.func(args)
    except ValidationError as exc:
        sys.stderr.write(f"rdslab: validation error: {exc}\n")
        return EXIT_VALIDATION
    except UnsupportedDesignError as exc:
        sys.stderr.write(f"rdslab: validation error: {exc}\n")
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"rdslab: runtime error: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
