"""Command line: run benchmarks or configs, sweep fracture-energy curves,
validate configurations.

    delam run pullpush --model aprim --n 18 --tau 0.02 --out runs/pp
    delam run my-config.json --fit-scenario 2
    delam gc-curve --law plasticity --yield-fraction 0.79 --out runs/gc
    delam validate my-config.json
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .core import validate_scenario
from .lebim import StepError
from .scenarios import (
    A_I,
    BUILDERS,
    KAPPA_H,
    KAPPA_N,
    KAPPA_T,
    _law_echo,
    load_config,
    run,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delam",
        description="2D quasistatic adhesive-contact delamination simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser(
        "run", help="run a config file or a builtin benchmark "
                    f"({', '.join(sorted(BUILDERS))})")
    run_p.add_argument("config", help="config path or builtin scenario name")
    run_p.add_argument("--model", choices=["lebim", "aprim"])
    run_p.add_argument("--fit-scenario", dest="fit_scenario",
                       help="1, 2, or 'none' (brittle law fitted from the "
                            "plasticity parameters)")
    run_p.add_argument("--tau", type=float, help="time step [s]")
    run_p.add_argument("--n", type=int, help="number of interface elements")
    run_p.add_argument("--horizon", type=float, help="load horizon [s]")
    run_p.add_argument("--bulk-layers", dest="bulk_layers", type=int)
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--units", choices=["si", "mm-mpa"], default="si",
                       help="unit system for the written CSV files")
    run_p.add_argument("--tol-kkt", dest="tol_kkt", type=float, default=1e-8)

    gc_p = sub.add_parser("gc-curve",
                          help="write a fracture-energy vs mode-mixity sweep")
    gc_p.add_argument("--law", choices=["plasticity", "hutchinson-suo", "constant"],
                      default="plasticity")
    gc_p.add_argument("--a-i", dest="a_i", type=float, default=A_I)
    gc_p.add_argument("--kappa-n", dest="kappa_n", type=float, default=KAPPA_N)
    gc_p.add_argument("--kappa-t", dest="kappa_t", type=float, default=KAPPA_T)
    gc_p.add_argument("--kappa-h", dest="kappa_h", type=float, default=KAPPA_H)
    gc_p.add_argument("--yield-fraction", dest="yield_fraction", type=float,
                      default=0.79, help="yield stress over sqrt(2 kt a_i)")
    gc_p.add_argument("--sigma-t-yield", dest="sigma_t_yield", type=float)
    gc_p.add_argument("--sensitivity", type=float, default=0.25,
                      help="mode-sensitivity parameter of the phenomenological law")
    gc_p.add_argument("--points", type=int, default=361)
    gc_p.add_argument("--out", default="gc-curve")

    val_p = sub.add_parser("validate", help="audit a config without running it")
    val_p.add_argument("config")
    return parser


def _scenario_from_args(args) -> tuple:
    overrides = {}
    for key in ("model", "tau", "n", "horizon", "bulk_layers"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.fit_scenario is not None:
        overrides["fit_scenario"] = (
            None if args.fit_scenario == "none" else int(args.fit_scenario))
    if args.config in BUILDERS:
        cfg = {"scenario": args.config, **overrides}
        out = args.out or f"runs/{args.config}"
    else:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        cfg.update(overrides)
        out = args.out or cfg.get("out", f"runs/{cfg.get('scenario', 'custom')}")
    return load_config(cfg), out


def _cmd_run(args) -> int:
    scenario, out = _scenario_from_args(args)
    try:
        artifacts = run(scenario, out, tol_kkt=args.tol_kkt, units=args.units)
    except ValueError as err:
        print(str(err), file=sys.stderr)
        return 2
    except StepError as err:
        print(f"run aborted: {err}; partial artifacts in {out}", file=sys.stderr)
        return 1
    broken = int((artifacts.final_state.damage == 0.0).sum())
    total = len(artifacts.final_state.damage)
    print(f"run complete: {len(artifacts.reports)} steps, "
          f"{broken}/{total} segments delaminated, artifacts in {artifacts.out_dir}")
    return 0


def _cmd_gc_curve(args) -> int:
    from .core import ConstantToughness, HutchinsonSuoToughness, LebimLaw, PlasticityToughness
    from .laws import gc_curve
    from .scenarios import _write_csv

    sigma = args.sigma_t_yield
    if sigma is None:
        sigma = args.yield_fraction * math.sqrt(2.0 * args.kappa_t * args.a_i)
    if args.law == "plasticity":
        tough = PlasticityToughness(args.a_i, args.kappa_t, args.kappa_h, sigma)
    elif args.law == "hutchinson-suo":
        tough = HutchinsonSuoToughness(args.a_i, args.sensitivity)
    else:
        tough = ConstantToughness(args.a_i)
    try:
        deg, ratio = gc_curve(tough, args.points)
    except ValueError as err:
        print(str(err), file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "gc_curve.csv", ["psi_g_deg", "alpha_over_ai"],
               ((float(a), float(b)) for a, b in zip(deg, ratio)))
    echo = _law_echo(LebimLaw(args.kappa_n, args.kappa_t, tough))
    manifest = {"format": "delam-gc/1", "parameters": {"interface": echo}}
    (out / "MANIFEST.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out / 'gc_curve.csv'}")
    return 0


def _cmd_validate(args) -> int:
    scenario = (load_config({"scenario": args.config})
                if args.config in BUILDERS else load_config(args.config))
    report = validate_scenario(scenario)
    print(str(report))
    return 0 if report.ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "gc-curve":
        return _cmd_gc_curve(args)
    return _cmd_validate(args)


if __name__ == "__main__":
    sys.exit(main())
