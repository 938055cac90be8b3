"""Command-line front end.

    beamctl simulate  --config F --out D [--dt X] [--mesh P] [--t-final T]
    beamctl converge  --axis space|time --config F --out D [...]
    beamctl spectrum  --config F --n-max K --out D [--mesh P]
    beamctl kyp-check --config F [--write-back]

Exit codes: 0 all requested checks passed; 2 configuration or validation
error; 3 numerical failure (divergence, non-finite states, no root);
4 a requested check failed (dissipativity, certificate residual, rates).
"""

import argparse
import os
import sys

import numpy as np

from . import harness
from .errors import BeamctlError, ConfigError
from .model import validate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK_FAILED = 4


def _add_common(sub):
    sub.add_argument("--config", required=True, help="YAML configuration file")
    sub.add_argument("--dt", type=float, default=None)
    sub.add_argument("--mesh", type=int, default=None)
    sub.add_argument("--t-final", type=float, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="beamctl",
        description="Boundary-controlled beam: dissipative FEM simulation "
                    "and closed-loop spectral analysis.")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="run one simulation")
    _add_common(sim)
    sim.add_argument("--out", required=True, help="output directory")

    conv = subs.add_parser("converge", help="self-convergence study")
    _add_common(conv)
    conv.add_argument("--axis", choices=("space", "time"), required=True)
    conv.add_argument("--out", required=True)
    conv.add_argument("--levels", default=None,
                      help="space: comma list of element counts "
                           "(default 16,32,64,128)")
    conv.add_argument("--dt-list", default=None,
                      help="time: comma list of steps "
                           "(default 6.4e-6,...,2e-7)")

    spec = subs.add_parser("spectrum", help="closed-loop eigenvalue dump")
    _add_common(spec)
    spec.add_argument("--n-max", type=int, default=30)
    spec.add_argument("--out", required=True)

    kyp = subs.add_parser("kyp-check", help="SPR margin and certificate check")
    kyp.add_argument("--config", required=True)
    kyp.add_argument("--write-back", action="store_true",
                     help="store solved certificates in the config file")
    return parser


def _load(args):
    overrides = {}
    if getattr(args, "dt", None) is not None:
        overrides["dt"] = args.dt
    if getattr(args, "mesh", None) is not None:
        overrides["mesh_p"] = args.mesh
    if getattr(args, "t_final", None) is not None:
        overrides["t_final"] = args.t_final
    return harness.load_config(args.config, **overrides)


def _cmd_simulate(args):
    cfg = _load(args)
    report = validate(cfg.system)
    if not report.physical_ok:
        print(report, file=sys.stderr)
        return EXIT_CONFIG
    summary = harness.simulate(cfg, out_dir=args.out)
    print(f"steps: {summary.steps}")
    print(f"energy: {summary.energy_initial:.12g} -> "
          f"{summary.energy_final:.12g}")
    print(f"max per-step identity violation: "
          f"{summary.max_identity_violation:.3e}")
    for note in summary.certificate_notes:
        print(f"certificate {note}")
    if summary.energy_final > summary.energy_initial * (1 + 1e-12):
        print("dissipativity check FAILED", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_converge(args):
    cfg = _load(args)
    os.makedirs(args.out, exist_ok=True)
    if args.axis == "space":
        h_list = None
        if args.levels:
            length = cfg.system.beam.length
            h_list = [length / int(p) for p in args.levels.split(",")]
        rows = harness.converge_space(cfg, h_list)
        path = os.path.join(args.out, "convergence_space.csv")
    else:
        dt_list = None
        if args.dt_list:
            dt_list = [float(v) for v in args.dt_list.split(",")]
        rows = harness.converge_time(cfg, dt_list)
        path = os.path.join(args.out, "convergence_time.csv")
    harness.write_convergence_csv(rows, path)
    for r in rows:
        rate = "--" if r.rate is None else f"{r.rate:.2f}"
        print(f"dt={r.dt:.3g} h={r.h:.5g} error={r.error:.6e} rate={rate}")
    errors = [r.error for r in rows]
    if any(b >= a for a, b in zip(errors, errors[1:])):
        print("error column is not monotone decreasing", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_spectrum(args):
    cfg = _load(args)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "spectrum.csv")
    roots, asym, cross = harness.spectrum_study(
        cfg, args.n_max, out_path=path,
        cross_check_mesh=args.mesh)
    bad = [r for r in roots if r.lam.real >= 0 or r.residual > 1e-9]
    print(f"{len(roots)} roots written to {path}")
    if cross:
        for n, lam, fem_lam, rel in cross:
            print(f"n={n}: continuum {lam:.6f} discrete {fem_lam:.6f} "
                  f"rel {rel:.2e}")
    if bad:
        print(f"{len(bad)} roots failed residual/half-plane checks",
              file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_kyp_check(args):
    cfg = harness.load_config(args.config)
    lines, ok = harness.kyp_check(
        cfg, write_back_path=args.config if args.write_back else None)
    for line in lines:
        print(line)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {
        "simulate": _cmd_simulate,
        "converge": _cmd_converge,
        "spectrum": _cmd_spectrum,
        "kyp-check": _cmd_kyp_check,
    }[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BeamctlError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as exc:
        print(f"linear algebra failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
