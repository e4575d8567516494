"""Command line front end: ``specden <subcommand> [options]``.

Subcommands: solve, check, density, support, simulate, compare.
Exit status is 0 on success, 2 when the run finished with numerical
warnings (also written under ``"warnings"`` in JSON output) and 1 on error.

CSV outputs:
  density   x,f_under,f,boundary_residual
  simulate  index,eigenvalue
Floats in CSV are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import compare, density, measure, simulator, solver, support
from .errors import ConfigParse, SpecdenError

log = logging.getLogger("specden")


def parse_z(text: str) -> complex:
    """Parse ``"1.0+0.5i"``, ``"2"``, ``"0.5i"`` or Python's ``"1+2j"``."""
    s = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError as exc:
        raise ConfigParse(f"cannot parse complex number {text!r}") from exc


def parse_range(text: str):
    try:
        a, b = (float(p) for p in text.split(":"))
    except ValueError as exc:
        raise ConfigParse(f"--range must look like a:b, got {text!r}") from exc
    return a, b


def _load_measure(args) -> measure.JointMeasure:
    name = args.measure
    if name is None:
        raise ConfigParse("--measure is required")
    if name == "mp":
        return measure.marchenko_pastur()
    if name == "ds":
        if args.s_list is None:
            raise ConfigParse("--measure ds needs --s-list")
        s_vals = [float(v) for v in args.s_list.split(",") if v.strip()]
        return measure.dozier_silverstein(s_vals, args.sigma2)
    try:
        return measure.load(name)
    except FileNotFoundError as exc:
        raise ConfigParse(f"measure file not found: {name}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigParse(f"cannot read measure {name}: {exc}") from exc


def _clean(obj):
    """JSON-safe copy: complex as {re, im}, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(float(obj.real)), "im": _clean(float(obj.imag))}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _emit_json(payload: dict, out):
    text = json.dumps(_clean(payload), indent=2, sort_keys=False) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(header, columns, out):
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(v if isinstance(v, str) else f"{v:.17g}" for v in row))
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _opts(args) -> solver.SolverOptions:
    return solver.SolverOptions(tol=args.tol) if getattr(args, "tol", None) else solver.SolverOptions()


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args):
    H = _load_measure(args)
    z = parse_z(args.z)
    r = solver.solve_at(H, args.c, z, opts=_opts(args))
    m, g = r.companion
    payload = {
        "z": z,
        "mu": r.mu,
        "gu": r.gu,
        "m": m,
        "g": g,
        "iterations": r.iterations,
        "residual": r.residual_norm,
        "diagnostics": r.diagnostics.to_json() if r.diagnostics else None,
        "warnings": [],
    }
    _emit_json(payload, args.out)
    return 0


def cmd_check(args):
    H = _load_measure(args)
    z = parse_z(args.z)
    r = solver.solve_at(H, args.c, z, opts=_opts(args))
    d = r.diagnostics
    warnings = []
    payload = d.to_json() if d else {}
    if d is not None and z.imag > 0:
        checks = {
            "V0_positive": d.V0 > 0,
            "V_below_abs_z": d.V < abs(z),
            "identity_ok": d.identity_residual < 1e-8 * max(1.0, abs(z) ** 2),
            "herglotz": r.mu.imag > 0 and r.gu.imag > 0 and (z * r.mu).imag > 0,
        }
        payload["checks"] = checks
        warnings = [f"check failed: {k}" for k, ok in checks.items() if not ok]
    payload.update({"z": z, "mu": r.mu, "gu": r.gu, "warnings": warnings})
    _emit_json(payload, args.out)
    return 2 if warnings else 0


def cmd_density(args):
    H = _load_measure(args)
    if args.range is None:
        raise ConfigParse("density needs --range a:b")
    a, b = parse_range(args.range)
    grid = density.density_grid(H, args.c, a, b, args.points, _opts(args))
    _emit_csv(["x", "f_under", "f", "boundary_residual"],
              [grid.xs, grid.f_under, grid.f, grid.boundary_residuals], args.out)
    nfail = int(np.sum(grid.failed))
    if nfail:
        log.warning("%d grid points used the smallest-v solution instead of the axis value", nfail)
        return 2
    return 0


def cmd_support(args):
    H = _load_measure(args)
    res = support.find_support(H, args.c, n_scan=args.points or 2000, opts=_opts(args))
    _emit_json(res.to_json(), args.out)
    for w in res.warnings:
        log.warning(w)
    return 2 if res.warnings else 0


def cmd_simulate(args):
    if args.spec is None:
        raise ConfigParse("simulate needs --spec")
    try:
        with open(args.spec) as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigParse(f"spec file not found: {args.spec}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"spec is not valid JSON: {exc}") from exc
    if args.seed is not None:
        data["seed"] = args.seed
    spec = simulator.spec_from_json(data)
    sample = simulator.sample_eigenvalues(spec)
    which = sample.eigs_B_under if args.under else sample.eigs_B
    _emit_csv(["index", "eigenvalue"], [[str(i) for i in range(which.size)], which], args.out)
    return 0


def cmd_compare(args):
    H = _load_measure(args)
    if args.n is None:
        raise ConfigParse("compare needs --n")
    n_list = [int(v) for v in str(args.n).split(",")]
    rows = compare.convergence_study(
        H, args.c, n_list, args.replicates, seed=args.seed if args.seed is not None else 0,
        threads=args.threads, opts=_opts(args),
    )
    warnings = []
    if len(rows) > 1:
        for attr in ("kolmogorov", "levy"):
            if not compare.nonincreasing_within_se(rows, attr):
                warnings.append(f"{attr} distance increases with n beyond two standard errors")
    _emit_json({"c": args.c, "rows": [r.to_json() for r in rows], "warnings": warnings}, args.out)
    return 2 if warnings else 0


COMMANDS = {
    "solve": cmd_solve,
    "check": cmd_check,
    "density": cmd_density,
    "support": cmd_support,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="specden", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--measure", help="measure JSON file, 'mp', or 'ds' (with --s-list/--sigma2)")
        s.add_argument("--s-list", help="comma-separated signal eigenvalues for --measure ds")
        s.add_argument("--sigma2", type=float, default=1.0, help="noise variance for --measure ds")
        s.add_argument("--c", type=float, default=0.5)
        s.add_argument("--z", default="1+1i")
        s.add_argument("--range")
        s.add_argument("--points", type=int)
        s.add_argument("--spec")
        s.add_argument("--out")
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--n", help="matrix size(s) for compare, comma separated")
        s.add_argument("--replicates", type=int, default=5)
        s.add_argument("--under", action="store_true", help="simulate: write the companion spectrum")
        s.add_argument("-v", "--verbose", action="count", default=0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "density" and args.points is None:
        args.points = 1000
    try:
        return COMMANDS[args.command](args)
    except (SpecdenError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
