"""Command-line interface: machine-readable CSV/JSON for every operation.

Output conventions
------------------
* Bulk series and grids go to CSV (exact headers below); scalar results and
  run manifests go to JSON.  The two formats are never interleaved on one
  stream: when the CSV occupies stdout, the accompanying JSON goes to stderr
  unless redirected with its own flag.
* Every CSV written to a file is accompanied by `<path>.manifest.json`; every
  JSON document embeds its manifest under the "manifest" key.  A manifest
  holds the command name and every resolved argument, so `manifest_to_argv`
  reproduces the run exactly.
* CSV numbers are printed with 17 significant digits so doubles round-trip.

Exit codes: 0 success, 2 usage error, 3 undetermined outcome (horizon reached),
4 numerical failure, 5 regime violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .basin import (
    Outcome,
    RegimeError,
    Region,
    grid_sweep,
    separatrix_scan,
    verify_theorem_bounds,
)
from .integrator import (
    IntegrationError,
    IntegratorConfig,
    TerminalKind,
    integrate,
)
from .model import (
    EquilibriumKind,
    InvalidParameterError,
    State,
    classify_interior,
    equilibria,
    extinction_bound,
    validate_params,
)

SIMULATE_CSV_HEADER = "t,x,y,u"
BASIN_CSV_HEADER = "x0,y0,outcome,t_ext"
SEPARATRIX_CSV_HEADER = "x,y_crit,y_lo,y_hi,k_of_x"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNDETERMINED = 3
EXIT_NUMERICAL = 4
EXIT_REGIME = 5


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_json(dest: Optional[str], doc: dict) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if dest == "stderr":
        sys.stderr.write(text)
    elif dest is None or dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")


def _write_csv(dest: Optional[str], lines: list[str], manifest: dict) -> None:
    text = "\n".join(lines) + "\n"
    if dest is None or dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")
        sidecar = dest + ".manifest.json"
        Path(sidecar).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _json_dest(out: Optional[str], explicit: Optional[str]) -> str:
    """Destination for the JSON companion of a CSV command."""
    if explicit:
        return explicit
    if out and out != "-":
        return "-"
    return "stderr"


def _manifest(command: str, arguments: dict, outputs: list[str]) -> dict:
    return {
        "command": command,
        "version": __version__,
        "arguments": arguments,
        "outputs": outputs,
    }


def manifest_to_argv(manifest: dict) -> list[str]:
    """Reconstruct the exact argv of a run from its manifest."""
    argv = [manifest["command"]]
    for key, value in manifest["arguments"].items():
        if value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv.extend([flag, repr(value) if isinstance(value, float) else str(value)])
    return argv


def _config_from_args(args: argparse.Namespace) -> IntegratorConfig:
    return IntegratorConfig(
        rtol=args.rtol,
        atol=args.atol,
        h_init=args.h_init,
        h_min=args.h_min,
        h_max=args.h_max,
        t_max=args.t_max,
        event_tol=args.event_tol,
        conv_tol=args.conv_tol,
        conv_window=args.conv_window,
        continue_after_extinction=getattr(args, "continue_after_extinction", False),
    )


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--t-max", type=float, default=500.0, help="integration horizon")
    sub.add_argument("--rtol", type=float, default=1e-9, help="relative tolerance")
    sub.add_argument("--atol", type=float, default=1e-12, help="absolute tolerance")
    sub.add_argument("--h-init", type=float, default=1e-3, help="initial step size")
    sub.add_argument("--h-min", type=float, default=1e-12, help="smallest allowed step")
    sub.add_argument("--h-max", type=float, default=1.0, help="largest allowed step")
    sub.add_argument("--event-tol", type=float, default=1e-10, help="extinction-time bracket width")
    sub.add_argument("--conv-tol", type=float, default=1e-8, help="convergence radius")
    sub.add_argument(
        "--conv-window", type=float, default=10.0, help="dwell time to declare convergence"
    )


def _config_arguments(args: argparse.Namespace) -> dict:
    return {
        "t_max": args.t_max,
        "rtol": args.rtol,
        "atol": args.atol,
        "h_init": args.h_init,
        "h_min": args.h_min,
        "h_max": args.h_max,
        "event_tol": args.event_tol,
        "conv_tol": args.conv_tol,
        "conv_window": args.conv_window,
    }


def cmd_equilibria(args: argparse.Namespace) -> int:
    p = validate_params(args.r, args.alpha, args.beta)
    entries = []
    for eq in equilibria(p):
        entries.append(
            {
                "kind": eq.kind.value,
                "point": [eq.point.x, eq.point.y],
                "stability": eq.stability.value,
            }
        )
    criterion = None
    if any(e["kind"] == EquilibriumKind.INTERIOR.value for e in entries):
        cls = classify_interior(p)
        if cls.ratio > cls.threshold:
            comparison = "greater"
        elif cls.ratio < cls.threshold:
            comparison = "less"
        else:
            comparison = "equal"
        criterion = {
            "alpha_over_beta": cls.ratio,
            "one_over_sqrt3": cls.threshold,
            "comparison": comparison,
            "criterion_verdict": cls.criterion.value,
            "eigen_verdict": cls.eigen.value,
            "eigenvalues": [[ev.real, ev.imag] for ev in cls.eigenvalues],
        }
    arguments = {"r": args.r, "alpha": args.alpha, "beta": args.beta, "out": args.out}
    manifest = _manifest("equilibria", arguments, [args.out or "-"])
    doc = {"equilibria": entries, "interior_criterion": criterion, "manifest": manifest}
    _write_json(args.out, doc)
    return EXIT_OK


def cmd_bound(args: argparse.Namespace) -> int:
    # beta plays no role in the threshold formula; it is accepted and recorded
    # so the manifest documents the full parameter set of the study.
    beta = args.beta if args.beta is not None else 1.0
    p = validate_params(args.r, args.alpha, beta)
    s0 = State(args.x0, args.y0)
    report = extinction_bound(p, s0)
    arguments = {
        "r": args.r,
        "alpha": args.alpha,
        "beta": args.beta,
        "x0": args.x0,
        "y0": args.y0,
        "out": args.out,
    }
    manifest = _manifest("bound", arguments, [args.out or "-"])
    doc = {
        "k_value": report.k_value,
        "sufficient": report.sufficient,
        "t_upper": report.t_upper,
        "manifest": manifest,
    }
    _write_json(args.out, doc)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    p = validate_params(args.r, args.alpha, args.beta)
    s0 = State(args.x0, args.y0)
    cfg = _config_from_args(args)
    if args.samples is not None and args.samples < 2:
        raise InvalidParameterError("--samples must be >= 2")

    traj = integrate(p, s0, cfg)
    if args.samples is not None:
        # Second pass on a uniform grid over the span the run actually covered.
        t_end = traj.samples[-1][0]
        t_eval = [t_end * (i / (args.samples - 1)) for i in range(args.samples)]
        traj = integrate(p, s0, cfg, t_eval=t_eval)
        wanted = set(t_eval)
        rows = [(t, s) for t, s in traj.samples if t in wanted]
    else:
        rows = traj.samples

    lines = [SIMULATE_CSV_HEADER]
    for t, s in rows:
        lines.append(f"{_fmt(t)},{_fmt(s.x)},{_fmt(s.y)},{_fmt(math.sqrt(s.x))}")

    arguments = {
        "r": args.r,
        "alpha": args.alpha,
        "beta": args.beta,
        "x0": args.x0,
        "y0": args.y0,
        **_config_arguments(args),
        "continue_after_extinction": args.continue_after_extinction,
        "samples": args.samples,
        "out": args.out,
        "summary_out": args.summary_out,
    }
    manifest = _manifest("simulate", arguments, [args.out or "-"])
    _write_csv(args.out, lines, manifest)

    bounds = verify_theorem_bounds(p, traj)
    terminal = traj.terminal
    t_end, s_end = traj.samples[-1]
    summary = {
        "terminal": terminal.kind.value,
        "t_ext": terminal.time if terminal.kind is TerminalKind.EXTINCTION else None,
        "t_conv": terminal.time if terminal.kind is TerminalKind.CONVERGED else None,
        "endpoint": {"t": t_end, "x": s_end.x, "y": s_end.y},
        "bounds": bounds.to_dict(),
        "stats": {
            "accepted_steps": traj.stats.accepted_steps,
            "rejected_steps": traj.stats.rejected_steps,
            "rhs_evals": traj.stats.rhs_evals,
        },
        "manifest": manifest,
    }
    _write_json(_json_dest(args.out, args.summary_out), summary)
    return EXIT_OK if terminal.kind is not TerminalKind.HORIZON else EXIT_UNDETERMINED


def cmd_basin(args: argparse.Namespace) -> int:
    p = validate_params(args.r, args.alpha, args.beta)
    if args.nx < 2 or args.ny < 2:
        raise InvalidParameterError("--nx and --ny must be >= 2")
    if args.workers < 1:
        raise InvalidParameterError("--workers must be >= 1")
    region = Region(args.x_min, args.x_max, args.y_min, args.y_max)
    cfg = _config_from_args(args)
    grid = grid_sweep(p, region, args.nx, args.ny, cfg, workers=args.workers)

    lines = [BASIN_CSV_HEADER]
    for i in range(grid.nx):
        for j in range(grid.ny):
            ic = grid.initial_condition(i, j)
            verdict = grid.cells[i][j]
            t_ext = _fmt(verdict.t_ext) if verdict.outcome is Outcome.EXTINCTION else ""
            lines.append(f"{_fmt(ic.x)},{_fmt(ic.y)},{verdict.outcome.value},{t_ext}")

    arguments = {
        "r": args.r,
        "alpha": args.alpha,
        "beta": args.beta,
        "x_min": args.x_min,
        "x_max": args.x_max,
        "y_min": args.y_min,
        "y_max": args.y_max,
        "nx": args.nx,
        "ny": args.ny,
        "workers": args.workers,
        **_config_arguments(args),
        "out": args.out,
        "manifest_out": args.manifest_out,
    }
    manifest = _manifest("basin", arguments, [args.out or "-"])
    _write_csv(args.out, lines, manifest)
    _write_json(_json_dest(args.out, args.manifest_out), {"manifest": manifest})
    return EXIT_OK


def cmd_separatrix(args: argparse.Namespace) -> int:
    p = validate_params(args.r, args.alpha, args.beta)
    if args.points < 1:
        raise InvalidParameterError("--points must be >= 1")
    if args.workers < 1:
        raise InvalidParameterError("--workers must be >= 1")
    if args.points == 1:
        xs = [args.x_min]
    else:
        step = (args.x_max - args.x_min) / (args.points - 1)
        xs = [args.x_min + i * step for i in range(args.points)]
    cfg = _config_from_args(args)
    results = separatrix_scan(
        p,
        xs,
        y_max=args.y_max,
        bracket_tol=args.bracket_tol,
        cfg=cfg,
        y_lo_init=args.y_lo,
        workers=args.workers,
    )

    lines = [SEPARATRIX_CSV_HEADER]
    for line in results:
        if line.point is not None:
            pt = line.point
            lines.append(
                f"{_fmt(line.x)},{_fmt(pt.y_crit)},{_fmt(pt.y_lo)},{_fmt(pt.y_hi)},{_fmt(line.k_value)}"
            )
        else:
            lines.append(f"{_fmt(line.x)},,,,{_fmt(line.k_value)}")

    arguments = {
        "r": args.r,
        "alpha": args.alpha,
        "beta": args.beta,
        "x_min": args.x_min,
        "x_max": args.x_max,
        "points": args.points,
        "bracket_tol": args.bracket_tol,
        "y_max": args.y_max,
        "y_lo": args.y_lo,
        "workers": args.workers,
        **_config_arguments(args),
        "out": args.out,
        "manifest_out": args.manifest_out,
    }
    manifest = _manifest("separatrix", arguments, [args.out or "-"])
    _write_csv(args.out, lines, manifest)
    _write_json(_json_dest(args.out, args.manifest_out), {"manifest": manifest})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="herddyn",
        description=(
            "Simulate and analyze the predator-prey model with square-root "
            "(herd) functional response."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_params(sp, beta_required=True):
        sp.add_argument("--r", type=float, required=True, help="prey birth rate (> 0)")
        sp.add_argument("--alpha", type=float, required=True, help="predator death rate (> 0)")
        if beta_required:
            sp.add_argument("--beta", type=float, required=True, help="conversion efficiency (> 0)")

    eq = sub.add_parser("equilibria", help="list equilibria with stability verdicts (JSON)")
    add_params(eq)
    eq.add_argument("--out", help="output path (default: stdout)")
    eq.set_defaults(func=cmd_equilibria)

    bd = sub.add_parser("bound", help="analytic finite-time-extinction test (JSON)")
    add_params(bd, beta_required=False)
    bd.add_argument("--beta", type=float, help="accepted and recorded; not used by the formula")
    bd.add_argument("--x0", type=float, required=True, help="initial prey density (>= 0)")
    bd.add_argument("--y0", type=float, required=True, help="initial predator density (>= 0)")
    bd.add_argument("--out", help="output path (default: stdout)")
    bd.set_defaults(func=cmd_bound)

    sim = sub.add_parser("simulate", help="integrate one initial condition (CSV + JSON summary)")
    add_params(sim)
    sim.add_argument("--x0", type=float, required=True)
    sim.add_argument("--y0", type=float, required=True)
    _add_config_flags(sim)
    sim.add_argument(
        "--continue-after-extinction",
        action="store_true",
        help="append the exact prey-axis decay after the extinction event",
    )
    sim.add_argument("--samples", type=int, help="emit N uniformly spaced rows (>= 2)")
    sim.add_argument("--out", help="CSV path (default: stdout)")
    sim.add_argument(
        "--summary-out",
        help="JSON summary path (default: stdout when --out is a file, else stderr)",
    )
    sim.set_defaults(func=cmd_simulate)

    ba = sub.add_parser("basin", help="classify a grid of initial conditions (CSV)")
    add_params(ba)
    ba.add_argument("--x-min", type=float, required=True)
    ba.add_argument("--x-max", type=float, required=True)
    ba.add_argument("--y-min", type=float, required=True)
    ba.add_argument("--y-max", type=float, required=True)
    ba.add_argument("--nx", type=int, required=True, help="grid resolution in x (>= 2)")
    ba.add_argument("--ny", type=int, required=True, help="grid resolution in y (>= 2)")
    ba.add_argument("--workers", type=int, default=1, help="parallel workers (>= 1)")
    _add_config_flags(ba)
    ba.add_argument("--out", help="CSV path (default: stdout)")
    ba.add_argument("--manifest-out", help="manifest JSON path")
    ba.set_defaults(func=cmd_basin)

    sep = sub.add_parser("separatrix", help="bracket the basin boundary on scan lines (CSV)")
    add_params(sep)
    sep.add_argument("--x-min", type=float, required=True)
    sep.add_argument("--x-max", type=float, required=True)
    sep.add_argument("--points", type=int, required=True, help="number of scan lines")
    sep.add_argument("--bracket-tol", type=float, default=1e-4)
    sep.add_argument("--y-max", type=float, help="upper probe (default: 1.5*K(x) per line)")
    sep.add_argument("--y-lo", type=float, default=1e-3, help="lower probe")
    sep.add_argument("--workers", type=int, default=1)
    _add_config_flags(sep)
    sep.add_argument("--out", help="CSV path (default: stdout)")
    sep.add_argument("--manifest-out", help="manifest JSON path")
    sep.set_defaults(func=cmd_separatrix)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except RegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
