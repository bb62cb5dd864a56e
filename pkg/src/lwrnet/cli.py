"""Command line entry point: ``lwrnet <subcommand> ...``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (
    KINDS,
    ConfigError,
    ExperimentConfig,
    directional_density,
    run_experiment,
    write_manifest,
)
from .graph import grid_cost_matrix
from .network import NetworkError, discretize, manhattan, manhattan_side, read_network, write_network
from .solver import (
    CFLViolationError,
    FundamentalDiagram,
    Scenario,
    read_snapshot,
    simulate,
    snapshot_name,
    write_snapshot,
)
from .transport import (
    GridMismatchError,
    MassMismatchError,
    TransportSolveError,
    wasserstein_grid,
    write_plan,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4
EXIT_NUMERICAL = 5

OUT_ENV = "LWRNET_OUT"
INITIAL_PATTERNS = ("rightward-half", "leftward-half", "rightward", "leftward", "uniform:<value>")

EPILOG = f"""\
exit codes:
  {EXIT_OK}  success
  {EXIT_USAGE}  usage error (unknown flag, missing argument)
  {EXIT_VALIDATION}  invalid network, configuration or input data
  {EXIT_IO}  file could not be read or written
  {EXIT_NUMERICAL}  numerical failure (CFL violation, transport solver)

environment:
  {OUT_ENV}  default output root for 'simulate' and 'experiment' (default: runs)
"""

log = logging.getLogger("lwrnet")


class UsageError(Exception):
    pass


def _out_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "runs"))


def _parse_times(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad time list {text!r}") from exc


# --- subcommands ----------------------------------------------------------

def cmd_generate_network(args) -> int:
    net = manhattan(args.ell, args.edge_length)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_network(net, out)
    print(f"wrote {out}: {len(net.vertices)} vertices, {len(net.edges)} edges")
    return EXIT_OK


def _initial_density(spec: str, grid) -> np.ndarray:
    if spec.startswith("uniform:"):
        try:
            return np.full(grid.J, float(spec.split(":", 1)[1]))
        except ValueError as exc:
            raise UsageError(f"bad uniform value in {spec!r}") from exc
    if Path(spec).is_file():
        return read_snapshot(spec, grid)
    patterns = {
        "rightward-half": ("right", True),
        "leftward-half": ("left", True),
        "rightward": ("right", False),
        "leftward": ("left", False),
    }
    if spec not in patterns:
        raise UsageError(
            f"unknown initial density {spec!r}; use a snapshot file or one of {INITIAL_PATTERNS}"
        )
    direction, half = patterns[spec]
    return directional_density(grid, manhattan_side(grid.network), direction, 0.5, first_half=half)


def cmd_simulate(args) -> int:
    net = read_network(args.network)
    grid = discretize(net, args.dx)
    rho0 = _initial_density(args.initial, grid)
    fd = FundamentalDiagram(args.sigma, args.fmax)
    times = _parse_times(args.times)
    if times is None:
        times = np.linspace(0.0, args.T, args.n_samples).tolist()
    scen = Scenario(grid, rho0, fd=fd, t_final=args.T, dt_safety=args.dt_safety,
                    closures=args.closure, snapshot_times=times)
    traj = simulate(scen)
    out = Path(args.out) if args.out else _out_root() / "simulate"
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for t, f in traj:
        name = snapshot_name(t)
        write_snapshot(f, grid, out / name)
        files.append(name)
    write_network(scen.effective_network, out / "network.json")
    files.append("network.json")
    config = {
        "network": str(args.network), "dx": args.dx, "initial": args.initial,
        "sigma": args.sigma, "fmax": args.fmax, "T": args.T, "dt": scen.dt,
        "dt_safety": args.dt_safety, "closures": list(args.closure), "times": times,
    }
    write_manifest(out, config, files)
    print(f"wrote {len(traj)} snapshots to {out}")
    return EXIT_OK


def _dx_from_snapshot(path: str) -> float:
    """Cell width from the first cell center of a snapshot (center of cell 1 is dx/2)."""
    with open(path, encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            parts = line.split(",")
            if len(parts) == 4 and int(parts[1]) == 1:
                return 2.0 * float(parts[2])
    raise ValueError(f"{path}: cannot infer dx")


def cmd_distance(args) -> int:
    net = read_network(args.network)
    dx = args.dx if args.dx is not None else _dx_from_snapshot(args.a)
    grid = discretize(net, dx)
    a, b = read_snapshot(args.a, grid), read_snapshot(args.b, grid)
    cost = grid_cost_matrix(grid)
    value, plan = wasserstein_grid(a, b, cost, dx, normalized=not args.unnormalized,
                                   renormalize=args.renormalize, return_plan=True)
    if args.plan:
        write_plan(plan, args.plan)
    print(repr(value))
    return EXIT_OK


def _load_config(args) -> ExperimentConfig:
    doc: dict = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
    overrides = {
        "kind": args.kind, "eps": args.eps, "sigma_d": args.sigma_d, "fmax_d": args.fmax_d,
        "T": args.T, "dt_safety": args.dt_safety, "workers": args.workers,
        "cells_per_edge": args.cells_per_edge, "n_samples": args.n_samples,
    }
    if args.ell:
        overrides["ells"] = args.ell
    if args.no_charts:
        overrides["charts"] = False
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if "kind" not in doc:
        raise UsageError("experiment needs --kind or a config with 'kind'")
    cfg = ExperimentConfig.from_dict(doc)
    if args.out:
        cfg.out = args.out
    elif not cfg.out:
        cfg.out = str(_out_root() / cfg.kind)
    return cfg.resolved()


def cmd_experiment(args) -> int:
    cfg = _load_config(args)
    tables = run_experiment(cfg)
    print(f"{cfg.kind}: wrote {', '.join(sorted(tables))} to {cfg.out}")
    return EXIT_OK


# --- parser ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = _Parser(prog="lwrnet", description="LWR traffic simulation and Wasserstein sensitivity "
                "analysis on road networks.", epilog=EPILOG, formatter_class=fmt)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate-network", help="write a Manhattan grid network file",
                       epilog=EPILOG, formatter_class=fmt)
    g.add_argument("--ell", type=int, required=True, help="junctions per side (>= 2)")
    g.add_argument("--edge-length", type=float, default=1.0)
    g.add_argument("--out", required=True, help="output JSON path")
    g.set_defaults(func=cmd_generate_network)

    s = sub.add_parser("simulate", help="run one scenario and write density snapshots",
                       epilog=EPILOG, formatter_class=fmt)
    s.add_argument("--network", required=True, help="network JSON file")
    s.add_argument("--dx", type=float, default=0.1)
    s.add_argument("--initial", default="rightward-half",
                   help=f"snapshot CSV or one of {', '.join(INITIAL_PATTERNS)} (Manhattan only)")
    s.add_argument("--sigma", type=float, default=0.3)
    s.add_argument("--fmax", type=float, default=0.25)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--dt-safety", type=float, default=0.9)
    s.add_argument("--times", help="comma-separated snapshot times (default: evenly spaced)")
    s.add_argument("--n-samples", type=int, default=11)
    s.add_argument("--closure", type=int, action="append", default=[],
                   help="edge id closed to incoming traffic (repeatable)")
    s.add_argument("--out", help=f"output directory (default: ${OUT_ENV}/simulate)")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("distance", help="normalized transport distance between two snapshots",
                       epilog=EPILOG, formatter_class=fmt)
    d.add_argument("a")
    d.add_argument("b")
    d.add_argument("--network", required=True)
    d.add_argument("--dx", type=float, help="cell width (default: read from the snapshot)")
    d.add_argument("--unnormalized", action="store_true", help="print H instead of H/M")
    d.add_argument("--renormalize", action="store_true",
                   help="rescale the second density to the mass of the first")
    d.add_argument("--plan", help="also write the optimal plan to this CSV")
    d.set_defaults(func=cmd_distance)

    e = sub.add_parser("experiment", help="run a sensitivity or convergence study",
                       epilog=EPILOG, formatter_class=fmt)
    e.add_argument("--config", help="JSON config; flags override its values")
    e.add_argument("--kind", choices=KINDS)
    e.add_argument("--ell", type=int, action="append", help="grid side (repeatable)")
    e.add_argument("--cells-per-edge", type=int)
    e.add_argument("--eps", type=float)
    e.add_argument("--sigma-d", type=float)
    e.add_argument("--fmax-d", type=float)
    e.add_argument("--T", type=float)
    e.add_argument("--n-samples", type=int)
    e.add_argument("--dt-safety", type=float)
    e.add_argument("--workers", type=int)
    e.add_argument("--no-charts", action="store_true")
    e.add_argument("--out", help=f"output directory (default: ${OUT_ENV}/<kind>)")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lwrnet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CFLViolationError, TransportSolveError, ArithmeticError, MemoryError) as exc:
        print(f"lwrnet: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (json.JSONDecodeError, ConfigError, NetworkError, MassMismatchError,
            GridMismatchError, ValueError, TypeError) as exc:
        print(f"lwrnet: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"lwrnet: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
