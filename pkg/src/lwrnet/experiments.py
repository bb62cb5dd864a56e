"""Sensitivity studies on Manhattan grids and the discretization convergence studies.

Every runner takes an :class:`ExperimentConfig`, returns its tables as
``{filename: Table}`` and, when ``config.out`` is set, writes them as CSV
next to a ``manifest.json`` and optional SVG charts.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .graph import grid_cost_matrix
from .network import (
    CellGrid,
    MetricNetwork,
    build_network,
    discretize,
    manhattan,
    manhattan_directions,
    manhattan_positions,
    manhattan_vertex,
)
from .reference import LineDensity, l1_discrete, w1_line
from .solver import FundamentalDiagram, Scenario, cfl_dt, simulate
from .transport import wasserstein_grid

KINDS = (
    "initial_data",
    "fundamental_diagram",
    "junction_single",
    "junction_all",
    "road_closure",
    "convergence_1d",
    "convergence_grid",
)

DEFAULT_T = {
    "initial_data": 20.0,
    "fundamental_diagram": 20.0,
    "junction_single": 55.0,
    "junction_all": 55.0,
    "road_closure": 55.0,
    "convergence_grid": 1.4,
    "convergence_1d": 0.0,
}

DEFAULT_ELLS = {
    "initial_data": (3,),
    "fundamental_diagram": (5,),
    "junction_single": (3, 5),
    "junction_all": (3, 5),
    "road_closure": (3, 5),
    "convergence_grid": (3,),
    "convergence_1d": (),
}

# quartic/constant pair on [-2, 2] with known W1 = 3.2
QUARTIC_MASS = 92.0 / 15.0
QUARTIC_W1 = 3.2


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    ells: Sequence[int] | None = None
    cells_per_edge: int = 10
    edge_length: float = 1.0
    sigma_s: float = 0.3
    fmax_s: float = 0.25
    sigma_d: float | None = None
    fmax_d: float | None = None
    eps: float = 0.1
    T: float | None = None
    n_samples: int = 50
    sample_times: Sequence[float] | None = None
    dt_safety: float = 0.9
    sigma_d_values: Sequence[float] = (0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)
    fmax_d_values: Sequence[float] = (0.15, 0.2, 0.25, 0.3, 0.35, 0.4)
    je_values: Sequence[int] = (10, 20, 40, 80)
    dx_values: Sequence[float] = (0.2, 0.1, 0.05, 0.025)
    quadrature_cells: int = 1_000_000
    out: str | None = None
    workers: int = 1
    charts: bool = True

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "kind" not in doc:
            raise ConfigError("config needs a 'kind'")
        return cls(**doc)

    def resolved(self) -> "ExperimentConfig":
        """Copy with kind defaults filled in, validated."""
        cfg = dataclasses.replace(self)
        if cfg.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {cfg.kind!r}; choose from {KINDS}")
        if cfg.T is None:
            cfg.T = DEFAULT_T[cfg.kind]
        if cfg.ells is None:
            cfg.ells = DEFAULT_ELLS[cfg.kind]
        cfg.ells = tuple(int(e) for e in cfg.ells)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.T is None or self.T < 0:
            raise ConfigError("T must be nonnegative")
        if self.kind != "convergence_1d":
            if not self.ells:
                raise ConfigError("at least one grid size ell is required")
            if any(e < 2 for e in self.ells):
                raise ConfigError("ell must be >= 2")
            if self.cells_per_edge < 2:
                raise ConfigError("cells_per_edge must be >= 2")
        if self.kind in ("initial_data", "convergence_grid") and self.cells_per_edge % 2:
            raise ConfigError("initial-data experiments need an even number of cells per edge")
        if self.kind == "convergence_grid" and any(j % 2 or j < 2 for j in self.je_values):
            raise ConfigError("je_values must be even")
        if not 0 < self.dt_safety <= 1:
            raise ConfigError("dt_safety must lie in (0, 1]")
        for name in ("sigma_s", "sigma_d"):
            v = getattr(self, name)
            if v is not None and not 0 < v < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        for name in ("fmax_s", "fmax_d"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive")
        if any(not 0 < s < 1 for s in self.sigma_d_values):
            raise ConfigError("sigma_d_values must lie in (0, 1)")
        if any(not f > 0 for f in self.fmax_d_values):
            raise ConfigError("fmax_d_values must be positive")
        if self.kind.startswith("junction"):
            # 1/n_out +- eps must stay in [0, 1] at 4-way junctions
            if not 0 <= self.eps <= 0.25:
                raise ConfigError(f"eps must lie in [0, 1/4], got {self.eps}")
        if self.kind == "junction_single" and any(e % 2 == 0 for e in self.ells):
            raise ConfigError("single-junction perturbation needs odd ell (a central junction)")
        if self.kind == "convergence_1d" and any(not d > 0 for d in self.dx_values):
            raise ConfigError("dx_values must be positive")
        if self.n_samples < 2 and self.sample_times is None:
            raise ConfigError("n_samples must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def times(self) -> list[float]:
        if self.sample_times is not None:
            ts = sorted(float(t) for t in self.sample_times)
            if ts and (ts[0] < 0 or ts[-1] > self.T):
                raise ConfigError("sample_times must lie in [0, T]")
            return ts
        return np.linspace(0.0, self.T, self.n_samples).tolist()


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


# --- scenario building blocks --------------------------------------------

def manhattan_grid(ell: int, cells_per_edge: int, edge_length: float = 1.0) -> CellGrid:
    return discretize(manhattan(ell, edge_length), edge_length / cells_per_edge)


def directional_density(grid: CellGrid, ell: int, direction: str, value: float,
                        first_half: bool = False) -> np.ndarray:
    """``value`` on every cell of roads heading ``direction`` (or their first half)."""
    dirs = manhattan_directions(ell)
    edge_of, j, _ = grid.cell_table()
    mask = np.isin(edge_of, [e for e, d in dirs.items() if d == direction])
    if first_half:
        n = np.array([grid.cells_per_edge[e] for e in edge_of])
        mask &= j <= n // 2
    return np.where(mask, value, 0.0)


def central_vertex(ell: int) -> int:
    if ell % 2 == 0:
        raise ConfigError("even grids have no central junction")
    m = (ell - 1) // 2
    return manhattan_vertex(ell, m, m)


def central_rightward_edge(ell: int) -> int:
    """Rightward road leaving the central junction (odd ell); nearest to the centroid otherwise."""
    if ell % 2:
        m = (ell - 1) // 2
        return m * (ell - 1) + m + 1
    pos = manhattan_positions(ell)
    center = ((ell - 1) / 2, (ell - 1) / 2)
    best = None
    for eid, d in sorted(manhattan_directions(ell).items()):
        if d != "right":
            continue
        net_edge = _manhattan_endpoints(ell)[eid]
        (x0, y0), (x1, y1) = pos[net_edge[0]], pos[net_edge[1]]
        dist = math.hypot((x0 + x1) / 2 - center[0], (y0 + y1) / 2 - center[1])
        if best is None or dist < best[0] - 1e-12:
            best = (dist, eid)
    return best[1]


def _manhattan_endpoints(ell: int) -> dict[int, tuple[int, int]]:
    from .network import manhattan_edges

    return {i: (t, h) for i, t, h, _ in manhattan_edges(ell)}


def perturbed_row(n_out: int, eps: float, sign: int) -> np.ndarray:
    """+eps, -eps, +eps, -eps (times ``sign``) on the outgoing columns, renormalized."""
    pattern = np.array([1.0, -1.0, 1.0, -1.0])[:n_out] * sign
    row = 1.0 / n_out + eps * pattern
    return row / row.sum()


def perturb_junctions(net: MetricNetwork, eps: float, vertices: Sequence[int] | None = None,
                      parity: bool = False) -> MetricNetwork:
    """Perturbed distribution matrices.

    ``parity`` flips the sign at even-labeled vertices. At junctions with
    fewer than four incoming roads only the first two rows change.
    """
    targets = net.vertices if vertices is None else vertices
    mats = {}
    for v in targets:
        j = net.junctions[v]
        n_inc, n_out = len(j.incoming), len(j.outgoing)
        sign = -1 if (parity and v % 2 == 0) else 1
        m = np.array(j.matrix)
        rows = range(n_inc) if n_inc >= 4 else range(min(2, n_inc))
        for r in rows:
            m[r] = perturbed_row(n_out, eps, sign)
        mats[v] = m
    return net.with_matrices(mats)


def aligned_dt(T: float, fds: Sequence[FundamentalDiagram], dx: float, safety: float) -> float:
    """Common CFL step for several scenarios, shrunk so that T is hit exactly."""
    dt = min(cfl_dt(fd, dx, safety) for fd in fds)
    if T <= 0:
        return dt
    return T / math.ceil(T / dt - 1e-9)


def compare_series(grid: CellGrid, scen_s: Scenario, scen_d: Scenario,
                   with_l1: bool = False, cost=None) -> list[tuple]:
    """Sample both scenarios at their snapshot times and measure the distance."""
    c = grid_cost_matrix(grid) if cost is None else cost
    traj_s, traj_d = simulate(scen_s), simulate(scen_d)
    rows = []
    for (_, fs), (_, fd) in zip(traj_s, traj_d):
        h = wasserstein_grid(fs, fd, c)
        if with_l1:
            rows.append((fs.time, h, l1_discrete(fs, fd)))
        else:
            rows.append((fs.time, h))
    return rows


def _run_jobs(fn: Callable, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


# --- experiments -----------------------------------------------------------

def _initial_data_job(cfg: ExperimentConfig, ell: int, cells_per_edge: int,
                      times: Sequence[float]) -> list[tuple]:
    grid = manhattan_grid(ell, cells_per_edge, cfg.edge_length)
    fd = FundamentalDiagram(cfg.sigma_s, cfg.fmax_s)
    dt = aligned_dt(cfg.T, [fd], grid.dx, cfg.dt_safety)
    rho_s = directional_density(grid, ell, "right", 0.5, first_half=True)
    rho_d = directional_density(grid, ell, "left", 0.5, first_half=True)
    common = dict(fd=fd, t_final=cfg.T, dt=dt, snapshot_times=times)
    return compare_series(grid, Scenario(grid, rho_s, **common),
                          Scenario(grid, rho_d, **common), with_l1=True)


def exp_initial_data(config: ExperimentConfig) -> dict[str, Table]:
    """Same dynamics, vehicles initially on the first half of rightward vs leftward roads."""
    cfg = _resolve(config, "initial_data")
    times = cfg.times()
    jobs = [(cfg, ell, cfg.cells_per_edge, times) for ell in cfg.ells]
    tables = {}
    for ell, rows in zip(cfg.ells, _run_jobs(_initial_data_job, jobs, cfg.workers)):
        tables[f"series_ell{ell}.csv"] = Table(("t", "H_hat", "L1_hat"), rows)
    return _finish(cfg, tables)


def _fd_job(cfg, ell, fd_d: FundamentalDiagram, times) -> list[tuple]:
    grid = manhattan_grid(ell, cfg.cells_per_edge, cfg.edge_length)
    fd_s = FundamentalDiagram(cfg.sigma_s, cfg.fmax_s)
    dt = aligned_dt(cfg.T, [fd_s, fd_d], grid.dx, cfg.dt_safety)
    rho0 = directional_density(grid, ell, "right", 0.5)
    common = dict(t_final=cfg.T, dt=dt, snapshot_times=times)
    return compare_series(grid, Scenario(grid, rho0, fd=fd_s, **common),
                          Scenario(grid, rho0, fd=fd_d, **common))


def exp_fundamental_diagram(config: ExperimentConfig) -> dict[str, Table]:
    """Sweeps of the demand critical density and capacity, plus distance-vs-time curves."""
    cfg = _resolve(config, "fundamental_diagram")
    sig_d = 0.2 if cfg.sigma_d is None else cfg.sigma_d
    fmax_d = 0.3 if cfg.fmax_d is None else cfg.fmax_d
    final = [cfg.T]
    jobs, keys = [], []
    for ell in cfg.ells:
        for s in cfg.sigma_d_values:
            jobs.append((cfg, ell, FundamentalDiagram(s, cfg.fmax_s), final))
            keys.append(("sigma", ell, s))
        for f in cfg.fmax_d_values:
            jobs.append((cfg, ell, FundamentalDiagram(cfg.sigma_s, f), final))
            keys.append(("fmax", ell, f))
        jobs.append((cfg, ell, FundamentalDiagram(sig_d, cfg.fmax_s), cfg.times()))
        keys.append(("series_sigma", ell, sig_d))
        jobs.append((cfg, ell, FundamentalDiagram(cfg.sigma_s, fmax_d), cfg.times()))
        keys.append(("series_fmax", ell, fmax_d))

    results = _run_jobs(_fd_job, jobs, cfg.workers)
    sweep_sigma = Table(("ell", "sigma_d", "H_hat"))
    sweep_fmax = Table(("ell", "fmax_d", "H_hat"))
    tables: dict[str, Table] = {"sweep_sigma.csv": sweep_sigma, "sweep_fmax.csv": sweep_fmax}
    for (what, ell, val), rows in zip(keys, results):
        if what == "sigma":
            sweep_sigma.rows.append((ell, float(val), rows[-1][1]))
        elif what == "fmax":
            sweep_fmax.rows.append((ell, float(val), rows[-1][1]))
        else:
            tables[f"{what}_ell{ell}.csv"] = Table(("t", "H_hat"), rows)
    return _finish(cfg, tables)


def _uniform_job(cfg, ell, rho_value: float, demand_net_fn: str, times) -> list[tuple]:
    grid = manhattan_grid(ell, cfg.cells_per_edge, cfg.edge_length)
    fd = FundamentalDiagram(cfg.sigma_s, cfg.fmax_s)
    dt = aligned_dt(cfg.T, [fd], grid.dx, cfg.dt_safety)
    rho0 = np.full(grid.J, rho_value)
    common = dict(fd=fd, t_final=cfg.T, dt=dt, snapshot_times=times)
    supply = Scenario(grid, rho0, **common)
    if demand_net_fn == "single":
        net = perturb_junctions(grid.network, cfg.eps, vertices=[central_vertex(ell)])
        demand = Scenario(grid, rho0, network=net, **common)
    elif demand_net_fn == "all":
        net = perturb_junctions(grid.network, cfg.eps, parity=True)
        demand = Scenario(grid, rho0, network=net, **common)
    else:
        demand = Scenario(grid, rho0, closures=[central_rightward_edge(ell)], **common)
    return compare_series(grid, supply, demand)


def exp_junction(config: ExperimentConfig, mode: str | None = None) -> dict[str, Table]:
    """Uniform 0.5 density; demand perturbs the distribution at one or all junctions."""
    if mode is None:
        mode = config.kind.removeprefix("junction_")
    if mode not in ("single", "all"):
        raise ConfigError(f"junction mode must be 'single' or 'all', got {mode!r}")
    cfg = _resolve(config, f"junction_{mode}")
    times = cfg.times()
    jobs = [(cfg, ell, 0.5, mode, times) for ell in cfg.ells]
    tables = {
        f"series_ell{ell}.csv": Table(("t", "H_hat"), rows)
        for ell, rows in zip(cfg.ells, _run_jobs(_uniform_job, jobs, cfg.workers))
    }
    return _finish(cfg, tables)


def exp_road_closure(config: ExperimentConfig) -> dict[str, Table]:
    """Uniform 0.3 density; demand closes the central rightward road at t=0+."""
    cfg = _resolve(config, "road_closure")
    times = cfg.times()
    jobs = [(cfg, ell, 0.3, "closure", times) for ell in cfg.ells]
    tables = {
        f"series_ell{ell}.csv": Table(("t", "H_hat"), rows)
        for ell, rows in zip(cfg.ells, _run_jobs(_uniform_job, jobs, cfg.workers))
    }
    return _finish(cfg, tables)


def quartic_pair() -> tuple[LineDensity, LineDensity]:
    quartic = LineDensity(-2.0, 2.0, lambda x: x**4 - 2 * x**2 + 1, mass=QUARTIC_MASS)
    const = LineDensity(-2.0, 2.0, lambda x: np.full_like(x, 23.0 / 15.0), mass=QUARTIC_MASS)
    return quartic, const


def _quartic_antiderivative(x):
    return x**5 / 5 - 2 * x**3 / 3 + x


def line_grid(a: float, b: float, dx: float) -> CellGrid:
    net = build_network({"vertices": [0, 1], "edges": [(1, 0, 1, b - a)]})
    return discretize(net, dx)


def quartic_graph_distance(dx: float) -> float:
    """Unnormalized graph-LP distance for the quartic/constant pair at cell width ``dx``."""
    grid = line_grid(-2.0, 2.0, dx)
    edges = np.linspace(-2.0, 2.0, grid.J + 1)
    rho_s = np.diff(_quartic_antiderivative(edges)) / dx
    rho_d = np.full(grid.J, 23.0 / 15.0)
    return wasserstein_grid(rho_s, rho_d, grid_cost_matrix(grid), dx, normalized=False)


def exp_convergence(config: ExperimentConfig) -> dict[str, Table]:
    """1D |W - H| study (``convergence_1d``) or Ĥ versus cells per edge (``convergence_grid``)."""
    cfg = config.resolved() if config.kind in ("convergence_1d", "convergence_grid") else None
    if cfg is None:
        raise ConfigError("exp_convergence needs kind convergence_1d or convergence_grid")
    if cfg.kind == "convergence_1d":
        w = w1_line(*quartic_pair(), quadrature_cells=cfg.quadrature_cells)
        table = Table(("dx", "H", "abs_err", "bound", "W_line"))
        for dx in cfg.dx_values:
            h = quartic_graph_distance(dx)
            table.rows.append((float(dx), h, abs(h - QUARTIC_W1), QUARTIC_MASS * dx, w))
        return _finish(cfg, {"convergence_1d.csv": table})

    table = Table(("ell", "J_e", "H_hat"))
    jobs = [(cfg, ell, je, [cfg.T]) for ell in cfg.ells for je in cfg.je_values]
    for (_, ell, je, _), rows in zip(jobs, _run_jobs(_initial_data_job, jobs, cfg.workers)):
        table.rows.append((ell, je, rows[-1][1]))
    return _finish(cfg, {"convergence_grid.csv": table})


RUNNERS: dict[str, Callable[[ExperimentConfig], dict[str, Table]]] = {
    "initial_data": exp_initial_data,
    "fundamental_diagram": exp_fundamental_diagram,
    "junction_single": exp_junction,
    "junction_all": exp_junction,
    "road_closure": exp_road_closure,
    "convergence_1d": exp_convergence,
    "convergence_grid": exp_convergence,
}


def run_experiment(config: ExperimentConfig) -> dict[str, Table]:
    cfg = config.resolved()
    return RUNNERS[cfg.kind](cfg)


def _resolve(config: ExperimentConfig, kind: str) -> ExperimentConfig:
    if config.kind != kind:
        config = dataclasses.replace(config, kind=kind)
    return config.resolved()


# --- outputs ----------------------------------------------------------------

def _finish(cfg: ExperimentConfig, tables: dict[str, Table]) -> dict[str, Table]:
    if cfg.out:
        write_outputs(cfg, tables, Path(cfg.out))
    return tables


def write_manifest(out: Path, config: dict, files: Sequence[str], extra: dict | None = None) -> None:
    doc = {"tool": "lwrnet", "version": __version__, "config": config, "outputs": sorted(files)}
    if extra:
        doc.update(extra)
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")


def write_outputs(cfg: ExperimentConfig, tables: dict[str, Table], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for name, table in tables.items():
        table.write_csv(out / name)
        files.append(name)
        if cfg.charts and len(table.rows) > 1:
            chart = _chart_for(name, table)
            if chart is not None:
                svg_name = name.replace(".csv", ".svg")
                (out / svg_name).write_text(chart, encoding="utf-8")
                files.append(svg_name)
    config = dataclasses.asdict(cfg)
    config["ells"] = list(cfg.ells)
    write_manifest(out, config, files)


def _chart_for(name: str, table: Table) -> str | None:
    cols = table.columns
    if cols[0] == "t":
        series = {c: (table.column("t"), table.column(c)) for c in cols[1:]}
        return svg_line_chart(series, "t", "distance", name[:-4])
    if cols[0] == "ell" and len(cols) == 3:
        series = {}
        for ell in sorted(set(table.column("ell").astype(int))):
            rows = [r for r in table.rows if r[0] == ell]
            series[f"ell={ell}"] = (np.array([r[1] for r in rows]), np.array([r[2] for r in rows]))
        return svg_line_chart(series, cols[1], cols[2], name[:-4])
    if cols[0] == "dx":
        return svg_line_chart(
            {"|H-W|": (table.column("dx"), table.column("abs_err")),
             "M dx": (table.column("dx"), table.column("bound"))},
            "dx", "error", name[:-4],
        )
    return None


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def svg_line_chart(series: dict[str, tuple[np.ndarray, np.ndarray]], xlabel: str,
                   ylabel: str, title: str, width: int = 480, height: int = 320) -> str:
    """Minimal standalone SVG line chart."""
    left, right, top, bottom = 60, 20, 30, 45
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = min(0.0, float(ys.min())), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        parts.append(f'<text x="{px(xv):.1f}" y="{top + ph + 15}" text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<text x="{left - 5}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 8}" text-anchor="middle">{xlabel}</text>')
    parts.append(
        f'<text x="14" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2})">{ylabel}</text>'
    )
    for i, (label, (x, y)) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(
            f'<text x="{left + pw - 5}" y="{top + 14 + 13 * i}" text-anchor="end" '
            f'fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
