"""Godunov scheme for the LWR model on a network, localized multi-path junctions.

Cells strictly inside a road are advanced with the classical Godunov update.
The last cell of every incoming road and the first cell of every outgoing
road of a junction carry one sub-density per local path (incoming road,
outgoing road) through that junction; those sub-densities are advanced as a
coupled system and summed back to the total density each step.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .network import CellGrid, DistributionError, MetricNetwork, NetworkError

log = logging.getLogger(__name__)

BOX_TOL = 1e-12
DEFAULT_SAFETY = 0.9


class CFLViolationError(ArithmeticError):
    """A step produced densities outside [0, 1]."""


@dataclass(frozen=True)
class FundamentalDiagram:
    """Piecewise linear flux with peak ``f_max`` at critical density ``sigma``."""

    sigma: float = 0.3
    f_max: float = 0.25

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise ValueError(f"critical density must lie in (0, 1), got {self.sigma}")
        if not self.f_max > 0:
            raise ValueError(f"f_max must be positive, got {self.f_max}")

    @property
    def max_speed(self) -> float:
        return max(self.f_max / self.sigma, self.f_max / (1.0 - self.sigma))


def _check_density(rho, name="rho"):
    r = np.asarray(rho, dtype=float)
    if np.any(r < -BOX_TOL) or np.any(r > 1 + BOX_TOL) or np.any(np.isnan(r)):
        raise ValueError(f"{name} outside [0, 1]: {rho}")


def _f(rho, sigma, f_max):
    rho = np.asarray(rho, dtype=float)
    return np.where(rho <= sigma, (f_max / sigma) * rho, (f_max / (sigma - 1.0)) * (rho - 1.0))


def flux(rho, fd: FundamentalDiagram):
    """Evaluate f(rho); accepts scalars or arrays."""
    _check_density(rho)
    out = _f(rho, fd.sigma, fd.f_max)
    return float(out) if np.ndim(out) == 0 else out


def godunov_flux(rho_minus: float, rho_plus: float, fd: FundamentalDiagram) -> float:
    """Godunov numerical flux, case by case."""
    _check_density(rho_minus, "rho_minus")
    _check_density(rho_plus, "rho_plus")
    s = fd.sigma
    if rho_minus <= rho_plus:
        return min(flux(rho_minus, fd), flux(rho_plus, fd))
    if rho_minus < s:
        return flux(rho_minus, fd)
    if rho_plus > s:
        return flux(rho_plus, fd)
    return flux(s, fd)


def _demand(rho, sigma, f_max):
    return _f(np.minimum(rho, sigma), sigma, f_max)


def _supply(rho, sigma, f_max):
    return _f(np.maximum(rho, sigma), sigma, f_max)


def godunov_flux_array(rho_minus, rho_plus, sig_m, fmax_m, sig_p, fmax_p) -> np.ndarray:
    """Vectorized Godunov flux as min(demand upstream, supply downstream).

    Identical to :func:`godunov_flux` when both sides share one diagram; with
    different diagrams each side uses its own.
    """
    return np.minimum(_demand(rho_minus, sig_m, fmax_m), _supply(rho_plus, sig_p, fmax_p))


def cfl_dt(fd: FundamentalDiagram, dx: float, safety: float = DEFAULT_SAFETY) -> float:
    if not 0 < safety <= 1:
        raise ValueError(f"CFL safety factor must lie in (0, 1], got {safety}")
    if not dx > 0:
        raise ValueError(f"dx must be positive, got {dx}")
    return safety * dx / fd.max_speed


# --- junction bookkeeping -------------------------------------------------

@dataclass(frozen=True, eq=False)
class JunctionLayout:
    """Flat arrays describing every local path (e, e') of every vertex.

    Paths are ordered by vertex, then incoming road, then outgoing road.
    ``iface_in[k]`` indexes the intra-road interface feeding the last cell of
    e; ``iface_out[k]`` the one draining the first cell of e'.
    """

    vertex: np.ndarray
    in_edge: np.ndarray
    out_edge: np.ndarray
    alpha: np.ndarray
    last_cell: np.ndarray
    first_cell: np.ndarray
    iface_in: np.ndarray
    iface_out: np.ndarray
    n_inc: np.ndarray
    iface_left: np.ndarray
    interior: np.ndarray

    @property
    def n_paths(self) -> int:
        return len(self.vertex)


def junction_layout(grid: CellGrid, network: MetricNetwork | None = None) -> JunctionLayout:
    """Index arrays for ``grid``; ``network`` supplies the matrices (default: the grid's)."""
    net = network if network is not None else grid.network
    for e in grid.network.edges:
        if grid.cells_per_edge[e.id] < 2:
            raise NetworkError(f"edge {e.id} has fewer than 2 cells; the solver needs J_e >= 2")

    # intra-road interfaces (left cell ids); edges in id order so ids are increasing
    left = np.concatenate([grid.edge_cells(e.id)[:-1] for e in grid.network.edges])
    iface_of_left = {int(c): i for i, c in enumerate(left)}

    cols = {k: [] for k in ("vertex", "in_edge", "out_edge", "alpha", "last", "first",
                            "iin", "iout", "ninc")}
    for v in grid.network.vertices:
        j = net.junctions[v]
        if not j.incoming or not j.outgoing:
            raise NetworkError(
                f"vertex {v} is a source or sink ({len(j.incoming)} in, "
                f"{len(j.outgoing)} out); the solver needs closed networks"
            )
        for r, e in enumerate(j.incoming):
            for c, e2 in enumerate(j.outgoing):
                last, first = grid.last_cell(e), grid.first_cell(e2)
                cols["vertex"].append(v)
                cols["in_edge"].append(e)
                cols["out_edge"].append(e2)
                cols["alpha"].append(j.matrix[r, c])
                cols["last"].append(last)
                cols["first"].append(first)
                cols["iin"].append(iface_of_left[last - 1])
                cols["iout"].append(iface_of_left[first])
                cols["ninc"].append(len(j.incoming))

    interior = np.ones(grid.J, dtype=bool)
    for e in grid.network.edges:
        interior[grid.first_cell(e.id)] = False
        interior[grid.last_cell(e.id)] = False

    ints = lambda k: np.asarray(cols[k], dtype=np.intp)  # noqa: E731
    return JunctionLayout(
        vertex=ints("vertex"),
        in_edge=ints("in_edge"),
        out_edge=ints("out_edge"),
        alpha=np.asarray(cols["alpha"], dtype=float),
        last_cell=ints("last"),
        first_cell=ints("first"),
        iface_in=ints("iin"),
        iface_out=ints("iout"),
        n_inc=ints("ninc"),
        iface_left=left.astype(np.intp),
        interior=interior,
    )


@dataclass(frozen=True, eq=False)
class DensityField:
    """Cell densities plus per-path sub-densities next to junctions.

    ``mu_last[k]`` lives on the last cell of the incoming road of path k,
    ``mu_first[k]`` on the first cell of its outgoing road (path order of
    :class:`JunctionLayout`).
    """

    grid: CellGrid
    rho: np.ndarray
    mu_last: np.ndarray
    mu_first: np.ndarray
    time: float = 0.0
    step: int = 0

    @property
    def mass(self) -> float:
        return float(self.rho.sum() * self.grid.dx)

    def sub(self, layout: JunctionLayout, v: int) -> dict[tuple[int, int], tuple[float, float]]:
        """Sub-densities at vertex ``v``: path -> (last-cell value, first-cell value)."""
        ks = np.flatnonzero(layout.vertex == v)
        return {
            (int(layout.in_edge[k]), int(layout.out_edge[k])): (
                float(self.mu_last[k]), float(self.mu_first[k])
            )
            for k in ks
        }


def init_subdensities(rho0, grid: CellGrid, layout: JunctionLayout | None = None) -> DensityField:
    """Split total densities next to junctions into sub-densities.

    Last incoming cells split proportionally to the distribution matrix,
    first outgoing cells split evenly over incoming roads.
    """
    lay = layout if layout is not None else junction_layout(grid)
    rho = np.array(rho0, dtype=float)
    if rho.shape != (grid.J,):
        raise ValueError(f"expected {grid.J} cell densities, got shape {rho.shape}")
    _check_density(rho, "initial density")
    mu_last = lay.alpha * rho[lay.last_cell]
    mu_first = rho[lay.first_cell] / lay.n_inc
    return DensityField(grid, rho, mu_last, mu_first, 0.0, 0)


# --- scenario -------------------------------------------------------------

def apply_closure(net: MetricNetwork, edge_id: int) -> MetricNetwork:
    """Forbid entering ``edge_id``: zero its column at the tail vertex and renormalize rows.

    The closed road still discharges at its head vertex.
    """
    e = net.edge(edge_id)
    j = net.junctions[e.tail]
    if len(j.outgoing) < 2:
        raise DistributionError(
            f"cannot close edge {edge_id}: it is the only outgoing road of vertex {e.tail}"
        )
    m = np.array(j.matrix)
    m[:, j.outgoing.index(edge_id)] = 0.0
    sums = m.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        raise DistributionError(
            f"cannot close edge {edge_id}: some incoming road at vertex {e.tail} "
            "would have nowhere to go"
        )
    return net.with_matrices({e.tail: m / sums})


@dataclass(eq=False)
class Scenario:
    """Everything needed to run one simulation.

    ``fd`` is one diagram or a mapping edge id -> diagram. ``network``
    overrides the grid's distribution matrices (same topology required);
    ``closures`` are applied on top of it. ``initial`` is a
    :class:`DensityField` or an array of total densities.
    """

    grid: CellGrid
    initial: object
    fd: FundamentalDiagram | Mapping[int, FundamentalDiagram] = field(
        default_factory=FundamentalDiagram
    )
    t_final: float = 0.0
    dt: float | None = None
    dt_safety: float = DEFAULT_SAFETY
    closures: Sequence[int] = ()
    snapshot_times: Sequence[float] | None = None
    network: MetricNetwork | None = None

    def __post_init__(self):
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")
        net = self.network if self.network is not None else self.grid.network
        if [(e.id, e.tail, e.head) for e in net.edges] != [
            (e.id, e.tail, e.head) for e in self.grid.network.edges
        ]:
            raise NetworkError("scenario network does not match the grid topology")
        for eid in self.closures:
            if eid not in self.grid.cells_per_edge:
                raise NetworkError(f"closed edge {eid} does not exist")
            net = apply_closure(net, eid)
        self.effective_network = net
        self.layout = junction_layout(self.grid, net)

        fds = self._per_edge_fd()
        sig = np.empty(self.grid.J)
        fmax = np.empty(self.grid.J)
        for e in self.grid.network.edges:
            cells = self.grid.edge_cells(e.id)
            sig[cells] = fds[e.id].sigma
            fmax[cells] = fds[e.id].f_max
        self.sigma_cells, self.fmax_cells = sig, fmax

        dt_max = min(cfl_dt(f, self.grid.dx, 1.0) for f in fds.values())
        if self.dt is None:
            self.dt = self.dt_safety * dt_max
        elif not 0 < self.dt <= dt_max * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} violates the CFL bound {dt_max}")
        if isinstance(self.initial, DensityField):
            if not self.initial.grid.same_cells(self.grid):
                raise ValueError("initial field lives on a different grid")
        else:
            self.initial = init_subdensities(self.initial, self.grid, self.layout)

    def _per_edge_fd(self) -> dict[int, FundamentalDiagram]:
        if isinstance(self.fd, FundamentalDiagram):
            return {e.id: self.fd for e in self.grid.network.edges}
        missing = set(self.grid.cells_per_edge) - set(self.fd)
        if missing:
            raise ValueError(f"no fundamental diagram for edges {sorted(missing)}")
        return dict(self.fd)

    @property
    def n_steps(self) -> int:
        return _steps_until(self.t_final, self.dt)


def _steps_until(t: float, dt: float) -> int:
    return int(math.floor(t / dt + 1e-9))


def _safe_ratio(mu, rho):
    out = np.zeros_like(mu)
    np.divide(mu, rho, out=out, where=rho > 0)
    return out


def step(state: DensityField, scenario: Scenario) -> DensityField:
    """Advance ``state`` by one time step of ``scenario.dt``."""
    lay = scenario.layout
    sig, fmax = scenario.sigma_cells, scenario.fmax_cells
    rho = state.rho
    lam = scenario.dt / state.grid.dx

    a = lay.iface_left
    b = a + 1
    F = godunov_flux_array(rho[a], rho[b], sig[a], fmax[a], sig[b], fmax[b])

    net = np.zeros_like(rho)
    net[a] -= F
    net[b] += F
    new = rho + lam * net

    last, first = lay.last_cell, lay.first_cell
    G_path = godunov_flux_array(
        rho[last], rho[first], sig[last], fmax[last], sig[first], fmax[first]
    )
    flow = _safe_ratio(state.mu_last, rho[last]) * G_path
    mu_last = state.mu_last - lam * (flow - lay.alpha * F[lay.iface_in])
    mu_first = state.mu_first - lam * (
        _safe_ratio(state.mu_first, rho[first]) * F[lay.iface_out] - flow
    )

    sums_last = np.bincount(last, weights=mu_last, minlength=len(rho))
    sums_first = np.bincount(first, weights=mu_first, minlength=len(rho))
    ulast = np.unique(last)
    ufirst = np.unique(first)
    new[ulast] = sums_last[ulast]
    new[ufirst] = sums_first[ufirst]

    bad = (new < -BOX_TOL) | (new > 1 + BOX_TOL)
    if np.any(bad) or np.any(mu_last < -BOX_TOL) or np.any(mu_first < -BOX_TOL):
        idx = np.flatnonzero(bad)
        detail = f"cells {idx[:5].tolist()} -> {new[idx[:5]].tolist()}" if idx.size else "sub-density"
        raise CFLViolationError(
            f"step {state.step + 1}: density left [0, 1] ({detail}); "
            f"dt={scenario.dt:g}, dx={state.grid.dx:g}"
        )
    n = state.step + 1
    return DensityField(state.grid, new, mu_last, mu_first, n * scenario.dt, n)


@dataclass
class Trajectory:
    """Snapshots keyed by requested time; ``fields[i]`` is the state at ``times[i]``."""

    times: list[float]
    fields: list[DensityField]

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(zip(self.times, self.fields))

    @property
    def rho(self) -> np.ndarray:
        return np.stack([f.rho for f in self.fields])


def simulate(scenario: Scenario) -> Trajectory:
    """Run ``scenario`` to ``t_final``.

    Each requested snapshot time maps to the last step at or before it.
    Without requested times only the initial and final states are kept.
    """
    dt = scenario.dt
    n_final = scenario.n_steps
    requested = (
        list(scenario.snapshot_times)
        if scenario.snapshot_times is not None
        else sorted({0.0, n_final * dt})
    )
    for t in requested:
        if t < 0 or _steps_until(t, dt) > n_final:
            raise ValueError(f"snapshot time {t} outside [0, {scenario.t_final}]")
    wanted: dict[int, list[int]] = {}
    for i, t in enumerate(requested):
        wanted.setdefault(_steps_until(t, dt), []).append(i)

    fields: list[DensityField | None] = [None] * len(requested)
    state = scenario.initial
    last_needed = max(wanted) if wanted else 0
    for n in range(last_needed + 1):
        if n > 0:
            state = step(state, scenario)
        for i in wanted.get(n, ()):
            fields[i] = state
    log.debug("simulated %d steps (dt=%g)", last_needed, dt)
    return Trajectory(requested, fields)  # type: ignore[arg-type]


# --- snapshot files -------------------------------------------------------

def snapshot_name(t: float) -> str:
    return f"rho_t{t:.4f}.csv"


def write_snapshot(field_: DensityField | np.ndarray, grid: CellGrid, path: str | Path) -> None:
    rho = field_.rho if isinstance(field_, DensityField) else np.asarray(field_)
    edge_of, j, x = grid.cell_table()
    lines = ["edge_id,cell_index,x_center,rho"]
    lines += [f"{e},{jj},{xx!r},{r!r}" for e, jj, xx, r in zip(edge_of.tolist(), j.tolist(), x.tolist(), rho.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_snapshot(path: str | Path, grid: CellGrid) -> np.ndarray:
    """Read a snapshot CSV into a density vector ordered like ``grid``."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0].replace(" ", "") != "edge_id,cell_index,x_center,rho":
        raise ValueError(f"{path}: missing snapshot header")
    rho = np.full(grid.J, np.nan)
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 columns")
        e, j = int(parts[0]), int(parts[1])
        try:
            rho[grid.global_index(e, j)] = float(parts[3])
        except (KeyError, IndexError) as exc:
            raise ValueError(f"{path}:{lineno}: cell ({e}, {j}) not in grid") from exc
    if np.isnan(rho).any():
        raise ValueError(f"{path}: {int(np.isnan(rho).sum())} cells missing")
    return rho
