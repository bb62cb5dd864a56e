"""Metric road networks and their uniform cell discretization.

A network is a connected directed graph whose edges (roads) carry a length
and whose vertices (junctions) carry a row-stochastic distribution matrix:
row ``r`` gives how traffic arriving on the r-th incoming road splits over
the outgoing roads. Incoming and outgoing roads at a vertex are always
ordered by edge id.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

ROW_SUM_TOL = 1e-12


class NetworkError(ValueError):
    """Base class for network validation failures."""


class DanglingEndpointError(NetworkError):
    pass


class NonPositiveLengthError(NetworkError):
    pass


class DistributionError(NetworkError):
    """Malformed, negative or non-stochastic distribution matrix."""


class DisconnectedNetworkError(NetworkError):
    pass


class DiscretizationError(NetworkError):
    pass


class NetworkFormatError(NetworkError):
    """Unknown or missing keys in a network document."""


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int
    length: float


@dataclass(frozen=True)
class Junction:
    """Distribution matrix of one vertex with its road ordering."""

    vertex: int
    incoming: tuple[int, ...]
    outgoing: tuple[int, ...]
    matrix: np.ndarray = field(compare=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Junction):
            return NotImplemented
        return (
            self.vertex == other.vertex
            and self.incoming == other.incoming
            and self.outgoing == other.outgoing
            and np.array_equal(self.matrix, other.matrix)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class MetricNetwork:
    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]
    junctions: Mapping[int, Junction]

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {e.id: e for e in self.edges})

    def edge(self, edge_id: int) -> Edge:
        return self._by_id[edge_id]

    @property
    def edge_ids(self) -> tuple[int, ...]:
        return tuple(e.id for e in self.edges)

    def incoming(self, v: int) -> tuple[int, ...]:
        return tuple(e.id for e in self.edges if e.head == v)

    def outgoing(self, v: int) -> tuple[int, ...]:
        return tuple(e.id for e in self.edges if e.tail == v)

    def distribution(self, v: int) -> np.ndarray:
        return self.junctions[v].matrix

    def with_matrices(self, matrices: Mapping[int, Any]) -> "MetricNetwork":
        """Copy of the network with some distribution matrices replaced."""
        junctions = dict(self.junctions)
        for v, m in matrices.items():
            old = junctions[v]
            junctions[v] = _make_junction(v, old.incoming, old.outgoing, m)
        return MetricNetwork(self.vertices, self.edges, junctions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MetricNetwork):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.edges == other.edges
            and dict(self.junctions) == dict(other.junctions)
        )

    __hash__ = None  # type: ignore[assignment]

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [
                {"id": e.id, "tail": e.tail, "head": e.head, "length": e.length}
                for e in self.edges
            ],
            "distribution": {
                str(v): {
                    "incoming": list(j.incoming),
                    "outgoing": list(j.outgoing),
                    "matrix": j.matrix.tolist(),
                }
                for v, j in self.junctions.items()
            },
        }


def _make_junction(v, incoming, outgoing, matrix) -> Junction:
    m = np.array(matrix, dtype=float)
    if m.shape != (len(incoming), len(outgoing)):
        raise DistributionError(
            f"vertex {v}: matrix shape {m.shape} does not match "
            f"{len(incoming)} incoming x {len(outgoing)} outgoing roads"
        )
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise DistributionError(f"vertex {v}: negative or non-finite coefficient")
    # a vertex without outgoing roads has empty rows; nothing to check
    for r, row in enumerate(m if outgoing else ()):
        if abs(row.sum() - 1.0) > ROW_SUM_TOL:
            raise DistributionError(
                f"vertex {v}: row sum != 1 for incoming road {incoming[r]} "
                f"(sum={row.sum():.15g})"
            )
    m.setflags(write=False)
    return Junction(v, tuple(incoming), tuple(outgoing), m)


def equidistributed(n_inc: int, n_out: int) -> np.ndarray:
    if n_out == 0:
        return np.zeros((n_inc, 0))
    return np.full((n_inc, n_out), 1.0 / n_out)


def build_network(spec: Mapping[str, Any]) -> MetricNetwork:
    """Validate a network description and return a :class:`MetricNetwork`.

    ``spec`` has keys ``vertices`` (ids), ``edges`` (mappings or tuples
    ``(id, tail, head, length)``) and optionally ``distribution``, a mapping
    vertex id -> ``{"incoming": [...], "outgoing": [...], "matrix": [[...]]}``.
    Matrices are reordered to edge-id order; missing ones are
    equidistributed. Vertices without outgoing roads get an empty matrix.
    """
    unknown = set(spec) - {"vertices", "edges", "distribution"}
    if unknown:
        raise NetworkFormatError(f"unknown keys: {sorted(unknown)}")
    for key in ("vertices", "edges"):
        if key not in spec:
            raise NetworkFormatError(f"missing key: {key!r}")

    vertices = tuple(int(v) for v in spec["vertices"])
    if len(set(vertices)) != len(vertices):
        raise NetworkError("duplicate vertex id")
    vset = set(vertices)

    edges = []
    for raw in spec["edges"]:
        if isinstance(raw, Mapping):
            extra = set(raw) - {"id", "tail", "head", "length"}
            if extra:
                raise NetworkFormatError(f"unknown edge keys: {sorted(extra)}")
            eid, tail, head, length = raw["id"], raw["tail"], raw["head"], raw["length"]
        else:
            eid, tail, head, length = raw
        e = Edge(int(eid), int(tail), int(head), float(length))
        if e.tail not in vset or e.head not in vset:
            raise DanglingEndpointError(f"edge {e.id}: endpoint not among vertices")
        if not (e.length > 0) or not math.isfinite(e.length):
            raise NonPositiveLengthError(f"edge {e.id}: non-positive length {e.length}")
        edges.append(e)
    edges.sort(key=lambda e: e.id)
    if len({e.id for e in edges}) != len(edges):
        raise NetworkError("duplicate edge id")

    _check_connected(vertices, edges)

    given = {int(k): val for k, val in (spec.get("distribution") or {}).items()}
    for v in given:
        if v not in vset:
            raise DanglingEndpointError(f"distribution given for unknown vertex {v}")
    junctions = {}
    for v in vertices:
        inc = tuple(e.id for e in edges if e.head == v)
        out = tuple(e.id for e in edges if e.tail == v)
        if v in given:
            junctions[v] = _reorder(v, inc, out, given[v])
        else:
            junctions[v] = _make_junction(v, inc, out, equidistributed(len(inc), len(out)))
    return MetricNetwork(vertices, tuple(edges), junctions)


def _reorder(v, inc, out, entry) -> Junction:
    if isinstance(entry, Mapping):
        extra = set(entry) - {"incoming", "outgoing", "matrix"}
        if extra:
            raise NetworkFormatError(f"vertex {v}: unknown keys {sorted(extra)}")
        d_inc = tuple(int(x) for x in entry.get("incoming", inc))
        d_out = tuple(int(x) for x in entry.get("outgoing", out))
        matrix = entry["matrix"]
    else:
        d_inc, d_out, matrix = inc, out, entry
    if sorted(d_inc) != sorted(inc) or sorted(d_out) != sorted(out):
        raise DistributionError(f"vertex {v}: declared road order does not match the graph")
    m = np.array(matrix, dtype=float)
    if m.shape != (len(d_inc), len(d_out)):
        raise DistributionError(f"vertex {v}: matrix shape {m.shape} is malformed")
    rows = [d_inc.index(e) for e in inc]
    cols = [d_out.index(e) for e in out]
    return _make_junction(v, inc, out, m[np.ix_(rows, cols)])


def _check_connected(vertices, edges) -> None:
    if not vertices:
        raise DisconnectedNetworkError("empty network")
    adj: dict[int, list[int]] = {v: [] for v in vertices}
    for e in edges:
        adj[e.tail].append(e.head)
        adj[e.head].append(e.tail)
    seen = {vertices[0]}
    queue = deque([vertices[0]])
    while queue:
        for w in adj[queue.popleft()]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    if len(seen) != len(vertices):
        raise DisconnectedNetworkError(
            f"network is disconnected ({len(seen)} of {len(vertices)} vertices reachable)"
        )


# --- Manhattan grid -------------------------------------------------------

def manhattan_vertex(ell: int, row: int, col: int) -> int:
    """Vertex id of grid position (row, col), rows counted from the bottom."""
    return row * ell + col + 1


def manhattan_edges(ell: int) -> list[tuple[int, int, int, str]]:
    """``(edge id, tail, head, direction)`` for the two-way grid of side ``ell``.

    Blocks in order rightward, leftward, upward, downward; each block is
    row-major from the bottom-left corner. Ids start at 1.
    """
    out = []
    horiz = [(r, c) for r in range(ell) for c in range(ell - 1)]
    vert = [(r, c) for r in range(ell - 1) for c in range(ell)]
    for r, c in horiz:
        out.append((manhattan_vertex(ell, r, c), manhattan_vertex(ell, r, c + 1), "right"))
    for r, c in horiz:
        out.append((manhattan_vertex(ell, r, c + 1), manhattan_vertex(ell, r, c), "left"))
    for r, c in vert:
        out.append((manhattan_vertex(ell, r, c), manhattan_vertex(ell, r + 1, c), "up"))
    for r, c in vert:
        out.append((manhattan_vertex(ell, r + 1, c), manhattan_vertex(ell, r, c), "down"))
    return [(i + 1, t, h, d) for i, (t, h, d) in enumerate(out)]


def manhattan(ell: int, edge_length: float = 1.0) -> MetricNetwork:
    """Two-way Manhattan grid: ``ell**2`` junctions, ``4*ell*(ell-1)`` roads."""
    if int(ell) != ell or ell < 2:
        raise NetworkError(f"manhattan grid needs ell >= 2 junctions per side, got {ell}")
    ell = int(ell)
    return build_network(
        {
            "vertices": list(range(1, ell * ell + 1)),
            "edges": [(i, t, h, edge_length) for i, t, h, _ in manhattan_edges(ell)],
        }
    )


def manhattan_directions(ell: int) -> dict[int, str]:
    return {i: d for i, _, _, d in manhattan_edges(ell)}


def manhattan_positions(ell: int) -> dict[int, tuple[float, float]]:
    """Vertex id -> (x, y) in units of the road length."""
    return {
        manhattan_vertex(ell, r, c): (float(c), float(r))
        for r in range(ell)
        for c in range(ell)
    }


def manhattan_side(net: MetricNetwork) -> int:
    """Recover ``ell`` if ``net`` has the topology of a Manhattan grid."""
    ell = math.isqrt(len(net.vertices))
    if ell < 2 or ell * ell != len(net.vertices):
        raise NetworkError("not a Manhattan grid")
    expected = [(i, t, h) for i, t, h, _ in manhattan_edges(ell)]
    if [(e.id, e.tail, e.head) for e in net.edges] != expected:
        raise NetworkError("not a Manhattan grid")
    return ell


# --- discretization -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CellGrid:
    """Uniform ``dx`` discretization; cells of each edge get consecutive ids."""

    network: MetricNetwork
    dx: float
    cells_per_edge: Mapping[int, int]
    offsets: Mapping[int, int]
    total_cells: int

    @property
    def J(self) -> int:
        return self.total_cells

    def global_index(self, edge_id: int, j: int) -> int:
        """0-based global id of cell ``j`` (1-based) on ``edge_id``."""
        n = self.cells_per_edge[edge_id]
        if not 1 <= j <= n:
            raise IndexError(f"cell {j} out of range 1..{n} on edge {edge_id}")
        return self.offsets[edge_id] + j - 1

    def cell_center(self, edge_id: int, j: int) -> float:
        if not 1 <= j <= self.cells_per_edge[edge_id]:
            raise IndexError(f"cell {j} out of range on edge {edge_id}")
        return (j - 0.5) * self.dx

    def first_cell(self, edge_id: int) -> int:
        return self.offsets[edge_id]

    def last_cell(self, edge_id: int) -> int:
        return self.offsets[edge_id] + self.cells_per_edge[edge_id] - 1

    def edge_cells(self, edge_id: int) -> np.ndarray:
        o = self.offsets[edge_id]
        return np.arange(o, o + self.cells_per_edge[edge_id])

    def cell_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per global cell: edge id, 1-based index and center coordinate."""
        eids, js = [], []
        for e in self.network.edges:
            n = self.cells_per_edge[e.id]
            eids.append(np.full(n, e.id))
            js.append(np.arange(1, n + 1))
        edge_of = np.concatenate(eids)
        j = np.concatenate(js)
        return edge_of, j, (j - 0.5) * self.dx

    def same_cells(self, other: "CellGrid") -> bool:
        if self is other:
            return True
        return (
            self.dx == other.dx
            and dict(self.cells_per_edge) == dict(other.cells_per_edge)
            and [(e.id, e.tail, e.head) for e in self.network.edges]
            == [(e.id, e.tail, e.head) for e in other.network.edges]
        )


def discretize(net: MetricNetwork, dx: float, rtol: float = 1e-9) -> CellGrid:
    if not dx > 0:
        raise DiscretizationError(f"dx must be positive, got {dx}")
    cells, offsets = {}, {}
    total = 0
    for e in net.edges:
        ratio = e.length / dx
        n = round(ratio)
        if n < 1 or abs(ratio - n) > rtol * ratio:
            raise DiscretizationError(
                f"edge {e.id}: length {e.length} is not a multiple of dx={dx}"
            )
        cells[e.id] = n
        offsets[e.id] = total
        total += n
    return CellGrid(net, float(dx), cells, offsets, total)


# --- file format ----------------------------------------------------------

def write_network(net: MetricNetwork, path: str | Path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=2) + "\n", encoding="utf-8")


def read_network(path: str | Path) -> MetricNetwork:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"{path}: not a valid network document ({exc})") from exc
    if not isinstance(doc, dict):
        raise NetworkFormatError(f"{path}: top level must be an object")
    return build_network(doc)


def iter_junction_cells(grid: CellGrid) -> Iterable[tuple[int, list[int]]]:
    """Vertex id with the global ids of all cells touching it."""
    net = grid.network
    for v in net.vertices:
        j = net.junctions[v]
        cells = [grid.last_cell(e) for e in j.incoming]
        cells += [grid.first_cell(e) for e in j.outgoing]
        yield v, cells
