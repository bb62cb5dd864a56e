"""Undirected cell graph of a discretized network and its shortest-path costs."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .network import CellGrid, iter_junction_cells

DEFAULT_MAX_CELLS = 5000


class UnreachableNodeError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class CellGraph:
    """One node per cell center, symmetric weighted adjacency.

    Consecutive cells of a road are ``dx`` apart. All cells touching the same
    junction are pairwise ``dx`` apart: half a cell to the vertex and half a
    cell away, the vertex itself having no extent. Road directions are
    ignored.
    """

    n_nodes: int
    adjacency: csr_matrix
    dx: float


def build_cell_graph(grid: CellGrid) -> CellGraph:
    dx = grid.dx
    links: dict[tuple[int, int], float] = {}

    def link(i: int, j: int) -> None:
        if i != j:
            links[(min(i, j), max(i, j))] = dx

    for e in grid.network.edges:
        cells = grid.edge_cells(e.id)
        for i, j in zip(cells[:-1], cells[1:]):
            link(int(i), int(j))
    for _, cells in iter_junction_cells(grid):
        for a in range(len(cells)):
            for b in range(a + 1, len(cells)):
                link(cells[a], cells[b])

    if links:
        ij = np.array(list(links), dtype=np.intp)
        w = np.array(list(links.values()))
        rows = np.concatenate([ij[:, 0], ij[:, 1]])
        cols = np.concatenate([ij[:, 1], ij[:, 0]])
        adj = csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(grid.J, grid.J))
    else:
        adj = csr_matrix((grid.J, grid.J))
    return CellGraph(grid.J, adj, dx)


def shortest_paths(graph: CellGraph, source: int) -> np.ndarray:
    """Single-source Dijkstra distances from ``source``."""
    if not 0 <= source < graph.n_nodes:
        raise IndexError(f"source {source} out of range")
    dist = dijkstra(graph.adjacency, directed=False, indices=source)
    if not np.all(np.isfinite(dist)):
        raise UnreachableNodeError(f"cell graph is disconnected from node {source}")
    return dist


def cost_matrix(graph: CellGraph, max_cells: int = DEFAULT_MAX_CELLS) -> np.ndarray:
    """Dense all-pairs shortest-path matrix, exactly symmetric with zero diagonal."""
    if graph.n_nodes > max_cells:
        raise MemoryError(
            f"cost matrix for {graph.n_nodes} cells exceeds the cap of {max_cells}; "
            "raise max_cells explicitly if you have the memory"
        )
    c = dijkstra(graph.adjacency, directed=False)
    if not np.all(np.isfinite(c)):
        raise UnreachableNodeError("cell graph is disconnected")
    c = np.minimum(c, c.T)
    np.fill_diagonal(c, 0.0)
    c.setflags(write=False)
    return c


def grid_cost_matrix(grid: CellGrid, max_cells: int = DEFAULT_MAX_CELLS) -> np.ndarray:
    return cost_matrix(build_cell_graph(grid), max_cells)


def write_cost_matrix(c: np.ndarray, dx: float, path: str | Path) -> None:
    """Text dump: header ``J,dx`` then one comma-separated row per cell."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# J={c.shape[0]},dx={dx!r}\n")
        np.savetxt(fh, c, delimiter=",", fmt="%.17g")
