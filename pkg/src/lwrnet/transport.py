"""Exact Hitchcock transportation problem and the grid Wasserstein distance."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

BALANCE_RTOL = 1e-9
DEFAULT_MAX_VARIABLES = 4_000_000


class MassMismatchError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


class TransportSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class TransportPlan:
    """Sparse optimal plan: ``mass[i]`` moves from ``source[i]`` to ``sink[i]``."""

    source: np.ndarray
    sink: np.ndarray
    mass: np.ndarray
    objective: float

    def dense(self, n: int) -> np.ndarray:
        x = np.zeros((n, n))
        np.add.at(x, (self.source, self.sink), self.mass)
        return x

    def row_sums(self, n: int) -> np.ndarray:
        return np.bincount(self.source, weights=self.mass, minlength=n)

    def col_sums(self, n: int) -> np.ndarray:
        return np.bincount(self.sink, weights=self.mass, minlength=n)


def _as_masses(x, name):
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite and nonnegative")
    return a


def _check_balance(s, d, rtol=BALANCE_RTOL):
    ms, md = s.sum(), d.sum()
    if abs(ms - md) > rtol * max(ms, md, np.finfo(float).tiny):
        raise MassMismatchError(f"supply mass {ms!r} != demand mass {md!r}")


def cancel_common_mass(s, d) -> tuple[np.ndarray, np.ndarray]:
    """Remove the mass both vectors share at each node.

    Valid for metric costs with zero diagonal: the shared mass can stay put.
    """
    s = _as_masses(s, "supply")
    d = _as_masses(d, "demand")
    if s.shape != d.shape:
        raise ValueError("supply and demand have different lengths")
    _check_balance(s, d)
    common = np.minimum(s, d)
    return s - common, d - common


def solve_transport(
    cost,
    s,
    d,
    *,
    cancel: bool = True,
    max_variables: int = DEFAULT_MAX_VARIABLES,
) -> TransportPlan:
    """Optimal basic solution of min sum c_jk x_jk s.t. row sums s, column sums d, x >= 0.

    Only nodes with positive (remaining) supply or demand enter the LP, which
    is solved with the HiGHS dual simplex on its sparse transportation
    constraint matrix.
    """
    c = np.asarray(cost, dtype=float)
    s = _as_masses(s, "supply")
    d = _as_masses(d, "demand")
    n = len(s)
    if c.shape != (n, n) or d.shape != (n,):
        raise ValueError(f"cost {c.shape} incompatible with masses of length {n}, {len(d)}")
    _check_balance(s, d)

    if cancel:
        common = np.minimum(s, d)
        s_red, d_red = s - common, d - common
    else:
        common = np.zeros(n)
        s_red, d_red = s, d

    src = np.flatnonzero(s_red > 0)
    dst = np.flatnonzero(d_red > 0)
    keep_diag = np.flatnonzero(common > 0)
    parts_src, parts_dst, parts_x = [keep_diag], [keep_diag], [common[keep_diag]]

    if src.size and dst.size:
        m, k = src.size, dst.size
        if m * k > max_variables:
            raise MemoryError(
                f"transport LP with {m}x{k} variables exceeds the cap of {max_variables}"
            )
        x = _solve_lp(c[np.ix_(src, dst)], s_red[src], d_red[dst])
        ii, jj = np.nonzero(x > 0)
        parts_src.append(src[ii])
        parts_dst.append(dst[jj])
        parts_x.append(x[ii, jj])
    elif src.size or dst.size:
        # one side holds only round-off residue
        if max(s_red.sum(), d_red.sum()) > BALANCE_RTOL * max(s.sum(), 1e-300):
            raise TransportSolveError("infeasible: unmatched residual mass")

    source = np.concatenate(parts_src).astype(np.intp)
    sink = np.concatenate(parts_dst).astype(np.intp)
    mass = np.concatenate(parts_x)
    objective = float(np.dot(c[source, sink], mass))
    return TransportPlan(source, sink, mass, objective)


def _solve_lp(c: np.ndarray, s: np.ndarray, d: np.ndarray) -> np.ndarray:
    m, k = c.shape
    if m == 1:
        return d[None, :].copy()
    if k == 1:
        return s[:, None].copy()
    # variable x[i, j] sits at column i*k + j, as in the row-major stacking of x
    var = np.arange(m * k)
    rows = np.concatenate([var // k, m + var % k])
    A = coo_matrix((np.ones(2 * m * k), (rows, np.concatenate([var, var]))), shape=(m + k, m * k))
    # the last column constraint is implied by the others; dropping it keeps the
    # system consistent when the two totals differ by round-off
    A = A.tocsr()[: m + k - 1]
    b = np.concatenate([s, d])[: m + k - 1]
    res = linprog(
        c.ravel(), A_eq=A, b_eq=b, bounds=(0, None), method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise TransportSolveError(f"transport LP failed: {res.message}")
    x = np.maximum(res.x.reshape(m, k), 0.0)
    return _restore_basis(x, s, d)


def _restore_basis(x: np.ndarray, s: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Recompute a basic solution exactly from its support by leaf elimination.

    The support of a basic transportation solution is a forest in the
    bipartite row/column graph, and flows on a forest are determined by the
    margins. If the support is not a forest the input is returned unchanged.
    """
    tol = 1e-13 * max(s.sum(), 1e-300)
    ii, jj = np.nonzero(x > tol)
    m, k = x.shape
    if len(ii) > m + k - 1:
        return x
    adj: list[set[int]] = [set() for _ in range(m + k)]
    for a, b in zip(ii.tolist(), jj.tolist()):
        adj[a].add(m + b)
        adj[m + b].add(a)
    rest = np.concatenate([s, d]).astype(float)
    out = np.zeros_like(x)
    leaves = [v for v in range(m + k) if len(adj[v]) == 1]
    done = 0
    while leaves:
        v = leaves.pop()
        if len(adj[v]) != 1:
            continue
        w = adj[v].pop()
        adj[w].discard(v)
        flow = max(rest[v], 0.0)
        r, col = (v, w - m) if v < m else (w, v - m)
        out[r, col] = flow
        rest[v] -= flow
        rest[w] -= flow
        done += 1
        if len(adj[w]) == 1:
            leaves.append(w)
    if done != len(ii) or np.any(out < 0):
        return x
    return out


def wasserstein_grid(
    rho_s,
    rho_d,
    cost,
    dx: float | None = None,
    normalized: bool = True,
    renormalize: bool = False,
    return_plan: bool = False,
):
    """Transport distance between two cell-density vectors on one grid.

    ``rho_s`` / ``rho_d`` are density arrays or fields with ``.rho`` and
    ``.grid``. Cell masses are ``rho * dx``. Returns the optimal cost, divided
    by the total mass when ``normalized``.
    """
    grid_s, grid_d = getattr(rho_s, "grid", None), getattr(rho_d, "grid", None)
    if grid_s is not None and grid_d is not None and not grid_s.same_cells(grid_d):
        raise GridMismatchError("densities live on different grids")
    if dx is None:
        if grid_s is None:
            raise ValueError("dx is required for plain density arrays")
        dx = grid_s.dx
    a = np.asarray(getattr(rho_s, "rho", rho_s), dtype=float)
    b = np.asarray(getattr(rho_d, "rho", rho_d), dtype=float)
    if a.shape != b.shape or np.shape(cost) != (a.size, a.size):
        raise GridMismatchError(
            f"shapes differ: {a.shape}, {b.shape}, cost {np.shape(cost)}"
        )
    s, d = a * dx, b * dx
    ms, md = s.sum(), d.sum()
    if ms == 0 and md == 0:
        warnings.warn("both densities are zero; distance defined as 0", RuntimeWarning)
        plan = TransportPlan(np.array([], np.intp), np.array([], np.intp), np.array([]), 0.0)
        return (0.0, plan) if return_plan else 0.0
    if renormalize and md > 0:
        d = d * (ms / md)
    plan = solve_transport(cost, s, d)
    value = float(plan.objective / ms) if normalized else plan.objective
    return (value, plan) if return_plan else value


def write_plan(plan: TransportPlan, path: str | Path) -> None:
    lines = ["j,k,x_jk"]
    lines += [f"{j},{k},{x!r}" for j, k, x in zip(plan.source.tolist(), plan.sink.tolist(), plan.mass.tolist())]
    lines.append(f"# H={plan.objective!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_plan(path: str | Path) -> TransportPlan:
    src, dst, xs, h = [], [], [], None
    for line in Path(path).read_text(encoding="utf-8").splitlines()[1:]:
        if line.startswith("# H="):
            h = float(line[4:])
        elif line.strip():
            j, k, x = line.split(",")
            src.append(int(j))
            dst.append(int(k))
            xs.append(float(x))
    if h is None:
        raise ValueError(f"{path}: missing objective trailer")
    return TransportPlan(np.array(src, np.intp), np.array(dst, np.intp), np.array(xs), h)
