"""LWR traffic flow on road networks and Wasserstein-1 sensitivity analysis."""

__version__ = "0.1.0"

from .graph import build_cell_graph, cost_matrix, grid_cost_matrix, shortest_paths
from .network import (
    CellGrid,
    MetricNetwork,
    build_network,
    discretize,
    manhattan,
    read_network,
    write_network,
)
from .reference import LineDensity, l1_discrete, w1_line
from .solver import (
    DensityField,
    FundamentalDiagram,
    Scenario,
    apply_closure,
    cfl_dt,
    flux,
    godunov_flux,
    init_subdensities,
    simulate,
    step,
)
from .transport import TransportPlan, cancel_common_mass, solve_transport, wasserstein_grid

__all__ = [
    "CellGrid", "DensityField", "FundamentalDiagram", "LineDensity", "MetricNetwork",
    "Scenario", "TransportPlan", "apply_closure", "build_cell_graph", "build_network",
    "cancel_common_mass", "cfl_dt", "cost_matrix", "discretize", "flux", "godunov_flux",
    "grid_cost_matrix", "init_subdensities", "l1_discrete", "manhattan", "read_network",
    "shortest_paths", "simulate", "solve_transport", "step", "w1_line", "wasserstein_grid",
    "write_network",
]
