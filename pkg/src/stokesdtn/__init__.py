"""Symbols of the Dirichlet-to-Neumann map for the Stokes system with
variable viscosity on a Riemannian manifold, and recovery of the boundary
jets of the metric from them."""

from .geometry import BoundaryNormalMetric, MetricError
from .jets import Jet, JetError, JetSpace, OrderExhaustedError
from .recovery import RecoveryReport, run_recovery
from .stokes_system import assemble, verify_transformation
from .symbol_calculus import full_symbol_residual, run_recursion

__all__ = [
    "BoundaryNormalMetric",
    "Jet",
    "JetError",
    "JetSpace",
    "MetricError",
    "OrderExhaustedError",
    "RecoveryReport",
    "assemble",
    "full_symbol_residual",
    "run_recovery",
    "run_recursion",
    "verify_transformation",
]

__version__ = "0.1.0"
