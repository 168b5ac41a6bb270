"""Application reproductions wired to the solver modules."""

from .design import BurgSimplexGeometry, DesignInstance, dopt_design
from .transport import TransportInstance, barycenter, entropic_ot_dual
from .truss import MaxTree, TrussInstance, truss_solve
from .signals import l1_signal_approx, min_enclosing_ball
from .entropy_lasso import lasso_entropy_simplex

__all__ = [
    "BurgSimplexGeometry", "DesignInstance", "dopt_design",
    "TransportInstance", "barycenter", "entropic_ot_dual",
    "MaxTree", "TrussInstance", "truss_solve",
    "l1_signal_approx", "min_enclosing_ball",
    "lasso_entropy_simplex",
]
