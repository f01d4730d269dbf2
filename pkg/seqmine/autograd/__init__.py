from . import functional
from .gradcheck import analytic_grad, check_gradients, finite_diff_grad, relative_error
from .tensor import Graph, Node, Tensor, as_tensor, backward

__all__ = [
    "functional",
    "Graph",
    "Node",
    "Tensor",
    "as_tensor",
    "backward",
    "finite_diff_grad",
    "analytic_grad",
    "check_gradients",
    "relative_error",
]
