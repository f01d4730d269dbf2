from typing import Optional, Sequence

import numpy as np
from loguru import logger

from seqmine.autograd import Tensor


def grad_norm(parameters: Tensor | Sequence[Tensor], norm_type: float = 2.0) -> Optional[float]:
    """
    Returns the norm of the gradients of the given parameters.

    Args:
        parameters (Sequence[Tensor] or Tensor): tensors whose gradients are
            measured together
        norm_type (float): type of the used p-norm.

    Returns:
        Total norm of the parameter gradients (viewed as a single vector),
        or None when no gradient is populated.
    """

    if isinstance(parameters, Tensor):
        parameters = [parameters]

    grads = [p.grad for p in parameters if p.grad is not None]
    if len(grads) == 0:
        return None

    norms = [np.linalg.norm(g.reshape(-1), norm_type) for g in grads]
    return float(np.linalg.norm(np.array(norms), norm_type))


def clip_grad_norm(
    parameters: Sequence[Tensor], max_norm: float, norm_type: float = 2.0
) -> Optional[float]:
    """Scales every gradient so the global norm is at most `max_norm`.

    Returns the norm measured before clipping.
    """

    total = grad_norm(parameters, norm_type)
    if total is None or total <= max_norm:
        return total

    factor = max_norm / total
    for p in parameters:
        if p.grad is not None:
            p.grad = p.grad * factor

    logger.debug(f"Clipped gradient norm {total:.4g} -> {max_norm:.4g}")
    return total
