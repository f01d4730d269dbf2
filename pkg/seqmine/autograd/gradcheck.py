from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from seqmine.autograd.tensor import Graph, Tensor
from seqmine.errors import DomainError, NonFiniteError

Params = Sequence[Tensor] | Mapping[str, Tensor]


def _as_items(params: Params) -> list[tuple[str, Tensor]]:
    if isinstance(params, Mapping):
        return list(params.items())
    return [(t.name or f"param{i}", t) for i, t in enumerate(params)]


def _evaluate(f: Callable, params: Params) -> float:
    value = f(params)
    if isinstance(value, Tensor):
        value = value.item()
    return float(value)


def finite_diff_grad(
    f: Callable[[Params], Tensor | float],
    params: Params,
    eps: float = 1e-5,
) -> list[np.ndarray]:
    """Central differences (f(θ + eps·e_i) - f(θ - eps·e_i)) / (2·eps), per coordinate.

    Each tensor's values are swapped out and restored in place, so `f` must
    read the tensors it is given rather than copies taken earlier.
    """

    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")

    grads = []
    for name, tensor in _as_items(params):
        base = tensor.data
        grad = np.zeros(base.shape, dtype=np.float64)

        try:
            for i in np.ndindex(base.shape):
                values = []
                for step in (eps, -eps):
                    probe = np.array(base)
                    probe[i] += step
                    tensor.assign(probe)
                    try:
                        value = _evaluate(f, params)
                    except NonFiniteError as e:
                        raise NonFiniteError(f"f is not finite at <{name}>{list(i)}: {e}") from e
                    if not np.isfinite(value):
                        raise NonFiniteError(f"f is not finite at <{name}>{list(i)}")
                    values.append(value)
                grad[i] = (values[0] - values[1]) / (2.0 * eps)
        finally:
            tensor.data = base

        grads.append(grad)

    return grads


def analytic_grad(f: Callable[[Params], Tensor], params: Params) -> list[np.ndarray]:
    items = _as_items(params)
    for _, tensor in items:
        tensor.zero_grad()

    with Graph() as graph:
        loss = f(params)
    graph.backward(loss)

    return [
        np.zeros(t.shape) if t.grad is None else np.array(t.grad)
        for _, t in items
    ]


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    # denominator is max(1, |analytic|) per coordinate
    denom = np.maximum(1.0, np.abs(analytic))
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_gradients(
    f: Callable[[Params], Tensor],
    params: Params,
    eps: float = 1e-5,
) -> dict[str, float]:
    """Worst relative error between tape and finite differences, per tensor."""

    analytic = analytic_grad(f, params)
    numeric = finite_diff_grad(f, params, eps)

    return {
        name: relative_error(a, n)
        for (name, _), a, n in zip(_as_items(params), analytic, numeric)
    }
