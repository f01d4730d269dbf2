from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from seqmine.autograd import Tensor
from seqmine.errors import MissingGradientError, NonFiniteGradientError


@dataclass
class AdamState:
    """First/second moment estimates keyed by parameter name, plus the step count."""

    step: int = 0
    exp_avg: dict[str, np.ndarray] = field(default_factory=dict)
    exp_avg_sq: dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "AdamState":
        return AdamState(
            step=self.step,
            exp_avg={k: np.array(v) for k, v in self.exp_avg.items()},
            exp_avg_sq={k: np.array(v) for k, v in self.exp_avg_sq.items()},
        )


def adam_step(
    params: Sequence[tuple[str, Tensor]],
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    """theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), with bias correction.

    Every gradient is checked before anything is updated, so a bad step
    leaves parameters and moments untouched.
    """

    for name, p in params:
        if p.grad is None:
            raise MissingGradientError(name)
        if not np.isfinite(p.grad).all():
            raise NonFiniteGradientError(name)

    state.step += 1
    bias_correction1 = 1 - beta1**state.step
    bias_correction2 = 1 - beta2**state.step

    for name, p in params:
        grad = p.grad
        m = state.exp_avg.get(name)
        v = state.exp_avg_sq.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)

        m = beta1 * m + (1 - beta1) * grad
        v = beta2 * v + (1 - beta2) * grad * grad
        state.exp_avg[name] = m
        state.exp_avg_sq[name] = v

        m_hat = m / bias_correction1
        v_hat = v / bias_correction2
        p.assign(p.data - lr * m_hat / (np.sqrt(v_hat) + eps))

    return state
