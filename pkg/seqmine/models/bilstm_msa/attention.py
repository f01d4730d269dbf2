from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from seqmine.autograd import Tensor, as_tensor
from seqmine.autograd import functional as F
from seqmine.errors import DomainError, ShapeError

from .recurrent import HiddenSequence, uniform_init


def half_width_of(window_length: int) -> int:
    """Window length W = 2*w + 1 (odd) to half-width w."""

    if window_length < 1 or window_length % 2 == 0:
        raise DomainError(f"window length must be odd and >= 1, got {window_length}")
    return (window_length - 1) // 2


@dataclass
class AttentionScaleParams:
    weight: Tensor  # W_s, [1, 2h]
    bias: Tensor  # b_s, scalar
    half_width: int

    def __post_init__(self):
        if self.half_width < 0:
            raise DomainError(f"half width must be non-negative, got {self.half_width}")
        if self.weight.ndim != 2 or self.weight.shape[0] != 1 or self.bias.shape != ():
            raise ShapeError("attention scale expects W[1, 2h] and scalar b", self.weight.shape, self.bias.shape)

    @property
    def width(self) -> int:
        return self.weight.shape[1]

    @property
    def window_length(self) -> int:
        return 2 * self.half_width + 1

    @classmethod
    def init(
        cls, width: int, half_width: int, rng: np.random.Generator, prefix: str
    ) -> "AttentionScaleParams":
        bound = 1.0 / math.sqrt(width)
        return cls(
            weight=uniform_init(rng, (1, width), bound, f"{prefix}weight"),
            bias=uniform_init(rng, (), bound, f"{prefix}bias"),
            half_width=half_width,
        )


@dataclass
class MultiScaleParams:
    scales: list[AttentionScaleParams]

    def __post_init__(self):
        if not self.scales:
            raise ShapeError("at least one attention scale is required")
        widths = {s.width for s in self.scales}
        if len(widths) != 1:
            raise ShapeError("attention scales disagree on 2h", *[(w,) for w in sorted(widths)])

    @property
    def width(self) -> int:
        return self.scales[0].width

    @property
    def num_scales(self) -> int:
        return len(self.scales)

    @classmethod
    def init(
        cls, width: int, half_widths: list[int], rng: np.random.Generator
    ) -> "MultiScaleParams":
        return cls(
            [
                AttentionScaleParams.init(width, w, rng, f"attention.{i}.")
                for i, w in enumerate(half_widths)
            ]
        )

    def named_parameters(self, prefix: str = "attention.") -> Iterator[tuple[str, Tensor]]:
        for i, scale in enumerate(self.scales):
            yield f"{prefix}{i}.weight", scale.weight
            yield f"{prefix}{i}.bias", scale.bias


@dataclass
class AttentionTrace:
    """Energies and weights per scale, kept as plain arrays for inspection."""

    half_widths: list[int]
    energies: list[np.ndarray] = field(default_factory=list)
    weights: list[np.ndarray] = field(default_factory=list)

    def sample(self, i: int) -> "AttentionTrace":
        return AttentionTrace(
            half_widths=list(self.half_widths),
            energies=[e[i] for e in self.energies],
            weights=[a[i] for a in self.weights],
        )

    def to_dict(self) -> dict:
        return {
            "scales": [
                {
                    "window_length": 2 * w + 1,
                    "half_width": w,
                    "energies": e.tolist(),
                    "weights": a.tolist(),
                }
                for w, e, a in zip(self.half_widths, self.energies, self.weights)
            ]
        }


@dataclass
class ContextVector:
    per_scale: list[Tensor]
    fused: Tensor


def _hidden(H: HiddenSequence | Tensor) -> Tensor:
    return H.H if isinstance(H, HiddenSequence) else as_tensor(H)


def energies(H: HiddenSequence | Tensor, scale: AttentionScaleParams) -> Tensor:
    """e_t = tanh(W_s h_t + b_s) for every step; shape [..., T]."""

    H = _hidden(H)
    if H.shape[-1] != scale.width:
        raise ShapeError("W_s does not match the hidden width", scale.weight.shape, H.shape)

    rows = F.reshape(H, (-1, H.shape[-1]))
    projected = F.add(F.matmul(rows, F.transpose(scale.weight)), scale.bias)
    return F.reshape(F.tanh(projected), H.shape[:-1])


def windowed_weights(e: Tensor, half_width: int) -> Tensor:
    return F.windowed_softmax(e, half_width)


def scale_context(alpha: Tensor, H: HiddenSequence | Tensor) -> Tensor:
    """c = sum over all T steps of alpha_t h_t (weights are not renormalised)."""

    H = _hidden(H)
    alpha = as_tensor(alpha)
    if H.shape[:-1] != alpha.shape:
        raise ShapeError("attention weights and hidden rows disagree on T", alpha.shape, H.shape)
    return F.weighted_sum(alpha, H)


def multi_scale_context(
    H: HiddenSequence | Tensor, params: MultiScaleParams
) -> tuple[ContextVector, AttentionTrace]:
    trace = AttentionTrace(half_widths=[s.half_width for s in params.scales])
    contexts = []

    for scale in params.scales:
        e = energies(H, scale)
        alpha = windowed_weights(e, scale.half_width)
        contexts.append(scale_context(alpha, H))

        trace.energies.append(e.numpy())
        trace.weights.append(alpha.numpy())

    fused = F.concat(contexts, axis=-1)
    return ContextVector(per_scale=contexts, fused=fused), trace
