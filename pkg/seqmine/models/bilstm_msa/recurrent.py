from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from seqmine.autograd import Tensor, as_tensor
from seqmine.autograd import functional as F
from seqmine.errors import EmptySequenceError, ShapeError

# Gate blocks inside the stacked [4h, ...] matrices
GATE_ORDER = ("input", "forget", "cell", "output")


def uniform_init(
    rng: np.random.Generator, shape: tuple[int, ...], bound: float, name: str
) -> Tensor:
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


@dataclass
class LstmParams:
    input_weights: Tensor  # [4h, d]
    recurrent_weights: Tensor  # [4h, h]
    bias: Tensor  # [4h]

    def __post_init__(self):
        four_h, d = self.input_weights.shape if self.input_weights.ndim == 2 else (0, 0)
        h = four_h // 4
        if (
            self.input_weights.ndim != 2
            or four_h % 4 != 0
            or self.recurrent_weights.shape != (four_h, h)
            or self.bias.shape != (four_h,)
        ):
            raise ShapeError(
                "LSTM parameters disagree on h and d",
                self.input_weights.shape,
                self.recurrent_weights.shape,
                self.bias.shape,
            )

    @property
    def hidden_size(self) -> int:
        return self.recurrent_weights.shape[1]

    @property
    def input_dim(self) -> int:
        return self.input_weights.shape[1]

    @classmethod
    def init(
        cls, input_dim: int, hidden_size: int, rng: np.random.Generator, prefix: str = ""
    ) -> "LstmParams":
        bound = 1.0 / math.sqrt(hidden_size)
        four_h = 4 * hidden_size
        return cls(
            input_weights=uniform_init(rng, (four_h, input_dim), bound, f"{prefix}input_weights"),
            recurrent_weights=uniform_init(
                rng, (four_h, hidden_size), bound, f"{prefix}recurrent_weights"
            ),
            bias=uniform_init(rng, (four_h,), bound, f"{prefix}bias"),
        )

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        yield f"{prefix}input_weights", self.input_weights
        yield f"{prefix}recurrent_weights", self.recurrent_weights
        yield f"{prefix}bias", self.bias


@dataclass
class BiLstmParams:
    forward: LstmParams
    backward: LstmParams

    def __post_init__(self):
        f, b = self.forward, self.backward
        if (f.hidden_size, f.input_dim) != (b.hidden_size, b.input_dim):
            raise ShapeError(
                "forward and backward directions disagree",
                (f.hidden_size, f.input_dim),
                (b.hidden_size, b.input_dim),
            )

    @property
    def hidden_size(self) -> int:
        return self.forward.hidden_size

    @property
    def input_dim(self) -> int:
        return self.forward.input_dim

    @classmethod
    def init(cls, input_dim: int, hidden_size: int, rng: np.random.Generator) -> "BiLstmParams":
        return cls(
            forward=LstmParams.init(input_dim, hidden_size, rng, "encoder.forward."),
            backward=LstmParams.init(input_dim, hidden_size, rng, "encoder.backward."),
        )

    def swapped(self) -> "BiLstmParams":
        return BiLstmParams(forward=self.backward, backward=self.forward)

    def named_parameters(self, prefix: str = "encoder.") -> Iterator[tuple[str, Tensor]]:
        yield from self.forward.named_parameters(f"{prefix}forward.")
        yield from self.backward.named_parameters(f"{prefix}backward.")


@dataclass
class HiddenSequence:
    """H with row t = [forward h_t ; backward h_t], shape [T, 2h] or [B, T, 2h]."""

    H: Tensor

    @property
    def length(self) -> int:
        return self.H.shape[-2]

    @property
    def width(self) -> int:
        return self.H.shape[-1]

    @property
    def forward_half(self) -> np.ndarray:
        return self.H.data[..., : self.width // 2]

    @property
    def backward_half(self) -> np.ndarray:
        return self.H.data[..., self.width // 2 :]


class _Transposed:
    """Per-encode cache of W^T so every step reuses one recorded transpose."""

    def __init__(self, p: LstmParams):
        self.p = p
        self.input_t = F.transpose(p.input_weights)
        self.recurrent_t = F.transpose(p.recurrent_weights)


def _step(x_t: Tensor, h_prev: Tensor, c_prev: Tensor, w: _Transposed) -> tuple[Tensor, Tensor]:
    h = w.p.hidden_size
    pre = F.add(
        F.add(F.matmul(x_t, w.input_t), F.matmul(h_prev, w.recurrent_t)),
        w.p.bias,
    )

    i = F.sigmoid(pre[:, 0:h])
    f = F.sigmoid(pre[:, h : 2 * h])
    g = F.tanh(pre[:, 2 * h : 3 * h])
    o = F.sigmoid(pre[:, 3 * h : 4 * h])

    c_t = F.add(F.mul(f, c_prev), F.mul(i, g))
    h_t = F.mul(o, F.tanh(c_t))
    return h_t, c_t


def lstm_cell_step(
    x_t: Tensor, h_prev: Tensor, c_prev: Tensor, p: LstmParams
) -> tuple[Tensor, Tensor]:
    """One LSTM step; accepts a single vector [d] or a batch [B, d]."""

    x_t, h_prev, c_prev = as_tensor(x_t), as_tensor(h_prev), as_tensor(c_prev)
    single = x_t.ndim == 1

    if single:
        x_t = F.reshape(x_t, (1, -1))
        h_prev = F.reshape(h_prev, (1, -1))
        c_prev = F.reshape(c_prev, (1, -1))

    batch = x_t.shape[0]
    if (
        x_t.shape != (batch, p.input_dim)
        or h_prev.shape != (batch, p.hidden_size)
        or c_prev.shape != (batch, p.hidden_size)
    ):
        raise ShapeError(
            f"lstm_cell_step expects x[{p.input_dim}], h and c[{p.hidden_size}]",
            x_t.shape,
            h_prev.shape,
            c_prev.shape,
        )

    h_t, c_t = _step(x_t, h_prev, c_prev, _Transposed(p))

    if single:
        return F.reshape(h_t, (p.hidden_size,)), F.reshape(c_t, (p.hidden_size,))
    return h_t, c_t


def _scan(X: Tensor, p: LstmParams, reverse: bool) -> list[Tensor]:
    batch, length, _ = X.shape
    w = _Transposed(p)
    h = Tensor(np.zeros((batch, p.hidden_size)))
    c = Tensor(np.zeros((batch, p.hidden_size)))

    outputs: list[Tensor | None] = [None] * length
    steps = range(length - 1, -1, -1) if reverse else range(length)
    for t in steps:
        h, c = _step(X[:, t, :], h, c, w)
        outputs[t] = h

    return outputs


def bilstm_encode(X: Tensor | np.ndarray, p: BiLstmParams) -> HiddenSequence:
    """Encode [T, d] (or a batch [B, T, d]) into H of width 2h.

    Initial states are zero in both directions; the forward scan runs
    t = 0..T-1, the backward scan t = T-1..0.
    """

    shape = np.shape(X.data if isinstance(X, Tensor) else X)
    if len(shape) in (2, 3) and shape[-2] == 0:
        raise EmptySequenceError()

    X = as_tensor(X)
    single = X.ndim == 2
    if single:
        X = F.reshape(X, (1,) + X.shape)

    if X.ndim != 3 or X.shape[-1] != p.input_dim:
        raise ShapeError(f"bilstm_encode expects [T, {p.input_dim}]", X.shape)

    forward_states = _scan(X, p.forward, reverse=False)
    backward_states = _scan(X, p.backward, reverse=True)

    H = F.concat(
        [F.stack(forward_states, axis=1), F.stack(backward_states, axis=1)], axis=-1
    )
    if single:
        H = F.reshape(H, H.shape[1:])

    return HiddenSequence(H)
