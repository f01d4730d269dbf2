from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from seqmine.autograd import Tensor, as_tensor
from seqmine.autograd import functional as F
from seqmine.errors import BoundsError, EmptyDatasetError, EmptySequenceError, ShapeError

from .args import ModelArgs
from .attention import AttentionTrace, MultiScaleParams, multi_scale_context
from .recurrent import BiLstmParams, bilstm_encode, uniform_init

PROB_FLOOR = 1e-12


@dataclass
class ClassifierHead:
    weight: Tensor  # W_c, [C, S*2h]
    bias: Tensor  # b_c, [C]

    def __post_init__(self):
        if (
            self.weight.ndim != 2
            or self.weight.shape[0] < 2
            or self.bias.shape != (self.weight.shape[0],)
        ):
            raise ShapeError("classifier head expects W[C, S*2h], b[C] with C >= 2", self.weight.shape, self.bias.shape)

    @property
    def num_classes(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def init(cls, context_size: int, num_classes: int, rng: np.random.Generator) -> "ClassifierHead":
        bound = 1.0 / math.sqrt(context_size)
        return cls(
            weight=uniform_init(rng, (num_classes, context_size), bound, "head.weight"),
            bias=Tensor(np.zeros(num_classes), requires_grad=True, name="head.bias"),
        )


@dataclass
class ModelParams:
    args: ModelArgs
    encoder: BiLstmParams
    attention: MultiScaleParams
    head: ClassifierHead

    def __post_init__(self):
        a = self.args
        expected = {
            "input_dim": (self.encoder.input_dim, a.input_dim),
            "hidden_size": (self.encoder.hidden_size, a.hidden_size),
            "attention width": (self.attention.width, 2 * a.hidden_size),
            "half widths": ([s.half_width for s in self.attention.scales], a.half_widths),
            "head input": (self.head.weight.shape[1], a.context_size),
            "num_classes": (self.head.num_classes, a.num_classes),
        }
        for what, (got, want) in expected.items():
            if got != want:
                raise ShapeError(f"model parameters disagree with config on {what}: {got} != {want}")

    @classmethod
    def init(cls, args: ModelArgs) -> "ModelParams":
        rng = np.random.default_rng(args.seed)
        encoder = BiLstmParams.init(args.input_dim, args.hidden_size, rng)
        attention = MultiScaleParams.init(2 * args.hidden_size, args.half_widths, rng)
        head = ClassifierHead.init(args.context_size, args.num_classes, rng)
        return cls(args=args, encoder=encoder, attention=attention, head=head)

    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        yield from self.encoder.named_parameters()
        yield from self.attention.named_parameters()
        yield "head.weight", self.head.weight
        yield "head.bias", self.head.bias

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return int(np.sum([p.size for p in self.parameters()]))

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.numpy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise ShapeError(f"state dict mismatch, missing={missing} unexpected={unexpected}")

        for name, p in params.items():
            p.assign(state[name])


@dataclass
class Prediction:
    probs: Tensor  # y', [C]
    predicted_class: int
    trace: AttentionTrace | None = None


def _check_input(X: Tensor, p: ModelParams) -> None:
    if X.shape[-1] != p.args.input_dim:
        raise ShapeError(f"input has {X.shape[-1]} channels, model expects {p.args.input_dim}", X.shape)


def forward_batch(X: Tensor | np.ndarray, p: ModelParams) -> tuple[Tensor, AttentionTrace]:
    """Class probabilities for equal-length samples: [B, T, d] -> [B, C]."""

    if np.shape(X.data if isinstance(X, Tensor) else X)[-2:-1] == (0,):
        raise EmptySequenceError()

    X = as_tensor(X)
    if X.ndim != 3:
        raise ShapeError("forward_batch expects [B, T, d]", X.shape)
    _check_input(X, p)

    H = bilstm_encode(X, p.encoder)
    context, trace = multi_scale_context(H, p.attention)
    logits = F.add(F.matmul(context.fused, F.transpose(p.head.weight)), p.head.bias)
    return F.softmax(logits), trace


def forward(X: Tensor | np.ndarray, p: ModelParams, return_trace: bool = False) -> Prediction:
    """y' = softmax(W_c c + b_c) for one sample X of shape [T, d]."""

    shape = np.shape(X.data if isinstance(X, Tensor) else X)
    if len(shape) != 2:
        raise ShapeError("forward expects a single sample [T, d]", shape)
    if shape[0] == 0:
        raise EmptySequenceError()

    X = as_tensor(X)
    probs, trace = forward_batch(F.reshape(X, (1,) + X.shape), p)
    probs = F.reshape(probs, (p.args.num_classes,))

    return Prediction(
        probs=probs,
        predicted_class=int(np.argmax(probs.data)),
        trace=trace.sample(0) if return_trace else None,
    )


def cross_entropy(probs: Tensor, label) -> Tensor:
    """-log(max(probs[label], 1e-12)); batched input [B, C] gives the mean."""

    probs = as_tensor(probs)
    num_classes = probs.shape[-1]
    labels = np.atleast_1d(np.asarray(label, dtype=np.int64))
    if (labels < 0).any() or (labels >= num_classes).any():
        raise BoundsError(f"label {label!r} outside [0, {num_classes})")

    if probs.ndim == 1:
        picked = probs[int(labels[0])]
    else:
        if labels.shape[0] != probs.shape[0]:
            raise ShapeError("one label per row required", probs.shape, labels.shape)
        picked = probs[np.arange(probs.shape[0]), labels]

    nll = F.scale(F.log(F.clamp_min(picked, PROB_FLOOR)), -1.0)
    return nll if nll.ndim == 0 else F.mean(nll)


def _unpack(item) -> tuple[np.ndarray | Tensor, int]:
    if isinstance(item, tuple):
        return item
    return item.values, item.label


def _values(x) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def batch_loss(
    batch: Sequence, p: ModelParams, return_probs: bool = False
) -> Tensor | tuple[Tensor, np.ndarray]:
    """Mean cross entropy over (X, label) pairs or samples with .values/.label."""

    if len(batch) == 0:
        raise EmptyDatasetError("batch_loss needs at least one sample")

    pairs = [_unpack(item) for item in batch]
    arrays = [_values(x) for x, _ in pairs]
    labels = np.array([label for _, label in pairs], dtype=np.int64)

    dims = {a.shape[-1] for a in arrays}
    if len(dims) != 1:
        raise ShapeError("batch mixes channel counts", *(a.shape for a in arrays))

    if len({a.shape for a in arrays}) == 1:
        probs, _ = forward_batch(np.stack(arrays), p)
        loss = cross_entropy(probs, labels)
        prob_rows = probs.numpy()
    else:
        # ragged lengths: one pass per sample
        predictions = [forward(a, p) for a in arrays]
        losses = [cross_entropy(pred.probs, y) for pred, y in zip(predictions, labels)]
        loss = F.mean(F.stack(losses))
        prob_rows = np.stack([pred.probs.numpy() for pred in predictions])

    if return_probs:
        return loss, prob_rows
    return loss


def predict(
    samples: Sequence, p: ModelParams, batch_size: int = 64
) -> tuple[np.ndarray, np.ndarray]:
    """Predicted classes and probabilities for a sequence of samples."""

    if len(samples) == 0:
        raise EmptyDatasetError("nothing to predict")

    rows = []
    for start in range(0, len(samples), batch_size):
        chunk = [_values(_unpack(s)[0]) for s in samples[start : start + batch_size]]
        if len({a.shape for a in chunk}) == 1:
            probs, _ = forward_batch(np.stack(chunk), p)
            rows.append(probs.numpy())
        else:
            rows.append(np.stack([forward(a, p).probs.numpy() for a in chunk]))

    probs = np.concatenate(rows, axis=0)
    return probs.argmax(axis=-1), probs
