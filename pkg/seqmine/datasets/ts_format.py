"""Reader and writer for the UEA/UCR `.ts` text format (classification subset).

A file is a header of `@`-directives followed by `@data` and one line per
sample: channels separated by `:`, values by `,`, the class token last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger

from seqmine.errors import TsFormatError
from seqmine.utils.file import atomic_write_text

from .dataset import SequenceDataset, SequenceSample, Split

MISSING_TOKENS = {"?", "nan"}


@dataclass
class TsHeader:
    problem_name: str | None = None
    timestamps: bool = False
    missing: bool = False
    univariate: bool | None = None
    dimensions: int | None = None
    equal_length: bool | None = None
    series_length: int | None = None
    class_labels: list[str] = field(default_factory=list)

    @property
    def expected_dimensions(self) -> int | None:
        if self.dimensions is not None:
            return self.dimensions
        if self.univariate:
            return 1
        return None


def _parse_bool(token: str, directive: str, path, line_no: int) -> bool:
    match token.lower():
        case "true":
            return True
        case "false":
            return False
        case _:
            raise TsFormatError(f"{directive} expects true/false, got {token!r}", path, line_no)


def _parse_int(token: str, directive: str, path, line_no: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise TsFormatError(f"{directive} expects an integer, got {token!r}", path, line_no)
    if value < 1:
        raise TsFormatError(f"{directive} must be positive, got {value}", path, line_no)
    return value


def _read_directive(header: TsHeader, line: str, path, line_no: int) -> None:
    tokens = line.split()
    directive = tokens[0].lower()
    args = tokens[1:]

    if directive == "@problemname" and args:
        # names may contain spaces, the rest of the line is the name
        header.problem_name = line.split(None, 1)[1].strip()
        return
    if directive != "@classlabel" and len(args) != 1:
        raise TsFormatError(f"{tokens[0]} takes exactly one value", path, line_no)

    match directive:
        case "@timestamps":
            header.timestamps = _parse_bool(args[0], directive, path, line_no)
            if header.timestamps:
                raise TsFormatError("timestamped series are not supported", path, line_no)
        case "@missing":
            header.missing = _parse_bool(args[0], directive, path, line_no)
        case "@univariate":
            header.univariate = _parse_bool(args[0], directive, path, line_no)
        case "@dimensions" | "@dimension":
            header.dimensions = _parse_int(args[0], directive, path, line_no)
        case "@equallength":
            header.equal_length = _parse_bool(args[0], directive, path, line_no)
        case "@serieslength":
            header.series_length = _parse_int(args[0], directive, path, line_no)
        case "@classlabel":
            if not args or not _parse_bool(args[0], directive, path, line_no):
                raise TsFormatError("only labelled classification files are supported", path, line_no)
            if len(args) < 2:
                raise TsFormatError("@classLabel true needs the class values", path, line_no)
            header.class_labels = args[1:]
        case _:
            raise TsFormatError(f"unknown directive {tokens[0]}", path, line_no)


def impute_linear(channel: np.ndarray) -> np.ndarray:
    """Fill NaNs by linear interpolation, holding the nearest value at the edges."""

    missing = np.isnan(channel)
    if not missing.any():
        return channel

    known = np.flatnonzero(~missing)
    if known.size == 0:
        return np.zeros_like(channel)

    filled = np.array(channel)
    filled[missing] = np.interp(np.flatnonzero(missing), known, channel[known])
    return filled


def _parse_value(token: str, path, line_no: int) -> float:
    token = token.strip()
    if token.lower() in MISSING_TOKENS:
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise TsFormatError(f"invalid value {token!r}", path, line_no)
    if not math.isfinite(value):
        raise TsFormatError(f"non-finite value {token!r}", path, line_no)
    return value


def _parse_sample(
    line: str, header: TsHeader, label_index: dict[str, int], path, line_no: int
) -> SequenceSample:
    groups = line.split(":")
    if len(groups) < 2:
        raise TsFormatError("sample line needs channel values and a class label", path, line_no)

    *channel_tokens, label_token = groups
    label_token = label_token.strip()
    if label_token not in label_index:
        raise TsFormatError(f"unknown class label {label_token!r}", path, line_no)

    expected = header.expected_dimensions
    if expected is not None and len(channel_tokens) != expected:
        raise TsFormatError(
            f"expected {expected} dimensions, found {len(channel_tokens)}", path, line_no
        )

    channels = []
    for token in channel_tokens:
        if not token.strip():
            raise TsFormatError("empty channel", path, line_no)
        channels.append(np.array([_parse_value(v, path, line_no) for v in token.split(",")]))

    lengths = {len(c) for c in channels}
    if len(lengths) != 1:
        raise TsFormatError(f"channels have different lengths {sorted(lengths)}", path, line_no)

    imputed = []
    for d, channel in enumerate(channels):
        if np.isnan(channel).all():
            logger.warning(f"{path}:{line_no}: channel {d} is entirely missing, filled with zeros")
        imputed.append(impute_linear(channel))

    return SequenceSample(values=np.stack(imputed, axis=1), label=label_index[label_token])


def _split_from_name(path: Path) -> Split | None:
    stem = path.stem.upper()
    if stem.endswith("_TRAIN"):
        return "train"
    if stem.endswith("_TEST"):
        return "test"
    return None


def parse_ts(path: str | Path, split: Split | None = None) -> SequenceDataset:
    path = Path(path)
    header = TsHeader()
    samples: list[SequenceSample] = []
    label_index: dict[str, int] = {}
    in_data = False
    line_no = 0

    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue

            if not in_data:
                if not line.startswith("@"):
                    raise TsFormatError("data line before @data", path, line_no)
                if line.lower() == "@data":
                    if not header.class_labels:
                        raise TsFormatError("missing @classLabel directive", path, line_no)
                    label_index = {name: i for i, name in enumerate(header.class_labels)}
                    in_data = True
                    continue
                _read_directive(header, line, path, line_no)
                continue

            sample = _parse_sample(line, header, label_index, path, line_no)
            if header.expected_dimensions is None:
                # Lock the dimension count to the first sample
                header.dimensions = sample.channels
            if header.equal_length and header.series_length and sample.length != header.series_length:
                raise TsFormatError(
                    f"expected series length {header.series_length}, found {sample.length}",
                    path,
                    line_no,
                )
            if header.equal_length and samples and sample.length != samples[0].length:
                raise TsFormatError("series lengths differ under @equalLength true", path, line_no)
            samples.append(sample)

    if not in_data:
        raise TsFormatError("no @data section", path, line_no)
    if not samples:
        raise TsFormatError("empty body", path, line_no)

    dataset = SequenceDataset(
        samples=samples,
        class_names=list(header.class_labels),
        split=split or _split_from_name(path) or "train",
        name=header.problem_name or path.stem,
    )
    logger.info(
        f"Loaded {len(dataset)} samples from {path} "
        f"({dataset.channels} channels, {dataset.num_classes} classes)"
    )
    return dataset


def format_ts(dataset: SequenceDataset) -> str:
    lengths = set(dataset.lengths)
    equal = len(lengths) == 1
    lines = [
        f"@problemName {dataset.name}",
        "@timeStamps false",
        "@missing false",
        f"@univariate {'true' if dataset.channels == 1 else 'false'}",
        f"@dimensions {dataset.channels}",
        f"@equalLength {'true' if equal else 'false'}",
    ]
    if equal and lengths:
        lines.append(f"@seriesLength {lengths.pop()}")
    lines.append("@classLabel true " + " ".join(dataset.class_names))
    lines.append("@data")

    for sample in dataset:
        channels = [",".join(repr(float(v)) for v in sample.values[:, d]) for d in range(sample.channels)]
        lines.append(":".join(channels) + ":" + dataset.class_names[sample.label])

    return "\n".join(lines) + "\n"


def write_ts(dataset: SequenceDataset, path: str | Path) -> Path:
    path = Path(path)
    atomic_write_text(path, format_ts(dataset))
    return path
