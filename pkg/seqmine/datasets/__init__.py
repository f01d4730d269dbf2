from .dataset import NormStats, SequenceDataset, SequenceSample
from .loader import batches, stack_batch
from .synthetic import SynthSpec, make_motifs, nearest_motif_classify, synth_motif_dataset
from .transforms import apply_znorm, fit_znorm, pad_or_trim, pad_or_trim_dataset, znorm
from .ts_format import format_ts, parse_ts, write_ts

__all__ = [
    "NormStats",
    "SequenceDataset",
    "SequenceSample",
    "batches",
    "stack_batch",
    "SynthSpec",
    "make_motifs",
    "nearest_motif_classify",
    "synth_motif_dataset",
    "apply_znorm",
    "fit_znorm",
    "pad_or_trim",
    "pad_or_trim_dataset",
    "znorm",
    "format_ts",
    "parse_ts",
    "write_ts",
]
