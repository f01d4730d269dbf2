"""Sequence pattern mining with a BiLSTM encoder and multi-scale windowed attention."""

__version__ = "0.1.0"
