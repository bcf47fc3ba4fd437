"""Checkpoint-to-index export: real token embeddings for the ranking engine."""

from .encoder import CheckpointEncoder, EncodedText
from .export import (
    ExportJob,
    ExportReport,
    export_passages,
    export_queries,
    read_input_records,
    reference_maxsim,
)
from .segment import align_proposition, lcs_pairs, sentence_char_ranges, sentence_index_for

__all__ = [
    "CheckpointEncoder",
    "EncodedText",
    "ExportJob",
    "ExportReport",
    "align_proposition",
    "export_passages",
    "export_queries",
    "lcs_pairs",
    "read_input_records",
    "reference_maxsim",
    "sentence_char_ranges",
    "sentence_index_for",
]

__version__ = "0.1.0"
