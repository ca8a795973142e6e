"""Contextual term weighting with a fine-tuned encoder and a regression head.

Trains on the target weight files produced by the termweight pipeline and
emits weight files in the same interchange format, so predictions plug
straight into weighted index builds and query weighting.
"""

__version__ = "0.1.0"


class TrainingError(Exception):
    """Training could not proceed (empty dataset, non-finite loss)."""
