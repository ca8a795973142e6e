"""First-stage retrieval with learned, integer-scaled term weights.

The pipeline: compute term-importance targets from relevance data, train a
weigher (or replay the targets as an oracle), scale predicted weights to
integers stored in an ordinary inverted index, and search it with BM25 or
query likelihood.
"""

__version__ = "0.1.0"
