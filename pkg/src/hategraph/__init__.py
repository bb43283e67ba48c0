"""Batch toolkit for characterizing and detecting hateful users on a retweet graph.

Pipeline stages: ingest -> crawl/diffuse/stratify -> annotate -> features ->
stats/train/evaluate.  Everything is seeded and file-driven; see the CLI
(`hategraph --help`) for the stage-by-stage interface.
"""

__version__ = "0.1.0"

from hategraph.graph import RetweetGraph, UserProfile, ingest_edges, ingest_users, invert

__all__ = [
    "__version__",
    "RetweetGraph",
    "UserProfile",
    "ingest_edges",
    "ingest_users",
    "invert",
]
