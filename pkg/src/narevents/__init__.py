"""narevents: a workbench for discourse-new event annotation in narratives.

Pipeline stages: CoNLL-U ingestion -> triplet candidate extraction ->
cluster-based reduction -> human annotation (service + log) -> agreement
and statistics -> rule-based baselines and evaluation -> training exports.
"""

__version__ = "0.1.0"

from .baselines import SelectorStrategy, TagSequence, TaggerStrategy, select_candidates, tag_tokens
from .corpus import GoldRecord, Narrative, Sentence, Token, load_gold, parse_conllu, reserve_backup
from .extraction import EventCandidate, extract_candidates, render_triplet
from .metrics import (
    PRF,
    ReliabilityMatrix,
    StatsReport,
    corpus_statistics,
    krippendorff_alpha,
    segmentation_agreement,
    selection_prf,
    tagging_prf,
)
from .reduction import cluster_candidates, levenshtein, normalized_levenshtein, reduce_candidates

__all__ = [
    "EventCandidate",
    "GoldRecord",
    "Narrative",
    "PRF",
    "ReliabilityMatrix",
    "SelectorStrategy",
    "Sentence",
    "StatsReport",
    "TagSequence",
    "TaggerStrategy",
    "Token",
    "cluster_candidates",
    "corpus_statistics",
    "extract_candidates",
    "krippendorff_alpha",
    "levenshtein",
    "load_gold",
    "normalized_levenshtein",
    "parse_conllu",
    "reduce_candidates",
    "render_triplet",
    "reserve_backup",
    "segmentation_agreement",
    "select_candidates",
    "selection_prf",
    "tag_tokens",
    "tagging_prf",
]
