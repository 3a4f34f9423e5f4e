"""Rule-based baselines: candidate selection and binary sequence tagging.

Selection strategies operate on one narrative's per-sentence candidate
lists, in narrative order (novelty for new_subject/new_entity is tracked at
the narrative level). Tagging strategies label each token E(vent) or O.

Randomized strategies draw from a stream derived from (seed, unit key), so
corpus runs are bit-identical across repeats and independent of iteration
order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Sentence
from .extraction import EventCandidate
from .records import derive_seed

SELECTOR_KINDS = ("random", "binary", "first", "last", "new_subject", "new_entity")
TAGGER_KINDS = ("random", "early", "late")
SEEDED_KINDS = ("random", "binary")

TAG_EVENT = "E"
TAG_OTHER = "O"

_LEADING_FUNCTION_WORDS = {
    # determiners
    "a", "an", "the", "this", "that", "these", "those", "some", "any",
    "each", "every", "no",
    # possessive pronouns
    "my", "your", "his", "her", "its", "our", "their",
}


class ConfigurationError(ValueError):
    """Unknown strategy kind or a missing/forbidden seed."""


@dataclass(frozen=True)
class SelectorStrategy:
    kind: str
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in SELECTOR_KINDS:
            raise ConfigurationError(f"unknown selector kind {self.kind!r}")
        if (self.seed is not None) != (self.kind in SEEDED_KINDS):
            raise ConfigurationError(
                f"selector {self.kind!r} {'requires' if self.kind in SEEDED_KINDS else 'does not take'} a seed"
            )


@dataclass(frozen=True)
class TaggerStrategy:
    kind: str
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in TAGGER_KINDS:
            raise ConfigurationError(f"unknown tagger kind {self.kind!r}")
        if (self.seed is not None) != (self.kind == "random"):
            raise ConfigurationError(
                f"tagger {self.kind!r} {'requires' if self.kind == 'random' else 'does not take'} a seed"
            )


@dataclass(frozen=True)
class TagSequence:
    narrative_id: str
    sentence_position: int
    tags: tuple[str, ...]

    @property
    def sentence_key(self) -> tuple[str, int]:
        return (self.narrative_id, self.sentence_position)


def normalize_entity(text: str) -> str:
    """Novelty key for a participant span: case-folded, leading determiners
    and possessive pronouns stripped ("a gift" and "The gift" coincide)."""
    words = text.casefold().split()
    while words and words[0] in _LEADING_FUNCTION_WORDS:
        words = words[1:]
    return " ".join(words)


def select_candidates(
    strategy: SelectorStrategy,
    narrative_candidates: list[list[EventCandidate]],
) -> list[list[EventCandidate]]:
    """Apply a selection strategy to one narrative's per-sentence lists.

    Output lists are subsets of the inputs, in original order; sentences
    with no candidates yield empty selections.
    """
    if strategy.kind == "random":
        return _select_random(strategy.seed, narrative_candidates)
    if strategy.kind == "binary":
        return _select_binary(strategy.seed, narrative_candidates)
    if strategy.kind == "first":
        return [[lst[0]] if lst else [] for lst in narrative_candidates]
    if strategy.kind == "last":
        return [[lst[-1]] if lst else [] for lst in narrative_candidates]
    if strategy.kind == "new_subject":
        return _select_new_subject(narrative_candidates)
    if strategy.kind == "new_entity":
        return _select_new_entity(narrative_candidates)
    raise ConfigurationError(f"unknown selector kind {strategy.kind!r}")


def _sentence_rng(seed: int | None, candidates: list[EventCandidate]) -> random.Random:
    assert seed is not None
    key = candidates[0].sentence_key
    return random.Random(derive_seed(seed, key[0], key[1]))


def _select_random(
    seed: int | None, narrative_candidates: list[list[EventCandidate]]
) -> list[list[EventCandidate]]:
    selected = []
    for candidates in narrative_candidates:
        if not candidates:
            selected.append([])
            continue
        rng = _sentence_rng(seed, candidates)
        selected.append([candidates[rng.randrange(len(candidates))]])
    return selected


def _select_binary(
    seed: int | None, narrative_candidates: list[list[EventCandidate]]
) -> list[list[EventCandidate]]:
    selected = []
    for candidates in narrative_candidates:
        if not candidates:
            selected.append([])
            continue
        rng = _sentence_rng(seed, candidates)
        selected.append([c for c in candidates if rng.random() < 0.5])
    return selected


def _select_new_subject(
    narrative_candidates: list[list[EventCandidate]],
) -> list[list[EventCandidate]]:
    seen_subjects: set[str] = set()
    selected = []
    for candidates in narrative_candidates:
        kept = []
        for candidate in candidates:
            subject = normalize_entity(candidate.subject_span.text)
            if subject not in seen_subjects:
                kept.append(candidate)
                seen_subjects.add(subject)
        selected.append(kept)
    return selected


def _select_new_entity(
    narrative_candidates: list[list[EventCandidate]],
) -> list[list[EventCandidate]]:
    # Subjects and objects are tracked as separate inventories; a candidate
    # whose subject and object are both already known differs from a seen
    # candidate in the verb only, and only the earliest of those is kept.
    seen_subjects: set[str] = set()
    seen_objects: set[str] = set()
    selected = []
    for candidates in narrative_candidates:
        kept = []
        for candidate in candidates:
            subject = normalize_entity(candidate.subject_span.text)
            obj = (
                normalize_entity(candidate.object_span.text)
                if candidate.object_span is not None
                else None
            )
            is_new = subject not in seen_subjects or (
                obj is not None and obj not in seen_objects
            )
            if is_new:
                kept.append(candidate)
            seen_subjects.add(subject)
            if obj is not None:
                seen_objects.add(obj)
        selected.append(kept)
    return selected


def tag_tokens(strategy: TaggerStrategy, sentence: Sentence) -> TagSequence:
    """Label each token E or O under the given tagging strategy.

    early/late mark the first/last max(1, floor(0.3 * n)) tokens; random
    marks each token independently with p = 0.5.
    """
    n = len(sentence.tokens)
    if n == 0:
        raise ValueError(f"sentence {sentence.key!r} has no tokens")
    if strategy.kind == "random":
        assert strategy.seed is not None
        rng = random.Random(
            derive_seed(strategy.seed, sentence.narrative_id, sentence.position)
        )
        tags = tuple(TAG_EVENT if rng.random() < 0.5 else TAG_OTHER for _ in range(n))
    else:
        m = max(1, (3 * n) // 10)  # floor(0.3 * n) in exact arithmetic
        if strategy.kind == "early":
            marked = set(range(1, m + 1))
        elif strategy.kind == "late":
            marked = set(range(n - m + 1, n + 1))
        else:
            raise ConfigurationError(f"unknown tagger kind {strategy.kind!r}")
        tags = tuple(
            TAG_EVENT if index in marked else TAG_OTHER for index in range(1, n + 1)
        )
    return TagSequence(
        narrative_id=sentence.narrative_id,
        sentence_position=sentence.position,
        tags=tags,
    )


def tag_sequence_to_record(sequence: TagSequence) -> dict:
    return {
        "narrative_id": sequence.narrative_id,
        "sentence_position": sequence.sentence_position,
        "tags": list(sequence.tags),
    }


def tag_sequence_from_record(record: dict) -> TagSequence:
    return TagSequence(
        narrative_id=record["narrative_id"],
        sentence_position=record["sentence_position"],
        tags=tuple(record["tags"]),
    )
