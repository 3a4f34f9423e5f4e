"""Scoring: P/R/F1 for both settings, inter-annotator agreement, corpus stats.

Agreement comes in two forms matching the two annotation formats:
Krippendorff's alpha (nominal, coincidence-matrix formulation) for candidate
selection, and a chance-corrected boundary-agreement kappa for added spans.
All computations are pure.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .baselines import TAG_EVENT, TagSequence
from .corpus import GoldRecord, Narrative, Sentence

DEFAULT_TRANSPOSITION_WINDOW = 2


class AlignmentError(ValueError):
    """Predicted and gold sequences disagree in shape."""


class CandidateUniverseError(ValueError):
    """Predictions or gold reference candidate ids outside the shared universe."""


class NoVariationError(ValueError):
    """Alpha is undefined: every value in the reliability data is identical."""


class SpanDomainError(ValueError):
    """A span lies outside the unit interval it is scored against."""


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PRF":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(precision=precision, recall=recall, f1=f1, tp=tp, fp=fp, fn=fn)

    def to_record(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


def selection_prf(
    predicted: dict[tuple[str, int], set[str]],
    gold: dict[tuple[str, int], set[str]],
    universe: dict[tuple[str, int], set[str]] | None = None,
) -> PRF:
    """Micro-averaged P/R/F1 over candidate selections for the whole corpus.

    When `universe` (the per-sentence presented candidates) is given, any id
    outside it raises CandidateUniverseError.
    """
    if universe is not None:
        for name, sets in (("predicted", predicted), ("gold", gold)):
            for key, ids in sets.items():
                known = universe.get(key, set())
                stray = ids - known
                if stray:
                    raise CandidateUniverseError(
                        f"{name} ids {sorted(stray)} not in candidate universe for {key!r}"
                    )
    tp = fp = fn = 0
    for key in set(predicted) | set(gold):
        pred_ids = predicted.get(key, set())
        gold_ids = gold.get(key, set())
        tp += len(pred_ids & gold_ids)
        fp += len(pred_ids - gold_ids)
        fn += len(gold_ids - pred_ids)
    return PRF.from_counts(tp, fp, fn)


def tagging_prf(predicted: Sequence[TagSequence], gold: Sequence[TagSequence]) -> PRF:
    """Micro-averaged token-level P/R/F1 with E as the positive class."""
    gold_by_key = {seq.sentence_key: seq for seq in gold}
    pred_by_key = {seq.sentence_key: seq for seq in predicted}
    missing = set(gold_by_key) ^ set(pred_by_key)
    if missing:
        raise AlignmentError(f"sentences not present on both sides: {sorted(missing)[:5]}")
    tp = fp = fn = 0
    for key, gold_seq in gold_by_key.items():
        pred_seq = pred_by_key[key]
        if len(pred_seq.tags) != len(gold_seq.tags):
            raise AlignmentError(
                f"sentence {key!r}: predicted {len(pred_seq.tags)} tags, gold {len(gold_seq.tags)}"
            )
        for pred_tag, gold_tag in zip(pred_seq.tags, gold_seq.tags):
            if pred_tag == TAG_EVENT and gold_tag == TAG_EVENT:
                tp += 1
            elif pred_tag == TAG_EVENT:
                fp += 1
            elif gold_tag == TAG_EVENT:
                fn += 1
    return PRF.from_counts(tp, fp, fn)


@dataclass(frozen=True)
class ReliabilityMatrix:
    """Items x annotators grid of nominal values; None marks a missing cell."""

    values: tuple[tuple[Hashable | None, ...], ...]

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[Hashable | None]]) -> "ReliabilityMatrix":
        return cls(values=tuple(tuple(row) for row in rows))

    def pairable_items(self) -> list[list[Hashable]]:
        items = []
        for row in self.values:
            present = [value for value in row if value is not None]
            if len(present) >= 2:
                items.append(present)
        return items


def krippendorff_alpha(matrix: ReliabilityMatrix) -> float:
    """Nominal-level alpha = 1 - D_o/D_e via the coincidence matrix.

    Items with fewer than two values are excluded. Perfect agreement yields
    exactly 1.0. When the pairable data carry a single value overall, D_e is
    zero and NoVariationError is raised.
    """
    items = matrix.pairable_items()
    if not items:
        raise ValueError("reliability matrix has no item with two or more values")
    coincidence: Counter[tuple[Hashable, Hashable]] = Counter()
    for values in items:
        m = len(values)
        weight = 1.0 / (m - 1)
        for i, first in enumerate(values):
            for j, second in enumerate(values):
                if i != j:
                    coincidence[(first, second)] += weight  # type: ignore[assignment]
    totals: Counter[Hashable] = Counter()
    for (first, _), count in coincidence.items():
        totals[first] += count
    n = sum(totals.values())
    observed_disagreement = (
        sum(count for (first, second), count in coincidence.items() if first != second) / n
    )
    expected_disagreement = (
        sum(
            totals[first] * totals[second]
            for first in totals
            for second in totals
            if first != second
        )
        / (n * (n - 1))
    )
    if expected_disagreement == 0:
        raise NoVariationError("all values identical: alpha undefined")
    return 1.0 - observed_disagreement / expected_disagreement


def selection_reliability_matrix(
    presented: dict[tuple[str, int], list[str]],
    selections: dict[str, dict[tuple[str, int], set[str]]],
) -> ReliabilityMatrix:
    """One reliability item per (sentence, candidate) pair with binary
    selected/not-selected values per annotator; unseen sentences are missing."""
    annotators = sorted(selections)
    rows = []
    for key in sorted(presented):
        for candidate_id in presented[key]:
            row: list[Hashable | None] = []
            for annotator in annotators:
                sentence_selections = selections[annotator].get(key)
                if sentence_selections is None:
                    row.append(None)
                else:
                    row.append(1 if candidate_id in sentence_selections else 0)
            rows.append(row)
    return ReliabilityMatrix.from_rows(rows)


# --- segmentation agreement --------------------------------------------------

def spans_to_boundaries(spans: Iterable[tuple[int, int]], length: int) -> list[int]:
    """Span endpoints as boundary positions in [0, length]."""
    boundaries = set()
    for start, end in spans:
        if not (0 <= start < end <= length):
            raise SpanDomainError(f"span ({start}, {end}) outside [0, {length})")
        boundaries.add(start)
        boundaries.add(end)
    return sorted(boundaries)


def boundary_edit(
    boundaries_a: Sequence[int],
    boundaries_b: Sequence[int],
    window: int,
) -> tuple[float, int]:
    """Minimal boundary-edit cost and the number of matched pairs.

    Additions/deletions cost 1; matching two boundaries offset by o < window
    is a transposition costing o / window. Among minimal-cost alignments the
    one with the most matches is reported.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    a, b = list(boundaries_a), list(boundaries_b)
    rows, cols = len(a) + 1, len(b) + 1
    # cell: (cost, -matches)
    table: list[list[tuple[float, int]]] = [[(0.0, 0)] * cols for _ in range(rows)]
    for i in range(1, rows):
        table[i][0] = (float(i), 0)
    for j in range(1, cols):
        table[0][j] = (float(j), 0)
    for i in range(1, rows):
        for j in range(1, cols):
            best = min(
                (table[i - 1][j][0] + 1, table[i - 1][j][1]),
                (table[i][j - 1][0] + 1, table[i][j - 1][1]),
            )
            offset = abs(a[i - 1] - b[j - 1])
            if offset < window:
                match = (
                    table[i - 1][j - 1][0] + offset / window,
                    table[i - 1][j - 1][1] - 1,
                )
                best = min(best, match)
            table[i][j] = best
    cost, negative_matches = table[-1][-1]
    return cost, -negative_matches


def boundary_similarity(
    boundaries_a: Sequence[int],
    boundaries_b: Sequence[int],
    window: int = DEFAULT_TRANSPOSITION_WINDOW,
) -> float:
    """1 - edit cost normalized by aligned boundary slots; 1.0 for identical
    sets (both empty included), 0.0 for pure addition/deletion."""
    cost, matches = boundary_edit(boundaries_a, boundaries_b, window)
    slots = len(boundaries_a) + len(boundaries_b) - matches
    if slots == 0:
        return 1.0
    return 1.0 - cost / slots


def segmentation_agreement(
    spans_a: Iterable[tuple[int, int]],
    spans_b: Iterable[tuple[int, int]],
    length: int,
    window: int = DEFAULT_TRANSPOSITION_WINDOW,
) -> float:
    """Chance-corrected kappa over boundary placements.

    Observed agreement spreads the boundary-edit cost over all candidate
    boundary positions; expected agreement uses the two annotators' boundary
    densities (Cohen-style). Symmetric; 1.0 for identical span lists.
    """
    boundaries_a = spans_to_boundaries(spans_a, length)
    boundaries_b = spans_to_boundaries(spans_b, length)
    positions = length + 1
    cost, _ = boundary_edit(boundaries_a, boundaries_b, window)
    observed = 1.0 - cost / positions
    density_a = len(boundaries_a) / positions
    density_b = len(boundaries_b) / positions
    expected = density_a * density_b + (1.0 - density_a) * (1.0 - density_b)
    if expected >= 1.0:
        return 1.0 if cost == 0 else 0.0
    return (observed - expected) / (1.0 - expected)


def pairwise_segmentation_agreement(
    span_lists: Sequence[Iterable[tuple[int, int]]],
    length: int,
    window: int = DEFAULT_TRANSPOSITION_WINDOW,
) -> float:
    """Mean segmentation agreement over all annotator pairs (>= 2 lists)."""
    materialized = [list(spans) for spans in span_lists]
    if len(materialized) < 2:
        raise ValueError("need at least two span lists")
    scores = []
    for i in range(len(materialized)):
        for j in range(i + 1, len(materialized)):
            scores.append(
                segmentation_agreement(materialized[i], materialized[j], length, window)
            )
    return sum(scores) / len(scores)


# --- corpus statistics --------------------------------------------------------

@dataclass(frozen=True)
class HalfSplit:
    first_half_pct: float
    second_half_pct: float

    def to_record(self) -> dict:
        return {"first_half_pct": self.first_half_pct, "second_half_pct": self.second_half_pct}


@dataclass(frozen=True)
class AnnotationStats:
    total: int
    per_sentence: float
    per_narrative: float
    per_narrator: float
    sentence_half: HalfSplit
    narrative_half: HalfSplit

    def to_record(self) -> dict:
        return {
            "total": self.total,
            "per_sentence": self.per_sentence,
            "per_narrative": self.per_narrative,
            "per_narrator": self.per_narrator,
            "sentence_half": self.sentence_half.to_record(),
            "narrative_half": self.narrative_half.to_record(),
        }


@dataclass(frozen=True)
class StatsReport:
    narratives: int
    sentences: int
    narrators: int
    selected_candidates: AnnotationStats
    added_spans: AnnotationStats

    def to_record(self) -> dict:
        return {
            "narratives": self.narratives,
            "sentences": self.sentences,
            "narrators": self.narrators,
            "selected_candidates": self.selected_candidates.to_record(),
            "added_spans": self.added_spans.to_record(),
        }


def in_second_sentence_half(start_token_index: int, sentence_length: int) -> bool:
    """An item is in the sentence's second half iff its first token index
    exceeds n/2 (1-based)."""
    return start_token_index > sentence_length / 2


def in_second_narrative_half(position: int, narrative_length: int) -> bool:
    """A sentence is in the narrative's second half iff its 0-based position
    is at least ceil(S/2)."""
    return position >= -(-narrative_length // 2)


def _first_token_for_char(sentence: Sentence, char_start: int) -> int:
    for token in sentence.tokens:
        if token.char_end > char_start:
            return token.index
    return len(sentence.tokens)


def _half_split(first: int, second: int) -> HalfSplit:
    total = first + second
    if total == 0:
        return HalfSplit(first_half_pct=0.0, second_half_pct=0.0)
    return HalfSplit(
        first_half_pct=100.0 * first / total,
        second_half_pct=100.0 * second / total,
    )


def corpus_statistics(
    gold: dict[tuple[str, int], list[GoldRecord]],
    narratives: Sequence[Narrative],
    candidate_starts: dict[tuple[str, int], dict[str, int]] | None = None,
) -> StatsReport:
    """Aggregate annotated-corpus statistics over the given narratives.

    `candidate_starts` maps sentence key -> rendered triplet text -> first
    token index; without it a selected candidate's sentence-half position
    falls back to the sentence midpoint (counted in the first half).
    """
    by_id = {n.id: n for n in narratives}
    sentence_count = sum(len(n.sentences) for n in narratives)
    narrator_ids = {n.narrator_id for n in narratives}

    candidate_total = span_total = 0
    candidate_sentence_halves = [0, 0]
    candidate_narrative_halves = [0, 0]
    span_sentence_halves = [0, 0]
    span_narrative_halves = [0, 0]

    for key, records in gold.items():
        narrative = by_id.get(key[0])
        if narrative is None:
            continue
        sentence = narrative.sentences[key[1]]
        n_tokens = len(sentence.tokens)
        narrative_second = in_second_narrative_half(key[1], len(narrative.sentences))
        starts = (candidate_starts or {}).get(key, {})
        for record in records:
            for triplet_text in record.selected_candidates:
                candidate_total += 1
                start_index = starts.get(triplet_text, (n_tokens + 1) // 2)
                second = in_second_sentence_half(start_index, n_tokens)
                candidate_sentence_halves[second] += 1
                candidate_narrative_halves[narrative_second] += 1
            for char_start, _, _ in record.added_spans:
                span_total += 1
                start_index = _first_token_for_char(sentence, char_start)
                second = in_second_sentence_half(start_index, n_tokens)
                span_sentence_halves[second] += 1
                span_narrative_halves[narrative_second] += 1

    def stats(total: int, sentence_halves: list[int], narrative_halves: list[int]) -> AnnotationStats:
        return AnnotationStats(
            total=total,
            per_sentence=total / sentence_count if sentence_count else 0.0,
            per_narrative=total / len(narratives) if narratives else 0.0,
            per_narrator=total / len(narrator_ids) if narrator_ids else 0.0,
            sentence_half=_half_split(sentence_halves[0], sentence_halves[1]),
            narrative_half=_half_split(narrative_halves[0], narrative_halves[1]),
        )

    return StatsReport(
        narratives=len(narratives),
        sentences=sentence_count,
        narrators=len(narrator_ids),
        selected_candidates=stats(
            candidate_total, candidate_sentence_halves, candidate_narrative_halves
        ),
        added_spans=stats(span_total, span_sentence_halves, span_narrative_halves),
    )
