"""Export gold annotations as model-ready records.

Two settings mirror the two task formats: `selection` emits one record per
(sentence, presented candidate) with a new/not_new label; `tagging` emits one
record per sentence with per-token E/O tags. Every record carries the new
events of the preceding context, trimmed oldest-first to a whitespace-token
budget (the budget is a model-agnostic stand-in for encoder input limits).
"""

from __future__ import annotations

from typing import Iterator, Sequence

from .baselines import TAG_EVENT, TAG_OTHER
from .corpus import GoldRecord, Narrative, Sentence
from .extraction import EventCandidate, render_triplet

DEFAULT_TOKEN_BUDGET = 512

LABEL_NEW = "new"
LABEL_NOT_NEW = "not_new"

TAGS_FROM_SPANS = "spans"
TAGS_FROM_BOTH = "spans+candidates"


def whitespace_tokens(text: str) -> int:
    return len(text.split())


def gold_event_texts(records: Sequence[GoldRecord]) -> list[str]:
    """A sentence's gold events in a stable order: selected candidates first
    (record order), then added spans by offset; duplicates dropped."""
    texts: list[str] = []
    seen: set[str] = set()
    for record in records:
        for text in record.selected_candidates:
            if text not in seen:
                seen.add(text)
                texts.append(text)
    spans: list[tuple[int, int, str]] = []
    for record in records:
        spans.extend(record.added_spans)
    for _, _, text in sorted(spans):
        if text not in seen:
            seen.add(text)
            texts.append(text)
    return texts


def trim_context(
    context_events: list[str], fixed_tokens: int, token_budget: int
) -> tuple[list[str], bool]:
    """Drop whole events from the front until the record fits the budget.

    Returns (kept context, overflow); overflow is True when even the empty
    context cannot fit, in which case the context is empty.
    """
    kept = list(context_events)
    total = fixed_tokens + sum(whitespace_tokens(text) for text in kept)
    while kept and total > token_budget:
        total -= whitespace_tokens(kept.pop(0))
    return kept, total > token_budget


def project_tags(
    sentence: Sentence,
    records: Sequence[GoldRecord],
    candidates: Sequence[EventCandidate],
    tags_from: str = TAGS_FROM_BOTH,
) -> tuple[str, ...]:
    """Per-token E/O labels: a token is E iff it overlaps a gold added span
    or (in spans+candidates mode) belongs to a selected candidate's spans."""
    marked: set[int] = set()
    for record in records:
        for start, end, _ in record.added_spans:
            for token in sentence.tokens:
                if token.char_start < end and token.char_end > start:
                    marked.add(token.index)
    if tags_from == TAGS_FROM_BOTH:
        by_text = {render_triplet(c): c for c in candidates}
        for record in records:
            for text in record.selected_candidates:
                candidate = by_text.get(text)
                if candidate is None:
                    continue
                marked.update(candidate.subject_span.token_indices)
                marked.update(candidate.predicate_span.token_indices)
                if candidate.object_span is not None:
                    marked.update(candidate.object_span.token_indices)
    elif tags_from != TAGS_FROM_SPANS:
        raise ValueError(f"unknown tag source {tags_from!r}")
    return tuple(
        TAG_EVENT if token.index in marked else TAG_OTHER for token in sentence.tokens
    )


def export_training_examples(
    gold: dict[tuple[str, int], list[GoldRecord]],
    narratives: Sequence[Narrative],
    candidates: dict[tuple[str, int], list[EventCandidate]],
    setting: str,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
    tags_from: str = TAGS_FROM_BOTH,
) -> Iterator[dict]:
    """Stream export records in narrative order.

    The context for a sentence holds the gold events of all earlier
    sentences in its narrative, oldest first.
    """
    if setting not in ("selection", "tagging"):
        raise ValueError(f"unknown export setting {setting!r}")
    for narrative in narratives:
        context: list[str] = []
        for sentence in narrative.sentences:
            records = gold.get(sentence.key, [])
            presented = candidates.get(sentence.key, [])
            if setting == "selection":
                selected_texts = {
                    text for record in records for text in record.selected_candidates
                }
                for candidate in presented:
                    candidate_text = render_triplet(candidate)
                    fixed = whitespace_tokens(candidate_text) + whitespace_tokens(
                        sentence.text
                    )
                    kept, overflow = trim_context(context, fixed, token_budget)
                    yield {
                        "narrative_id": narrative.id,
                        "sentence_position": sentence.position,
                        "candidate_id": candidate.id,
                        "context_new_events": kept,
                        "sentence_text": sentence.text,
                        "candidate_text": candidate_text,
                        "label": LABEL_NEW
                        if candidate_text in selected_texts
                        else LABEL_NOT_NEW,
                        "overflow": overflow,
                    }
            else:
                tags = project_tags(sentence, records, presented, tags_from)
                fixed = len(sentence.tokens)
                kept, overflow = trim_context(context, fixed, token_budget)
                yield {
                    "narrative_id": narrative.id,
                    "sentence_position": sentence.position,
                    "context_new_events": kept,
                    "sentence_tokens": [t.surface for t in sentence.tokens],
                    "tags": list(tags),
                    "overflow": overflow,
                }
            context.extend(gold_event_texts(records))
