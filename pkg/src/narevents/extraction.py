"""Extract (subject, predicate, object) event candidates from dependency trees.

A verb anchors each event; its subject and object-like dependents are the
participants. Copular constructions ("Alice is Bob's wife") are events too:
the copula is the predicate and the non-verbal head plus its remaining
dependents form the object complex.

Extraction is a pure function of the parse: identical trees yield identical
candidate lists, so per-sentence extraction parallelizes freely.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Sentence, Token

SUBJECT_RELS = {"nsubj", "nsubj:pass"}
CORE_OBJECT_RELS = {"obj", "iobj"}
OBLIQUE_BASE = "obl"
# Clausal dependents are cut off during span expansion to keep arguments phrasal.
CLAUSAL_BASES = ("acl", "advcl", "ccomp", "xcomp")
# Clause-level function words excluded from a copular object complex.
COPULA_COMPLEX_DROP = {"mark", "cc", "discourse", "vocative", "parataxis", "expl"}

TRIPLET_SEPARATOR = " — "  # spaced em dash, as shown to annotators


@dataclass(frozen=True)
class SpanText:
    """A token-index span with its rendered surface text."""

    token_indices: tuple[int, ...]
    text: str


@dataclass(frozen=True)
class EventCandidate:
    id: str
    narrative_id: str
    sentence_position: int
    subject_span: SpanText
    predicate_span: SpanText
    object_span: SpanText | None
    order_key: int

    @property
    def sentence_key(self) -> tuple[str, int]:
        return (self.narrative_id, self.sentence_position)

    def token_count(self) -> int:
        total = len(self.subject_span.token_indices) + len(self.predicate_span.token_indices)
        if self.object_span is not None:
            total += len(self.object_span.token_indices)
        return total


def _children(sentence: Sentence) -> dict[int, list[Token]]:
    by_head: dict[int, list[Token]] = {}
    for token in sentence.tokens:
        by_head.setdefault(token.head, []).append(token)
    return by_head


def _rel_matches(deprel: str, base: str) -> bool:
    return deprel == base or deprel.startswith(base + ":")

def _is_clausal(deprel: str) -> bool:
    return any(_rel_matches(deprel, base) for base in CLAUSAL_BASES)


def _is_object_like(deprel: str) -> bool:
    return deprel in CORE_OBJECT_RELS or _rel_matches(deprel, OBLIQUE_BASE)


def _is_negation(token: Token) -> bool:
    return token.deprel == "neg" or (token.deprel == "advmod" and token.lemma == "not")


def _span(sentence: Sentence, indices: set[int]) -> SpanText:
    """Render a token-index set using the sentence's own inter-token spacing,
    so "Bob" + "'s" reads back as "Bob's"; gaps collapse to a single space."""
    ordered = tuple(sorted(indices))
    parts: list[str] = []
    for i, index in enumerate(ordered):
        token = sentence.token(index)
        if i > 0:
            previous = sentence.token(ordered[i - 1])
            if index == ordered[i - 1] + 1:
                parts.append(sentence.text[previous.char_end : token.char_start])
            else:
                parts.append(" ")
        parts.append(token.surface)
    return SpanText(token_indices=ordered, text="".join(parts))


class _TreeWalker:
    def __init__(self, sentence: Sentence):
        self.sentence = sentence
        self.children = _children(sentence)

    def subtree(self, head: Token, extra_drop: set[int] | None = None) -> set[int]:
        """Indices of head's phrasal subtree: clausal dependents and punctuation
        are cut; `extra_drop` subtrees (by head index) are cut as well."""
        drop = extra_drop or set()
        collected: set[int] = set()
        stack = [head]
        while stack:
            node = stack.pop()
            collected.add(node.index)
            for child in self.children.get(node.index, ()):
                if child.index in drop:
                    continue
                if child.deprel == "punct" or _is_clausal(child.deprel):
                    continue
                stack.append(child)
        return collected


def _find_subject(
    walker: _TreeWalker,
    anchor: Token,
    subject_cache: dict[int, Token | None],
) -> Token | None:
    """The anchor's subject dependent, inherited through conj links if absent."""
    if anchor.index in subject_cache:
        return subject_cache[anchor.index]
    subject: Token | None = None
    for child in walker.children.get(anchor.index, ()):
        if child.deprel in SUBJECT_RELS:
            subject = child
            break
    if subject is None and _rel_matches(anchor.deprel, "conj") and anchor.head != 0:
        subject = _find_subject(walker, walker.sentence.token(anchor.head), subject_cache)
    subject_cache[anchor.index] = subject
    return subject


def extract_candidates(sentence: Sentence) -> list[EventCandidate]:
    """All (subject, predicate, object) candidates for one sentence.

    One candidate per (verb, subject, object-like dependent) combination;
    verbs with a subject but no object-like dependent yield one intransitive
    candidate. Ordered by predicate position, then subject, then object.
    """
    walker = _TreeWalker(sentence)
    subject_cache: dict[int, Token | None] = {}

    copula_of: dict[int, Token] = {}
    for token in sentence.tokens:
        if token.deprel == "cop" and sentence.token(token.head).upos != "VERB":
            copula_of.setdefault(token.head, token)
    anchor_indices = {t.index for t in sentence.tokens if t.upos == "VERB"} | set(copula_of)
    # Conjoined anchors are events of their own; keep their subtrees out of
    # sibling argument spans ("Alice is kind and Bob is smart").
    conj_anchors = {
        t.index
        for t in sentence.tokens
        if t.index in anchor_indices and _rel_matches(t.deprel, "conj")
    }

    raw: list[tuple[tuple[int, int, int], EventCandidate]] = []
    for token in sentence.tokens:
        if token.upos == "VERB":
            raw.extend(_verbal_candidates(walker, token, subject_cache, conj_anchors))
        elif token.index in copula_of:
            candidate = _copular_candidate(
                walker, token, copula_of[token.index], subject_cache, conj_anchors
            )
            if candidate is not None:
                raw.append(candidate)

    raw.sort(key=lambda item: item[0])
    ordered = []
    for i, (_, candidate) in enumerate(raw):
        ordered.append(
            EventCandidate(
                id=f"{sentence.narrative_id}:{sentence.position}:{i}",
                narrative_id=candidate.narrative_id,
                sentence_position=candidate.sentence_position,
                subject_span=candidate.subject_span,
                predicate_span=candidate.predicate_span,
                object_span=candidate.object_span,
                order_key=candidate.order_key,
            )
        )
    return ordered


def _predicate_indices(walker: _TreeWalker, verb: Token) -> set[int]:
    indices = {verb.index}
    for child in walker.children.get(verb.index, ()):
        if _rel_matches(child.deprel, "aux") or _is_negation(child):
            indices.add(child.index)
    return indices


def _verbal_candidates(
    walker: _TreeWalker,
    verb: Token,
    subject_cache: dict[int, Token | None],
    conj_anchors: set[int],
) -> list[tuple[tuple[int, int, int], EventCandidate]]:
    sentence = walker.sentence
    subject = _find_subject(walker, verb, subject_cache)
    if subject is None:
        return []
    drop = conj_anchors - {verb.index}
    subject_span = _span(sentence, walker.subtree(subject, extra_drop=drop))
    predicate_span = _span(sentence, _predicate_indices(walker, verb))
    objects = [
        child for child in walker.children.get(verb.index, ()) if _is_object_like(child.deprel)
    ]
    results = []
    if not objects:
        candidate = EventCandidate(
            id="",
            narrative_id=sentence.narrative_id,
            sentence_position=sentence.position,
            subject_span=subject_span,
            predicate_span=predicate_span,
            object_span=None,
            order_key=verb.index,
        )
        results.append(((verb.index, subject_span.token_indices[0], 0), candidate))
        return results
    for obj in objects:
        object_span = _span(sentence, walker.subtree(obj, extra_drop=drop))
        candidate = EventCandidate(
            id="",
            narrative_id=sentence.narrative_id,
            sentence_position=sentence.position,
            subject_span=subject_span,
            predicate_span=predicate_span,
            object_span=object_span,
            order_key=verb.index,
        )
        sort_key = (verb.index, subject_span.token_indices[0], object_span.token_indices[0])
        results.append((sort_key, candidate))
    return results


def _copular_candidate(
    walker: _TreeWalker,
    head: Token,
    copula: Token,
    subject_cache: dict[int, Token | None],
    conj_anchors: set[int],
) -> tuple[tuple[int, int, int], EventCandidate] | None:
    sentence = walker.sentence
    subject = _find_subject(walker, head, subject_cache)
    if subject is None:
        return None
    drop = conj_anchors - {head.index}
    subject_span = _span(sentence, walker.subtree(subject, extra_drop=drop))
    predicate_indices = {copula.index}
    object_drop = set(drop) | {subject.index}
    for child in walker.children.get(head.index, ()):
        if _rel_matches(child.deprel, "aux") or _is_negation(child):
            predicate_indices.add(child.index)
        elif child.deprel in COPULA_COMPLEX_DROP or child.deprel in SUBJECT_RELS:
            object_drop.add(child.index)
    predicate_span = _span(sentence, predicate_indices)
    object_indices = walker.subtree(head, extra_drop=object_drop) - predicate_indices
    object_span = _span(sentence, object_indices)
    candidate = EventCandidate(
        id="",
        narrative_id=sentence.narrative_id,
        sentence_position=sentence.position,
        subject_span=subject_span,
        predicate_span=predicate_span,
        object_span=object_span,
        order_key=copula.index,
    )
    sort_key = (copula.index, subject_span.token_indices[0], object_span.token_indices[0])
    return (sort_key, candidate)


def render_triplet(candidate: EventCandidate) -> str:
    """Annotator-facing text: "subject — predicate — object" (object omitted
    for intransitives)."""
    parts = [candidate.subject_span.text, candidate.predicate_span.text]
    if candidate.object_span is not None:
        parts.append(candidate.object_span.text)
    return TRIPLET_SEPARATOR.join(parts)


def split_rendered(rendered: str) -> list[str]:
    return rendered.split(TRIPLET_SEPARATOR)


# --- line-record (de)serialization -----------------------------------------

def span_to_record(span: SpanText | None) -> dict | None:
    if span is None:
        return None
    return {"token_indices": list(span.token_indices), "text": span.text}


def candidate_to_record(candidate: EventCandidate, reduced: bool = False) -> dict:
    return {
        "id": candidate.id,
        "narrative_id": candidate.narrative_id,
        "sentence_position": candidate.sentence_position,
        "subject": span_to_record(candidate.subject_span),
        "predicate": span_to_record(candidate.predicate_span),
        "object": span_to_record(candidate.object_span),
        "order_key": candidate.order_key,
        "reduced": reduced,
    }


def candidate_from_record(record: dict) -> EventCandidate:
    def span(value: dict | None) -> SpanText | None:
        if value is None:
            return None
        return SpanText(token_indices=tuple(value["token_indices"]), text=value["text"])

    subject = span(record["subject"])
    predicate = span(record["predicate"])
    assert subject is not None and predicate is not None
    return EventCandidate(
        id=record["id"],
        narrative_id=record["narrative_id"],
        sentence_position=record["sentence_position"],
        subject_span=subject,
        predicate_span=predicate,
        object_span=span(record.get("object")),
        order_key=record["order_key"],
    )
