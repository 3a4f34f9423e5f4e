"""Annotation workflow: append-only log, sessions, batches and adjudication.

State is never stored mutably: every session/batch mutation is one line in
an append-only JSONL log, and in-memory state is derived by replaying it.
A submission is acknowledged only after the line is durably appended, so
crash recovery is "reopen the log".
"""

from __future__ import annotations

import os
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, IO, Iterable, Iterator

from .corpus import GoldRecord, Narrative, index_sentences
from .extraction import EventCandidate, render_triplet
from .metrics import (
    NoVariationError,
    krippendorff_alpha,
    pairwise_segmentation_agreement,
    selection_reliability_matrix,
)
from .records import dumps_record, read_jsonl

DEFAULT_ALPHA_THRESHOLD = 0.4
DEFAULT_SEGMENTATION_THRESHOLD = 0.4

GUIDELINE_DIGEST = (
    "Select a candidate only if it is valid for the sentence and describes an "
    "event that is new to the narrative so far and not inferable from common "
    "sense. If new information is missing from the candidates, add it by "
    "selecting the exact span of the sentence that conveys it."
)


class AnnotationError(Exception):
    """Base class for workflow failures."""


class ValidationError(AnnotationError):
    """A submission violates an annotation invariant; nothing was persisted."""


class SequencingError(AnnotationError):
    """A submission targets a position other than the session cursor."""


class AssemblyError(AnnotationError):
    """Batch assembly cannot satisfy the distinct-narrator requirement."""


class UnknownSessionError(AnnotationError):
    pass


@dataclass(frozen=True)
class Annotation:
    sentence_position: int
    selected_candidate_ids: tuple[str, ...]
    added_spans: tuple[tuple[int, int, str], ...]
    timestamp: str


@dataclass
class Session:
    id: str
    annotator_id: str
    narrative_id: str
    cursor: int = 0
    submitted: list[Annotation] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self._length is not None and self.cursor >= self._length

    _length: int | None = None


@dataclass(frozen=True)
class Batch:
    id: str
    assignment: dict[str, tuple[str, ...]]
    overlap_narrative: str

    def annotators(self) -> list[str]:
        return sorted(self.assignment)

    def narratives_for(self, annotator_id: str) -> list[str]:
        return [self.overlap_narrative, *self.assignment.get(annotator_id, ())]


def assemble_batches(
    narratives: list[Narrative],
    annotators: list[str],
    n_batches: int,
    seed: int,
) -> list[Batch]:
    """Split narratives into batches, each with one all-annotator overlap
    narrative; overlap narratives come from pairwise-distinct narrators.

    The non-overlap remainder is partitioned across batches and, within a
    batch, round-robined over annotators. Deterministic per seed.
    """
    if n_batches < 1:
        raise AssemblyError("need at least one batch")
    if not annotators:
        raise AssemblyError("need at least one annotator")
    rng = random.Random(seed)
    shuffled = sorted(narratives, key=lambda n: n.id)
    rng.shuffle(shuffled)

    overlap: list[Narrative] = []
    used_narrators: set[str] = set()
    for narrative in shuffled:
        if len(overlap) == n_batches:
            break
        if narrative.narrator_id not in used_narrators:
            overlap.append(narrative)
            used_narrators.add(narrative.narrator_id)
    if len(overlap) < n_batches:
        raise AssemblyError(
            f"{n_batches} batches need {n_batches} overlap narratives from distinct "
            f"narrators, only {len(used_narrators)} narrators available"
        )
    overlap_ids = {n.id for n in overlap}
    rest = [n for n in shuffled if n.id not in overlap_ids]

    base, extra = divmod(len(rest), n_batches)
    batches = []
    cursor = 0
    for batch_index in range(n_batches):
        size = base + (1 if batch_index < extra else 0)
        chunk = rest[cursor : cursor + size]
        cursor += size
        assignment: dict[str, list[str]] = {a: [] for a in annotators}
        for i, narrative in enumerate(chunk):
            assignment[annotators[i % len(annotators)]].append(narrative.id)
        batches.append(
            Batch(
                id=f"batch-{batch_index + 1:02d}",
                assignment={a: tuple(ids) for a, ids in assignment.items()},
                overlap_narrative=overlap[batch_index].id,
            )
        )
    return batches


def qualification_batch(narrative_id: str, annotators: list[str], batch_id: str = "qualification") -> Batch:
    """A one-narrative batch annotated by everyone, used to vet annotators."""
    return Batch(
        id=batch_id,
        assignment={a: () for a in annotators},
        overlap_narrative=narrative_id,
    )


class AnnotationLog:
    """Append-only JSONL event log; the single source of truth."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._handle: IO[str] | None = None

    def events(self) -> Iterator[dict]:
        if not self.path.exists():
            return iter(())
        return read_jsonl(self.path)

    def append(self, event: dict) -> None:
        """Durably append one event; returns only after the line is synced."""
        if self._handle is None:
            self._handle = open(self.path, "a", encoding="utf-8")
        self._handle.write(dumps_record(event))
        self._handle.write("\n")
        self._handle.flush()
        os.fsync(self._handle.fileno())

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


class AnnotationService:
    """Sessions, batch monitoring and gold adjudication over one corpus.

    `candidates` holds the per-sentence lists exactly as presented to
    annotators (i.e. after reduction). Pass ``clock="logical"`` to timestamp
    events with a monotone counter instead of wall time; two runs making the
    same calls then produce byte-identical logs.
    """

    def __init__(
        self,
        narratives: list[Narrative],
        candidates: dict[tuple[str, int], list[EventCandidate]],
        log: AnnotationLog,
        clock: str | Callable[[], str] = "wall",
    ):
        self.narratives = {n.id: n for n in narratives}
        self.sentences = index_sentences(narratives)
        self.candidates = candidates
        self.log = log
        self.sessions: dict[str, Session] = {}
        self.batches: dict[str, Batch] = {}
        self._event_count = 0
        self._write_lock = threading.Lock()
        if clock == "logical":
            self._clock: Callable[[], str] = lambda: str(self._event_count)
        elif clock == "wall":
            self._clock = lambda: f"{time.time():.6f}"
        else:
            self._clock = clock
        for event in self.log.events():
            self._apply(event)

    # -- event sourcing ------------------------------------------------------

    def _emit(self, event: dict) -> dict:
        # callers hold _write_lock: validation + append + apply are one unit
        event = {"seq": self._event_count, "ts": self._clock(), **event}
        self.log.append(event)
        self._apply(event)
        return event

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "session_created":
            session = Session(
                id=event["session_id"],
                annotator_id=event["annotator_id"],
                narrative_id=event["narrative_id"],
            )
            session._length = len(self.narratives[session.narrative_id].sentences)
            self.sessions[session.id] = session
        elif kind == "annotation_submitted":
            session = self.sessions[event["session_id"]]
            session.submitted.append(
                Annotation(
                    sentence_position=event["position"],
                    selected_candidate_ids=tuple(event["selected_candidate_ids"]),
                    added_spans=tuple(
                        (span[0], span[1], span[2]) for span in event["added_spans"]
                    ),
                    timestamp=event["ts"],
                )
            )
            session.cursor = event["position"] + 1
        elif kind == "batch_assembled":
            batch = Batch(
                id=event["batch_id"],
                assignment={a: tuple(ids) for a, ids in event["assignment"].items()},
                overlap_narrative=event["overlap_narrative"],
            )
            self.batches[batch.id] = batch
        self._event_count += 1

    # -- sessions --------------------------------------------------------------

    def create_session(
        self,
        annotator_id: str,
        narrative_id: str | None = None,
        batch_id: str | None = None,
    ) -> Session:
        with self._write_lock:
            return self._create_session(annotator_id, narrative_id, batch_id)

    def _create_session(
        self,
        annotator_id: str,
        narrative_id: str | None,
        batch_id: str | None,
    ) -> Session:
        if narrative_id is None:
            if batch_id is None:
                raise ValidationError("need a narrative_id or a batch_id")
            batch = self.batches.get(batch_id)
            if batch is None:
                raise ValidationError(f"unknown batch {batch_id!r}")
            done = {
                s.narrative_id
                for s in self.sessions.values()
                if s.annotator_id == annotator_id
            }
            remaining = [n for n in batch.narratives_for(annotator_id) if n not in done]
            if not remaining:
                raise ValidationError(
                    f"annotator {annotator_id!r} has no unstarted narrative in batch {batch_id!r}"
                )
            narrative_id = remaining[0]
        if narrative_id not in self.narratives:
            raise ValidationError(f"unknown narrative {narrative_id!r}")
        session_id = f"s-{len(self.sessions) + 1:04d}"
        event = self._emit(
            {
                "type": "session_created",
                "session_id": session_id,
                "annotator_id": annotator_id,
                "narrative_id": narrative_id,
            }
        )
        return self.sessions[event["session_id"]]

    def session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"unknown session {session_id!r}")
        return session

    def current_unit(self, session_id: str) -> dict:
        """The unit the annotator should see next, or a completion marker."""
        session = self.session(session_id)
        narrative = self.narratives[session.narrative_id]
        if session.cursor >= len(narrative.sentences):
            return {"complete": True, "narrative_id": session.narrative_id}
        sentence = narrative.sentences[session.cursor]
        presented = self.candidates.get(sentence.key, [])
        return {
            "complete": False,
            "narrative_id": session.narrative_id,
            "position": sentence.position,
            "sentence_text": sentence.text,
            "context_sentences": [
                narrative.sentences[i].text for i in range(session.cursor)
            ],
            "candidates": [
                {"id": c.id, "rendered": render_triplet(c)} for c in presented
            ],
            "guideline_digest": GUIDELINE_DIGEST,
        }

    def submit_annotation(
        self,
        session_id: str,
        position: int,
        selected_candidate_ids: Iterable[str],
        added_spans: Iterable[tuple[int, int, str]],
    ) -> Session:
        """Validate and durably record one sentence's annotation.

        Rejections (wrong position, stray candidate id, span/text mismatch)
        leave both the log and the session untouched.
        """
        with self._write_lock:
            return self._submit_annotation(
                session_id, position, selected_candidate_ids, added_spans
            )

    def _submit_annotation(
        self,
        session_id: str,
        position: int,
        selected_candidate_ids: Iterable[str],
        added_spans: Iterable[tuple[int, int, str]],
    ) -> Session:
        session = self.session(session_id)
        if position != session.cursor:
            raise SequencingError(
                f"session {session_id!r} expects position {session.cursor}, got {position}"
            )
        narrative = self.narratives[session.narrative_id]
        if position >= len(narrative.sentences):
            raise SequencingError(f"narrative {session.narrative_id!r} is complete")
        sentence = narrative.sentences[position]
        presented = {c.id for c in self.candidates.get(sentence.key, [])}
        selected = sorted(set(selected_candidate_ids))
        stray = [cid for cid in selected if cid not in presented]
        if stray:
            raise ValidationError(
                f"candidate ids {stray} were not presented for {sentence.key!r}"
            )
        spans = [(int(s), int(e), t) for s, e, t in added_spans]
        for start, end, text in spans:
            if not (0 <= start < end <= len(sentence.text)):
                raise ValidationError(
                    f"span ({start}, {end}) outside sentence of length {len(sentence.text)}"
                )
            actual = sentence.text[start:end]
            if actual != text:
                raise ValidationError(
                    f"span [{start}:{end}] reads {actual!r}, submission says {text!r}"
                )
        self._emit(
            {
                "type": "annotation_submitted",
                "session_id": session_id,
                "position": position,
                "selected_candidate_ids": selected,
                "added_spans": [[s, e, t] for s, e, t in sorted(spans)],
            }
        )
        return session

    # -- batches ---------------------------------------------------------------

    def assemble_batches(
        self, annotators: list[str], n_batches: int, seed: int,
        narrative_ids: list[str] | None = None,
    ) -> list[Batch]:
        pool = (
            [self.narratives[nid] for nid in narrative_ids]
            if narrative_ids is not None
            else list(self.narratives.values())
        )
        batches = assemble_batches(pool, annotators, n_batches, seed)
        with self._write_lock:
            for batch in batches:
                self._emit(
                    {
                        "type": "batch_assembled",
                        "batch_id": batch.id,
                        "assignment": {a: list(ids) for a, ids in sorted(batch.assignment.items())},
                        "overlap_narrative": batch.overlap_narrative,
                    }
                )
        return batches

    def _overlap_annotations(self, batch: Batch) -> dict[str, Session]:
        """Latest complete session per annotator for the batch's overlap narrative."""
        by_annotator: dict[str, Session] = {}
        for session in self.sessions.values():
            if session.narrative_id == batch.overlap_narrative and session.complete:
                by_annotator[session.annotator_id] = session
        return by_annotator

    def monitor_overlap_iaa(
        self,
        batch_id: str,
        alpha_threshold: float = DEFAULT_ALPHA_THRESHOLD,
        segmentation_threshold: float = DEFAULT_SEGMENTATION_THRESHOLD,
    ) -> dict:
        """Candidate-selection alpha and added-span agreement for one batch's
        overlap narrative; flags the batch when either drops below threshold."""
        batch = self.batches.get(batch_id)
        if batch is None:
            raise ValidationError(f"unknown batch {batch_id!r}")
        sessions = self._overlap_annotations(batch)
        expected = batch.annotators()
        pending = [a for a in expected if a not in sessions]
        if pending:
            return {"batch_id": batch_id, "status": "pending", "pending_annotators": pending}

        narrative = self.narratives[batch.overlap_narrative]
        presented = {
            s.key: [c.id for c in self.candidates.get(s.key, [])]
            for s in narrative.sentences
        }
        selections = {
            annotator: {
                (narrative.id, a.sentence_position): set(a.selected_candidate_ids)
                for a in session.submitted
            }
            for annotator, session in sessions.items()
        }
        note = None
        try:
            alpha = krippendorff_alpha(
                selection_reliability_matrix(presented, selections)
            )
        except (NoVariationError, ValueError) as err:
            alpha = None
            note = str(err)

        span_scores = []
        for sentence in narrative.sentences:
            span_lists = []
            for session in sessions.values():
                annotation = session.submitted[sentence.position]
                span_lists.append([(s, e) for s, e, _ in annotation.added_spans])
            span_scores.append(
                pairwise_segmentation_agreement(span_lists, len(sentence.text))
            )
        span_agreement = sum(span_scores) / len(span_scores) if span_scores else None

        flagged = (alpha is not None and alpha < alpha_threshold) or (
            span_agreement is not None and span_agreement < segmentation_threshold
        )
        return {
            "batch_id": batch_id,
            "status": "flagged" if flagged else "ok",
            "alpha": alpha,
            "span_agreement": span_agreement,
            "note": note,
        }

    # -- gold ---------------------------------------------------------------

    def annotations_by_sentence(self) -> dict[tuple[str, int], list[tuple[str, Annotation]]]:
        grouped: dict[tuple[str, int], list[tuple[str, Annotation]]] = {}
        for session in self.sessions.values():
            for annotation in session.submitted:
                key = (session.narrative_id, annotation.sentence_position)
                grouped.setdefault(key, []).append((session.annotator_id, annotation))
        return grouped

    def adjudicate_gold(self, policy: str = "majority") -> list[GoldRecord]:
        """Merge per-sentence annotations into gold records.

        majority keeps a candidate/span iff chosen by more than half of that
        sentence's annotators (spans matched by exact offsets); union keeps
        every distinct one. Singly-annotated sentences pass through.
        """
        if policy not in ("majority", "union"):
            raise ValidationError(f"unknown adjudication policy {policy!r}")
        rendered = {
            c.id: render_triplet(c)
            for lst in self.candidates.values()
            for c in lst
        }
        gold: list[GoldRecord] = []
        grouped = self.annotations_by_sentence()
        for key in sorted(grouped):
            entries = grouped[key]
            annotators = {annotator for annotator, _ in entries}
            quorum = len(annotators) / 2
            candidate_votes: dict[str, set[str]] = {}
            span_votes: dict[tuple[int, int, str], set[str]] = {}
            candidate_order: list[str] = []
            span_order: list[tuple[int, int, str]] = []
            for annotator, annotation in entries:
                for cid in annotation.selected_candidate_ids:
                    if cid not in candidate_votes:
                        candidate_votes[cid] = set()
                        candidate_order.append(cid)
                    candidate_votes[cid].add(annotator)
                for span in annotation.added_spans:
                    if span not in span_votes:
                        span_votes[span] = set()
                        span_order.append(span)
                    span_votes[span].add(annotator)
            if policy == "union" or len(annotators) == 1:
                kept_candidates = candidate_order
                kept_spans = span_order
            else:
                kept_candidates = [
                    cid for cid in candidate_order if len(candidate_votes[cid]) > quorum
                ]
                kept_spans = [
                    span for span in span_order if len(span_votes[span]) > quorum
                ]
            gold.append(
                GoldRecord(
                    narrative_id=key[0],
                    sentence_position=key[1],
                    selected_candidates=tuple(
                        rendered.get(cid, cid) for cid in kept_candidates
                    ),
                    added_spans=tuple(sorted(kept_spans)),
                    annotator_id=f"adjudicated:{policy}",
                )
            )
        return gold
