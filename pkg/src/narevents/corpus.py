"""Parsed-corpus model: CoNLL-U ingestion, split bookkeeping and gold records.

The corpus is a three-level hierarchy (Narrative > Sentence > Token) carrying
dependency structure. Objects are frozen dataclasses: once a document is
loaded it is immutable and safe to share across threads.

This module does not parse text. It consumes externally produced CoNLL-U
(10 tab-separated columns, ``#`` comments, blank-line sentence boundaries,
``# newdoc id = ...`` narrative boundaries).
"""

from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass
from typing import Iterable, Mapping

SPLITS = ("train", "valid", "test")


class CorpusError(Exception):
    """Base class for corpus ingestion failures."""


class ConlluParseError(CorpusError):
    """Malformed CoNLL-U input; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class TreeStructureError(CorpusError):
    """Dependency links of a sentence do not form a single-rooted tree."""


class SpanIntegrityError(CorpusError):
    """A recorded span's text does not match the sentence at its offsets."""


class UnknownReferenceError(CorpusError):
    """A record points at a narrative or sentence that is not in the corpus."""


@dataclass(frozen=True)
class Token:
    """One syntactic word.

    `index` is 1-based within the sentence; `head` is the index of the
    governing token, 0 for the root. `char_start`/`char_end` are half-open
    offsets into the sentence text and always satisfy
    ``sentence.text[char_start:char_end] == surface``.
    """

    index: int
    surface: str
    lemma: str
    upos: str
    head: int
    deprel: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class Sentence:
    narrative_id: str
    position: int
    text: str
    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, index: int) -> Token:
        """Look up a token by its 1-based index."""
        return self.tokens[index - 1]

    @property
    def key(self) -> tuple[str, int]:
        return (self.narrative_id, self.position)


@dataclass(frozen=True)
class Narrative:
    id: str
    narrator_id: str
    split: str
    sentences: tuple[Sentence, ...]
    is_backup: bool = False


@dataclass(frozen=True)
class GoldRecord:
    """One annotator's decision for one sentence.

    `selected_candidates` holds rendered triplet texts; `added_spans` holds
    (char_start, char_end, text) triples over the sentence string.
    """

    narrative_id: str
    sentence_position: int
    selected_candidates: tuple[str, ...] = ()
    added_spans: tuple[tuple[int, int, str], ...] = ()
    annotator_id: str = ""


@dataclass
class _PendingToken:
    index: int
    surface: str
    lemma: str
    upos: str
    head: int
    space_after: bool
    in_mwt: bool  # covered by a multiword range line and not its last word
    line_number: int


def _parse_misc_space_after(misc: str) -> bool:
    for item in misc.split("|"):
        if item == "SpaceAfter=No":
            return False
    return True


def _align_tokens(raw_text: str, pending: list[_PendingToken]) -> list[tuple[int, int]] | None:
    """Map token surfaces onto a raw `# text` string; None if they don't fit."""
    offsets: list[tuple[int, int]] = []
    pos = 0
    for tok in pending:
        while pos < len(raw_text) and raw_text[pos].isspace():
            pos += 1
        end = pos + len(tok.surface)
        if raw_text[pos:end] != tok.surface:
            return None
        offsets.append((pos, end))
        pos = end
    if raw_text[pos:].strip():
        return None
    return offsets


def _reconstruct_text(pending: list[_PendingToken]) -> tuple[str, list[tuple[int, int]]]:
    """Build sentence text from surfaces plus the SpaceAfter=No convention."""
    parts: list[str] = []
    offsets: list[tuple[int, int]] = []
    cursor = 0
    for i, tok in enumerate(pending):
        start = cursor
        parts.append(tok.surface)
        cursor += len(tok.surface)
        offsets.append((start, cursor))
        last = i == len(pending) - 1
        if not last and tok.space_after and not tok.in_mwt:
            parts.append(" ")
            cursor += 1
    return "".join(parts), offsets


def _check_tree(tokens: list[_PendingToken], narrative_id: str, position: int) -> None:
    n = len(tokens)
    where = f"sentence {position} of narrative {narrative_id!r}"
    roots = [t.index for t in tokens if t.head == 0]
    for tok in tokens:
        if tok.head < 0 or tok.head > n:
            raise TreeStructureError(
                f"{where}: token {tok.index} has head {tok.head} outside 0..{n}"
            )
        if tok.head == tok.index:
            raise TreeStructureError(f"{where}: token {tok.index} is its own head")
    if len(roots) != 1:
        raise TreeStructureError(f"{where}: expected exactly one root, found {len(roots)}")
    heads = {t.index: t.head for t in tokens}
    for start in heads:
        seen = set()
        node = start
        while node != 0:
            if node in seen:
                raise TreeStructureError(f"{where}: cyclic head links through token {start}")
            seen.add(node)
            node = heads[node]


class _ConlluReader:
    def __init__(self, metadata: Mapping[str, Mapping[str, str]] | None):
        self.metadata = dict(metadata or {})
        self.narratives: list[Narrative] = []
        self._doc_id: str | None = None
        self._narrator: str | None = None
        self._sentences: list[Sentence] = []
        self._pending: list[_PendingToken] = []
        self._deprels: list[str] = []
        self._raw_text: str | None = None
        self._mwt_until = 0  # highest word id still covered by a range line
        self._mwt_space_after = True

    def _flush_narrative(self) -> None:
        if self._doc_id is None:
            return
        meta = self.metadata.get(self._doc_id, {})
        narrator = meta.get("narrator_id") or self._narrator or self._doc_id
        split = meta.get("split", "train")
        if split not in SPLITS:
            raise CorpusError(f"narrative {self._doc_id!r}: unknown split {split!r}")
        self.narratives.append(
            Narrative(
                id=self._doc_id,
                narrator_id=narrator,
                split=split,
                sentences=tuple(self._sentences),
            )
        )
        self._doc_id = None
        self._narrator = None
        self._sentences = []

    def _flush_sentence(self) -> None:
        if not self._pending:
            self._raw_text = None
            return
        if self._doc_id is None:
            raise ConlluParseError(
                "token lines before any '# newdoc id' comment",
                self._pending[0].line_number,
            )
        position = len(self._sentences)
        _check_tree(self._pending, self._doc_id, position)
        offsets = None
        text = None
        if self._raw_text is not None:
            offsets = _align_tokens(self._raw_text, self._pending)
            if offsets is not None:
                text = self._raw_text
        if offsets is None:
            text, offsets = _reconstruct_text(self._pending)
        tokens = tuple(
            Token(
                index=tok.index,
                surface=tok.surface,
                lemma=tok.lemma,
                upos=tok.upos,
                head=tok.head,
                deprel=deprel,
                char_start=start,
                char_end=end,
            )
            for tok, deprel, (start, end) in zip(self._pending, self._deprels, offsets)
        )
        self._sentences.append(
            Sentence(narrative_id=self._doc_id, position=position, text=text, tokens=tokens)
        )
        self._pending = []
        self._deprels = []
        self._raw_text = None
        self._mwt_until = 0
        self._mwt_space_after = True

    def _comment(self, line: str, line_number: int) -> None:
        body = line[1:].strip()
        if "=" not in body:
            return
        key, value = (part.strip() for part in body.split("=", 1))
        if key == "newdoc id":
            self._flush_sentence()
            self._flush_narrative()
            self._doc_id = value
        elif key in ("narrator", "narrator_id"):
            self._narrator = value
        elif key == "text":
            self._raw_text = value

    def _token_line(self, line: str, line_number: int) -> None:
        columns = line.split("\t")
        if len(columns) != 10:
            raise ConlluParseError(
                f"expected 10 tab-separated columns, found {len(columns)}", line_number
            )
        token_id = columns[0]
        if "-" in token_id:  # multiword range line: covered word lines follow
            try:
                first, last = (int(part) for part in token_id.split("-"))
            except ValueError:
                raise ConlluParseError(f"bad range id {token_id!r}", line_number) from None
            self._mwt_until = last
            self._mwt_space_after = _parse_misc_space_after(columns[9])
            return
        if "." in token_id:  # empty node (enhanced dependencies): ignored
            return
        try:
            index = int(token_id)
        except ValueError:
            raise ConlluParseError(f"bad token id {token_id!r}", line_number) from None
        if index != len(self._pending) + 1:
            raise ConlluParseError(
                f"token id {index} out of sequence (expected {len(self._pending) + 1})",
                line_number,
            )
        try:
            head = int(columns[6])
        except ValueError:
            raise ConlluParseError(f"bad head {columns[6]!r}", line_number) from None
        in_mwt = index < self._mwt_until
        space_after = _parse_misc_space_after(columns[9])
        if index == self._mwt_until:
            space_after = self._mwt_space_after
        self._pending.append(
            _PendingToken(
                index=index,
                surface=columns[1],
                lemma=columns[2],
                upos=columns[3],
                head=head,
                space_after=space_after,
                in_mwt=in_mwt,
                line_number=line_number,
            )
        )
        self._deprels.append(columns[7])

    def read(self, document_text: str) -> list[Narrative]:
        for line_number, line in enumerate(document_text.splitlines(), start=1):
            stripped = line.strip("\n")
            if not stripped.strip():
                self._flush_sentence()
            elif stripped.startswith("#"):
                self._comment(stripped, line_number)
            else:
                self._token_line(stripped, line_number)
        self._flush_sentence()
        self._flush_narrative()
        return self.narratives


def parse_conllu(
    document_text: str,
    narrative_metadata: Mapping[str, Mapping[str, str]] | None = None,
) -> list[Narrative]:
    """Parse CoNLL-U text into narratives.

    `narrative_metadata` maps narrative id to ``{"split": ..., "narrator_id": ...}``;
    both fall back to document comments, then to defaults (split ``train``,
    narrator = narrative id). Multiword range lines ("3-4") are skipped in
    favor of their word lines; empty-node lines ("5.1") are ignored.
    """
    return _ConlluReader(narrative_metadata).read(document_text)


def reserve_backup(
    narratives: list[Narrative],
    counts: tuple[int, int, int],
    seed: int,
) -> tuple[list[Narrative], list[Narrative]]:
    """Sample per-split backup narratives; returns (working, backup).

    Sampling is uniform within each split and deterministic for a fixed seed,
    independent of input ordering. Backup narratives are flagged `is_backup`.
    """
    rng = random.Random(seed)
    by_split: dict[str, list[Narrative]] = {split: [] for split in SPLITS}
    for narrative in narratives:
        by_split[narrative.split].append(narrative)
    backup_ids: set[str] = set()
    for split, count in zip(SPLITS, counts):
        pool = sorted(by_split[split], key=lambda n: n.id)
        if count > len(pool):
            raise ValueError(
                f"backup count {count} exceeds split {split!r} size {len(pool)}"
            )
        backup_ids.update(n.id for n in rng.sample(pool, count))
    working = [n for n in narratives if n.id not in backup_ids]
    backup = [
        dataclasses.replace(n, is_backup=True) for n in narratives if n.id in backup_ids
    ]
    return working, backup


def index_sentences(narratives: Iterable[Narrative]) -> dict[tuple[str, int], Sentence]:
    return {s.key: s for n in narratives for s in n.sentences}


def load_gold(
    records: Iterable[dict],
    narratives: Iterable[Narrative],
) -> dict[tuple[str, int], list[GoldRecord]]:
    """Group gold annotation records by sentence, validating span integrity."""
    sentences = index_sentences(narratives)
    grouped: dict[tuple[str, int], list[GoldRecord]] = {}
    for raw in records:
        record = gold_from_record(raw)
        key = (record.narrative_id, record.sentence_position)
        sentence = sentences.get(key)
        if sentence is None:
            raise UnknownReferenceError(
                f"gold record references unknown sentence {key!r}"
            )
        for start, end, text in record.added_spans:
            actual = sentence.text[start:end]
            if actual != text:
                raise SpanIntegrityError(
                    f"record for {key!r} (annotator {record.annotator_id!r}): "
                    f"span [{start}:{end}] reads {actual!r}, record says {text!r}"
                )
        grouped.setdefault(key, []).append(record)
    return grouped


# --- line-record (de)serialization -----------------------------------------

def token_to_record(token: Token) -> dict:
    return {
        "index": token.index,
        "surface": token.surface,
        "lemma": token.lemma,
        "upos": token.upos,
        "head": token.head,
        "deprel": token.deprel,
        "char_start": token.char_start,
        "char_end": token.char_end,
    }


def narrative_to_record(narrative: Narrative) -> dict:
    return {
        "id": narrative.id,
        "narrator_id": narrative.narrator_id,
        "split": narrative.split,
        "is_backup": narrative.is_backup,
        "sentences": [
            {
                "position": s.position,
                "text": s.text,
                "tokens": [token_to_record(t) for t in s.tokens],
            }
            for s in narrative.sentences
        ],
    }


def narrative_from_record(record: dict) -> Narrative:
    sentences = tuple(
        Sentence(
            narrative_id=record["id"],
            position=s["position"],
            text=s["text"],
            tokens=tuple(Token(**t) for t in s["tokens"]),
        )
        for s in record["sentences"]
    )
    return Narrative(
        id=record["id"],
        narrator_id=record["narrator_id"],
        split=record["split"],
        is_backup=record.get("is_backup", False),
        sentences=sentences,
    )


def gold_to_record(gold: GoldRecord) -> dict:
    return {
        "narrative_id": gold.narrative_id,
        "sentence_position": gold.sentence_position,
        "selected_candidates": list(gold.selected_candidates),
        "added_spans": [[start, end, text] for start, end, text in gold.added_spans],
        "annotator_id": gold.annotator_id,
    }


def gold_from_record(record: dict) -> GoldRecord:
    return GoldRecord(
        narrative_id=record["narrative_id"],
        sentence_position=record["sentence_position"],
        selected_candidates=tuple(record.get("selected_candidates", ())),
        added_spans=tuple(
            (span[0], span[1], span[2]) for span in record.get("added_spans", ())
        ),
        annotator_id=record.get("annotator_id", ""),
    )
