from __future__ import annotations

import pytest

from narevents.corpus import GoldRecord
from narevents.exporting import (
    TAGS_FROM_BOTH,
    TAGS_FROM_SPANS,
    export_training_examples,
    gold_event_texts,
    project_tags,
    trim_context,
    whitespace_tokens,
)
from narevents.extraction import extract_candidates, render_triplet
from synth import make_narrative, make_sentence

INTRANSITIVES = {
    "Alice": [
        ("Alice", "alice", "PROPN", 2, "nsubj"),
        ("cried", "cry", "VERB", 0, "root"),
        (".", ".", "PUNCT", 2, "punct"),
    ],
    "Bob": [
        ("Bob", "bob", "PROPN", 2, "nsubj"),
        ("smiled", "smile", "VERB", 0, "root"),
        (".", ".", "PUNCT", 2, "punct"),
    ],
    "Carol": [
        ("Carol", "carol", "PROPN", 2, "nsubj"),
        ("laughed", "laugh", "VERB", 0, "root"),
        (".", ".", "PUNCT", 2, "punct"),
    ],
}

TRANSITIVE = [
    ("Dave", "dave", "PROPN", 2, "nsubj"),
    ("saw", "see", "VERB", 0, "root"),
    ("the", "the", "DET", 4, "det"),
    ("dog", "dog", "NOUN", 2, "obj"),
    (".", ".", "PUNCT", 2, "punct"),
]


@pytest.fixture()
def story():
    narrative = make_narrative(
        "story",
        [INTRANSITIVES["Alice"], INTRANSITIVES["Bob"], INTRANSITIVES["Carol"], TRANSITIVE],
    )
    candidates = {
        s.key: extract_candidates(s) for s in narrative.sentences
    }
    gold = {}
    for position in range(3):
        key = ("story", position)
        gold[key] = [
            GoldRecord(
                narrative_id="story",
                sentence_position=position,
                selected_candidates=(render_triplet(candidates[key][0]),),
                annotator_id="a1",
            )
        ]
    return narrative, candidates, gold


class TestTrimContext:
    def test_drops_whole_events_from_front(self):
        context = ["a b c", "d e", "f g h i"]
        kept, overflow = trim_context(context, fixed_tokens=4, token_budget=10)
        # 4 + 9 = 13 > 10; dropping "a b c" leaves 4 + 6 = 10
        assert kept == ["d e", "f g h i"]
        assert overflow is False

    def test_no_trim_when_within_budget(self):
        kept, overflow = trim_context(["a b", "c"], fixed_tokens=2, token_budget=12)
        assert kept == ["a b", "c"]
        assert overflow is False

    def test_overflow_when_fixed_part_alone_exceeds(self):
        kept, overflow = trim_context(["a b"], fixed_tokens=20, token_budget=12)
        assert kept == []
        assert overflow is True


class TestProjectTags:
    def _eight_token_sentence(self):
        words = [
            (f"w{i}", f"w{i}", "NOUN", 0 if i == 1 else 1, "root" if i == 1 else "dep")
            for i in range(1, 9)
        ]
        return make_sentence("n", 0, words)

    def test_span_covering_tokens_four_to_six(self):
        sentence = self._eight_token_sentence()
        start = sentence.tokens[3].char_start
        end = sentence.tokens[5].char_end
        record = GoldRecord(
            narrative_id="n",
            sentence_position=0,
            added_spans=((start, end, sentence.text[start:end]),),
            annotator_id="a1",
        )
        tags = project_tags(sentence, [record], [], TAGS_FROM_SPANS)
        assert tags == ("O", "O", "O", "E", "E", "E", "O", "O")

    def test_partial_token_overlap_marks_token(self):
        sentence = self._eight_token_sentence()
        start = sentence.tokens[2].char_start + 1  # inside token 3
        end = sentence.tokens[3].char_end
        record = GoldRecord(
            narrative_id="n",
            sentence_position=0,
            added_spans=((start, end, sentence.text[start:end]),),
            annotator_id="a1",
        )
        tags = project_tags(sentence, [record], [], TAGS_FROM_SPANS)
        assert tags == ("O", "O", "E", "E", "O", "O", "O", "O")

    def test_selected_candidate_marks_its_spans(self, story):
        narrative, candidates, gold = story
        sentence = narrative.sentences[0]
        tags_both = project_tags(
            sentence, gold[sentence.key], candidates[sentence.key], TAGS_FROM_BOTH
        )
        assert tags_both == ("E", "E", "O")
        tags_spans = project_tags(
            sentence, gold[sentence.key], candidates[sentence.key], TAGS_FROM_SPANS
        )
        assert tags_spans == ("O", "O", "O")


class TestExportSelection:
    def test_first_sentence_has_empty_context(self, story):
        narrative, candidates, gold = story
        records = list(
            export_training_examples(gold, [narrative], candidates, setting="selection")
        )
        first = [r for r in records if r["sentence_position"] == 0]
        assert all(r["context_new_events"] == [] for r in first)

    def test_labels_match_gold(self, story):
        narrative, candidates, gold = story
        records = list(
            export_training_examples(gold, [narrative], candidates, setting="selection")
        )
        positives = [r for r in records if r["label"] == "new"]
        assert len(positives) == 3
        for record in positives:
            key = (record["narrative_id"], record["sentence_position"])
            assert record["candidate_text"] in gold[key][0].selected_candidates
        # the unselected transitive candidate at position 3 is negative
        last = [r for r in records if r["sentence_position"] == 3]
        assert all(r["label"] == "not_new" for r in last)

    def test_context_accumulates_in_order(self, story):
        narrative, candidates, gold = story
        records = list(
            export_training_examples(gold, [narrative], candidates, setting="selection")
        )
        last = next(r for r in records if r["sentence_position"] == 3)
        assert last["context_new_events"] == [
            "Alice — cried",
            "Bob — smiled",
            "Carol — laughed",
        ]

    def test_budget_respected_or_flagged(self, story):
        narrative, candidates, gold = story
        for budget in (4, 8, 12, 30):
            for record in export_training_examples(
                gold, [narrative], candidates, setting="selection", token_budget=budget
            ):
                total = (
                    whitespace_tokens(record["candidate_text"])
                    + whitespace_tokens(record["sentence_text"])
                    + sum(whitespace_tokens(e) for e in record["context_new_events"])
                )
                assert total <= budget or record["overflow"]
                if record["overflow"]:
                    assert record["context_new_events"] == []


class TestExportTagging:
    def test_tags_align_with_tokens(self, story):
        narrative, candidates, gold = story
        records = list(
            export_training_examples(gold, [narrative], candidates, setting="tagging")
        )
        assert len(records) == 4
        for record in records:
            assert len(record["tags"]) == len(record["sentence_tokens"])
        by_position = {r["sentence_position"]: r for r in records}
        assert by_position[0]["tags"] == ["E", "E", "O"]
        assert by_position[3]["tags"] == ["O", "O", "O", "O", "O"]

    def test_budget_twelve_drops_exactly_oldest_event(self, story):
        narrative, candidates, gold = story
        records = list(
            export_training_examples(
                gold, [narrative], candidates, setting="tagging", token_budget=12
            )
        )
        last = next(r for r in records if r["sentence_position"] == 3)
        # fixed = 5 sentence tokens; 5 + 9 > 12, dropping the oldest leaves 11
        assert last["context_new_events"] == ["Bob — smiled", "Carol — laughed"]
        assert last["overflow"] is False


class TestGoldEventTexts:
    def test_candidates_then_spans_deduplicated(self):
        records = [
            GoldRecord(
                narrative_id="n",
                sentence_position=0,
                selected_candidates=("x — y", "x — y"),
                added_spans=((4, 8, "some"), (0, 3, "the")),
                annotator_id="a1",
            )
        ]
        assert gold_event_texts(records) == ["x — y", "the", "some"]
