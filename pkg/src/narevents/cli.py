"""Command-line pipeline driver.

Every subcommand reads/writes line-delimited record files and drops a
``<output>.manifest.json`` beside each artifact (config echo plus content
hashes) so any run can be replayed and verified exactly. Randomized
subcommands require an explicit --seed; there is no wall-clock default.

Exit codes: 0 success, 2 usage, 3 data integrity, 4 service unavailable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import baselines, corpus, exporting, extraction, metrics, reduction
from .annotation import AnnotationLog, AnnotationService, AssemblyError
from .records import read_jsonl, write_jsonl, write_manifest

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_SERVICE = 4


class UsageError(Exception):
    pass


def _load_corpus(path: str) -> list[corpus.Narrative]:
    return [corpus.narrative_from_record(r) for r in read_jsonl(path)]


def _load_candidates(path: str) -> dict[tuple[str, int], list[extraction.EventCandidate]]:
    grouped: dict[tuple[str, int], list[extraction.EventCandidate]] = {}
    for record in read_jsonl(path):
        candidate = extraction.candidate_from_record(record)
        grouped.setdefault(candidate.sentence_key, []).append(candidate)
    return grouped


def _load_gold(path: str, narratives: list[corpus.Narrative]):
    return corpus.load_gold(read_jsonl(path), narratives)


def _manifest(args: argparse.Namespace, inputs: dict, outputs: dict) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    main_out = Path(next(iter(outputs.values())))
    write_manifest(main_out.with_suffix(main_out.suffix + ".manifest.json"), config, inputs, outputs)


def _candidate_text_to_ids(
    candidates: dict[tuple[str, int], list[extraction.EventCandidate]],
) -> dict[tuple[str, int], dict[str, str]]:
    mapping: dict[tuple[str, int], dict[str, str]] = {}
    for key, lst in candidates.items():
        per_text: dict[str, str] = {}
        for candidate in lst:
            per_text.setdefault(extraction.render_triplet(candidate), candidate.id)
        mapping[key] = per_text
    return mapping


# -- subcommands ----------------------------------------------------------------

def cmd_ingest(args: argparse.Namespace) -> int:
    metadata = None
    if args.metadata:
        metadata = json.loads(Path(args.metadata).read_text(encoding="utf-8"))
    narratives: list[corpus.Narrative] = []
    for path in args.conllu:
        narratives.extend(
            corpus.parse_conllu(Path(path).read_text(encoding="utf-8"), metadata)
        )
    outputs = {"corpus": args.out}
    if args.reserve_backup:
        counts = tuple(int(part) for part in args.reserve_backup.split(","))
        if len(counts) != 3:
            raise UsageError("--reserve-backup takes train,valid,test counts")
        if args.seed is None:
            raise UsageError("--reserve-backup requires an explicit --seed")
        working, backup = corpus.reserve_backup(narratives, counts, args.seed)
        write_jsonl(args.out, (corpus.narrative_to_record(n) for n in working))
        backup_path = args.backup_out or str(Path(args.out).with_suffix(".backup.jsonl"))
        write_jsonl(backup_path, (corpus.narrative_to_record(n) for n in backup))
        outputs["backup"] = backup_path
        print(f"ingested {len(narratives)} narratives: {len(working)} working, {len(backup)} backup")
    else:
        write_jsonl(args.out, (corpus.narrative_to_record(n) for n in narratives))
        print(f"ingested {len(narratives)} narratives")
    _manifest(args, {f"conllu:{p}": p for p in args.conllu}, outputs)
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    narratives = _load_corpus(args.corpus)
    total = 0

    def generate():
        nonlocal total
        for narrative in narratives:
            for sentence in narrative.sentences:
                for candidate in extraction.extract_candidates(sentence):
                    total += 1
                    yield extraction.candidate_to_record(candidate, reduced=False)

    write_jsonl(args.out, generate())
    _manifest(args, {"corpus": args.corpus}, {"candidates": args.out})
    print(f"extracted {total} candidates")
    return EXIT_OK


def cmd_reduce(args: argparse.Namespace) -> int:
    grouped = _load_candidates(args.candidates)
    total = 0

    def generate():
        nonlocal total
        for key in sorted(grouped):
            for candidate in reduction.reduce_candidates(grouped[key], args.cap):
                total += 1
                yield extraction.candidate_to_record(candidate, reduced=True)

    write_jsonl(args.out, generate())
    _manifest(args, {"candidates": args.candidates}, {"reduced": args.out})
    print(f"kept {total} candidates (cap {args.cap})")
    return EXIT_OK


def cmd_batches(args: argparse.Namespace) -> int:
    narratives = _load_corpus(args.corpus)
    candidates = _load_candidates(args.candidates) if args.candidates else {}
    service = AnnotationService(narratives, candidates, AnnotationLog(args.log))
    batches = service.assemble_batches(
        annotators=args.annotators.split(","),
        n_batches=args.n_batches,
        seed=args.seed,
    )
    write_jsonl(
        args.out,
        (
            {
                "id": b.id,
                "overlap_narrative": b.overlap_narrative,
                "assignment": {a: list(ids) for a, ids in sorted(b.assignment.items())},
            }
            for b in batches
        ),
    )
    _manifest(args, {"corpus": args.corpus}, {"batches": args.out})
    print(f"assembled {len(batches)} batches over {len(narratives)} narratives")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    narratives = _load_corpus(args.corpus)
    candidates = _load_candidates(args.candidates)
    service = AnnotationService(
        narratives,
        candidates,
        AnnotationLog(args.log),
        clock="logical" if args.logical_clock else "wall",
    )
    try:
        uvicorn.run(create_app(service), host=args.host, port=args.port, log_level="warning")
    except OSError as err:
        print(f"cannot serve: {err}", file=sys.stderr)
        return EXIT_SERVICE
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    seeded = args.strategy in baselines.SEEDED_KINDS
    if seeded and args.seed is None:
        raise UsageError(f"strategy {args.strategy!r} requires an explicit --seed")
    if not seeded and args.seed is not None:
        raise UsageError(f"strategy {args.strategy!r} does not take a seed")
    narratives = _load_corpus(args.corpus)

    if args.setting == "selection":
        strategy = baselines.SelectorStrategy(kind=args.strategy, seed=args.seed)
        candidates = _load_candidates(args.candidates)

        def generate():
            for narrative in narratives:
                per_sentence = [
                    candidates.get(s.key, []) for s in narrative.sentences
                ]
                selected = baselines.select_candidates(strategy, per_sentence)
                for sentence, chosen in zip(narrative.sentences, selected):
                    yield corpus.gold_to_record(
                        corpus.GoldRecord(
                            narrative_id=narrative.id,
                            sentence_position=sentence.position,
                            selected_candidates=tuple(
                                extraction.render_triplet(c) for c in chosen
                            ),
                            annotator_id=f"baseline:{args.strategy}",
                        )
                    )

        write_jsonl(args.out, generate())
        inputs = {"corpus": args.corpus, "candidates": args.candidates}
    else:
        if args.strategy not in baselines.TAGGER_KINDS:
            raise UsageError(
                f"strategy {args.strategy!r} is not a tagging strategy "
                f"(expected one of {', '.join(baselines.TAGGER_KINDS)})"
            )
        strategy = baselines.TaggerStrategy(kind=args.strategy, seed=args.seed)

        def generate():
            for narrative in narratives:
                for sentence in narrative.sentences:
                    yield baselines.tag_sequence_to_record(
                        baselines.tag_tokens(strategy, sentence)
                    )

        write_jsonl(args.out, generate())
        inputs = {"corpus": args.corpus}
    _manifest(args, inputs, {"predictions": args.out})
    print(f"wrote predictions for strategy {args.strategy!r} ({args.setting})")
    return EXIT_OK


def _selection_sets(
    records,
    text_to_id: dict[tuple[str, int], dict[str, str]],
) -> dict[tuple[str, int], set[str]]:
    sets: dict[tuple[str, int], set[str]] = {}
    for record in records:
        key = (record["narrative_id"], record["sentence_position"])
        ids = sets.setdefault(key, set())
        for text in record.get("selected_candidates", ()):
            mapped = text_to_id.get(key, {}).get(text)
            if mapped is not None:
                ids.add(mapped)
    return sets


def _print_prf(title: str, prf: metrics.PRF) -> None:
    print(title)
    print(f"  precision  {100 * prf.precision:6.1f}%  (tp={prf.tp}, fp={prf.fp})")
    print(f"  recall     {100 * prf.recall:6.1f}%  (fn={prf.fn})")
    print(f"  f1         {100 * prf.f1:6.1f}%")


def cmd_eval(args: argparse.Namespace) -> int:
    narratives = _load_corpus(args.corpus)
    if args.setting == "selection":
        candidates = _load_candidates(args.candidates)
        text_to_id = _candidate_text_to_ids(candidates)
        predicted = _selection_sets(read_jsonl(args.pred), text_to_id)
        gold = _selection_sets(read_jsonl(args.gold), text_to_id)
        universe = {key: {c.id for c in lst} for key, lst in candidates.items()}
        prf = metrics.selection_prf(predicted, gold, universe)
    else:
        gold_records = _load_gold(args.gold, narratives)
        candidates = _load_candidates(args.candidates) if args.candidates else {}
        sentences = corpus.index_sentences(narratives)
        gold_tags = [
            baselines.TagSequence(
                narrative_id=key[0],
                sentence_position=key[1],
                tags=exporting.project_tags(
                    sentences[key], records, candidates.get(key, []), args.tags_from
                ),
            )
            for key, records in sorted(gold_records.items())
        ]
        predicted_tags = [
            baselines.tag_sequence_from_record(r) for r in read_jsonl(args.pred)
        ]
        keys = {t.sentence_key for t in gold_tags}
        predicted_tags = [t for t in predicted_tags if t.sentence_key in keys]
        prf = metrics.tagging_prf(predicted_tags, gold_tags)
    report = {"setting": args.setting, **prf.to_record()}
    write_jsonl(args.out, [report])
    _manifest(args, {"pred": args.pred, "gold": args.gold}, {"report": args.out})
    _print_prf(f"{args.setting} evaluation", prf)
    return EXIT_OK


def cmd_agree(args: argparse.Namespace) -> int:
    narratives = _load_corpus(args.corpus)
    candidates = _load_candidates(args.candidates)
    text_to_id = _candidate_text_to_ids(candidates)
    records = [corpus.gold_from_record(r) for r in read_jsonl(args.gold)]

    presented = {key: [c.id for c in lst] for key, lst in candidates.items()}
    selections: dict[str, dict[tuple[str, int], set[str]]] = {}
    spans_by_key: dict[tuple[str, int], dict[str, list[tuple[int, int]]]] = {}
    for record in records:
        key = (record.narrative_id, record.sentence_position)
        per = selections.setdefault(record.annotator_id, {}).setdefault(key, set())
        for text in record.selected_candidates:
            mapped = text_to_id.get(key, {}).get(text)
            if mapped is not None:
                per.add(mapped)
        spans_by_key.setdefault(key, {})[record.annotator_id] = [
            (s, e) for s, e, _ in record.added_spans
        ]

    note = None
    try:
        alpha = metrics.krippendorff_alpha(
            metrics.selection_reliability_matrix(presented, selections)
        )
    except (metrics.NoVariationError, ValueError) as err:
        alpha, note = None, str(err)

    sentences = corpus.index_sentences(narratives)
    seg_scores = []
    for key, per_annotator in sorted(spans_by_key.items()):
        if len(per_annotator) < 2:
            continue
        span_lists = [per_annotator[a] for a in sorted(per_annotator)]
        seg_scores.append(
            metrics.pairwise_segmentation_agreement(
                span_lists, len(sentences[key].text), args.window
            )
        )
    segmentation = sum(seg_scores) / len(seg_scores) if seg_scores else None

    report = {
        "alpha": alpha,
        "segmentation_agreement": segmentation,
        "annotators": sorted(selections),
        "note": note,
    }
    write_jsonl(args.out, [report])
    _manifest(args, {"gold": args.gold}, {"report": args.out})
    print("inter-annotator agreement")
    print(f"  candidate selection alpha  {alpha if alpha is not None else 'n/a'}")
    print(f"  added-span agreement       {segmentation if segmentation is not None else 'n/a'}")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    narratives = _load_corpus(args.corpus)
    gold = _load_gold(args.gold, narratives)
    candidate_starts = None
    if args.candidates:
        candidates = _load_candidates(args.candidates)
        candidate_starts = {
            key: {
                extraction.render_triplet(c): min(
                    c.subject_span.token_indices
                    + c.predicate_span.token_indices
                    + (c.object_span.token_indices if c.object_span else ())
                )
                for c in lst
            }
            for key, lst in candidates.items()
        }
    report = metrics.corpus_statistics(gold, narratives, candidate_starts)
    write_jsonl(args.out, [report.to_record()])
    _manifest(args, {"gold": args.gold, "corpus": args.corpus}, {"report": args.out})

    def block(title: str, stats: metrics.AnnotationStats) -> None:
        print(title)
        print(f"  total                  {stats.total}")
        print(f"  per sentence           {stats.per_sentence:.2f}")
        print(f"  per narrative          {stats.per_narrative:.1f}")
        print(f"  per narrator           {stats.per_narrator:.1f}")
        print(f"  1st/2nd sentence half  {stats.sentence_half.first_half_pct:.1f}% / {stats.sentence_half.second_half_pct:.1f}%")
        print(f"  1st/2nd narrative half {stats.narrative_half.first_half_pct:.1f}% / {stats.narrative_half.second_half_pct:.1f}%")

    print(f"corpus: {report.narratives} narratives, {report.sentences} sentences, {report.narrators} narrators")
    block("selected candidates", report.selected_candidates)
    block("added spans", report.added_spans)
    return EXIT_OK


def cmd_adjudicate(args: argparse.Namespace) -> int:
    narratives = _load_corpus(args.corpus)
    candidates = _load_candidates(args.candidates)
    service = AnnotationService(narratives, candidates, AnnotationLog(args.log))
    gold = service.adjudicate_gold(policy=args.policy)
    write_jsonl(args.out, (corpus.gold_to_record(g) for g in gold))
    _manifest(args, {"log": args.log}, {"gold": args.out})
    print(f"adjudicated {len(gold)} sentences under {args.policy!r}")
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    narratives = _load_corpus(args.corpus)
    candidates = _load_candidates(args.candidates)
    gold = _load_gold(args.gold, narratives)
    count = write_jsonl(
        args.out,
        exporting.export_training_examples(
            gold,
            narratives,
            candidates,
            setting=args.setting,
            token_budget=args.budget,
            tags_from=args.tags_from,
        ),
    )
    _manifest(args, {"gold": args.gold, "corpus": args.corpus}, {"export": args.out})
    print(f"exported {count} {args.setting} records (budget {args.budget})")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="narevents",
        description="Workbench for discourse-new event annotation and baselines.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ingest", help="parse CoNLL-U files into a corpus artifact")
    p.add_argument("conllu", nargs="+", help="CoNLL-U input file(s)")
    p.add_argument("--metadata", help="JSON map: narrative id -> {split, narrator_id}")
    p.add_argument("--out", required=True)
    p.add_argument("--reserve-backup", help="train,valid,test backup counts")
    p.add_argument("--backup-out")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", help="extract event candidates per sentence")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("reduce", help="cap per-sentence candidates by clustering")
    p.add_argument("--candidates", required=True)
    p.add_argument("--cap", type=int, default=reduction.DEFAULT_CAP)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("batches", help="assemble annotation batches")
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates")
    p.add_argument("--annotators", required=True, help="comma-separated ids")
    p.add_argument("--n-batches", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_batches)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--logical-clock", action="store_true",
                   help="use a monotone counter instead of wall-clock timestamps")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("baseline", help="run a rule-based baseline")
    p.add_argument("--strategy", required=True,
                   choices=sorted(set(baselines.SELECTOR_KINDS) | set(baselines.TAGGER_KINDS)))
    p.add_argument("--seed", type=int)
    p.add_argument("--setting", required=True, choices=("selection", "tagging"))
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates", help="reduced candidate lists (selection setting)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--setting", required=True, choices=("selection", "tagging"))
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates")
    p.add_argument("--tags-from", default=exporting.TAGS_FROM_BOTH,
                   choices=(exporting.TAGS_FROM_SPANS, exporting.TAGS_FROM_BOTH))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("agree", help="inter-annotator agreement over gold records")
    p.add_argument("--gold", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--window", type=int, default=metrics.DEFAULT_TRANSPOSITION_WINDOW)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("stats", help="annotated-corpus statistics")
    p.add_argument("--gold", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("adjudicate", help="merge annotation log into gold records")
    p.add_argument("--log", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--policy", default="majority", choices=("majority", "union"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_adjudicate)

    p = sub.add_parser("export", help="export model-ready training records")
    p.add_argument("--gold", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--setting", required=True, choices=("selection", "tagging"))
    p.add_argument("--budget", type=int, default=exporting.DEFAULT_TOKEN_BUDGET)
    p.add_argument("--tags-from", default=exporting.TAGS_FROM_BOTH,
                   choices=(exporting.TAGS_FROM_SPANS, exporting.TAGS_FROM_BOTH))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (corpus.CorpusError, AssemblyError, metrics.AlignmentError,
            metrics.CandidateUniverseError, metrics.SpanDomainError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as err:
        print(f"missing input: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
