"""Command-line entry point tying the whole workflow together.

Subcommands: ingest, run, evaluate, export-annotations, import-annotations,
report, publish. Configuration comes from a JSON file (``"version": 1``);
command-line flags override file values. Exit codes: 0 success, 1 validation
error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import annotation as annotation_mod
from . import pipeline as pipeline_mod
from . import report as report_mod
from .backends import (
    Backend,
    BackendConfig,
    BackendError,
    ConfigurationError,
    DiskCache,
    build_backend,
)
from .corpus import CorpusError, SplitSpec, load_corpus, split_corpus
from .fsio import atomic_write_text
from .pipeline import GatePolicy, PipelineConfig, Strategy, StrategyBinding
from .scorer import ScorerError, start_plugin

logger = logging.getLogger("xlforge")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

CONFIG_VERSION = 1


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract here is usage text + exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="xlforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="validate and normalize a corpus file")
    ingest.add_argument("--input", required=True, help="corpus JSON array")
    ingest.add_argument("--output-dir", default=".", help="where outputs go")
    ingest.add_argument(
        "--split",
        help="train,validation,test fractions, e.g. 0.8,0.1,0.1; "
        "writes .train/.validation/.test files",
    )
    ingest.add_argument("--seed", type=int, default=0, help="shuffle seed for --split")

    run = sub.add_parser("run", help="run the translation cascade over a corpus")
    run.add_argument("--input", help="corpus JSON array (overrides config)")
    run.add_argument("--config", help="run config JSON file")
    run.add_argument("--output-dir", default=".", help="where records/manifest go")
    run.add_argument("--cache-dir", help="persistent translation cache directory")
    run.add_argument(
        "--backends",
        action="append",
        default=[],
        metavar="NAME=ENDPOINT",
        help="override backend endpoints; the bare word 'mock' binds every "
        "strategy to the offline mock backend",
    )
    run.add_argument("--plugin-cmd", help="neural scorer plugin command line")
    run.add_argument("--ter-max", type=float, help="gate threshold: max TER percent")
    run.add_argument("--bert-min", type=float, help="gate threshold: min BERTScore")
    run.add_argument("--target-lang", help="target language tag (overrides config)")
    run.add_argument("--source-lang", help="source language tag (overrides config)")
    run.add_argument("--seed", type=int, default=0, help="reserved for sampling hooks")

    evaluate = sub.add_parser(
        "evaluate", help="lexical metrics between two corpus files, matched by id"
    )
    evaluate.add_argument("--candidate", required=True, help="corpus JSON with candidate texts")
    evaluate.add_argument("--reference", required=True, help="corpus JSON with reference texts")
    evaluate.add_argument("--output-dir", default=".", help="where evaluate.json goes")

    export = sub.add_parser(
        "export-annotations", help="emit doccano tasks for gate failures"
    )
    export.add_argument("--records", required=True, help="records JSONL from 'run'")
    export.add_argument("--output-dir", default=".", help="where tasks.jsonl goes")

    imp = sub.add_parser(
        "import-annotations", help="merge human-corrected translations back in"
    )
    imp.add_argument("--records", required=True, help="records JSONL from 'run'")
    imp.add_argument("--input", required=True, help="annotated JSONL from doccano")
    imp.add_argument("--output-dir", default=".", help="where merged records go")

    rep = sub.add_parser("report", help="aggregate tables and fidelity data")
    rep.add_argument("--records", required=True, help="records JSONL")
    rep.add_argument("--corpus", help="source corpus for the fidelity comparison")
    rep.add_argument("--output-dir", default=".", help="where report files go")

    pub = sub.add_parser("publish", help="emit the final dataset")
    pub.add_argument("--records", required=True, help="records JSONL")
    pub.add_argument("--output-dir", default=".", help="where dataset files go")
    pub.add_argument(
        "--allow-partial",
        action="store_true",
        help="publish accepted records even while some still need annotation",
    )

    return parser


# -- config handling -----------------------------------------------------------


def load_config_file(path: Optional[str]) -> Dict[str, object]:
    if not path:
        return {}
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if config.get("version") != CONFIG_VERSION:
        raise UsageError(
            f"config version must be {CONFIG_VERSION}, got {config.get('version')!r}"
        )
    return config


def _parse_backend_flags(values: List[str]) -> Dict[str, str]:
    overrides = {}
    for value in values:
        if value == "mock":
            overrides["*"] = "mock"
        elif "=" in value:
            name, endpoint = value.split("=", 1)
            overrides[name] = endpoint
        else:
            raise UsageError(f"--backends expects NAME=ENDPOINT or 'mock', got {value!r}")
    return overrides


def build_run_setup(args, config: Dict[str, object]):
    """Merge config file and flags into backends + a PipelineConfig."""
    overrides = _parse_backend_flags(args.backends)
    mock_everything = overrides.get("*") == "mock"

    cache = None
    cache_dir = args.cache_dir or config.get("cache_dir")
    if cache_dir:
        cache = DiskCache(Path(cache_dir))

    backend_specs: Dict[str, Dict[str, object]] = dict(config.get("backends", {}))
    backends: Dict[str, Backend] = {}

    def get_backend(name: str) -> Backend:
        if name in backends:
            return backends[name]
        if mock_everything:
            spec = {"kind": "mock"}
        elif name in backend_specs:
            spec = dict(backend_specs[name])
        elif name == "mock":
            spec = {"kind": "mock"}
        else:
            raise UsageError(f"backend {name!r} is not configured")
        if name in overrides and overrides[name] != "mock":
            spec["endpoint"] = overrides[name]
        kind = spec.pop("kind", None)
        if not kind:
            raise UsageError(f"backend {name!r} lacks a kind")
        cfg = BackendConfig(kind=kind, name=name, **spec)
        backends[name] = build_backend(cfg, cache=cache)
        return backends[name]

    strategy_specs = config.get("strategies")
    if not strategy_specs:
        strategy_specs = [
            {"strategy": "S1", "backend": "mock"},
            {"strategy": "S2", "backend": "mock"},
            {"strategy": "S3", "backend": "mock"},
        ]
        if not mock_everything:
            raise UsageError(
                "no strategies configured; provide a config file or --backends mock"
            )

    bindings = []
    for spec in strategy_specs:
        binding = StrategyBinding(
            strategy=Strategy(spec["strategy"]),
            backend=get_backend(spec["backend"]),
            correction_backend=(
                get_backend(spec["correction_backend"])
                if spec.get("correction_backend")
                else None
            ),
            paraphrase_backend=(
                get_backend(spec["paraphrase_backend"])
                if spec.get("paraphrase_backend")
                else None
            ),
        )
        bindings.append(binding)

    policy_spec = dict(config.get("policy", {}))
    if args.ter_max is not None:
        policy_spec["ter_max"] = args.ter_max
    if args.bert_min is not None:
        policy_spec["bert_min"] = args.bert_min
    policy = GatePolicy(**policy_spec)

    target_language = args.target_lang or config.get("target_language")
    if not target_language:
        raise UsageError("target language required (--target-lang or config)")
    source_language = args.source_lang or config.get("source_language", "en")

    scorer = None
    plugin_cmd = args.plugin_cmd or config.get("plugin_cmd")
    if plugin_cmd:
        scorer = start_plugin(plugin_cmd)

    pipeline_config = PipelineConfig(
        target_language=target_language,
        source_language=source_language,
        bindings=bindings,
        policy=policy,
        scorer=scorer,
        max_parallel_articles=int(config.get("max_parallel_articles", 4)),
    )
    return pipeline_config


# -- subcommands ---------------------------------------------------------------


def cmd_ingest(args) -> int:
    corpus = load_corpus(Path(args.input).read_bytes(), name=Path(args.input).stem)
    out_dir = Path(args.output_dir)
    base = Path(args.input).stem
    atomic_write_text(out_dir / f"{base}.normalized.json", corpus.to_json())
    print(f"ingested {len(corpus)} articles")

    if args.split:
        try:
            fractions = [float(x) for x in args.split.split(",")]
            train_f, val_f, test_f = fractions
        except ValueError as exc:
            raise UsageError(f"--split expects three fractions: {exc}") from exc
        spec = SplitSpec(train_f, val_f, test_f, seed=args.seed)
        train, validation, test = split_corpus(corpus, spec)
        for part, suffix in ((train, "train"), (validation, "validation"), (test, "test")):
            atomic_write_text(out_dir / f"{base}.{suffix}.json", part.to_json())
        print(f"split sizes: train={len(train)} validation={len(validation)} test={len(test)}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config_file(args.config)
    input_path = args.input or config.get("corpus")
    if not input_path:
        raise UsageError("corpus input required (--input or config 'corpus')")
    corpus = load_corpus(Path(input_path).read_bytes(), name=Path(input_path).stem)

    setup = build_run_setup(args, config)
    try:
        result = pipeline_mod.run_corpus(corpus, setup)
    finally:
        if setup.scorer is not None:
            setup.scorer.close()

    out_dir = Path(args.output_dir)
    atomic_write_text(out_dir / "records.jsonl", pipeline_mod.records_to_jsonl(result.records))
    atomic_write_text(
        out_dir / "manifest.json",
        json.dumps(result.manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
    )
    for warning in result.manifest["warnings"]:
        logger.warning("%s", warning)
    accepted = result.manifest["accepted"]
    print(f"processed {len(result.records)} articles: {accepted} accepted, "
          f"{result.manifest['needs_annotation']} need annotation")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    candidate = load_corpus(Path(args.candidate).read_bytes())
    reference = load_corpus(Path(args.reference).read_bytes())
    ref_by_id = {a.id: a for a in reference.articles}
    from . import metrics as metrics_mod

    rows = []
    for article in candidate.articles:
        ref = ref_by_id.get(article.id)
        if ref is None:
            raise CorpusError(f"candidate id {article.id!r} missing from reference file")
        entry: Dict[str, object] = {"id": article.id}
        for fieldname in ("document", "summary"):
            cand_text = getattr(article, fieldname)
            ref_text = getattr(ref, fieldname)
            cand_tokens = metrics_mod.tokenize_words(cand_text)
            ref_tokens = metrics_mod.tokenize_words(ref_text)
            entry[fieldname] = {
                "bleu": metrics_mod.bleu(cand_tokens, [ref_tokens]),
                "chrf": metrics_mod.chrf(cand_text, ref_text),
                "chrfpp": metrics_mod.chrfpp(cand_text, ref_text),
                "ter": metrics_mod.ter(cand_tokens, ref_tokens),
            }
        rows.append(entry)

    out = Path(args.output_dir) / "evaluate.json"
    atomic_write_text(out, json.dumps(rows, ensure_ascii=False, indent=2) + "\n")
    print(f"evaluated {len(rows)} articles -> {out}")
    return EXIT_OK


def _load_records(path: str):
    return pipeline_mod.records_from_jsonl(Path(path).read_text(encoding="utf-8"))


def cmd_export_annotations(args) -> int:
    records = _load_records(args.records)
    tasks = annotation_mod.export_tasks(records)
    out = Path(args.output_dir) / "tasks.jsonl"
    atomic_write_text(out, tasks)
    count = len([line for line in tasks.splitlines() if line.strip()])
    print(f"exported {count} annotation tasks -> {out}")
    return EXIT_OK


def cmd_import_annotations(args) -> int:
    records = _load_records(args.records)
    pending_ids = {r.article.id for r in records if not r.accepted}
    stream = Path(args.input).read_text(encoding="utf-8")
    results = annotation_mod.import_results(stream, valid_ids=pending_ids)
    merged = annotation_mod.merge(records, results)
    out = Path(args.output_dir) / "records.jsonl"
    atomic_write_text(out, pipeline_mod.records_to_jsonl(merged))
    remaining = sum(1 for r in merged if not r.accepted)
    print(f"merged {len(results)} results; {remaining} articles still need annotation")
    return EXIT_OK


def cmd_report(args) -> int:
    records = _load_records(args.records)
    out_dir = Path(args.output_dir)
    atomic_write_text(
        out_dir / "report.json",
        json.dumps(report_mod.report_as_dict(records), ensure_ascii=False, indent=2,
                   sort_keys=True) + "\n",
    )
    atomic_write_text(out_dir / "report.csv", report_mod.report_as_csv(records))
    atomic_write_text(out_dir / "report.txt", report_mod.report_as_text(records))
    if args.corpus:
        corpus = load_corpus(Path(args.corpus).read_bytes())
        points = report_mod.fidelity_comparison(corpus, records)
        atomic_write_text(out_dir / "fidelity.csv", report_mod.fidelity_as_csv(points))
    print(f"report written to {out_dir}")
    return EXIT_OK


def cmd_publish(args) -> int:
    records = _load_records(args.records)
    dataset_json, stats = report_mod.publish_dataset(records, allow_partial=args.allow_partial)
    out_dir = Path(args.output_dir)
    atomic_write_text(out_dir / "dataset.json", dataset_json)
    atomic_write_text(
        out_dir / "dataset.stats.json",
        json.dumps(stats, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
    )
    print(f"published {stats['published']} articles -> {out_dir / 'dataset.json'}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "run": cmd_run,
    "evaluate": cmd_evaluate,
    "export-annotations": cmd_export_annotations,
    "import-annotations": cmd_import_annotations,
    "report": cmd_report,
    "publish": cmd_publish,
}


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, CorpusError, ConfigurationError, annotation_mod.AnnotationError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except report_mod.PublishError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (BackendError, ScorerError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
