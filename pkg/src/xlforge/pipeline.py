"""Cascaded translation strategies with back-translation gating.

Three strategies are tried per article, cheapest first:

* S1: forward translate, correct, back-translate
* S2: forward translate, paraphrase in the target language, correct,
  back-translate
* S3: one-shot LLM translate, back-translate

Each back-translation is scored against the original with the lexical
metrics (plus neural scores when a plugin is configured); a TER+BERTScore
threshold gate decides accept, escalate to the next strategy, or hand the
article to human annotation after the last stage.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from . import metrics
from .backends import Backend, BackendError
from .corpus import Article, Corpus
from .scorer import ScorePair, ScorerError, ScorerPlugin

logger = logging.getLogger(__name__)

REPORT_METRICS = ("bertscore", "bleu", "chrf", "chrfpp", "ter", "comet")
LEXICAL_METRICS = ("bleu", "chrf", "chrfpp", "ter")
FIELDS = ("document", "summary")


class Strategy(str, Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"


@dataclass(frozen=True)
class StageResult:
    article_id: str
    strategy: Strategy
    forward_text: str = ""
    forward_summary: str = ""
    back_text: str = ""
    back_summary: str = ""
    hallucination_flag: bool = False
    backend_name: str = ""
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class MetricReport:
    """Scores per field; a metric key absent from the dict was not scored.

    Neural scores are never defaulted: when no plugin answered, the key is
    simply missing (serialized as null), not zero.
    """

    document: Dict[str, float] = field(default_factory=dict)
    summary: Dict[str, float] = field(default_factory=dict)
    notes: Tuple[str, ...] = ()

    def for_field(self, fieldname: str) -> Dict[str, float]:
        if fieldname == "document":
            return self.document
        if fieldname == "summary":
            return self.summary
        raise KeyError(fieldname)


@dataclass(frozen=True)
class GatePolicy:
    ter_max: float = 100.0
    bert_min: float = 0.85
    fields_required: str = "both"  # document_only | summary_only | both

    def __post_init__(self):
        if self.ter_max <= 0:
            raise ValueError("ter_max must be > 0")
        if not 0.0 <= self.bert_min <= 1.0:
            raise ValueError("bert_min must lie in [0, 1]")
        if self.fields_required not in ("document_only", "summary_only", "both"):
            raise ValueError(f"bad fields_required {self.fields_required!r}")

    def required_fields(self) -> Tuple[str, ...]:
        if self.fields_required == "document_only":
            return ("document",)
        if self.fields_required == "summary_only":
            return ("summary",)
        return FIELDS


class Verdict(str, Enum):
    ACCEPT = "accept"
    ESCALATE = "escalate"
    HUMAN = "human"


@dataclass(frozen=True)
class GateDecision:
    verdict: Verdict
    failing_fields: Tuple[str, ...] = ()


@dataclass(frozen=True)
class StageRecord:
    stage: StageResult
    report: MetricReport
    decision: GateDecision


@dataclass(frozen=True)
class PipelineRecord:
    article: Article
    stages: Tuple[StageRecord, ...]
    final_status: str  # "accepted" | "needs_annotation"
    accepted_by: Optional[str] = None  # "S1" | "S2" | "S3" | "human"
    accepted_translation: Optional[Tuple[str, str]] = None
    annotator: Optional[str] = None
    failure_note: Optional[str] = None

    @property
    def accepted(self) -> bool:
        return self.final_status == "accepted"


@dataclass(frozen=True)
class StrategyBinding:
    strategy: Strategy
    backend: Backend
    correction_backend: Optional[Backend] = None
    paraphrase_backend: Optional[Backend] = None

    def corrector(self) -> Backend:
        return self.correction_backend or self.backend

    def paraphraser(self) -> Backend:
        return self.paraphrase_backend or self.backend


@dataclass
class PipelineConfig:
    target_language: str
    bindings: List[StrategyBinding]
    source_language: str = "en"
    policy: GatePolicy = field(default_factory=GatePolicy)
    scorer: Optional[ScorerPlugin] = None
    max_parallel_articles: int = 4

    def __post_init__(self):
        if not self.bindings:
            raise ValueError("at least one strategy must be enabled")
        order = [b.strategy for b in self.bindings]
        if order != sorted(order, key=lambda s: s.value):
            raise ValueError("strategies must be configured in cascade order")
        if len(set(order)) != len(order):
            raise ValueError("duplicate strategy binding")


def run_strategy(
    binding: StrategyBinding,
    article: Article,
    source_lang: str,
    target_lang: str,
) -> StageResult:
    """Push one article's document and summary through one strategy.

    The forward and back translation legs always use the binding's backend;
    correction may use a distinct backend. Backend failures produce a
    stage-failure result instead of raising.
    """
    backend = binding.backend
    strategy = binding.strategy

    def one_field(text: str) -> Tuple[str, str, bool]:
        hallucinated = False
        if strategy is Strategy.S3:
            result = backend.llm_translate(text, source_lang, target_lang)
            forward = result.text
            hallucinated = result.hallucination
        else:
            forward = backend.translate(text, source_lang, target_lang)
            if strategy is Strategy.S2:
                forward = binding.paraphraser().paraphrase(forward, target_lang)
            forward = binding.corrector().correct_sentence(forward, target_lang)
        back = backend.translate(forward, target_lang, source_lang)
        return forward, back, hallucinated

    try:
        fwd_doc, back_doc, hall_doc = one_field(article.document)
        fwd_sum, back_sum, hall_sum = one_field(article.summary)
    except (BackendError, ValueError) as exc:
        logger.warning("stage %s failed for article %s: %s", strategy.value, article.id, exc)
        return StageResult(
            article_id=article.id,
            strategy=strategy,
            backend_name=backend.name,
            error=str(exc),
        )

    return StageResult(
        article_id=article.id,
        strategy=strategy,
        forward_text=fwd_doc,
        forward_summary=fwd_sum,
        back_text=back_doc,
        back_summary=back_sum,
        hallucination_flag=hall_doc or hall_sum,
        backend_name=backend.name,
    )


def evaluate_roundtrip(
    article: Article,
    stage: StageResult,
    scorer: Optional[ScorerPlugin] = None,
    scorer_lock: Optional[threading.Lock] = None,
) -> MetricReport:
    """Score back-translations against the originals on both fields.

    Lexical metrics are always produced; neural metrics are added when a
    plugin is configured and survive transport failures as absences.
    """
    if not stage.ok:
        raise ValueError("cannot evaluate a failed stage")

    notes: List[str] = []
    per_field: Dict[str, Dict[str, float]] = {}
    pairs = {
        "document": (stage.back_text, article.document, stage.forward_text),
        "summary": (stage.back_summary, article.summary, stage.forward_summary),
    }
    for fieldname, (back, original, forward) in pairs.items():
        cand_tokens = metrics.tokenize_words(back)
        ref_tokens = metrics.tokenize_words(original)
        scores = {
            "bleu": metrics.bleu(cand_tokens, [ref_tokens]),
            "chrf": metrics.chrf(back, original),
            "chrfpp": metrics.chrfpp(back, original),
            "ter": metrics.ter(cand_tokens, ref_tokens),
        }
        per_field[fieldname] = scores

    if scorer is not None:
        lock = scorer_lock or threading.Lock()
        for metric in ("bertscore", "comet"):
            if not scorer.supports(metric):
                notes.append(f"plugin does not support {metric}")
                continue
            wire_pairs = [
                ScorePair(
                    candidate=pairs[f][0],
                    reference=pairs[f][1],
                    source=pairs[f][2] if metric == "comet" else None,
                )
                for f in FIELDS
            ]
            try:
                with lock:
                    entries = scorer.score(metric, wire_pairs)
            except ScorerError as exc:
                notes.append(f"{metric} unavailable: {exc}")
                continue
            for fieldname, entry in zip(FIELDS, entries):
                per_field[fieldname][metric] = entry.value

    return MetricReport(
        document=per_field["document"],
        summary=per_field["summary"],
        notes=tuple(notes),
    )


def gate(report: MetricReport, policy: GatePolicy, is_last_stage: bool) -> GateDecision:
    """Pure threshold rule: accept, escalate, or human at the last stage.

    A field passes when ter <= ter_max and, when a bertscore is present,
    bertscore >= bert_min. Without a neural score the gate degrades to TER
    alone (the run manifest warns loudly about this).
    """
    failing: List[str] = []
    for fieldname in policy.required_fields():
        scores = report.for_field(fieldname)
        ter_value = scores.get("ter")
        if ter_value is None:
            failing.append(f"{fieldname}: no scores")
            continue
        if ter_value > policy.ter_max:
            failing.append(f"{fieldname}: ter {ter_value:.4f} > {policy.ter_max}")
        bert_value = scores.get("bertscore")
        if bert_value is not None and bert_value < policy.bert_min:
            failing.append(f"{fieldname}: bertscore {bert_value:.4f} < {policy.bert_min}")
    if not failing:
        return GateDecision(Verdict.ACCEPT)
    return GateDecision(
        Verdict.HUMAN if is_last_stage else Verdict.ESCALATE,
        failing_fields=tuple(failing),
    )


STAGE_FAILURE_DECISION_FIELDS = ("stage error",)


def run_cascade(
    article: Article,
    config: PipelineConfig,
    scorer_lock: Optional[threading.Lock] = None,
) -> PipelineRecord:
    """Try the enabled strategies in order until one passes the gate."""
    stages: List[StageRecord] = []
    for index, binding in enumerate(config.bindings):
        is_last = index == len(config.bindings) - 1
        stage = run_strategy(
            binding, article, config.source_language, config.target_language
        )
        if not stage.ok:
            decision = GateDecision(
                Verdict.HUMAN if is_last else Verdict.ESCALATE,
                failing_fields=STAGE_FAILURE_DECISION_FIELDS,
            )
            stages.append(StageRecord(stage, MetricReport(), decision))
            continue
        report = evaluate_roundtrip(article, stage, config.scorer, scorer_lock)
        decision = gate(report, config.policy, is_last)
        stages.append(StageRecord(stage, report, decision))
        if decision.verdict is Verdict.ACCEPT:
            return PipelineRecord(
                article=article,
                stages=tuple(stages),
                final_status="accepted",
                accepted_by=binding.strategy.value,
                accepted_translation=(stage.forward_text, stage.forward_summary),
            )
    return PipelineRecord(
        article=article,
        stages=tuple(stages),
        final_status="needs_annotation",
    )


@dataclass
class RunResult:
    records: List[PipelineRecord]
    manifest: Dict[str, object]


def run_corpus(corpus: Corpus, config: PipelineConfig) -> RunResult:
    """Process every article with bounded parallelism, preserving order.

    Individual article failures never abort the run; they become
    needs_annotation records carrying a failure note.
    """
    scorer_lock = threading.Lock()
    started = time.time()

    def process(article: Article) -> PipelineRecord:
        try:
            return run_cascade(article, config, scorer_lock)
        except Exception as exc:  # noqa: BLE001 - resumability beats purity here
            logger.error("article %s failed: %s", article.id, exc)
            return PipelineRecord(
                article=article,
                stages=(),
                final_status="needs_annotation",
                failure_note=f"{type(exc).__name__}: {exc}",
            )

    workers = max(1, config.max_parallel_articles)
    if len(corpus) == 0:
        records: List[PipelineRecord] = []
    elif workers == 1:
        records = [process(a) for a in corpus.articles]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(process, corpus.articles))

    manifest = build_manifest(config, records, started, time.time())
    return RunResult(records=records, manifest=manifest)


def build_manifest(
    config: PipelineConfig,
    records: Sequence[PipelineRecord],
    started: float,
    finished: float,
) -> Dict[str, object]:
    backends_desc = []
    for binding in config.bindings:
        for role, backend in (
            ("translation", binding.backend),
            ("correction", binding.correction_backend),
            ("paraphrase", binding.paraphrase_backend),
        ):
            if backend is None:
                continue
            backends_desc.append(
                {
                    "strategy": binding.strategy.value,
                    "role": role,
                    "name": backend.name,
                    "kind": backend.config.kind,
                    "endpoint": backend.config.endpoint,
                    "api_key": "<redacted>" if backend.config.resolved_api_key() else None,
                    "requests": backend.request_count,
                }
            )

    attempts = {s.value: 0 for s in Strategy}
    accepts = {s.value: 0 for s in Strategy}
    for record in records:
        for stage_record in record.stages:
            attempts[stage_record.stage.strategy.value] += 1
        if record.accepted_by in attempts:
            accepts[record.accepted_by] += 1

    warnings = []
    if config.scorer is None:
        warnings.append(
            "no neural scorer configured: gate degraded to TER alone "
            "(the accept rule normally combines TER and BERTScore)"
        )

    digest_basis = {
        "source_language": config.source_language,
        "target_language": config.target_language,
        "policy": {
            "ter_max": config.policy.ter_max,
            "bert_min": config.policy.bert_min,
            "fields_required": config.policy.fields_required,
        },
        "strategies": [
            {"strategy": b.strategy.value, "backend": b.backend.identity()}
            for b in config.bindings
        ],
    }
    config_digest = hashlib.sha256(
        json.dumps(digest_basis, sort_keys=True).encode("utf-8")
    ).hexdigest()

    return {
        "config_digest": config_digest,
        "policy": digest_basis["policy"],
        "backends": backends_desc,
        "scorer": {
            "configured": config.scorer is not None,
            "metrics": config.scorer.metrics if config.scorer else [],
            "models": config.scorer.models if config.scorer else {},
        },
        "stage_attempts": attempts,
        "stage_accepts": accepts,
        "articles": len(records),
        "accepted": sum(1 for r in records if r.accepted),
        "needs_annotation": sum(1 for r in records if not r.accepted),
        "warnings": warnings,
        "started_at": started,
        "finished_at": finished,
    }


# -- record (de)serialization -------------------------------------------------


def record_to_dict(record: PipelineRecord) -> Dict[str, object]:
    return {
        "article": record.article.to_dict(),
        "stages": [
            {
                "stage": {
                    "article_id": sr.stage.article_id,
                    "strategy": sr.stage.strategy.value,
                    "forward_text": sr.stage.forward_text,
                    "forward_summary": sr.stage.forward_summary,
                    "back_text": sr.stage.back_text,
                    "back_summary": sr.stage.back_summary,
                    "hallucination_flag": sr.stage.hallucination_flag,
                    "backend_name": sr.stage.backend_name,
                    "error": sr.stage.error,
                },
                "report": {
                    "document": _scores_to_wire(sr.report.document),
                    "summary": _scores_to_wire(sr.report.summary),
                    "notes": list(sr.report.notes),
                },
                "decision": {
                    "verdict": sr.decision.verdict.value,
                    "failing_fields": list(sr.decision.failing_fields),
                },
            }
            for sr in record.stages
        ],
        "final_status": record.final_status,
        "accepted_by": record.accepted_by,
        "accepted_translation": (
            list(record.accepted_translation) if record.accepted_translation else None
        ),
        "annotator": record.annotator,
        "failure_note": record.failure_note,
    }


def _scores_to_wire(scores: Dict[str, float]) -> Dict[str, Optional[float]]:
    wire: Dict[str, Optional[float]] = {m: None for m in REPORT_METRICS}
    wire.update(scores)
    return wire


def _scores_from_wire(wire: Dict[str, Optional[float]]) -> Dict[str, float]:
    return {k: v for k, v in wire.items() if v is not None}


def record_from_dict(data: Dict[str, object]) -> PipelineRecord:
    art = data["article"]
    article = Article(
        id=art["id"],
        document=art["document"],
        summary=art["summary"],
        extra={k: v for k, v in art.items() if k not in ("id", "document", "summary")},
    )
    stages = []
    for item in data.get("stages", []):
        s = item["stage"]
        stage = StageResult(
            article_id=s["article_id"],
            strategy=Strategy(s["strategy"]),
            forward_text=s["forward_text"],
            forward_summary=s["forward_summary"],
            back_text=s["back_text"],
            back_summary=s["back_summary"],
            hallucination_flag=s["hallucination_flag"],
            backend_name=s.get("backend_name", ""),
            error=s.get("error"),
        )
        r = item["report"]
        report = MetricReport(
            document=_scores_from_wire(r["document"]),
            summary=_scores_from_wire(r["summary"]),
            notes=tuple(r.get("notes", [])),
        )
        d = item["decision"]
        decision = GateDecision(
            verdict=Verdict(d["verdict"]),
            failing_fields=tuple(d.get("failing_fields", [])),
        )
        stages.append(StageRecord(stage, report, decision))
    accepted_translation = data.get("accepted_translation")
    return PipelineRecord(
        article=article,
        stages=tuple(stages),
        final_status=data["final_status"],
        accepted_by=data.get("accepted_by"),
        accepted_translation=tuple(accepted_translation) if accepted_translation else None,
        annotator=data.get("annotator"),
        failure_note=data.get("failure_note"),
    )


def records_to_jsonl(records: Sequence[PipelineRecord]) -> str:
    lines = [
        json.dumps(record_to_dict(r), ensure_ascii=False, sort_keys=True)
        for r in records
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def records_from_jsonl(text: str) -> List[PipelineRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(record_from_dict(json.loads(line)))
        except (ValueError, KeyError) as exc:
            raise ValueError(f"records line {lineno}: {exc}") from exc
    return records
