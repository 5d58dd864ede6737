"""Aggregate score tables, fidelity comparison data, and dataset emission.

Table rows follow the metric order bertscore, bleu, chrf, chrfpp, ter,
comet with Doc-Min/Max/Avg then Sum-Min/Max/Avg columns, rendered to six
decimal places. Averages are arithmetic means over scored articles only;
absent neural scores are excluded and the row carries the scored counts.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, List, Optional, Sequence, Tuple

from . import metrics
from .corpus import Corpus
from .pipeline import REPORT_METRICS, PipelineRecord, Strategy

TABLE_COLUMNS = ("Metric", "Doc-Min", "Doc-Max", "Doc-Avg", "Sum-Min", "Sum-Max", "Sum-Avg")


class PublishError(RuntimeError):
    """Dataset emission refused; carries the pending article ids."""

    def __init__(self, pending_ids: Sequence[str]):
        self.pending_ids = list(pending_ids)
        super().__init__(
            "refusing to publish with pending annotations: "
            + ", ".join(self.pending_ids)
        )


@dataclass(frozen=True)
class AggregateRow:
    metric: str
    doc_min: Optional[float]
    doc_max: Optional[float]
    doc_avg: Optional[float]
    doc_count: int
    sum_min: Optional[float]
    sum_max: Optional[float]
    sum_avg: Optional[float]
    sum_count: int


@dataclass(frozen=True)
class FidelityPoint:
    article_id: str
    source: Dict[str, float]  # rouge1/rouge2/rougeL F1, summary vs document
    target: Dict[str, float]


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def aggregate_scores(
    records: Sequence[PipelineRecord], strategy: Strategy
) -> List[AggregateRow]:
    """Min/max/avg per metric and field for one strategy's stage reports.

    Returns an empty list when the strategy was never executed.
    """
    doc_values: Dict[str, List[float]] = {m: [] for m in REPORT_METRICS}
    sum_values: Dict[str, List[float]] = {m: [] for m in REPORT_METRICS}
    executed = False
    for record in records:
        for stage_record in record.stages:
            if stage_record.stage.strategy is not strategy:
                continue
            executed = True
            if not stage_record.stage.ok:
                continue
            for metric in REPORT_METRICS:
                value = stage_record.report.document.get(metric)
                if value is not None:
                    doc_values[metric].append(value)
                value = stage_record.report.summary.get(metric)
                if value is not None:
                    sum_values[metric].append(value)
    if not executed:
        return []

    rows = []
    for metric in REPORT_METRICS:
        docs = doc_values[metric]
        sums = sum_values[metric]
        rows.append(
            AggregateRow(
                metric=metric,
                doc_min=min(docs) if docs else None,
                doc_max=max(docs) if docs else None,
                doc_avg=_mean(docs) if docs else None,
                doc_count=len(docs),
                sum_min=min(sums) if sums else None,
                sum_max=max(sums) if sums else None,
                sum_avg=_mean(sums) if sums else None,
                sum_count=len(sums),
            )
        )
    return rows


def format_score(value: Optional[float]) -> str:
    """Six-decimal rendering with half-up rounding on de-noised values.

    Scores carry far fewer than 12 meaningful digits, so binary float noise
    (0.89643849999...) is squashed at 1e-12 before the final rounding.
    """
    if value is None:
        return "-"
    d = Decimal(repr(float(value)))
    d = d.quantize(Decimal("1e-12"), rounding=ROUND_HALF_UP)
    return str(d.quantize(Decimal("0.000001"), rounding=ROUND_HALF_UP))


def render_table(rows: Sequence[AggregateRow], title: str = "") -> str:
    """Aligned-column text table in the Metric/Doc/Sum order."""
    body = [TABLE_COLUMNS]
    for row in rows:
        body.append(
            (
                row.metric,
                format_score(row.doc_min),
                format_score(row.doc_max),
                format_score(row.doc_avg),
                format_score(row.sum_min),
                format_score(row.sum_max),
                format_score(row.sum_avg),
            )
        )
    widths = [max(len(line[i]) for line in body) for i in range(len(TABLE_COLUMNS))]
    out = io.StringIO()
    if title:
        out.write(title + "\n")
    if not rows:
        out.write("(strategy never executed)\n")
        return out.getvalue()
    for line in body:
        cells = [line[0].ljust(widths[0])]
        cells += [line[i].rjust(widths[i]) for i in range(1, len(widths))]
        out.write("  ".join(cells).rstrip() + "\n")
    return out.getvalue()


def report_as_dict(records: Sequence[PipelineRecord]) -> Dict[str, object]:
    strategies = {}
    for strategy in Strategy:
        rows = aggregate_scores(records, strategy)
        strategies[strategy.value] = {
            "executed": bool(rows),
            "rows": [
                {
                    "metric": r.metric,
                    "doc_min": r.doc_min,
                    "doc_max": r.doc_max,
                    "doc_avg": r.doc_avg,
                    "doc_count": r.doc_count,
                    "sum_min": r.sum_min,
                    "sum_max": r.sum_max,
                    "sum_avg": r.sum_avg,
                    "sum_count": r.sum_count,
                }
                for r in rows
            ],
        }
    return {
        "articles": len(records),
        "accepted": sum(1 for r in records if r.accepted),
        "needs_annotation": sum(1 for r in records if not r.accepted),
        "strategies": strategies,
    }


def report_as_csv(records: Sequence[PipelineRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(
        ["strategy", "metric", "doc_min", "doc_max", "doc_avg", "doc_count",
         "sum_min", "sum_max", "sum_avg", "sum_count"]
    )
    for strategy in Strategy:
        for row in aggregate_scores(records, strategy):
            writer.writerow(
                [
                    strategy.value,
                    row.metric,
                    format_score(row.doc_min),
                    format_score(row.doc_max),
                    format_score(row.doc_avg),
                    row.doc_count,
                    format_score(row.sum_min),
                    format_score(row.sum_max),
                    format_score(row.sum_avg),
                    row.sum_count,
                ]
            )
    return out.getvalue()


def report_as_text(records: Sequence[PipelineRecord]) -> str:
    blocks = []
    for strategy in Strategy:
        rows = aggregate_scores(records, strategy)
        blocks.append(render_table(rows, title=f"{strategy.value} scores"))
    return "\n".join(blocks)


ROUGE_KEYS = ("rouge1", "rouge2", "rougeL")


def _rouge_f1s(summary: str, document: str) -> Dict[str, float]:
    cand = metrics.tokenize_words(summary)
    ref = metrics.tokenize_words(document)
    return {
        "rouge1": metrics.rouge_n(cand, ref, 1).f1,
        "rouge2": metrics.rouge_n(cand, ref, 2).f1,
        "rougeL": metrics.rouge_l(cand, ref).f1,
    }


def fidelity_comparison(
    source_corpus: Corpus, records: Sequence[PipelineRecord]
) -> List[FidelityPoint]:
    """ROUGE F1 of (summary vs document) in both languages per accepted article.

    This is the data behind the original-vs-translated fidelity plots: does
    the translated summary still cover its translated document the way the
    source pair did?
    """
    by_id = {a.id: a for a in source_corpus.articles}
    points = []
    for record in records:
        if not record.accepted or record.accepted_translation is None:
            continue
        article = by_id.get(record.article.id)
        if article is None:
            continue
        target_doc, target_sum = record.accepted_translation
        points.append(
            FidelityPoint(
                article_id=article.id,
                source=_rouge_f1s(article.summary, article.document),
                target=_rouge_f1s(target_sum, target_doc),
            )
        )
    return points


def fidelity_as_csv(points: Sequence[FidelityPoint]) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(
        ["article_id"]
        + [f"src_{k}" for k in ROUGE_KEYS]
        + [f"tgt_{k}" for k in ROUGE_KEYS]
    )
    for point in points:
        writer.writerow(
            [point.article_id]
            + [format_score(point.source[k]) for k in ROUGE_KEYS]
            + [format_score(point.target[k]) for k in ROUGE_KEYS]
        )
    return out.getvalue()


def publish_dataset(
    records: Sequence[PipelineRecord], allow_partial: bool = False
) -> Tuple[str, Dict[str, object]]:
    """Emit the final dataset JSON (input schema, target texts) plus stats.

    Refuses while any record still needs annotation unless allow_partial,
    in which case only accepted records are emitted.
    """
    pending = [r.article.id for r in records if not r.accepted]
    if pending and not allow_partial:
        raise PublishError(pending)

    rows = []
    by_path = {"S1": 0, "S2": 0, "S3": 0, "human": 0}
    for record in records:
        if not record.accepted:
            continue
        document, summary = record.accepted_translation
        rows.append({"id": record.article.id, "document": document, "summary": summary})
        if record.accepted_by in by_path:
            by_path[record.accepted_by] += 1

    dataset_json = json.dumps(rows, ensure_ascii=False, indent=2) + "\n"
    stats = {
        "total": len(records),
        "published": len(rows),
        "by_path": by_path,
        "pending": pending,
    }
    return dataset_json, stats
