"""Doccano-compatible export of gate failures and merge of human fixes.

Export emits one JSONL task per needs_annotation record, with the best
machine attempt (lowest document TER, earliest stage on ties) as the task
text and everything else under ``meta``. Import reads the same shape back
with ``corrected_document`` / ``corrected_summary`` filled in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Set

from .pipeline import PipelineRecord, StageRecord


class AnnotationError(ValueError):
    """Malformed annotation data or an illegal merge."""


@dataclass(frozen=True)
class AnnotationResult:
    article_id: str
    corrected_document: str
    corrected_summary: str
    annotator: Optional[str] = None


def _doc_ter(stage_record: StageRecord) -> float:
    value = stage_record.report.document.get("ter")
    return value if value is not None else float("inf")


def best_stage(record: PipelineRecord) -> Optional[StageRecord]:
    """Lowest document TER wins; ties go to the earlier stage."""
    if not record.stages:
        return None
    return min(record.stages, key=_doc_ter)  # min() keeps the first minimum


def export_tasks(records: Sequence[PipelineRecord]) -> str:
    lines = []
    for record in records:
        if record.final_status != "needs_annotation":
            continue
        stage_record = best_stage(record)
        stage = stage_record.stage if stage_record else None
        report = stage_record.report if stage_record else None
        task = {
            "text": stage.forward_text if stage else "",
            "meta": {
                "article_id": record.article.id,
                "source_document": record.article.document,
                "source_summary": record.article.summary,
                "machine_summary": stage.forward_summary if stage else "",
                "ter_doc": report.document.get("ter") if report else None,
                "bertscore_doc": report.document.get("bertscore") if report else None,
            },
        }
        lines.append(json.dumps(task, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def import_results(
    stream: str, valid_ids: Optional[Set[str]] = None
) -> List[AnnotationResult]:
    """Parse annotated JSONL; errors carry the 1-based line number."""
    results: List[AnnotationResult] = []
    unknown: List[str] = []
    for lineno, line in enumerate(stream.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
        meta = obj.get("meta")
        if not isinstance(meta, dict):
            raise AnnotationError(f"line {lineno}: missing meta object")
        article_id = meta.get("article_id")
        if not isinstance(article_id, str) or not article_id:
            raise AnnotationError(f"line {lineno}: missing meta.article_id")
        corrected_document = meta.get("corrected_document")
        corrected_summary = meta.get("corrected_summary")
        if not isinstance(corrected_document, str) or not corrected_document:
            raise AnnotationError(
                f"line {lineno}: meta.corrected_document missing or empty"
            )
        if not isinstance(corrected_summary, str) or not corrected_summary:
            raise AnnotationError(
                f"line {lineno}: meta.corrected_summary missing or empty"
            )
        if valid_ids is not None and article_id not in valid_ids:
            unknown.append(article_id)
            continue
        results.append(
            AnnotationResult(
                article_id=article_id,
                corrected_document=corrected_document,
                corrected_summary=corrected_summary,
                annotator=meta.get("annotator"),
            )
        )
    if unknown:
        raise AnnotationError(f"unknown article ids: {', '.join(sorted(unknown))}")
    return results


def merge(
    records: Sequence[PipelineRecord], results: Iterable[AnnotationResult]
) -> List[PipelineRecord]:
    """Fold human corrections into the record set.

    Matched records become accepted-by-human; touching an already accepted
    record is an error, never a silent overwrite.
    """
    by_id: Dict[str, int] = {r.article.id: i for i, r in enumerate(records)}
    merged = list(records)
    for result in results:
        index = by_id.get(result.article_id)
        if index is None:
            raise AnnotationError(f"unknown article id: {result.article_id}")
        record = merged[index]
        if record.final_status == "accepted":
            raise AnnotationError(
                f"article {result.article_id} is already accepted; refusing to overwrite"
            )
        merged[index] = replace(
            record,
            final_status="accepted",
            accepted_by="human",
            accepted_translation=(result.corrected_document, result.corrected_summary),
            annotator=result.annotator,
        )
    return merged
