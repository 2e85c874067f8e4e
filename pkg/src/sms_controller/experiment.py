"""Batch experiment: detection and false-positive rates as the ontology learns."""
from __future__ import annotations

from dataclasses import dataclass

from .corpus import LabeledSms
from .engine import Correction, Pipeline, apply_feedback, classify, enhance_ontology
from .ontology import SpamOntology


@dataclass(frozen=True)
class BatchStats:
    batch: int
    spam: int
    ham: int
    true_positives: int
    false_positives: int

    @property
    def detection_pct(self) -> float | None:
        return None if self.spam == 0 else 100.0 * self.true_positives / self.spam

    @property
    def false_positive_pct(self) -> float | None:
        return None if self.ham == 0 else 100.0 * self.false_positives / self.ham


def split_batches(items: list, batches: int) -> list[list]:
    """Order-preserving split into ``batches`` near-equal parts (earlier parts
    take the remainder)."""
    if batches < 2:
        raise ValueError("need at least two batches")
    if not items:
        raise ValueError("corpus is empty")
    if batches > len(items):
        raise ValueError(f"{batches} batches from {len(items)} messages leaves empty batches")
    size, extra = divmod(len(items), batches)
    out, start = [], 0
    for i in range(batches):
        end = start + size + (1 if i < extra else 0)
        out.append(items[start:end])
        start = end
    return out


def run_spam_experiment(corpus: list[LabeledSms], seed_ontology: SpamOntology, batches: int,
                        feedback: bool, pipeline: Pipeline,
                        enhancement: bool = True) -> list[BatchStats]:
    ontology = seed_ontology.copy()
    results = []
    for index, chunk in enumerate(split_batches(corpus, batches), start=1):
        tp = fp = spam = 0
        for item in chunk:
            verdict = classify(item.message, pipeline, ontology)
            if item.is_spam:
                spam += 1
                if verdict.is_spam:
                    tp += 1
                    if enhancement and not verdict.prefiltered:
                        enhance_ontology(ontology, verdict, pipeline.graph)
            elif verdict.is_spam:
                fp += 1
                if feedback:
                    apply_feedback(ontology, item.message, Correction.NOT_SPAM, pipeline)
        results.append(BatchStats(index, spam, len(chunk) - spam, tp, fp))
    return results


def _pct(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.2f}"


def format_trend_table(rows: list[BatchStats]) -> str:
    lines = ["batch\tdetection_pct\tfalse_positive_pct"]
    lines += [f"{r.batch}\t{_pct(r.detection_pct)}\t{_pct(r.false_positive_pct)}" for r in rows]
    return "\n".join(lines) + "\n"
