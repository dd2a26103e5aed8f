"""Detection metrics, composite quality profiling, and report emission.

Recall and F1 treat AI as the positive class. The composite quality score
of a subset is the equal-weight mean of its min-max-normalized fps,
bitrate, and pixel count over all subsets in the run; degenerate
dimensions (min = max) contribute 0.5.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

LABEL_AI = 1
LABEL_REAL = 0


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def merged(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fn + other.fn,
                               self.fp + other.fp, self.tn + other.tn)


@dataclass(frozen=True)
class Metrics:
    recall: float
    precision: float
    f1: float
    accuracy: float
    confusion: ConfusionCounts

    def to_dict(self) -> dict:
        return {
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "confusion": {"tp": self.confusion.tp, "fn": self.confusion.fn,
                          "fp": self.confusion.fp, "tn": self.confusion.tn},
        }


def confusion(labels, verdicts) -> ConfusionCounts:
    """Count the confusion matrix; entries are 0/1 with AI = 1."""
    labels = list(labels)
    verdicts = list(verdicts)
    if len(labels) != len(verdicts):
        raise ConfigError(
            f"{len(labels)} labels vs {len(verdicts)} verdicts",
            code="eval/length-mismatch",
        )
    tp = fn = fp = tn = 0
    for truth, pred in zip(labels, verdicts):
        if truth == LABEL_AI:
            if pred == LABEL_AI:
                tp += 1
            else:
                fn += 1
        else:
            if pred == LABEL_AI:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, fn=fn, fp=fp, tn=tn)


def metrics_from_confusion(cm: ConfusionCounts) -> Metrics:
    """Recall/precision/F1/accuracy with the 0/0 -> 0 convention."""
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    accuracy = (cm.tp + cm.tn) / cm.total if cm.total else 0.0
    return Metrics(recall=recall, precision=precision, f1=f1,
                   accuracy=accuracy, confusion=cm)


def metrics(labels, verdicts) -> Metrics:
    return metrics_from_confusion(confusion(labels, verdicts))


@dataclass(frozen=True)
class QualityProfile:
    """Technical fidelity of one corpus subset."""

    fps: float
    bitrate_mbps: float
    resolution_n: int
    composite: float = 0.5

    def to_dict(self) -> dict:
        return {"fps": self.fps, "bitrate_mbps": self.bitrate_mbps,
                "resolution_n": self.resolution_n, "composite": self.composite}


def bitrate_proxy(mean_bytes_per_frame: float, fps: float) -> float:
    """Mbps proxy when no encoded bitstream exists."""
    return mean_bytes_per_frame * fps * 8.0 / 1e6


def quality_profiles(subsets: dict[str, QualityProfile]) -> dict[str, QualityProfile]:
    """Recompute composites over all subsets of a run.

    Each dimension is min-max normalized across subsets; a single-subset
    run or a degenerate dimension contributes 0.5.
    """
    for name, p in subsets.items():
        if min(p.fps, p.bitrate_mbps, p.resolution_n) <= 0:
            raise ConfigError(f"subset {name}: quality inputs must be > 0",
                              code="eval/quality-inputs")

    def norm(values: dict[str, float]) -> dict[str, float]:
        lo, hi = min(values.values()), max(values.values())
        if hi == lo:
            return {k: 0.5 for k in values}
        return {k: (v - lo) / (hi - lo) for k, v in values.items()}

    fps_n = norm({k: p.fps for k, p in subsets.items()})
    bit_n = norm({k: p.bitrate_mbps for k, p in subsets.items()})
    res_n = norm({k: float(p.resolution_n) for k, p in subsets.items()})
    return {
        k: QualityProfile(
            fps=p.fps, bitrate_mbps=p.bitrate_mbps, resolution_n=p.resolution_n,
            composite=(fps_n[k] + bit_n[k] + res_n[k]) / 3.0,
        )
        for k, p in subsets.items()
    }


@dataclass
class SubsetReport:
    """Per-subset evaluation entry of an EvalReport."""

    name: str
    metrics: Metrics
    quality: QualityProfile | None = None
    stage1_intercepted: int = 0
    stage2_correct: int = 0
    stage2_total: int = 0

    @property
    def interception_rate(self) -> float:
        total = self.metrics.confusion.total
        return self.stage1_intercepted / total if total else 0.0

    @property
    def stage2_accuracy(self) -> float:
        return self.stage2_correct / self.stage2_total if self.stage2_total else 0.0

    def to_dict(self) -> dict:
        out = {
            "subset": self.name,
            "metrics": self.metrics.to_dict(),
            "stage1_interception_rate": self.interception_rate,
            "stage2_accuracy": self.stage2_accuracy,
            "remaining_samples": self.stage2_total,
        }
        if self.quality is not None:
            out["quality"] = self.quality.to_dict()
        return out


@dataclass
class EvalReport:
    subsets: list[SubsetReport] = field(default_factory=list)

    def overall(self) -> Metrics:
        cm = ConfusionCounts()
        for s in self.subsets:
            cm = cm.merged(s.metrics.confusion)
        return metrics_from_confusion(cm)

    def to_dict(self) -> dict:
        return {
            "overall": self.overall().to_dict(),
            "subsets": [s.to_dict() for s in self.subsets],
        }


def correlation_rows(report: EvalReport) -> list[dict]:
    """(subset, composite, stage-2 accuracy, remaining count) rows."""
    rows = []
    for s in report.subsets:
        rows.append({
            "subset": s.name,
            "composite_quality": s.quality.composite if s.quality else "",
            "stage2_accuracy": s.stage2_accuracy,
            "remaining_samples": s.stage2_total,
        })
    return rows


def write_correlation_csv(report: EvalReport, path) -> None:
    """Emit the quality-vs-accuracy table for external plotting."""
    rows = correlation_rows(report)
    with open(Path(path), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=[
            "subset", "composite_quality", "stage2_accuracy", "remaining_samples",
        ])
        writer.writeheader()
        writer.writerows(rows)
