"""Confusion-count report shared by the candidate baseline and the models."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import InternalError


def safe_ratio(num: int, den: int) -> float:
    """num/den with 0 for an empty denominator, so reports stay numeric."""
    return num / den if den else 0.0


@dataclass(frozen=True)
class EvalReport:
    """Confusion counts plus derived metrics for one evaluation mode."""

    mode: str
    cutoff: float
    pairs: int
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    auc: float | None

    @classmethod
    def from_counts(
        cls,
        mode: str,
        cutoff: float,
        tp: int,
        fp: int,
        tn: int,
        fn: int,
        auc: float | None,
    ) -> "EvalReport":
        total = tp + fp + tn + fn
        if total <= 0:
            raise InternalError("evaluation produced zero pairs")
        return cls(
            mode=mode,
            cutoff=cutoff,
            pairs=total,
            tp=tp,
            fp=fp,
            tn=tn,
            fn=fn,
            accuracy=safe_ratio(tp + tn, total),
            precision=safe_ratio(tp, tp + fp),
            recall=safe_ratio(tp, tp + fn),
            auc=auc,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode": self.mode,
                "cutoff": self.cutoff,
                "pairs": self.pairs,
                "tp": self.tp,
                "fp": self.fp,
                "tn": self.tn,
                "fn": self.fn,
                "accuracy": self.accuracy,
                "precision": self.precision,
                "recall": self.recall,
                "auc": self.auc,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        obj = json.loads(text)
        return cls(**obj)
