"""Hits@N and delay-tolerant precision/recall."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .detector import ScoreRecord, top_k_anomalies

__all__ = [
    "GroundTruth",
    "hits_at_n",
    "precision_at_delay",
    "recall_at_delay",
    "pr_delay_table",
    "predictions_from_labels",
]

KINDS = ("event", "change", "anomaly")


@dataclass(frozen=True)
class GroundTruth:
    anomalies: frozenset
    kinds: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "anomalies", frozenset(int(t) for t in self.anomalies))
        for t, kind in self.kinds.items():
            if kind not in KINDS:
                raise ValueError(f"unknown truth kind {kind!r} at t={t}")

    @classmethod
    def from_labels(cls, labels: Sequence[str]) -> "GroundTruth":
        """From per-step labels (index 0 is t=1); anything but ``none`` is an anomaly."""
        kinds = {t: lab for t, lab in enumerate(labels, start=1) if lab != "none"}
        return cls(frozenset(kinds), kinds)

    def check_range(self, T: int) -> None:
        bad = [t for t in self.anomalies if not 1 <= t <= T]
        if bad:
            raise ValueError(f"truth timesteps outside 1..{T}: {sorted(bad)}")

    def __len__(self):
        return len(self.anomalies)


def hits_at_n(records: Sequence[ScoreRecord], truth: GroundTruth, n: int, include_warmup: bool = False) -> float:
    """Share of the ``n`` top-scoring steps that are true anomalies."""
    if n < 1:
        raise ValueError("N must be >= 1")
    top = top_k_anomalies(records, n, include_warmup=include_warmup)
    return len(set(top) & truth.anomalies) / n


def _delays(preds: Iterable[int], truth: Iterable[int]) -> np.ndarray:
    p = np.asarray(sorted(set(int(x) for x in preds)), dtype=np.int64)
    t = np.asarray(sorted(set(int(x) for x in truth)), dtype=np.int64)
    return np.subtract.outer(p, t)


def precision_at_delay(preds: Iterable[int], truth: GroundTruth, s: int, mode: str = "window") -> float:
    """Share of predictions landing ``0..s`` steps after some true anomaly.

    ``mode="literal"`` applies ``inf_j (pred - t_j) <= s`` verbatim, which
    also accepts any detection made before the last true anomaly. Returns
    1.0 when there are no predictions.
    """
    if s < 0:
        raise ValueError("delay must be non-negative")
    d = _delays(preds, truth.anomalies)
    if d.shape[0] == 0:
        return 1.0
    if d.shape[1] == 0:
        return 0.0
    if mode == "window":
        ok = ((d >= 0) & (d <= s)).any(axis=1)
    elif mode == "literal":
        ok = d.min(axis=1) <= s
    else:
        raise ValueError(f"unknown delay mode {mode!r}")
    return float(ok.mean())


def recall_at_delay(preds: Iterable[int], truth: GroundTruth, s: int, mode: str = "window") -> float:
    """Share of true anomalies detected ``0..s`` steps after they occur.

    Returns 1.0 when the truth set is empty.
    """
    if s < 0:
        raise ValueError("delay must be non-negative")
    d = _delays(preds, truth.anomalies)
    if d.shape[1] == 0:
        return 1.0
    if d.shape[0] == 0:
        return 0.0
    if mode == "window":
        ok = ((d >= 0) & (d <= s)).any(axis=0)
    elif mode == "literal":
        ok = d.min(axis=0) <= s
    else:
        raise ValueError(f"unknown delay mode {mode!r}")
    return float(ok.mean())


def pr_delay_table(preds: Iterable[int], truth: GroundTruth, max_delay: int, mode: str = "window") -> list[dict]:
    """One row per delay ``0..max_delay`` with precision, recall and empty-set flags."""
    preds = list(preds)
    rows = []
    for s in range(max_delay + 1):
        rows.append({
            "delay": s,
            "precision": precision_at_delay(preds, truth, s, mode),
            "recall": recall_at_delay(preds, truth, s, mode),
            "empty_predictions": not preds,
            "empty_truth": not truth.anomalies,
        })
    return rows


def predictions_from_labels(records: Sequence[ScoreRecord]) -> list[int]:
    return [r.t for r in records if r.label in ("event", "change")]
