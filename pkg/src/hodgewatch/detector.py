"""Sliding-window scoring of spectral features and event/change labelling."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import AllZeroContext, EmptyHistory, WindowTooSmall
from .spectra import normalize_feature

logger = logging.getLogger(__name__)

__all__ = [
    "DetectorConfig",
    "ScoreRecord",
    "StreamDetector",
    "Calibration",
    "LABELS",
    "context_matrix",
    "typical_spectrum",
    "angular_score",
    "score_stream",
    "calibrate_threshold",
    "classify",
    "top_k_anomalies",
]

LABELS = ("warmup", "normal", "event", "change")
TAU_FLOOR = 1e-6


@dataclass(frozen=True)
class DetectorConfig:
    short_window: int = 5
    long_window: int = 10
    typical_method: str = "svd"
    threshold: float | None = None
    init_window: int | None = None
    persistence_window: int | None = None
    top_k: int | None = None

    def __post_init__(self):
        if not 1 <= self.short_window <= self.long_window:
            raise ValueError("need 1 <= short_window <= long_window")
        if self.typical_method not in ("svd", "mean"):
            raise ValueError(f"unknown typical method {self.typical_method!r}")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.persistence_window is not None and self.persistence_window < 1:
            raise ValueError("persistence_window must be >= 1")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")

    @property
    def persistence(self) -> int:
        return self.persistence_window if self.persistence_window is not None else self.short_window


@dataclass(frozen=True)
class ScoreRecord:
    t: int
    z_short: float
    z_long: float
    z: float
    warmup: bool
    label: str | None = None


def context_matrix(history: Sequence[np.ndarray], w: int) -> np.ndarray:
    """Column-stack of the last ``w`` normalized spectra, oldest first.

    Fewer than ``w`` entries give a partial context.
    """
    if len(history) == 0:
        raise EmptyHistory("context needs at least one previous spectrum")
    if w < 1:
        raise ValueError("window must be >= 1")
    return np.column_stack(list(history[-w:]))


def typical_spectrum(C: np.ndarray, method: str = "svd") -> np.ndarray:
    """Unit vector summarising the context columns.

    ``mean`` normalizes the column average; ``svd`` takes the dominant left
    singular vector with its sign fixed to a non-negative entry sum.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    if not np.any(C):
        raise AllZeroContext("every context column is zero")
    if method == "mean":
        u = C.mean(axis=1)
        return u / np.linalg.norm(u)
    if method == "svd":
        U, _, _ = np.linalg.svd(C, full_matrices=False)
        u = U[:, 0]
        if u.sum() < 0:
            u = -u
        return u / np.linalg.norm(u)
    raise ValueError(f"unknown typical method {method!r}")


def angular_score(current: np.ndarray | None, typical: np.ndarray | None) -> float:
    """``1 - current . typical`` clamped to [0, 1]; ``None`` marks a zero vector."""
    if current is None and typical is None:
        return 0.0
    if current is None or typical is None:
        return 1.0
    z = 1.0 - float(np.dot(current, typical))
    return min(1.0, max(0.0, z))


class StreamDetector:
    """Online scorer: feed one raw feature per timestep, get a record back."""

    def __init__(self, cfg: DetectorConfig):
        self.cfg = cfg
        self.t = 0
        self._history: deque[np.ndarray] = deque(maxlen=cfg.long_window)

    def _typical(self, w: int) -> np.ndarray | None:
        C = context_matrix(list(self._history), w)
        try:
            return typical_spectrum(C, self.cfg.typical_method)
        except AllZeroContext:
            return None

    def update(self, feature) -> ScoreRecord:
        unit, is_zero = normalize_feature(feature)
        if self._history and unit.shape != self._history[0].shape:
            raise ValueError("feature length changed mid-stream")
        self.t += 1
        current = None if is_zero else unit
        if self.t == 1:
            zs = zl = 0.0
        else:
            zs = angular_score(current, self._typical(self.cfg.short_window))
            zl = angular_score(current, self._typical(self.cfg.long_window))
        self._history.append(unit)
        return ScoreRecord(self.t, zs, zl, max(zs, zl), self.t <= self.cfg.long_window)


def score_stream(features: Iterable, cfg: DetectorConfig) -> list[ScoreRecord]:
    """Score a whole sequence; record ``t`` only sees features ``1..t``."""
    det = StreamDetector(cfg)
    return [det.update(f) for f in features]


class Calibration(NamedTuple):
    tau: float
    degenerate: bool


def calibrate_threshold(scores: Sequence[float], method: str = "mean_std", quantile: float = 0.99) -> Calibration:
    """Threshold from initialization-window scores.

    ``mean_std`` gives mean + 3 std; ``quantile`` the given quantile. The
    result is clamped to [1e-6, 1]; hitting the floor marks it degenerate.
    """
    z = np.asarray(list(scores), dtype=float)
    if z.size < 5:
        raise WindowTooSmall(f"need >= 5 scores to calibrate, got {z.size}")
    if method == "mean_std":
        tau = float(z.mean() + 3.0 * z.std())
    elif method == "quantile":
        tau = float(np.quantile(z, quantile))
    else:
        raise ValueError(f"unknown calibration method {method!r}")
    degenerate = tau < TAU_FLOOR
    if degenerate:
        logger.warning("calibration window is degenerate; threshold floored at %g", TAU_FLOOR)
    return Calibration(min(1.0, max(TAU_FLOOR, tau)), degenerate)


def classify(
    records: Sequence[ScoreRecord],
    tau: float,
    persistence_window: int,
    candidates: Iterable[int] | None = None,
) -> list[ScoreRecord]:
    """Label records as warmup, normal, event or change.

    A record is anomalous when ``z > tau`` (or, if ``candidates`` is given,
    when its timestep is listed). It is a change point when the mean score of
    the next ``persistence_window`` records (fewer at the tail) exceeds
    ``tau / 2``, otherwise an event.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    if persistence_window < 1:
        raise ValueError("persistence_window must be >= 1")
    chosen = set(candidates) if candidates is not None else None
    z = np.array([r.z for r in records], dtype=float)
    out = []
    for i, r in enumerate(records):
        if r.warmup:
            label = "warmup"
        else:
            hit = (r.t in chosen) if chosen is not None else r.z > tau
            if not hit:
                label = "normal"
            else:
                nxt = z[i + 1:i + 1 + persistence_window]
                label = "change" if nxt.size and nxt.mean() > tau / 2 else "event"
        out.append(replace(r, label=label))
    return out


def top_k_anomalies(records: Sequence[ScoreRecord], k: int, include_warmup: bool = False) -> list[int]:
    """Timesteps of the ``k`` largest scores; ties go to the earlier step."""
    if k < 1:
        raise ValueError("k must be >= 1")
    pool = [r for r in records if include_warmup or not r.warmup]
    ranked = sorted(pool, key=lambda r: (-r.z, r.t))
    return [r.t for r in ranked[:k]]
