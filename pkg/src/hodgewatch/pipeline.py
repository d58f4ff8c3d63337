"""End-to-end detection: features, scores, threshold and labels."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .complex import SimplicialComplex
from .detector import (
    TAU_FLOOR,
    DetectorConfig,
    ScoreRecord,
    calibrate_threshold,
    classify,
    score_stream,
    top_k_anomalies,
)
from .spectra import snapshot_features

logger = logging.getLogger(__name__)

__all__ = ["RunConfig", "extract_features", "label_records", "run_detection"]

DEFAULT_NUM_SV = 10


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a detection run.

    Exactly one of ``num_sv`` (per block) and ``total_sv`` sets the spectral
    budget; ``num_sv=10`` when neither is given. At most one of
    ``threshold``, ``init_window`` and ``top_k`` picks the labelling rule;
    with none, the threshold is calibrated on the first ``long_window + 5``
    steps.
    """

    max_rank: int = 2
    num_sv: int | None = None
    total_sv: int | None = None
    part: str = "full"
    weighted: bool = False
    svd: str = "auto"
    seed: int = 0
    typical: str = "svd"
    short_window: int = 5
    long_window: int = 10
    persistence_window: int | None = None
    threshold: float | None = None
    init_window: int | None = None
    top_k: int | None = None
    include_warmup: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.num_sv is not None and self.total_sv is not None:
            raise ValueError("give num_sv or total_sv, not both")
        if self.max_rank < 0:
            raise ValueError("max_rank must be >= 0")
        rules = [x is not None for x in (self.threshold, self.init_window, self.top_k)]
        if sum(rules) > 1:
            raise ValueError("give at most one of threshold, init_window, top_k")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.detector_config()

    @property
    def budget(self) -> tuple[int, str]:
        if self.total_sv is not None:
            return self.total_sv, "total"
        return (self.num_sv if self.num_sv is not None else DEFAULT_NUM_SV), "per_block"

    def detector_config(self) -> DetectorConfig:
        return DetectorConfig(
            short_window=self.short_window,
            long_window=self.long_window,
            typical_method=self.typical,
            threshold=self.threshold,
            init_window=self.init_window,
            persistence_window=self.persistence_window,
            top_k=self.top_k,
        )

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def extract_features(sequence: Sequence[SimplicialComplex], cfg: RunConfig) -> np.ndarray:
    """Stack one feature row per snapshot; order is preserved with workers."""
    budget, mode = cfg.budget

    def one(c):
        return snapshot_features(c, cfg.max_rank, budget, part=cfg.part, weighted=cfg.weighted,
                                 budget_mode=mode, method=cfg.svd, seed=cfg.seed).values

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(one, sequence))
    else:
        rows = [one(c) for c in sequence]
    return np.vstack(rows)


def label_records(records: Sequence[ScoreRecord], cfg: RunConfig) -> tuple[list[ScoreRecord], float]:
    """Apply the configured labelling rule; returns labelled records and tau."""
    det = cfg.detector_config()
    if cfg.top_k is not None:
        tops = top_k_anomalies(records, cfg.top_k, include_warmup=cfg.include_warmup)
        zmin = min((r.z for r in records if r.t in set(tops)), default=1.0)
        tau = min(1.0, max(TAU_FLOOR, zmin))
        return classify(records, tau, det.persistence, candidates=tops), tau
    if cfg.threshold is not None:
        tau = min(1.0, max(TAU_FLOOR, cfg.threshold))
    else:
        init = cfg.init_window if cfg.init_window is not None else cfg.long_window + 5
        window = [r.z for r in records if r.t <= init and not r.warmup]
        tau = calibrate_threshold(window).tau
    return classify(records, tau, det.persistence), tau


def run_detection(sequence: Sequence[SimplicialComplex], cfg: RunConfig) -> tuple[list[ScoreRecord], float]:
    """Features, scores and labels for a whole sequence."""
    feats = extract_features(sequence, cfg)
    records = score_stream(feats, cfg.detector_config())
    return label_records(records, cfg)
