"""Text formats: simplex streams, edge streams, scores, truth and schedules.

Simplex stream: one simplex per line, ``t,v1 v2 ... vk[,w]``; ``#`` starts a
comment line and ``t,`` alone declares an empty snapshot. Timesteps must
cover ``1..T`` without gaps. If any line carries a weight, every snapshot is
weighted and unlisted weights default to 1.0.
"""
from __future__ import annotations

import csv
import logging
import math
import re
from collections import defaultdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .complex import SimplicialComplex, TemporalSequence, build_complex, clique_lift
from .detector import LABELS, ScoreRecord
from .errors import (
    ClosureViolation,
    DuplicateSimplex,
    HodgeWatchError,
    NonContiguousTimesteps,
    NonPositiveWeight,
    ParseError,
)
from .metrics import GroundTruth
from .synth import GenerationSchedule, SegmentParams

logger = logging.getLogger(__name__)

__all__ = [
    "parse_simplex_stream",
    "write_simplex_stream",
    "aggregate_edge_stream",
    "parse_duration",
    "write_scores",
    "read_scores",
    "write_truth",
    "read_truth",
    "write_schedule",
    "read_schedule",
    "SCORE_HEADER",
    "SCHEDULE_HEADER",
]

SCORE_HEADER = ["t", "z_short", "z_long", "z", "warmup", "label"]
SCHEDULE_HEADER = ["t_start", "t_end", "n_nodes", "n_communities", "p_in", "p_ex", "alpha", "p_triangle", "truth"]
TRUTH_HEADER = ["t", "kind"]


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def parse_simplex_stream(path, closure: str = "complete", max_rank: int | None = None) -> TemporalSequence:
    """Read a simplex stream into one closure-checked complex per timestep."""
    per_t: dict[int, list] = defaultdict(list)
    weighted = False
    for lineno, line in _data_lines(path):
        parts = line.split(",")
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 't,vertices[,weight]', got {line!r}", lineno, path)
        try:
            t = int(parts[0])
            verts = tuple(int(v) for v in parts[1].split())
            w = float(parts[2]) if len(parts) == 3 and parts[2].strip() else None
        except ValueError as exc:
            raise ParseError(str(exc), lineno, path) from None
        if t < 1:
            raise ParseError(f"timestep {t} < 1", lineno, path)
        if any(v < 0 for v in verts):
            raise ParseError("negative vertex id", lineno, path)
        if len(set(verts)) != len(verts):
            raise ParseError(f"repeated vertex in simplex {verts}", lineno, path)
        if w is not None:
            weighted = True
            if not w > 0 or math.isnan(w):
                raise NonPositiveWeight(f"{path}:{lineno}: weight {w} is not positive")
        per_t[t]
        if verts:
            per_t[t].append((lineno, tuple(sorted(verts)), w))
    if not per_t:
        raise ParseError("no timesteps found", None, path)
    T = max(per_t)
    missing = [t for t in range(1, T + 1) if t not in per_t]
    if missing:
        raise NonContiguousTimesteps(f"missing timesteps {missing[:10]}", None, path)

    snaps = []
    for t in range(1, T + 1):
        seen = {}
        for lineno, s, _ in per_t[t]:
            if s in seen:
                raise DuplicateSimplex(f"{path}:{lineno}: simplex {s} already listed on line {seen[s]}")
            seen[s] = lineno
        simplices = [s for _, s, _ in per_t[t]]
        weights = [w if w is not None else 1.0 for _, _, w in per_t[t]] if weighted else None
        try:
            snaps.append(build_complex(simplices, weights, closure=closure, max_rank=max_rank))
        except ClosureViolation as exc:
            raise ClosureViolation(f"{path}: t={t}: {exc}") from None
    return TemporalSequence(tuple(snaps))


def _fmt_weight(w: float) -> str:
    return repr(float(w))


def write_simplex_stream(seq: Iterable[SimplicialComplex], path) -> None:
    """Write maximal simplices (plus any face with a non-unit weight)."""
    with open(path, "w", encoding="utf-8") as fh:
        for t, c in enumerate(seq, start=1):
            if c.rank_max < 0:
                fh.write(f"{t},\n")
                continue
            if not c.is_weighted:
                for s in c.maximal_simplices():
                    fh.write(f"{t},{' '.join(map(str, s))}\n")
                continue
            keep = set(c.maximal_simplices())
            for k, rows in enumerate(c.simplices):
                w = c.weights[k]
                for row, wk in zip(rows.tolist(), w.tolist()):
                    s = tuple(row)
                    if s in keep or wk != 1.0:
                        fh.write(f"{t},{' '.join(map(str, s))},{_fmt_weight(wk)}\n")


_DURATION_UNITS = {"s": 1, "m": 60, "h": 3600, "d": 86400, "w": 604800}


def parse_duration(text) -> float:
    """Seconds in ``'86400'``, ``'1d'``, ``'7d'``, ``'12h'``, ``'1w'`` and the like."""
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*([smhdw]?)\s*", str(text).lower())
        if not m:
            raise ValueError(f"cannot parse duration {text!r}")
        value = float(m.group(1)) * _DURATION_UNITS.get(m.group(2) or "s")
    if value <= 0:
        raise ValueError("duration must be positive")
    return value


def _parse_timestamp(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    dt = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def aggregate_edge_stream(path, bucket, weight_rule: str = "count", origin: float | None = None) -> TemporalSequence:
    """Bucket timestamped edges ``timestamp,u,v[,weight]`` into graph snapshots.

    Buckets are consecutive windows of ``bucket`` (seconds or e.g. ``'1d'``)
    aligned to ``origin`` (default: epoch multiples). Repeated dyads within a
    bucket merge by ``count`` or by ``sum`` of weights. Empty buckets yield
    empty snapshots. Snapshots are weighted graph skeletons.
    """
    if weight_rule not in ("count", "sum"):
        raise ValueError(f"unknown weight rule {weight_rule!r}")
    width = parse_duration(bucket)
    events = []
    self_loops = 0
    for lineno, line in _data_lines(path):
        parts = [p.strip() for p in line.split(",")]
        if lineno == 1 and not parts[1].lstrip("-").isdigit():
            continue  # header
        if len(parts) not in (3, 4):
            raise ParseError(f"expected 'timestamp,u,v[,weight]', got {line!r}", lineno, path)
        try:
            ts = _parse_timestamp(parts[0])
            u, v = int(parts[1]), int(parts[2])
            w = float(parts[3]) if len(parts) == 4 and parts[3] else 1.0
        except ValueError as exc:
            raise ParseError(str(exc), lineno, path) from None
        if u < 0 or v < 0:
            raise ParseError("negative vertex id", lineno, path)
        if weight_rule == "sum" and not w > 0:
            raise NonPositiveWeight(f"{path}:{lineno}: weight {w} is not positive")
        if u == v:
            self_loops += 1
            continue
        events.append((ts, min(u, v), max(u, v), w))
    if not events:
        raise ParseError("no edge events found", None, path)
    if self_loops:
        logger.warning("%s: dropped %d self-loop events", path, self_loops)
    start = origin if origin is not None else math.floor(min(e[0] for e in events) / width) * width
    buckets: dict[int, dict] = defaultdict(lambda: defaultdict(float))
    for ts, u, v, w in events:
        b = int(math.floor((ts - start) / width))
        if b < 0:
            raise ParseError(f"timestamp {ts} precedes origin {start}", None, path)
        buckets[b][(u, v)] += 1.0 if weight_rule == "count" else w
    n_buckets = max(buckets) + 1
    snaps, stamps, empty = [], [], 0
    for b in range(n_buckets):
        dyads = buckets.get(b, {})
        stamps.append(start + b * width)
        if not dyads:
            empty += 1
            snaps.append(SimplicialComplex((), ()))
            continue
        edges = sorted(dyads)
        snaps.append(clique_lift(edges, 1, edge_weights=[dyads[e] for e in edges]))
    if empty:
        logger.warning("%s: %d of %d buckets are empty", path, empty, n_buckets)
    return TemporalSequence(tuple(snaps), tuple(stamps))


def write_scores(records: Sequence[ScoreRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORE_HEADER)
        for r in records:
            w.writerow([r.t, f"{r.z_short:.12g}", f"{r.z_long:.12g}", f"{r.z:.12g}",
                        int(r.warmup), r.label or ""])


def read_scores(path) -> list[ScoreRecord]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCORE_HEADER:
            raise ParseError(f"expected header {','.join(SCORE_HEADER)}", 1, path)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(SCORE_HEADER):
                raise ParseError(f"expected {len(SCORE_HEADER)} fields", lineno, path)
            try:
                t, zs, zl, z = int(row[0]), float(row[1]), float(row[2]), float(row[3])
                warm = {"0": False, "1": True}[row[4]]
            except (ValueError, KeyError):
                raise ParseError(f"malformed score row {row}", lineno, path) from None
            label = row[5] or None
            if label is not None and label not in LABELS:
                raise ParseError(f"unknown label {label!r}", lineno, path)
            out.append(ScoreRecord(t, zs, zl, z, warm, label))
    return out


def write_truth(truth: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_HEADER)
        for t in sorted(truth.anomalies):
            w.writerow([t, truth.kinds.get(t, "anomaly")])


def read_truth(path) -> GroundTruth:
    kinds = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRUTH_HEADER:
            raise ParseError(f"expected header {','.join(TRUTH_HEADER)}", 1, path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("expected 't,kind'", lineno, path)
            try:
                t = int(row[0])
            except ValueError:
                raise ParseError(f"bad timestep {row[0]!r}", lineno, path) from None
            if row[1] not in ("event", "change", "anomaly"):
                raise ParseError(f"unknown kind {row[1]!r}", lineno, path)
            if t < 1:
                raise ParseError(f"timestep {t} < 1", lineno, path)
            kinds[t] = row[1]
    return GroundTruth(frozenset(kinds), kinds)


def write_schedule(s: GenerationSchedule, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCHEDULE_HEADER)
        for seg in s.segments:
            w.writerow([seg.t_start, seg.t_end, seg.n_nodes, seg.n_communities, repr(seg.p_in),
                        repr(seg.p_ex), repr(seg.alpha),
                        "" if seg.p_triangle is None else repr(seg.p_triangle), seg.truth])


def read_schedule(path, seed: int = 0, max_rank: int = 2) -> GenerationSchedule:
    """Schedule CSV; an empty ``p_triangle`` column selects clique lifting."""
    segments = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCHEDULE_HEADER:
            raise ParseError(f"expected header {','.join(SCHEDULE_HEADER)}", 1, path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SCHEDULE_HEADER):
                raise ParseError(f"expected {len(SCHEDULE_HEADER)} fields", lineno, path)
            try:
                seg = SegmentParams(
                    int(row[0]), int(row[1]), int(row[2]), int(row[3]), float(row[4]), float(row[5]),
                    float(row[6]), float(row[7]) if row[7] else None, row[8] or "none",
                )
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
            segments.append(seg)
    if not segments:
        raise ParseError("schedule has no rows", None, path)
    has_tri = {seg.p_triangle is not None for seg in segments}
    if len(has_tri) > 1:
        raise ParseError("p_triangle must be set on every row or on none", None, path)
    mode = "data_informed" if has_tri == {True} else "clique_lift"
    try:
        return GenerationSchedule(tuple(segments), mode, max_rank, seed, name=Path(path).stem)
    except (ValueError, HodgeWatchError) as exc:
        raise ParseError(str(exc), None, path) from None
