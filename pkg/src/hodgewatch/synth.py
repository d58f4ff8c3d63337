"""Stochastic-block-model sequences of simplicial complexes with planted anomalies.

Graphs over a fixed node set are stored internally as boolean vectors over
the dyads ``(i, j), i < j`` in lexicographic order. That is also the order
in which random numbers are drawn, so a (schedule, seed) pair always yields
the same sequence.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .complex import SimplicialComplex, TemporalSequence, _locate, clique_lift
from .errors import MissingTriangleProbability, NodeSetMismatch, UnknownSchedule

__all__ = [
    "SegmentParams",
    "GenerationSchedule",
    "community_of",
    "sample_sbm",
    "evolve_graph",
    "lift_snapshot",
    "run_schedule",
    "builtin_schedules",
    "BUILTIN_NAMES",
    "TRUTH_KINDS",
]

TRUTH_KINDS = ("none", "event", "change")
MODES = ("clique_lift", "data_informed")


@dataclass(frozen=True)
class SegmentParams:
    t_start: int
    t_end: int
    n_nodes: int
    n_communities: int
    p_in: float
    p_ex: float
    alpha: float
    p_triangle: float | None = None
    truth: str = "none"

    def __post_init__(self):
        if self.t_start > self.t_end or self.t_start < 1:
            raise ValueError(f"bad step range {self.t_start}..{self.t_end}")
        if self.n_nodes < 1 or not 1 <= self.n_communities <= self.n_nodes:
            raise ValueError("need 1 <= n_communities <= n_nodes")
        probs = [self.p_in, self.p_ex, self.alpha]
        if self.p_triangle is not None:
            probs.append(self.p_triangle)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.truth not in TRUTH_KINDS:
            raise ValueError(f"unknown truth kind {self.truth!r}")


@dataclass(frozen=True)
class GenerationSchedule:
    segments: tuple[SegmentParams, ...]
    mode: str = "clique_lift"
    max_rank: int = 2
    seed: int = 0
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.mode not in MODES:
            raise ValueError(f"unknown generation mode {self.mode!r}")
        if not self.segments:
            raise ValueError("schedule has no segments")
        expected = 1
        for seg in self.segments:
            if seg.t_start != expected:
                raise ValueError(f"segments must tile 1..T; gap or overlap at t={expected}")
            expected = seg.t_end + 1
        if self.mode == "data_informed" and any(s.p_triangle is None for s in self.segments):
            raise MissingTriangleProbability("data_informed schedules need p_triangle on every segment")

    @property
    def length(self) -> int:
        return self.segments[-1].t_end

    def segment_at(self, t: int) -> SegmentParams:
        for seg in self.segments:
            if seg.t_start <= t <= seg.t_end:
                return seg
        raise IndexError(t)

    def truth_labels(self) -> list[str]:
        """Per-step truth: a segment's kind marks its first step (every step for events)."""
        labels = ["none"] * self.length
        for seg in self.segments:
            if seg.truth == "event":
                for t in range(seg.t_start, seg.t_end + 1):
                    labels[t - 1] = "event"
            elif seg.truth == "change":
                labels[seg.t_start - 1] = "change"
        return labels

    def with_nodes(self, n_nodes: int) -> "GenerationSchedule":
        return replace(self, segments=tuple(replace(s, n_nodes=n_nodes) for s in self.segments))

    def with_seed(self, seed: int) -> "GenerationSchedule":
        return replace(self, seed=seed)


def community_of(n_nodes: int, n_communities: int) -> np.ndarray:
    """Contiguous blocks; the first ``n % c`` communities get one extra node."""
    base, extra = divmod(n_nodes, n_communities)
    sizes = np.full(n_communities, base)
    sizes[:extra] += 1
    return np.repeat(np.arange(n_communities), sizes)


@lru_cache(maxsize=8)
def _dyads(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    iu, ju = np.triu_indices(n_nodes, 1)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


@lru_cache(maxsize=32)
def _dyad_probs(n_nodes: int, n_communities: int, p_in: float, p_ex: float) -> np.ndarray:
    iu, ju = _dyads(n_nodes)
    comm = community_of(n_nodes, n_communities)
    p = np.where(comm[iu] == comm[ju], p_in, p_ex)
    p.setflags(write=False)
    return p


def _probs(params: SegmentParams) -> np.ndarray:
    return _dyad_probs(params.n_nodes, params.n_communities, float(params.p_in), float(params.p_ex))


def _to_edges(dyads: np.ndarray, n_nodes: int) -> np.ndarray:
    iu, ju = _dyads(n_nodes)
    return np.column_stack([iu[dyads], ju[dyads]])


def _to_dyads(edges: np.ndarray, n_nodes: int) -> np.ndarray:
    edges = np.sort(np.asarray(edges, dtype=np.int64).reshape(-1, 2), axis=1)
    if edges.size and (edges.min() < 0 or edges.max() >= n_nodes):
        raise NodeSetMismatch(f"edge endpoint outside node set 0..{n_nodes - 1}")
    i, j = edges[:, 0], edges[:, 1]
    # position of (i, j) in row-major upper-triangle order
    pos = i * n_nodes - i * (i + 1) // 2 + (j - i - 1)
    out = np.zeros(n_nodes * (n_nodes - 1) // 2, dtype=bool)
    out[pos] = True
    return out


def _sample_dyads(params: SegmentParams, rng: np.random.Generator) -> np.ndarray:
    p = _probs(params)
    return rng.random(p.shape[0]) < p


def _evolve_dyads(prev: np.ndarray, params: SegmentParams, rng: np.random.Generator) -> np.ndarray:
    p = _probs(params)
    if prev.shape != p.shape:
        raise NodeSetMismatch("previous graph lives on a different node set")
    resample = rng.random(p.shape[0]) < params.alpha
    fresh = rng.random(p.shape[0]) < p
    return np.where(resample, fresh, prev)


def sample_sbm(params: SegmentParams, rng: np.random.Generator) -> np.ndarray:
    """Edge array of a fresh SBM draw; nodes are ``0..n_nodes-1``."""
    return _to_edges(_sample_dyads(params, rng), params.n_nodes)


def evolve_graph(prev: np.ndarray, params: SegmentParams, rng: np.random.Generator) -> np.ndarray:
    """Each dyad keeps its status with probability ``1 - alpha``, else is redrawn."""
    return _to_edges(_evolve_dyads(_to_dyads(prev, params.n_nodes), params, rng), params.n_nodes)


@dataclass
class _TriangleState:
    cliques: np.ndarray
    filled: np.ndarray


def _close_triangles(
    cliques: np.ndarray,
    prev: _TriangleState | None,
    p_triangle: float,
    alpha: float,
    n_nodes: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Fill mask over the current 3-cliques.

    A 3-clique that was also a 3-clique one step earlier keeps its previous
    status with probability ``1 - alpha`` and is redrawn otherwise; a new
    3-clique is filled with probability ``p_triangle``. Triangles whose
    boundary broke vanish with their clique.
    """
    m = cliques.shape[0]
    redraw = rng.random(m)
    fresh = rng.random(m) < p_triangle
    if prev is None or prev.cliques.shape[0] == 0 or m == 0:
        return fresh
    pos = _locate(cliques, prev.cliques, np.arange(n_nodes))
    persisted = pos >= 0
    keep = persisted & (redraw >= alpha)
    out = fresh.copy()
    out[keep] = prev.filled[pos[keep]]
    return out


def _complex_from(verts: np.ndarray, edges: np.ndarray, triangles: np.ndarray | None) -> SimplicialComplex:
    layers = [verts.reshape(-1, 1)]
    if edges.shape[0]:
        layers.append(edges)
        if triangles is not None and triangles.shape[0]:
            layers.append(triangles)
    return SimplicialComplex(tuple(layers))


def lift_snapshot(
    edges: np.ndarray,
    mode: str,
    max_rank: int,
    p_triangle: float | None = None,
    rng: np.random.Generator | None = None,
    prev_complex: SimplicialComplex | None = None,
    alpha: float = 1.0,
    n_nodes: int | None = None,
) -> SimplicialComplex:
    """Turn a graph skeleton into a complex.

    ``clique_lift`` fills every clique up to ``max_rank``. ``data_informed``
    closes 3-cliques with probability ``p_triangle``, carrying over the
    status of 3-cliques that persist from ``prev_complex`` (see
    :func:`_close_triangles`).
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if n_nodes is None:
        n_nodes = int(edges.max()) + 1 if edges.size else 0
    verts = np.arange(n_nodes)
    if mode == "clique_lift":
        return clique_lift(edges, max_rank, vertices=verts)
    if mode != "data_informed":
        raise ValueError(f"unknown lift mode {mode!r}")
    if p_triangle is None:
        raise MissingTriangleProbability("data_informed lifting needs p_triangle")
    rng = rng if rng is not None else np.random.default_rng()
    skeleton = clique_lift(edges, 2, vertices=verts)
    cliques = skeleton.rank(2)
    prev = None
    if prev_complex is not None and prev_complex.rank_max >= 1:
        pc = clique_lift(prev_complex.rank(1), 2, vertices=prev_complex.vertices).rank(2)
        filled = _locate(pc, prev_complex.rank(2), prev_complex.vertices) >= 0
        prev = _TriangleState(pc, filled)
    mask = _close_triangles(cliques, prev, p_triangle, alpha, n_nodes, rng)
    tris = cliques[mask] if max_rank >= 2 else None
    return _complex_from(verts, skeleton.rank(1) if max_rank >= 1 else np.zeros((0, 2), np.int64), tris)


def run_schedule(s: GenerationSchedule) -> tuple[TemporalSequence, list[str]]:
    """Generate the sequence and the per-step truth labels.

    Event segments branch off the current state: the event snapshot is drawn
    from the override parameters, and the following step evolves from the
    last non-event state, so the parameters and the graph both revert.
    """
    rng = np.random.default_rng(s.seed)
    snapshots = []
    base_dyads = None
    base_tri: _TriangleState | None = None
    n_nodes = s.segments[0].n_nodes
    for t in range(1, s.length + 1):
        seg = s.segment_at(t)
        if seg.n_nodes != n_nodes:
            raise NodeSetMismatch("all segments must share one node set")
        if base_dyads is None:
            dyads = _sample_dyads(seg, rng)
        else:
            dyads = _evolve_dyads(base_dyads, seg, rng)
        edges = _to_edges(dyads, n_nodes)
        verts = np.arange(n_nodes)
        if s.mode == "clique_lift":
            snap = clique_lift(edges, s.max_rank, vertices=verts)
            tri_state = None
        else:
            cliques = clique_lift(edges, 2, vertices=verts).rank(2)
            alpha = 1.0 if base_dyads is None else seg.alpha
            filled = _close_triangles(cliques, base_tri, seg.p_triangle, alpha, n_nodes, rng)
            tri_state = _TriangleState(cliques, filled)
            tris = cliques[filled] if s.max_rank >= 2 else None
            snap = _complex_from(verts, edges if s.max_rank >= 1 else np.zeros((0, 2), np.int64), tris)
        snapshots.append(snap)
        if seg.truth != "event" or base_dyads is None:
            base_dyads, base_tri = dyads, tri_state
    return TemporalSequence(tuple(snapshots)), s.truth_labels()


# Rows: (t_start, t_end, n_communities, p_in, p_ex, p_triangle, truth).
# Anomaly rows are the single step where the parameters switch.
_HYBRID = [
    (1, 16, 4, 0.25, 0.05, None, "none"),
    (17, 17, 4, 0.25, 0.15, None, "event"),
    (18, 31, 4, 0.25, 0.05, None, "none"),
    (32, 32, 10, 0.25, 0.05, None, "change"),
    (33, 61, 10, 0.25, 0.05, None, "none"),
    (62, 62, 10, 0.25, 0.15, None, "event"),
    (63, 76, 10, 0.25, 0.05, None, "none"),
    (77, 77, 2, 0.5, 0.05, None, "change"),
    (78, 91, 2, 0.5, 0.05, None, "none"),
    (92, 92, 2, 0.5, 0.15, None, "event"),
    (93, 106, 2, 0.5, 0.05, None, "none"),
    (107, 107, 4, 0.25, 0.05, None, "change"),
    (108, 136, 4, 0.25, 0.05, None, "none"),
    (137, 137, 4, 0.25, 0.15, None, "event"),
    (138, 150, 4, 0.25, 0.05, None, "none"),
]

# verbatim, including p_in = 0.25 in the 10-community segment and 0.00755
_LARGE = [
    (1, 16, 4, 0.0125, 0.0025, None, "none"),
    (17, 17, 4, 0.0125, 0.0075, None, "event"),
    (18, 31, 4, 0.0125, 0.0025, None, "none"),
    (32, 32, 10, 0.25, 0.0025, None, "change"),
    (33, 61, 10, 0.25, 0.0025, None, "none"),
    (62, 62, 10, 0.25, 0.0075, None, "event"),
    (63, 76, 10, 0.25, 0.0025, None, "none"),
    (77, 77, 2, 0.025, 0.0025, None, "change"),
    (78, 91, 2, 0.025, 0.0025, None, "none"),
    (92, 92, 2, 0.025, 0.00755, None, "event"),
    (93, 100, 2, 0.025, 0.0025, None, "none"),
]

_TRIANGLE_CLOSING = [
    (1, 9, 4, 0.25, 0.05, 0.8, "none"),
    (10, 10, 4, 0.25, 0.15, 0.8, "event"),
    (11, 19, 4, 0.25, 0.05, 0.8, "none"),
    (20, 20, 4, 0.25, 0.05, 0.7, "change"),
    (21, 29, 4, 0.25, 0.05, 0.7, "none"),
    (30, 30, 4, 0.25, 0.15, 0.7, "event"),
    (31, 39, 4, 0.25, 0.05, 0.7, "none"),
    (40, 40, 4, 0.5, 0.05, 0.5, "change"),
    (41, 49, 4, 0.5, 0.05, 0.5, "none"),
    (50, 50, 4, 0.5, 0.05, 0.5, "change"),
    (51, 60, 4, 0.5, 0.05, 0.5, "none"),
]

_TEASER = [
    (1, 9, 3, 0.25, 0.05, 0.09, "none"),
    (10, 10, 3, 0.15, 0.05, 0.09, "event"),
    (11, 19, 3, 0.25, 0.05, 0.09, "none"),
    (20, 20, 3, 0.25, 0.15, 0.09, "change"),
    (21, 29, 3, 0.25, 0.15, 0.09, "none"),
    (30, 30, 3, 0.25, 0.15, 0.03, "change"),
    (31, 39, 3, 0.25, 0.15, 0.03, "none"),
]

# name -> (rows, n_nodes, baseline alpha, anomaly alpha, mode)
_BUILTINS = {
    "hybrid": (_HYBRID, 500, 0.1, 1.0, "clique_lift"),
    "resampled": (_HYBRID, 500, 1.0, 1.0, "clique_lift"),
    "large": (_LARGE, 10000, 0.1, 1.0, "clique_lift"),
    "triangle_closing": (_TRIANGLE_CLOSING, 500, 0.1, 1.0, "data_informed"),
    "teaser": (_TEASER, 30, 0.005, 1.0, "data_informed"),
}
BUILTIN_NAMES = tuple(_BUILTINS)


def builtin_schedules(name: str, seed: int = 0, n_nodes: int | None = None, max_rank: int = 2) -> GenerationSchedule:
    """The transcribed experiment schedules; ``n_nodes`` rescales the node count."""
    try:
        rows, default_n, alpha, anomaly_alpha, mode = _BUILTINS[name]
    except KeyError:
        raise UnknownSchedule(f"unknown schedule {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    n = default_n if n_nodes is None else n_nodes
    segments = tuple(
        SegmentParams(t0, t1, n, nc, p_in, p_ex, anomaly_alpha if truth != "none" else alpha, p_tri, truth)
        for t0, t1, nc, p_in, p_ex, p_tri, truth in rows
    )
    return GenerationSchedule(segments, mode, max_rank, seed, name=name)
