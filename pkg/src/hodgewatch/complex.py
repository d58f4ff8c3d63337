"""Simplicial complex snapshots, boundary matrices and clique lifting.

Simplices of rank ``k`` are stored as an ``(n_k, k + 1)`` integer array whose
rows are sorted ascending and whose row order is lexicographic. This gives
every complex a canonical form, so two complexes holding the same simplices
compare equal and produce identical boundary matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    ClosureViolation,
    DuplicateSimplex,
    MissingWeights,
    NonPositiveWeight,
    NotABijection,
    RankOutOfRange,
)

__all__ = [
    "SimplicialComplex",
    "TemporalSequence",
    "build_complex",
    "boundary_matrix",
    "weighted_boundary",
    "clique_lift",
    "permute_vertices",
    "check_closure",
]

# rows of the dense candidate matrix processed at once in clique_lift
_CLIQUE_CHUNK_CELLS = 2**24


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _lexsort_rows(a: np.ndarray) -> np.ndarray:
    """Permutation that sorts the rows of ``a`` lexicographically."""
    if a.shape[0] == 0:
        return np.arange(0, dtype=np.intp)
    return np.lexsort(a.T[::-1])


def _canonical(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.sort(a, axis=1)
    order = _lexsort_rows(a)
    return a[order], order


def _row_keys(rows: np.ndarray, vertices: np.ndarray):
    """Order-preserving scalar keys for simplex rows.

    Vertex ids are compacted to ``0..n-1`` and the row is read as a base-``n``
    number. Falls back to tuples when the key would overflow int64.
    """
    width = rows.shape[1]
    base = max(len(vertices), 1)
    compact = np.searchsorted(vertices, rows)
    if width == 0:
        return np.zeros(rows.shape[0], dtype=np.int64)
    if base ** width < 2**62:
        keys = np.zeros(rows.shape[0], dtype=np.int64)
        for j in range(width):
            keys = keys * base + compact[:, j]
        return keys
    return [tuple(r) for r in compact.tolist()]


def _locate(needles: np.ndarray, haystack: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Row index of each needle in the canonically sorted ``haystack``; -1 if absent."""
    if needles.shape[0] == 0:
        return np.zeros(0, dtype=np.intp)
    if haystack.shape[0] == 0 or len(vertices) == 0:
        return np.full(needles.shape[0], -1, dtype=np.intp)
    # needles may contain vertices unknown to `vertices`; guard them first
    pos = np.searchsorted(vertices, needles)
    pos = np.clip(pos, 0, len(vertices) - 1)
    known = np.all(vertices[pos] == needles, axis=1)
    hk = _row_keys(haystack, vertices)
    out = np.full(needles.shape[0], -1, dtype=np.intp)
    if isinstance(hk, list):
        lookup = {key: i for i, key in enumerate(hk)}
        nk = _row_keys(needles[known], vertices)
        out[known] = [lookup.get(key, -1) for key in nk]
        return out
    nk = _row_keys(needles[known], vertices)
    idx = np.searchsorted(hk, nk)
    idx = np.clip(idx, 0, len(hk) - 1)
    hit = hk[idx] == nk
    sub = np.where(hit, idx, -1)
    out[known] = sub
    return out


def _faces(rows: np.ndarray) -> list[np.ndarray]:
    """Faces of every row; entry ``i`` drops the ``i``-th vertex."""
    width = rows.shape[1]
    return [np.delete(rows, i, axis=1) for i in range(width)]


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """One snapshot of a simplicial complex.

    ``simplices[k]`` is an ``(n_k, k + 1)`` int64 array in canonical order.
    ``weights`` is either ``None`` or a tuple of positive float arrays aligned
    with ``simplices``.
    """

    simplices: tuple[np.ndarray, ...] = ()
    weights: tuple[np.ndarray, ...] | None = None
    _vertex_index: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        simplices = tuple(_frozen(np.asarray(s, dtype=np.int64).reshape(-1, k + 1))
                          for k, s in enumerate(self.simplices))
        # strip empty top ranks so rank_max is the top nonempty rank
        while simplices and simplices[-1].shape[0] == 0:
            simplices = simplices[:-1]
        object.__setattr__(self, "simplices", simplices)
        if self.weights is not None:
            weights = tuple(_frozen(np.asarray(w, dtype=float))
                            for w in self.weights[: len(simplices)])
            object.__setattr__(self, "weights", weights)
        verts = simplices[0][:, 0] if simplices else np.zeros(0, dtype=np.int64)
        object.__setattr__(self, "_vertex_index", verts)

    @property
    def rank_max(self) -> int:
        return len(self.simplices) - 1

    @property
    def vertices(self) -> np.ndarray:
        return self._vertex_index

    @property
    def is_weighted(self) -> bool:
        return self.weights is not None

    def count(self, k: int) -> int:
        if 0 <= k < len(self.simplices):
            return self.simplices[k].shape[0]
        return 0

    def counts(self) -> tuple[int, ...]:
        return tuple(s.shape[0] for s in self.simplices)

    def rank(self, k: int) -> np.ndarray:
        if 0 <= k < len(self.simplices):
            return self.simplices[k]
        return np.zeros((0, k + 1), dtype=np.int64)

    def weight(self, k: int) -> np.ndarray:
        if self.weights is None:
            raise MissingWeights("complex carries no weights")
        if 0 <= k < len(self.weights):
            return self.weights[k]
        return np.zeros(0)

    def simplex_list(self) -> list[tuple[int, ...]]:
        return [tuple(r) for s in self.simplices for r in s.tolist()]

    def maximal_simplices(self) -> list[tuple[int, ...]]:
        """Simplices that are not a face of any higher simplex, in rank order."""
        out = []
        for k, rows in enumerate(self.simplices):
            covered = np.zeros(rows.shape[0], dtype=bool)
            if k + 1 < len(self.simplices):
                for face in _faces(self.simplices[k + 1]):
                    idx = _locate(face, rows, self.vertices)
                    covered[idx[idx >= 0]] = True
            out.extend(tuple(r) for r in rows[~covered].tolist())
        return out

    def __eq__(self, other):
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        if len(self.simplices) != len(other.simplices):
            return False
        if not all(np.array_equal(a, b) for a, b in zip(self.simplices, other.simplices)):
            return False
        if (self.weights is None) != (other.weights is None):
            return False
        if self.weights is not None:
            return all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
        return True

    __hash__ = None

    def __repr__(self):
        return f"SimplicialComplex(counts={self.counts()}, weighted={self.is_weighted})"


@dataclass(frozen=True)
class TemporalSequence:
    """Snapshots indexed ``t = 1..T`` (stored zero-based)."""

    snapshots: tuple[SimplicialComplex, ...]
    timestamps: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        if len(self.snapshots) < 1:
            raise ValueError("a temporal sequence needs at least one snapshot")
        if self.timestamps is not None:
            ts = tuple(self.timestamps)
            if len(ts) != len(self.snapshots):
                raise ValueError("timestamps must align with snapshots")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]


def build_complex(
    simplex_list: Iterable[Iterable[int]],
    weights: Sequence[float] | None = None,
    closure: str = "complete",
    max_rank: int | None = None,
) -> SimplicialComplex:
    """Build a canonical complex from a list of vertex-id sets.

    With ``closure="complete"`` missing faces are inserted with weight 1.0;
    with ``closure="reject"`` a missing face raises :class:`ClosureViolation`.
    Simplices above ``max_rank`` are replaced by their ``max_rank`` faces
    (complete) or dropped (reject).
    """
    if closure not in ("complete", "reject"):
        raise ValueError(f"unknown closure policy {closure!r}")
    items = [tuple(sorted(set(int(v) for v in s))) for s in simplex_list]
    if weights is not None:
        weights = [float(w) for w in weights]
        if len(weights) != len(items):
            raise ValueError("weights must align with simplex_list")
        for s, w in zip(items, weights):
            if not w > 0:
                raise NonPositiveWeight(f"weight {w} of simplex {s} is not positive")
    seen = set()
    for s in items:
        if not s:
            raise ValueError("empty simplex")
        if s[0] < 0:
            raise ValueError(f"negative vertex id in {s}")
        if s in seen:
            raise DuplicateSimplex(f"simplex {s} listed twice")
        seen.add(s)

    given: dict[int, list[tuple[int, ...]]] = {}
    given_w: dict[int, list[float]] = {}
    for i, s in enumerate(items):
        k = len(s) - 1
        if max_rank is not None and k > max_rank:
            if closure == "reject":
                continue
            # expanded faces count as inserted faces
            for face in combinations(s, max_rank + 1):
                given.setdefault(max_rank, []).append(face)
                given_w.setdefault(max_rank, []).append(np.nan)
            continue
        given.setdefault(k, []).append(s)
        given_w.setdefault(k, []).append(weights[i] if weights is not None else 1.0)

    if not given:
        return SimplicialComplex((), () if weights is not None else None)
    top = max(given)
    arrays: list[np.ndarray] = []
    warrays: list[np.ndarray] = []
    for k in range(top + 1):
        rows = np.array(given.get(k, []), dtype=np.int64).reshape(-1, k + 1)
        w = np.array(given_w.get(k, []), dtype=float)
        if rows.shape[0]:
            # expanded faces may repeat; keep the first explicit weight
            rows, idx = np.unique(rows, axis=0, return_index=True)
            w = w[idx]
        arrays.append(rows)
        warrays.append(w)

    if closure == "reject":
        verts = np.unique(arrays[0][:, 0]) if arrays[0].size else np.zeros(0, np.int64)
        for k in range(1, top + 1):
            for face in _faces(arrays[k]):
                missing = _locate(face, arrays[k - 1], verts) < 0
                if missing.any():
                    bad = tuple(face[np.argmax(missing)].tolist())
                    raise ClosureViolation(f"face {bad} of a {k}-simplex is missing")
    else:
        for k in range(top, 0, -1):
            if arrays[k].shape[0] == 0:
                continue
            faces = np.concatenate(_faces(arrays[k]), axis=0)
            merged = np.unique(np.concatenate([arrays[k - 1], faces], axis=0), axis=0)
            mw = np.ones(merged.shape[0])
            if arrays[k - 1].shape[0]:
                verts = np.unique(merged)
                pos = _locate(arrays[k - 1], merged, verts)
                mw[pos] = warrays[k - 1]
            arrays[k - 1] = merged
            warrays[k - 1] = mw

    out_rows, out_w = [], []
    for rows, w in zip(arrays, warrays):
        rows, order = _canonical(rows)
        w = w[order]
        w = np.where(np.isnan(w), 1.0, w)
        out_rows.append(rows)
        out_w.append(w)
    return SimplicialComplex(tuple(out_rows), tuple(out_w) if weights is not None else None)


def check_closure(c: SimplicialComplex) -> bool:
    """Exhaustive face check: every face of every stored simplex is stored."""
    for k in range(1, c.rank_max + 1):
        for face in _faces(c.simplices[k]):
            if (_locate(face, c.simplices[k - 1], c.vertices) < 0).any():
                return False
    return True


def boundary_matrix(c: SimplicialComplex, k: int, mode: str = "signed") -> sp.csr_matrix:
    """Incidence matrix between (k-1)-simplices (rows) and k-simplices (columns).

    Signed mode gives the face obtained by deleting the ``i``-th vertex the
    sign ``(-1)**i``; unsigned mode stores ones.
    """
    if mode not in ("signed", "unsigned"):
        raise ValueError(f"unknown boundary mode {mode!r}")
    if not 1 <= k <= c.rank_max:
        raise RankOutOfRange(f"rank {k} outside 1..{c.rank_max}")
    cols_rows = c.simplices[k]
    lower = c.simplices[k - 1]
    n_cols = cols_rows.shape[0]
    rows, cols, vals = [], [], []
    col_idx = np.arange(n_cols)
    for i, face in enumerate(_faces(cols_rows)):
        r = _locate(face, lower, c.vertices)
        if (r < 0).any():
            raise ClosureViolation(f"complex is not closed at rank {k - 1}")
        rows.append(r)
        cols.append(col_idx)
        sign = -1.0 if (i % 2 and mode == "signed") else 1.0
        vals.append(np.full(n_cols, sign))
    B = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(lower.shape[0], n_cols),
    )
    return B.tocsr()


def weighted_boundary(c: SimplicialComplex, k: int) -> sp.csr_matrix:
    """Signed boundary scaled to ``W_{k-1}^{-1} B_k W_k``."""
    if c.weights is None:
        raise MissingWeights("weighted boundary requires simplex weights")
    B = boundary_matrix(c, k, "signed")
    lo, hi = c.weights[k - 1], c.weights[k]
    if (lo <= 0).any() or (hi <= 0).any():
        raise NonPositiveWeight(f"non-positive weight at rank {k - 1} or {k}")
    return (sp.diags(1.0 / lo) @ B @ sp.diags(hi)).tocsr()


def clique_lift(
    edges: Iterable[Sequence[int]],
    max_rank: int,
    vertices: Iterable[int] | None = None,
    edge_weights: Sequence[float] | None = None,
) -> SimplicialComplex:
    """Clique complex of a simple undirected graph, truncated at ``max_rank``.

    ``vertices`` adds isolated nodes. ``edge_weights`` (aligned with
    ``edges``) yields a weighted complex with unit weights elsewhere.
    """
    if max_rank < 0:
        raise ValueError("max_rank must be non-negative")
    e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                   dtype=np.int64).reshape(-1, 2)
    if (e[:, 0] == e[:, 1]).any():
        raise ValueError("self loops are not allowed")
    if (e < 0).any():
        raise ValueError("negative vertex id")
    e = np.sort(e, axis=1)
    ew = None
    if edge_weights is not None:
        ew = np.asarray(edge_weights, dtype=float)
        if ew.shape[0] != e.shape[0]:
            raise ValueError("edge_weights must align with edges")
        if (ew <= 0).any():
            raise NonPositiveWeight("edge weights must be positive")
    e, order = _canonical(e)
    if ew is not None:
        ew = ew[order]
    if e.shape[0] > 1 and (np.diff(e, axis=0) == 0).all(axis=1).any():
        raise DuplicateSimplex("edge listed twice")

    extra = np.asarray(list(vertices) if vertices is not None else [], dtype=np.int64)
    verts = np.unique(np.concatenate([e.ravel(), extra]))
    if verts.size == 0:
        return SimplicialComplex((), () if ew is not None else None)
    if (verts < 0).any():
        raise ValueError("negative vertex id")

    layers = [verts.reshape(-1, 1)]
    if max_rank >= 1 and e.shape[0]:
        layers.append(e)
    if max_rank >= 2 and e.shape[0]:
        n = verts.size
        ce = np.searchsorted(verts, e)
        up = np.zeros((n, n), dtype=bool)
        up[ce[:, 0], ce[:, 1]] = True
        current = ce
        for _ in range(2, max_rank + 1):
            chunk = max(1, _CLIQUE_CHUNK_CELLS // n)
            grown = []
            for start in range(0, current.shape[0], chunk):
                block = current[start:start + chunk]
                cand = up[block[:, 0]].copy()
                for j in range(1, block.shape[1]):
                    cand &= up[block[:, j]]
                r, w = np.nonzero(cand)
                grown.append(np.column_stack([block[r], w]))
            current = np.concatenate(grown, axis=0) if grown else np.zeros((0, current.shape[1] + 1), np.int64)
            if current.shape[0] == 0:
                break
            layers.append(verts[current])

    weights = None
    if ew is not None:
        weights = [np.ones(layer.shape[0]) for layer in layers]
        if len(layers) > 1:
            weights[1] = ew
    return SimplicialComplex(tuple(layers), tuple(weights) if weights is not None else None)


def permute_vertices(c: SimplicialComplex, perm: Mapping[int, int]) -> SimplicialComplex:
    """Relabel vertices through ``perm`` and restore canonical order."""
    verts = c.vertices
    src = np.array(list(perm.keys()), dtype=np.int64)
    dst = np.array(list(perm.values()), dtype=np.int64)
    if len(set(dst.tolist())) != len(dst) or len(set(src.tolist())) != len(src):
        raise NotABijection("permutation maps two ids to the same target")
    if not set(verts.tolist()) <= set(src.tolist()):
        raise NotABijection("permutation does not cover every vertex id")
    if (dst < 0).any():
        raise NotABijection("permutation targets must be non-negative")
    order = np.argsort(src)
    src, dst = src[order], dst[order]
    out_rows, out_w = [], []
    for k, rows in enumerate(c.simplices):
        mapped = dst[np.searchsorted(src, rows)]
        mapped, reorder = _canonical(mapped)
        out_rows.append(mapped)
        if c.weights is not None:
            out_w.append(c.weights[k][reorder])
    return SimplicialComplex(tuple(out_rows), tuple(out_w) if c.weights is not None else None)
