"""Hodge Laplacians and truncated spectral features."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .complex import SimplicialComplex, boundary_matrix, weighted_boundary
from .errors import ConvergenceFailure, MissingWeights

logger = logging.getLogger(__name__)

__all__ = [
    "PARTS",
    "SpectralFeature",
    "hodge_laplacian",
    "top_singular_values",
    "snapshot_features",
    "normalize_feature",
    "blocks_per_rank",
]

PARTS = ("down", "up", "full", "up_and_down")
_PART_ALIASES = {"both": "up_and_down"}

DENSE_MAX_DIM = 256
OVERSAMPLING = 10
POWER_ITERATIONS = 2


def _part(part: str) -> str:
    part = _PART_ALIASES.get(part, part)
    if part not in PARTS:
        raise ValueError(f"unknown Laplacian part {part!r}")
    return part


def blocks_per_rank(part: str) -> int:
    return 2 if _part(part) == "up_and_down" else 1


def _boundary(c: SimplicialComplex, k: int, weighted: bool):
    """Signed (optionally weighted) B_k, or None when B_k is zero by convention."""
    if k < 1 or k > c.rank_max:
        return None
    return weighted_boundary(c, k) if weighted else boundary_matrix(c, k, "signed")


def hodge_laplacian(c: SimplicialComplex, k: int, part: str = "full", weighted: bool = False) -> sp.csr_matrix:
    """``down = B_k^T B_k``, ``up = B_{k+1} B_{k+1}^T``, ``full = down + up``.

    With ``weighted`` the boundaries are replaced by ``W_{k-1}^{-1} B_k W_k``.
    """
    part = _part(part)
    if part == "up_and_down":
        raise ValueError("hodge_laplacian builds a single block; ask for 'down' or 'up'")
    if k < 0:
        raise ValueError("rank must be non-negative")
    if weighted and not c.is_weighted:
        raise MissingWeights("weighted Laplacian requires simplex weights")
    n = c.count(k)
    L = sp.csr_matrix((n, n))
    if n == 0:
        return L
    if part in ("down", "full"):
        B = _boundary(c, k, weighted)
        if B is not None:
            L = L + (B.T @ B)
    if part in ("up", "full"):
        B = _boundary(c, k + 1, weighted)
        if B is not None:
            L = L + (B @ B.T)
    return sp.csr_matrix(L)


def _gram_operator(c: SimplicialComplex, k: int, part: str, weighted: bool):
    """Smallest matrix sharing the nonzero spectrum of the requested block.

    ``B^T B`` and ``B B^T`` have the same nonzero eigenvalues, so a one-sided
    block is taken on whichever side is smaller. Zero padding hides the
    difference in dimension.
    """
    n = c.count(k)
    if n == 0:
        return sp.csr_matrix((0, 0))
    down = _boundary(c, k, weighted) if part in ("down", "full") else None
    up = _boundary(c, k + 1, weighted) if part in ("up", "full") else None
    if down is not None and up is not None:
        return hodge_laplacian(c, k, "full", weighted)
    B = down if down is not None else up
    if B is None:
        return sp.csr_matrix((n, n))
    if down is not None:
        # down block B^T B (n_k) vs B B^T (n_{k-1})
        return (B @ B.T).tocsr() if B.shape[0] < B.shape[1] else (B.T @ B).tocsr()
    # up block B B^T (n_k) vs B^T B (n_{k+1})
    return (B.T @ B).tocsr() if B.shape[1] < B.shape[0] else (B @ B.T).tocsr()


def _dense_top(m, l: int) -> np.ndarray:
    a = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)
    vals = np.linalg.eigvalsh(a)[::-1]
    return vals[:l]


def _lanczos_top(m, l: int, rng: np.random.Generator) -> np.ndarray:
    n = m.shape[0]
    v0 = rng.uniform(0.5, 1.5, size=n)
    ncv = min(n, max(2 * l + 1, 20))
    try:
        vals = eigsh(m, k=l, which="LA", v0=v0, ncv=ncv, tol=0, maxiter=20 * n,
                     return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise ConvergenceFailure(f"Lanczos did not converge for l={l}, n={n}") from exc
    return np.sort(vals)[::-1]


def _randomized_top(m, l: int, rng: np.random.Generator,
                    oversampling: int = OVERSAMPLING, power_iterations: int = POWER_ITERATIONS) -> np.ndarray:
    # range finder with subspace iteration; symmetric so A^T = A
    n = m.shape[0]
    width = min(n, l + oversampling)
    Y = m @ rng.standard_normal((n, width))
    Q, _ = np.linalg.qr(Y)
    for _ in range(power_iterations):
        Q, _ = np.linalg.qr(m @ Q)
    T = Q.T @ (m @ Q)
    vals = np.linalg.eigvalsh((T + T.T) / 2)[::-1]
    return vals[:l]


def top_singular_values(m, l: int, method: str = "auto", seed: int | np.random.Generator = 0) -> np.ndarray:
    """Largest ``min(l, dim)`` singular values of a symmetric PSD matrix, descending.

    For these matrices singular values coincide with eigenvalues, so the
    work is done with symmetric eigensolvers. Round-off negatives are
    clamped to zero.
    """
    if l < 1:
        raise ValueError("l must be at least 1")
    n = m.shape[0]
    if n == 0:
        return np.zeros(0)
    l_eff = min(l, n)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if method == "auto":
        if n <= DENSE_MAX_DIM:
            method = "dense"
        elif l_eff <= n / 10:
            method = "lanczos"
        else:
            method = "randomized"
    if method == "dense":
        vals = _dense_top(m, l_eff)
    elif method == "lanczos":
        # ARPACK needs l < n
        vals = _dense_top(m, l_eff) if l_eff >= n - 1 else _lanczos_top(sp.csr_matrix(m), l_eff, rng)
    elif method == "randomized":
        vals = _randomized_top(sp.csr_matrix(m), l_eff, rng)
    else:
        raise ValueError(f"unknown SVD method {method!r}")
    return np.maximum(vals, 0.0)


@dataclass(frozen=True)
class SpectralFeature:
    """Concatenated, zero-padded top singular values of one snapshot.

    Layout is rank-major (0..max_rank), part-minor, ``per_block`` slots each.
    """

    values: np.ndarray
    max_rank: int
    per_block: int
    part: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def block(self, k: int, j: int = 0) -> np.ndarray:
        bpr = blocks_per_rank(self.part)
        start = (k * bpr + j) * self.per_block
        return self.values[start:start + self.per_block]

    def __len__(self):
        return self.values.shape[0]


def snapshot_features(
    c: SimplicialComplex,
    max_rank: int,
    num_sv: int,
    part: str = "full",
    weighted: bool = False,
    budget_mode: str = "per_block",
    method: str = "auto",
    seed: int = 0,
) -> SpectralFeature:
    """Spectral feature vector of one snapshot.

    ``num_sv`` counts singular values per block (``budget_mode="per_block"``)
    or in total, split evenly with floor division (``"total"``).
    """
    part = _part(part)
    if max_rank < 0:
        raise ValueError("max_rank must be non-negative")
    bpr = blocks_per_rank(part)
    n_blocks = (max_rank + 1) * bpr
    if budget_mode == "per_block":
        per_block = num_sv
    elif budget_mode == "total":
        per_block = num_sv // n_blocks
    else:
        raise ValueError(f"unknown budget mode {budget_mode!r}")
    if per_block < 1:
        raise ValueError(f"budget {num_sv} leaves no singular value for {n_blocks} blocks")
    if weighted and c.rank_max >= 0 and not c.is_weighted:
        raise MissingWeights("weighted features require simplex weights")

    selectors = ("down", "up") if part == "up_and_down" else (part,)
    out = np.zeros(n_blocks * per_block)
    for k in range(max_rank + 1):
        for j, sel in enumerate(selectors):
            if c.count(k) == 0:
                continue
            m = _gram_operator(c, k, sel, weighted)
            if m.nnz == 0:
                continue
            rng = np.random.default_rng([seed, k, j])
            vals = top_singular_values(m, per_block, method, rng)
            start = (k * bpr + j) * per_block
            out[start:start + vals.shape[0]] = vals
    return SpectralFeature(out, max_rank, per_block, part)


def normalize_feature(f) -> tuple[np.ndarray, bool]:
    """Unit-l2 copy of ``f`` and a flag telling whether ``f`` was all zero."""
    v = np.asarray(f.values if isinstance(f, SpectralFeature) else f, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return np.zeros_like(v), True
    return v / norm, False
