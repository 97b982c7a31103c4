"""Two-stage patch correlation search and texture gathering.

Stage 1 correlates every query patch against every key patch and keeps the
single best key per query. Stage 2 re-correlates the queries against that
selected set and keeps the top-u matches each; the stage-2 indices are
composed with the stage-1 index vector so the final hard-attention tensor
addresses original value-patch rows.

Determinism contract: ties break toward the lowest index, correlation is
accumulated in float64 over fixed-size query-row blocks (block boundaries
do not depend on the worker count), and scores are rounded to f32 once.
Identical inputs therefore produce bit-identical results at any
PATCHXFER_THREADS setting.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .parallel import worker_count
from .patches import PatchGeometry, PatchSet, retarget, unfold
from .tensor import Tensor

ZERO_NORM_EPS = 1e-12
BOUND_EPS = 1e-5
_ROW_BLOCK = 512


@dataclass(frozen=True)
class CorrelationMatrix:
    """Normalized inner products, one row per query, one column per key."""

    values: Tensor

    def __post_init__(self):
        self.values.require_rank(2, "correlation matrix")
        # reductions only: no full-size temporary next to the matrix itself
        worst = max(float(self.values.a.max()), -float(self.values.a.min()))
        if worst > 1.0 + BOUND_EPS:
            raise ShapeError(
                f"correlation magnitude {worst} exceeds the Cauchy-Schwarz bound"
            )

    @property
    def n_query(self) -> int:
        return self.values.shape[0]

    @property
    def n_key(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MatchResult:
    """Top-u hard indices H (u, N_q) and soft scores S (u, N_q).

    Scores are non-increasing down each column; indices address rows of the
    key patch set this result was produced against (``n_keys`` of them).
    """

    indices: np.ndarray
    scores: Tensor
    n_keys: int

    def __post_init__(self):
        idx = self.indices
        if idx.ndim != 2 or not np.issubdtype(idx.dtype, np.integer):
            raise ShapeError("match indices must be a 2-d integer array")
        if idx.shape != self.scores.shape:
            raise ShapeError(
                f"indices {idx.shape} and scores {self.scores.shape} disagree"
            )
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_keys):
            raise ParameterError(
                f"match index out of range [0, {self.n_keys})"
            )
        s = self.scores.a
        if s.shape[0] > 1 and np.any(s[:-1] < s[1:]):
            raise ShapeError("scores must be non-increasing along the top-u axis")
        idx.setflags(write=False)

    @property
    def top_u(self) -> int:
        return self.indices.shape[0]

    @property
    def n_query(self) -> int:
        return self.indices.shape[1]


@dataclass(frozen=True)
class TextureStack:
    """u gathered patch sets, one per top-u rank, aligned to the query grid."""

    levels: tuple[PatchSet, ...]

    def __post_init__(self):
        if not self.levels:
            raise ParameterError("texture stack cannot be empty")

    @property
    def top_u(self) -> int:
        return len(self.levels)


def _norms(rows64: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", rows64, rows64))


def _block_rows(n_query: int) -> int:
    """Query rows per work block. Depends only on the problem shape, never
    on the worker count, so any parallel schedule computes the exact same
    BLAS calls; sized so the float64 block transients stay well below the
    float32 matrix itself."""
    return max(8, min(_ROW_BLOCK, n_query // 32 or 1))


def correlate(q: PatchSet, k: PatchSet, workers: int | None = None) -> CorrelationMatrix:
    """c[i, j] = <q_i, k_j> / (||q_i|| ||k_j||), 0 where either norm is ~0.

    Patch vectors with norm below 1e-12 (all-zero padded borders) correlate
    as 0 with everything rather than producing NaN. ``workers`` defaults to
    the PATCHXFER_THREADS policy; results are identical at any setting.
    """
    if q.vector_length != k.vector_length:
        raise ShapeError(
            f"patch vector lengths differ: {q.vector_length} vs {k.vector_length}"
        )
    a = q.patches.a.astype(np.float64)
    b = k.patches.a.astype(np.float64)
    nq = _norms(a)
    nk = _norms(b)
    q_dead = nq < ZERO_NORM_EPS
    k_dead = nk < ZERO_NORM_EPS
    bt = b.T
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.float32)
    block = _block_rows(a.shape[0])

    def fill(lo: int) -> None:
        hi = min(lo + block, a.shape[0])
        g = a[lo:hi] @ bt
        denom = nq[lo:hi, None] * nk[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            np.divide(g, denom, out=g)
        g[q_dead[lo:hi], :] = 0.0
        g[:, k_dead] = 0.0
        out[lo:hi] = g

    starts = range(0, a.shape[0], block)
    pool_size = min(worker_count() if workers is None else workers, len(starts))
    if pool_size > 1:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            list(pool.map(fill, starts))
    else:
        for lo in starts:
            fill(lo)
    return CorrelationMatrix(values=Tensor(out, copy=False))


def hard_select(c: CorrelationMatrix) -> np.ndarray:
    """Per-query argmax over keys; ties break toward the lowest index."""
    return np.argmax(c.values.a, axis=1).astype(np.int64)


def gather(
    src: PatchSet,
    idx: np.ndarray,
    *,
    channels: int | None = None,
    height: int | None = None,
    width: int | None = None,
) -> PatchSet:
    """Copy rows ``idx`` of ``src`` (duplicates allowed) into a new set.

    The result maps onto the grid given by the dim overrides (default: the
    source dims, valid only when the row count is unchanged).
    """
    idx = np.asarray(idx)
    if idx.ndim != 1 or not np.issubdtype(idx.dtype, np.integer):
        raise ParameterError("gather index must be a 1-d integer array")
    if idx.size and (idx.min() < 0 or idx.max() >= src.count):
        raise ParameterError(f"gather index out of range [0, {src.count})")
    rows = src.patches.a[idx]
    gathered = retarget(
        src,
        channels=src.channels if channels is None else channels,
        height=src.height if height is None else height,
        width=src.width if width is None else width,
    )
    return PatchSet(
        patches=Tensor(rows, copy=False),
        geometry=gathered.geometry,
        channels=gathered.channels,
        height=gathered.height,
        width=gathered.width,
    )


def research_topk(q: PatchSet, k_selected: PatchSet, u: int) -> MatchResult:
    """Re-correlate queries against the stage-1 selection, keep the u best.

    Scores come out sorted descending per query; equal scores keep the
    lower key index first.
    """
    if u < 1:
        raise ParameterError(f"top-u must be >= 1, got {u}")
    if u > k_selected.count:
        raise ParameterError(
            f"top-u {u} exceeds the {k_selected.count} selected patches"
        )
    c = correlate(q, k_selected).values.a
    order = np.argsort(-c, axis=1, kind="stable")[:, :u]
    scores = np.take_along_axis(c, order, axis=1)
    return MatchResult(
        indices=order.T.astype(np.int64),
        scores=Tensor(np.ascontiguousarray(scores.T), copy=False),
        n_keys=k_selected.count,
    )


def _scale_between(v: Tensor, k: Tensor) -> int:
    m_h, rem_h = divmod(v.shape[1], k.shape[1])
    m_w, rem_w = divmod(v.shape[2], k.shape[2])
    if rem_h or rem_w or m_h != m_w or m_h < 1:
        raise ShapeError(
            f"value map {v.shape} is not an integer spatial multiple of the "
            f"key map {k.shape}"
        )
    return m_h


def texture_stack(
    v: Tensor,
    g: PatchGeometry,
    scale: int,
    match: MatchResult,
    query_hw: tuple[int, int],
) -> TextureStack:
    """Gather the u texture patch sets T_i = V patches at rows H[i].

    ``v`` is unfolded with the geometry scaled by ``scale`` (its spatial
    multiple over the matching grid); rows land on the query grid scaled
    the same way, ready to fold into maps of shape (C_v, H_q*scale, W_q*scale).
    """
    vset = unfold(v, g.scaled(scale))
    if vset.count != match.n_keys:
        raise ShapeError(
            f"value map yields {vset.count} patches but the match addresses "
            f"{match.n_keys} key rows"
        )
    h, w = query_hw
    return TextureStack(
        levels=tuple(
            gather(vset, match.indices[i], height=h * scale, width=w * scale)
            for i in range(match.top_u)
        )
    )


def two_stage_search(
    q_map: Tensor,
    k_map: Tensor,
    v_map: Tensor,
    g: PatchGeometry,
    u: int,
) -> tuple[MatchResult, TextureStack]:
    """Full search: unfold, correlate, argmax, gather, re-search top-u, and
    gather value textures through the composed index chain."""
    q_map.require_rank(3, "query map")
    k_map.require_rank(3, "key map")
    v_map.require_rank(3, "value map")
    if q_map.shape[0] != k_map.shape[0]:
        raise ShapeError(
            f"query/key channel counts differ: {q_map.shape[0]} vs {k_map.shape[0]}"
        )
    scale = _scale_between(v_map, k_map)

    qset = unfold(q_map, g)
    kset = unfold(k_map, g)
    stage1 = hard_select(correlate(qset, kset))
    selected = gather(kset, stage1, height=q_map.shape[1], width=q_map.shape[2])
    stage2 = research_topk(qset, selected, u)
    final_idx = stage1[stage2.indices]
    match = MatchResult(indices=final_idx, scores=stage2.scores, n_keys=kset.count)
    textures = texture_stack(
        v_map, g, scale, match, query_hw=(q_map.shape[1], q_map.shape[2])
    )
    return match, textures
