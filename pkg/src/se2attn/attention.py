"""Relative scaled dot-product attention.

Two evaluation strategies for the same quantity:

* :func:`relative_attention_quadratic` materializes the relative-location
  matrix ``phi(p_n^-1 p_m)`` for every query/key pair, O(N M d^2) memory.
* :func:`relative_attention_linear` pushes ``phi_q``/``phi_k`` into the
  queries, keys and values, runs plain :func:`sdpa`, and maps the result back
  with ``phi_q``. Nothing of size N x M is stored outside the streaming
  softmax inside :func:`sdpa`, which works on fixed-size query chunks.

Auxiliary storage is counted analytically through :class:`AuxTracker`
rather than by querying the allocator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .encoding import EncodingConfig, Family, phi, phi_k, phi_q, relative_location
from .geometry import Pose2, as_xyt, compose_xyt, inverse_xyt

__all__ = [
    "AuxTracker",
    "AttentionBatch",
    "AttentionOutput",
    "softmax",
    "sdpa",
    "relative_attention_quadratic",
    "relative_attention_linear",
    "apply_global_transform",
    "multi_head_attention",
    "random_batch",
]

DEFAULT_CHUNK_ROWS = 64


class AuxTracker:
    """Registry of live auxiliary buffers, counted in array elements."""

    def __init__(self):
        self._live: dict[str, int] = {}
        self.current = 0
        self.peak = 0

    def hold(self, name: str, array):
        size = int(np.size(array))
        self.release(name)
        self._live[name] = size
        self.current += size
        self.peak = max(self.peak, self.current)
        return array

    def release(self, *names: str):
        for name in names:
            self.current -= self._live.pop(name, 0)


@dataclass(frozen=True)
class AttentionBatch:
    """Token features with their positions.

    ``query_poses`` / ``key_poses`` are ``(N,)``/``(M,)`` scalars for rope1d and
    ``(N, 3)``/``(M, 3)`` pose rows otherwise. Values share the key poses.
    """

    queries: np.ndarray
    query_poses: np.ndarray
    keys: np.ndarray
    values: np.ndarray
    key_poses: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.queries, dtype=float))
        k = np.atleast_2d(np.asarray(self.keys, dtype=float))
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        qp = _pose_array(self.query_poses)
        kp = _pose_array(self.key_poses)
        if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
            raise ValueError("queries, keys and values must be 2-D")
        if not (q.shape[1] == k.shape[1] == v.shape[1]):
            raise ValueError(f"feature widths differ: {q.shape[1]}, {k.shape[1]}, {v.shape[1]}")
        if k.shape[0] != v.shape[0]:
            raise ValueError(f"{k.shape[0]} keys but {v.shape[0]} values")
        if k.shape[0] < 1:
            raise ValueError("at least one key is required")
        if len(qp) != q.shape[0] or len(kp) != k.shape[0]:
            raise ValueError("one pose per token is required")
        if qp.shape[1:] != kp.shape[1:]:
            raise ValueError("query and key poses must be of the same kind")
        for name, arr in (("queries", q), ("keys", k), ("values", v), ("poses", qp), ("poses", kp)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        for name, arr in (("queries", q), ("keys", k), ("values", v), ("query_poses", qp), ("key_poses", kp)):
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.queries.shape[0]

    @property
    def m(self) -> int:
        return self.keys.shape[0]

    @property
    def dim(self) -> int:
        return self.queries.shape[1]

    def check(self, cfg: EncodingConfig):
        if self.dim != cfg.token_dim:
            raise ValueError(f"token width {self.dim} does not match encoding dim {cfg.token_dim}")
        scalar = self.query_poses.ndim == 1
        if scalar != (cfg.family is Family.ROPE1D):
            raise ValueError(f"pose kind does not match family {cfg.family.value}")


def _pose_array(poses) -> np.ndarray:
    if isinstance(poses, (list, tuple)) and poses and isinstance(poses[0], Pose2):
        return as_xyt(poses)
    arr = np.asarray(poses, dtype=float)
    if arr.ndim == 2 and arr.shape[1] != 3:
        raise ValueError(f"pose rows must have 3 entries, got shape {arr.shape}")
    if arr.ndim not in (1, 2):
        raise ValueError(f"poses must be 1-D scalars or (n, 3) rows, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class AttentionOutput:
    outputs: np.ndarray
    aux_elements_peak: int = 0
    pair_matrices: int = 0


def softmax(logits, axis: int = -1) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    z = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def sdpa(q, k, v, *, chunk_rows: int = DEFAULT_CHUNK_ROWS, tracker: AuxTracker | None = None) -> np.ndarray:
    """softmax(q k^T / sqrt(c)) v, with c the width of ``q`` and ``k``.

    Query rows are processed in chunks of ``chunk_rows``; per chunk the row
    max is taken first, then the shifted exponentials are summed, so no
    intermediate larger than ``chunk_rows x M`` exists.
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    k = np.atleast_2d(np.asarray(k, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if q.shape[1] != k.shape[1]:
        raise ValueError(f"query width {q.shape[1]} != key width {k.shape[1]}")
    if k.shape[0] != v.shape[0]:
        raise ValueError(f"{k.shape[0]} keys but {v.shape[0]} values")
    if k.shape[0] == 0:
        raise ValueError("softmax over an empty key set is undefined")
    if chunk_rows < 1:
        raise ValueError("chunk_rows must be >= 1")
    tracker = tracker if tracker is not None else AuxTracker()
    scale = 1.0 / math.sqrt(q.shape[1])
    out = np.empty((q.shape[0], v.shape[1]))
    for start in range(0, q.shape[0], chunk_rows):
        rows = slice(start, start + chunk_rows)
        logits = tracker.hold("sdpa.logits", (q[rows] @ k.T) * scale)
        row_max = tracker.hold("sdpa.max", logits.max(axis=1, keepdims=True))
        np.exp(logits - row_max, out=logits)
        denom = tracker.hold("sdpa.denom", logits.sum(axis=1, keepdims=True))
        out[rows] = (logits @ v) / denom
    tracker.release("sdpa.logits", "sdpa.max", "sdpa.denom")
    return out


def relative_attention_quadratic(batch: AttentionBatch, cfg: EncodingConfig) -> AttentionOutput:
    """Reference relative attention that stores phi for every query/key pair."""
    batch.check(cfg)
    d = cfg.token_dim
    if batch.n == 0:
        return AttentionOutput(np.zeros((0, d)))
    tracker = AuxTracker()
    rel = tracker.hold("rel", relative_location(batch.query_poses[:, None], batch.key_poses[None, :], cfg.family))
    pair_phi = tracker.hold("phi", phi(rel, cfg))
    tracker.release("rel")
    logits = tracker.hold("logits", np.einsum("nd,nmde,me->nm", batch.queries, pair_phi, batch.keys))
    weights = tracker.hold("weights", softmax(logits / math.sqrt(d), axis=1))
    tracker.release("logits")
    outputs = np.einsum("nm,nmde,me->nd", weights, pair_phi, batch.values)
    return AttentionOutput(outputs, tracker.peak, batch.n * batch.m)


def relative_attention_linear(
    batch: AttentionBatch, cfg: EncodingConfig, *, chunk_rows: int = DEFAULT_CHUNK_ROWS
) -> AttentionOutput:
    """Relative attention via per-token factors and a standard SDPA call.

    Queries and keys are both prescaled by (c/d)^(1/4) so that the sqrt(c)
    divisor inside :func:`sdpa` amounts to sqrt(d) on the original logits;
    values are not prescaled.
    """
    batch.check(cfg)
    d, c = cfg.token_dim, cfg.projected_dim
    if batch.n == 0:
        return AttentionOutput(np.zeros((0, d)))
    tracker = AuxTracker()
    prescale = (c / d) ** 0.25
    fq = tracker.hold("phi_q", phi_q(batch.query_poses, cfg))
    fk = tracker.hold("phi_k", phi_k(batch.key_poses, cfg))
    q_t = tracker.hold("q", prescale * np.einsum("ndc,nd->nc", fq, batch.queries))
    k_t = tracker.hold("k", prescale * np.einsum("mcd,md->mc", fk, batch.keys))
    v_t = tracker.hold("v", np.einsum("mcd,md->mc", fk, batch.values))
    tracker.release("phi_k")
    o_t = tracker.hold("o", sdpa(q_t, k_t, v_t, chunk_rows=chunk_rows, tracker=tracker))
    tracker.release("q", "k", "v")
    outputs = np.einsum("ndc,nc->nd", fq, o_t)
    return AttentionOutput(outputs, tracker.peak, 0)


def apply_global_transform(batch: AttentionBatch, z) -> AttentionBatch:
    """Re-express every pose in the frame ``z``: p -> z^-1 p. Features are untouched.

    For scalar (rope1d) positions ``z`` is a scalar offset.
    """
    if batch.query_poses.ndim == 1:
        if isinstance(z, Pose2) or np.ndim(z) != 0:
            raise ValueError("scalar positions need a scalar transform")
        z = float(z)
        return replace(batch, query_poses=batch.query_poses - z, key_poses=batch.key_poses - z)
    z_inv = inverse_xyt(as_xyt(z))
    return replace(
        batch,
        query_poses=compose_xyt(z_inv, batch.query_poses),
        key_poses=compose_xyt(z_inv, batch.key_poses),
    )


def multi_head_attention(
    batch: AttentionBatch,
    cfg: EncodingConfig,
    heads: int,
    w_q=None,
    w_k=None,
    w_v=None,
    w_o=None,
    *,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
) -> AttentionOutput:
    """Forward pass of multi-head relative attention with fixed projections.

    Each head receives a ``cfg.token_dim`` slice of the projected features and
    all heads share the token poses. Omitted weight matrices are identities.
    """
    model_dim = batch.dim
    if heads < 1 or model_dim % heads:
        raise ValueError(f"model dim {model_dim} is not divisible by {heads} heads")
    head_dim = model_dim // heads
    if head_dim != cfg.token_dim:
        raise ValueError(f"head dim {head_dim} does not match encoding dim {cfg.token_dim}")
    eye = np.eye(model_dim)
    w_q, w_k, w_v, w_o = (eye if w is None else np.asarray(w, dtype=float) for w in (w_q, w_k, w_v, w_o))
    for w in (w_q, w_k, w_v, w_o):
        if w.shape != (model_dim, model_dim):
            raise ValueError(f"projection weights must be {model_dim}x{model_dim}, got {w.shape}")
    q = batch.queries @ w_q
    k = batch.keys @ w_k
    v = batch.values @ w_v
    per_head = []
    peak = 0
    for h in range(heads):
        cols = slice(h * head_dim, (h + 1) * head_dim)
        head_batch = replace(batch, queries=q[:, cols], keys=k[:, cols], values=v[:, cols])
        res = relative_attention_linear(head_batch, cfg, chunk_rows=chunk_rows)
        per_head.append(res.outputs)
        peak = max(peak, res.aux_elements_peak)
    outputs = np.concatenate(per_head, axis=1) @ w_o
    return AttentionOutput(outputs, peak + q.size + k.size + v.size, 0)


def random_batch(
    cfg: EncodingConfig,
    n: int,
    m: int,
    rng: np.random.Generator,
    *,
    extent: float = 8.0,
    radius: float | None = None,
    unit_norm: bool = False,
) -> AttentionBatch:
    """Gaussian features with random poses for tests and benchmarks.

    Positions are uniform in ``[-extent, extent]`` per axis, or uniform on the
    disc of ``radius`` when given. Headings are uniform on the circle.
    """
    if n < 0 or m < 1:
        raise ValueError(f"need n >= 0 and m >= 1, got n={n}, m={m}")
    d = cfg.token_dim

    def features(count):
        x = rng.standard_normal((count, d))
        if unit_norm:
            x /= np.linalg.norm(x, axis=1, keepdims=True)
        return x

    def poses(count):
        if cfg.family is Family.ROPE1D:
            bound = extent if radius is None else radius
            return rng.uniform(-bound, bound, count)
        if radius is None:
            xy = rng.uniform(-extent, extent, (count, 2))
        else:
            r = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
            a = rng.uniform(0.0, 2.0 * math.pi, count)
            xy = np.stack([r * np.cos(a), r * np.sin(a)], axis=1)
        theta = rng.uniform(-math.pi, math.pi, count)
        return np.column_stack([xy, theta])

    q, qp = features(n), poses(n)
    k, v, kp = features(m), features(m), poses(m)
    return AttentionBatch(q, qp, k, v, kp)
