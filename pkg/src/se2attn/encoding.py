"""Relative position encodings as factorized matrix functions.

Every family provides three maps: ``phi`` of a relative location, and the
query/key factors ``phi_q``, ``phi_k`` with ``phi(p_n^-1 p_m) = phi_q(p_n) @ phi_k(p_m)``
(exactly, or approximately for ``Family.SE2_FOURIER``). Several blocks with
different spatial scales are stacked block-diagonally.

Positions are scalars (or arrays of scalars) for ``ROPE1D`` and poses
(``Pose2`` or ``(..., 3)`` arrays) for the other families. ``ROPE2D`` reads
only the translation; the heading is ignored.
"""

from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fourier
from .geometry import Pose2, as_xyt, homogeneous, inverse_xyt, relative_xyt, rot2, wrap_angle

__all__ = [
    "Family",
    "Exactness",
    "BlockSpec",
    "EncodingConfig",
    "factorization_exactness",
    "relative_location",
    "phi",
    "phi_q",
    "phi_k",
    "parse_config",
    "load_config",
]


class Family(str, enum.Enum):
    ROPE1D = "rope1d"
    ROPE2D = "rope2d"
    SE2_REP = "se2rep"
    SE2_FOURIER = "se2fourier"


class Exactness(str, enum.Enum):
    EXACT = "exact"
    APPROXIMATE = "approximate"


def factorization_exactness(family) -> Exactness:
    if Family(family) is Family.SE2_FOURIER:
        return Exactness.APPROXIMATE
    return Exactness.EXACT


@dataclass(frozen=True)
class BlockSpec:
    """One encoding block.

    ``basis_size`` and ``points`` apply to SE(2) Fourier blocks only; ``points``
    overrides the default ``2 * basis_size`` quadrature.
    """

    scale: float = 1.0
    basis_size: int | None = None
    points: int | None = None

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"block scale must be positive and finite, got {self.scale}")
        if self.basis_size is not None and self.basis_size < 1:
            raise ValueError(f"basis_size must be >= 1, got {self.basis_size}")


def _block_dims(family: Family, block: BlockSpec) -> tuple[int, int]:
    if family is Family.ROPE1D:
        return 2, 2
    if family is Family.ROPE2D:
        return 4, 4
    if family is Family.SE2_REP:
        return 3, 3
    return 6, 4 * block.basis_size + 2


@dataclass(frozen=True)
class EncodingConfig:
    family: Family
    blocks: tuple[BlockSpec, ...]
    _dims: tuple[tuple[int, int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        family = Family(self.family)
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("an encoding needs at least one block")
        if family is Family.SE2_FOURIER and any(b.basis_size is None for b in blocks):
            raise ValueError("se2fourier blocks need a basis_size")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "_dims", tuple(_block_dims(family, b) for b in blocks))

    @classmethod
    def geometric(
        cls,
        family,
        num_blocks: int = 1,
        base_scale: float = 1.0,
        ratio: float = 0.5,
        basis_size: int | None = None,
        points: int | None = None,
    ) -> "EncodingConfig":
        """Blocks with scales ``base_scale * ratio**b`` for ``b = 0 .. num_blocks-1``."""
        if num_blocks < 1:
            raise ValueError(f"num_blocks must be >= 1, got {num_blocks}")
        family = Family(family)
        if family is not Family.SE2_FOURIER:
            basis_size = points = None
        blocks = tuple(BlockSpec(base_scale * ratio**b, basis_size, points) for b in range(num_blocks))
        return cls(family, blocks)

    @classmethod
    def for_token_dim(cls, family, token_dim: int, **kwargs) -> "EncodingConfig":
        """Geometric config with as many blocks as fit exactly in ``token_dim``."""
        family = Family(family)
        block_d = _block_dims(family, BlockSpec(basis_size=1))[0]
        if token_dim < block_d or token_dim % block_d:
            raise ValueError(f"token_dim {token_dim} is not a positive multiple of {block_d} for {family.value}")
        return cls.geometric(family, token_dim // block_d, **kwargs)

    @property
    def token_dim(self) -> int:
        return sum(d for d, _ in self._dims)

    @property
    def projected_dim(self) -> int:
        return sum(c for _, c in self._dims)

    @property
    def exactness(self) -> Exactness:
        return factorization_exactness(self.family)

    def block_slices(self):
        """Yield ``(block, row_slice, col_slice)`` for each block in the stacked layout."""
        r = c = 0
        for block, (bd, bc) in zip(self.blocks, self._dims):
            yield block, slice(r, r + bd), slice(c, c + bc)
            r += bd
            c += bc


def _coerce(p, family: Family) -> np.ndarray:
    if family is Family.ROPE1D:
        if isinstance(p, Pose2) or (isinstance(p, (list, tuple)) and p and isinstance(p[0], Pose2)):
            raise ValueError("rope1d encodes scalar positions, not poses")
        arr = np.asarray(p, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("positions must be finite")
        return arr
    if np.ndim(p) == 0 and not isinstance(p, Pose2):
        raise ValueError(f"{family.value} encodes poses, got scalar {p!r}")
    return as_xyt(p)


def relative_location(p_n, p_m, family) -> np.ndarray:
    """Group-relative location ``p_n^-1 p_m`` in the group the family encodes.

    ROPE1D subtracts scalars, ROPE2D subtracts translations (the heading slot
    carries the wrapped heading difference and is ignored downstream), and the
    SE(2) families use the full pose algebra.
    """
    family = Family(family)
    a = _coerce(p_n, family)
    b = _coerce(p_m, family)
    if family is Family.ROPE1D:
        return b - a
    if family is Family.ROPE2D:
        diff = b - a
        diff[..., 2] = wrap_angle(diff[..., 2])
        return diff
    return relative_xyt(a, b)


def _scaled(xyt: np.ndarray, scale: float) -> np.ndarray:
    out = xyt.copy()
    out[..., :2] *= scale
    return out


def _rope2d(xyt: np.ndarray, sign: float) -> np.ndarray:
    out = np.zeros(xyt.shape[:-1] + (4, 4))
    out[..., :2, :2] = rot2(sign * xyt[..., 0])
    out[..., 2:, 2:] = rot2(sign * xyt[..., 1])
    return out


def _assemble(cfg: EncodingConfig, p, block_fn, transpose: bool = False) -> np.ndarray:
    x = _coerce(p, cfg.family)
    lead = x.shape if cfg.family is Family.ROPE1D else x.shape[:-1]
    d, c = cfg.token_dim, cfg.projected_dim
    shape = (c, d) if transpose else (d, c)
    out = np.zeros(lead + shape)
    for block, rows, cols in cfg.block_slices():
        if transpose:
            out[..., cols, rows] = block_fn(x, block)
        else:
            out[..., rows, cols] = block_fn(x, block)
    return out


def phi(rel, cfg: EncodingConfig) -> np.ndarray:
    """Exact target matrix ``(..., d, d)`` of an already-computed relative location."""
    family = cfg.family

    def block_fn(x, block):
        if family is Family.ROPE1D:
            return rot2(block.scale * x)
        xs = _scaled(x, block.scale)
        if family is Family.ROPE2D:
            return _rope2d(xs, 1.0)
        if family is Family.SE2_REP:
            return homogeneous(xs)
        return fourier.target_matrix(xs)

    x = _coerce(rel, family)
    lead = x.shape if family is Family.ROPE1D else x.shape[:-1]
    d = cfg.token_dim
    out = np.zeros(lead + (d, d))
    # square target: rows and columns share the token layout
    for block, rows, _ in cfg.block_slices():
        out[..., rows, rows] = block_fn(x, block)
    return out


def phi_q(p, cfg: EncodingConfig) -> np.ndarray:
    """Query-side factor ``(..., d, c)``."""
    family = cfg.family

    def block_fn(x, block):
        if family is Family.ROPE1D:
            return rot2(-block.scale * x)
        xs = _scaled(x, block.scale)
        if family is Family.ROPE2D:
            return _rope2d(xs, -1.0)
        if family is Family.SE2_REP:
            return homogeneous(inverse_xyt(xs))
        return fourier.query_factor(xs, block.basis_size)

    return _assemble(cfg, p, block_fn)


def phi_k(p, cfg: EncodingConfig) -> np.ndarray:
    """Key-side factor ``(..., c, d)``."""
    family = cfg.family

    def block_fn(x, block):
        if family is Family.ROPE1D:
            return rot2(block.scale * x)
        xs = _scaled(x, block.scale)
        if family is Family.ROPE2D:
            return _rope2d(xs, 1.0)
        if family is Family.SE2_REP:
            return homogeneous(xs)
        return fourier.key_factor(xs, block.basis_size, block.points)

    return _assemble(cfg, p, block_fn, transpose=True)


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def parse_config(text: str) -> EncodingConfig:
    """Parse a plain ``key = value`` encoding description.

    Recognized keys: ``family`` (required), ``num_blocks``, ``base_scale``,
    ``scale_ratio``, ``basis_size``, ``points``, and the explicit per-block
    lists ``scales`` / ``basis_sizes`` (comma or space separated), which take
    precedence over the geometric schedule. ``#`` starts a comment.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string("[encoding]\n" + text)
    section = parser["encoding"]
    if "family" not in section:
        raise ValueError("config is missing 'family'")
    family = Family(section["family"].strip().lower())
    points = section.getint("points", fallback=None)
    if "scales" in section:
        scales = _float_list(section["scales"])
        sizes = _int_list(section["basis_sizes"]) if "basis_sizes" in section else None
        if sizes is None:
            size = section.getint("basis_size", fallback=None)
            sizes = [size] * len(scales)
        if len(sizes) != len(scales):
            raise ValueError("'scales' and 'basis_sizes' must have the same length")
        if family is not Family.SE2_FOURIER:
            sizes = [None] * len(scales)
            points = None
        return EncodingConfig(family, tuple(BlockSpec(s, f, points) for s, f in zip(scales, sizes)))
    return EncodingConfig.geometric(
        family,
        num_blocks=section.getint("num_blocks", fallback=1),
        base_scale=section.getfloat("base_scale", fallback=1.0),
        ratio=section.getfloat("scale_ratio", fallback=0.5),
        basis_size=section.getint("basis_size", fallback=None),
        points=points,
    )


def load_config(path) -> EncodingConfig:
    return parse_config(Path(path).read_text())
