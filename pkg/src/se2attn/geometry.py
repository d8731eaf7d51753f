"""SE(2) pose algebra.

Poses are handled in two forms: the immutable :class:`Pose2` value for
single elements, and ``(..., 3)`` float arrays of ``(x, y, theta)`` rows for
vectorized work inside the encoders and attention kernels. The ``*_xyt``
functions operate on the array form and broadcast over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Pose2",
    "IDENTITY",
    "wrap_angle",
    "rot2",
    "homogeneous",
    "compose",
    "inverse",
    "relative",
    "compose_xyt",
    "inverse_xyt",
    "relative_xyt",
    "as_xyt",
]

TWO_PI = 2.0 * math.pi


def _check_finite(value, name):
    if not np.all(np.isfinite(value)):
        raise ValueError(f"{name} must be finite, got {value!r}")


def wrap_angle(theta):
    """Wrap an angle (or array of angles) to the half-open interval (-pi, pi].

    >>> wrap_angle(3 * math.pi) == math.pi
    True
    >>> wrap_angle(-math.pi) == math.pi
    True
    """
    _check_finite(theta, "theta")
    t = np.asarray(theta, dtype=float)
    # pi - ((pi - t) mod 2pi) lands in (-pi, pi]; in-range inputs pass through untouched
    wrapped = np.where((t > -math.pi) & (t <= math.pi), t, math.pi - np.mod(math.pi - t, TWO_PI))
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class Pose2:
    """Planar rigid transform ``(x, y, theta)``; theta is stored wrapped."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "theta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"Pose2.{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @classmethod
    def from_array(cls, xyt) -> "Pose2":
        x, y, theta = np.asarray(xyt, dtype=float)
        return cls(x, y, theta)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    def __matmul__(self, other: "Pose2") -> "Pose2":
        return compose(self, other)

    def inverse(self) -> "Pose2":
        return inverse(self)


IDENTITY = Pose2()


def rot2(theta):
    """2x2 rotation matrix; an array of angles gives a ``(..., 2, 2)`` stack."""
    _check_finite(theta, "theta")
    c = np.cos(theta)
    s = np.sin(theta)
    return np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)


def homogeneous(p) -> np.ndarray:
    """3x3 homogeneous matrix of a pose (or ``(..., 3, 3)`` for a pose array)."""
    xyt = as_xyt(p)
    out = np.zeros(xyt.shape[:-1] + (3, 3))
    out[..., :2, :2] = rot2(xyt[..., 2])
    out[..., 0, 2] = xyt[..., 0]
    out[..., 1, 2] = xyt[..., 1]
    out[..., 2, 2] = 1.0
    return out


def as_xyt(p) -> np.ndarray:
    """Coerce a Pose2, a sequence of Pose2, or an array to a float ``(..., 3)`` array."""
    if isinstance(p, Pose2):
        return p.as_array()
    if isinstance(p, (list, tuple)) and p and isinstance(p[0], Pose2):
        return np.array([q.as_array() for q in p])
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"expected trailing dimension 3 for poses, got shape {arr.shape}")
    _check_finite(arr, "pose")
    return arr


def compose_xyt(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.cos(a[..., 2])
    s = np.sin(a[..., 2])
    x = a[..., 0] + c * b[..., 0] - s * b[..., 1]
    y = a[..., 1] + s * b[..., 0] + c * b[..., 1]
    return np.stack([x, y, wrap_angle(a[..., 2] + b[..., 2])], axis=-1)


def inverse_xyt(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    c = np.cos(p[..., 2])
    s = np.sin(p[..., 2])
    x = -p[..., 0] * c - p[..., 1] * s
    y = p[..., 0] * s - p[..., 1] * c
    return np.stack([x, y, wrap_angle(-p[..., 2])], axis=-1)


def relative_xyt(p_n, p_m) -> np.ndarray:
    """Pose of ``p_m`` expressed in the frame of ``p_n``, i.e. ``p_n^-1 p_m``.

    Computed directly rather than as ``compose(inverse(p_n), p_m)`` to avoid
    the extra rounding of the intermediate inverse.
    """
    p_n = np.asarray(p_n, dtype=float)
    p_m = np.asarray(p_m, dtype=float)
    c = np.cos(p_n[..., 2])
    s = np.sin(p_n[..., 2])
    dx = p_m[..., 0] - p_n[..., 0]
    dy = p_m[..., 1] - p_n[..., 1]
    return np.stack(
        [dx * c + dy * s, -dx * s + dy * c, wrap_angle(p_m[..., 2] - p_n[..., 2])],
        axis=-1,
    )


def compose(a: Pose2, b: Pose2) -> Pose2:
    return Pose2.from_array(compose_xyt(a.as_array(), b.as_array()))


def inverse(p: Pose2) -> Pose2:
    return Pose2.from_array(inverse_xyt(p.as_array()))


def relative(p_n: Pose2, p_m: Pose2) -> Pose2:
    return Pose2.from_array(relative_xyt(p_n.as_array(), p_m.as_array()))
