"""Fourier-series factorization of the relative-translation rotations.

The relative x offset between a query pose ``(x_n, y_n, theta_n)`` and a key
position ``(x_m, y_m)`` splits into a query-only part ``v`` and a part
``u(theta_n) = x_m cos(theta_n) + y_m sin(theta_n)`` that mixes both. The
rotation by ``u`` is approximated by a truncated trigonometric series in the
query heading whose coefficients depend only on the key position, which
makes the whole rotation factor into query-side and key-side matrices.

This module holds the basis, the coefficient quadrature, the single-block
query/key factors, and the error measurements used to size the basis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import as_xyt, relative_xyt, rot2

__all__ = [
    "EPS_FP16",
    "EPS_BF16",
    "Axis",
    "FourierCoeffs",
    "ErrorStats",
    "TargetCurve",
    "basis",
    "basis_vector",
    "quadrature_nodes",
    "project",
    "coefficient_arrays",
    "coefficients",
    "spectral_norm",
    "query_factor",
    "key_factor",
    "target_matrix",
    "approx_error",
    "approx_errors",
    "error_sweep",
    "target_curve",
]

# Machine epsilon at 1.0 for IEEE half precision and bfloat16.
EPS_FP16 = 2.0**-10
EPS_BF16 = 2.0**-7


class Axis(str, enum.Enum):
    X = "x"
    Y = "y"


def basis(i: int, z):
    """The i-th real Fourier basis function: cos(i/2 z) for even i, sin((i+1)/2 z) for odd i."""
    if i < 0:
        raise ValueError(f"basis index must be non-negative, got {i}")
    if i % 2 == 0:
        return np.cos((i // 2) * z)
    return np.sin(((i + 1) // 2) * z)


def basis_vector(theta, F: int) -> np.ndarray:
    """Evaluate ``basis(0..F-1, theta)``; array input gives shape ``theta.shape + (F,)``."""
    if F < 1:
        raise ValueError(f"basis size must be >= 1, got {F}")
    i = np.arange(F)
    freq = (i + 1) // 2
    z = np.asarray(theta, dtype=float)[..., None] * freq
    return np.where(i % 2 == 0, np.cos(z), np.sin(z))


def quadrature_nodes(points: int) -> np.ndarray:
    """Uniform rectangle-rule nodes on [-pi, pi)."""
    return -math.pi + 2.0 * math.pi * np.arange(points) / points


def _normalizers(F: int) -> np.ndarray:
    a = np.full(F, 2.0)
    a[0] = 1.0
    return a


def _phase(key_x, key_y, z, axis: Axis):
    if Axis(axis) is Axis.X:
        return key_x * np.cos(z) + key_y * np.sin(z)
    return -key_x * np.sin(z) + key_y * np.cos(z)


def project(samples, F: int) -> np.ndarray:
    """Coefficients on ``basis(0..F-1)`` of a periodic function sampled at :func:`quadrature_nodes`.

    ``samples`` has the node axis last; the rectangle rule is exact for
    integrands of frequency below ``points``.
    """
    samples = np.asarray(samples, dtype=float)
    points = samples.shape[-1]
    if points < 2 * F:
        raise ValueError(f"need at least 2F = {2 * F} quadrature points, got {points}")
    weights = basis_vector(quadrature_nodes(points), F) * (_normalizers(F) / points)
    return samples @ weights


def coefficient_arrays(key_x, key_y, F: int, axis: Axis = Axis.X, points: int | None = None):
    """Vectorized Gamma/Lambda coefficients for arrays of key positions.

    Returns ``(gamma, lam)`` each of shape ``broadcast(key_x, key_y).shape + (F,)``.
    """
    if F < 1:
        raise ValueError(f"basis size must be >= 1, got {F}")
    if points is None:
        points = 2 * F
    if points < 2 * F:
        raise ValueError(f"need at least 2F = {2 * F} quadrature points, got {points}")
    key_x = np.asarray(key_x, dtype=float)
    key_y = np.asarray(key_y, dtype=float)
    if not (np.all(np.isfinite(key_x)) and np.all(np.isfinite(key_y))):
        raise ValueError("key position must be finite")
    u = _phase(key_x[..., None], key_y[..., None], quadrature_nodes(points), axis)
    return project(np.cos(u), F), project(np.sin(u), F)


@dataclass(frozen=True)
class FourierCoeffs:
    gamma: np.ndarray
    lambda_: np.ndarray
    axis: Axis
    key_x: float
    key_y: float

    @property
    def basis_size(self) -> int:
        return len(self.gamma)


def coefficients(
    key_x: float, key_y: float, F: int, axis: Axis = Axis.X, points: int | None = None
) -> FourierCoeffs:
    """Fourier coefficients of cos(u) and sin(u) for one key position.

    ``points`` defaults to ``2F``; larger values give a denser quadrature.
    """
    gamma, lam = coefficient_arrays(key_x, key_y, F, axis, points)
    return FourierCoeffs(gamma, lam, Axis(axis), float(key_x), float(key_y))


def spectral_norm(m, max_sweeps: int = 60):
    """Largest singular value via one-sided (Hestenes) Jacobi.

    Accepts a single matrix or a stack ``(..., r, c)``; a stack returns an
    array of norms. Intended for the small blocks used here.
    """
    a = np.array(m, dtype=float)
    if a.ndim < 2 or a.size == 0:
        raise ValueError(f"spectral_norm needs a non-empty matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    if a.shape[-2] < a.shape[-1]:
        a = np.swapaxes(a, -1, -2).copy()
    n = a.shape[-1]
    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai = a[..., :, i]
                aj = a[..., :, j]
                alpha = np.sum(ai * ai, axis=-1)
                beta = np.sum(aj * aj, axis=-1)
                gamma = np.sum(ai * aj, axis=-1)
                active = np.abs(gamma) > eps * np.sqrt(alpha * beta)
                if not np.any(active):
                    continue
                rotated = True
                safe_gamma = np.where(active, gamma, 1.0)
                zeta = (beta - alpha) / (2.0 * safe_gamma)
                t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
                c = np.where(active, 1.0 / np.sqrt(1.0 + t * t), 1.0)
                s = np.where(active, c * t, 0.0)
                new_i = c[..., None] * ai - s[..., None] * aj
                new_j = s[..., None] * ai + c[..., None] * aj
                a[..., :, i] = new_i
                a[..., :, j] = new_j
        if not rotated:
            break
    norms = np.sqrt(np.max(np.sum(a * a, axis=-2), axis=-1))
    if norms.ndim == 0:
        return float(norms)
    return norms


def query_factor(poses, F: int) -> np.ndarray:
    """Query-side SE(2) Fourier factor, shape ``(..., 6, 4F + 2)``."""
    xyt = as_xyt(poses)
    x, y, theta = xyt[..., 0], xyt[..., 1], xyt[..., 2]
    c, s = np.cos(theta), np.sin(theta)
    vx = -x * c - y * s
    vy = x * s - y * c
    b = basis_vector(theta, F)
    out = np.zeros(xyt.shape[:-1] + (6, 4 * F + 2))
    for row, v in ((0, vx), (2, vy)):
        col = F * row
        cv = np.cos(v)[..., None] * b
        sv = np.sin(v)[..., None] * b
        out[..., row, col : col + F] = cv
        out[..., row, col + F : col + 2 * F] = -sv
        out[..., row + 1, col : col + F] = sv
        out[..., row + 1, col + F : col + 2 * F] = cv
    out[..., 4:6, 4 * F :] = rot2(-theta)
    return out


def key_factor(poses, F: int, points: int | None = None) -> np.ndarray:
    """Key-side SE(2) Fourier factor, shape ``(..., 4F + 2, 6)``."""
    xyt = as_xyt(poses)
    out = np.zeros(xyt.shape[:-1] + (4 * F + 2, 6))
    for col, axis in ((0, Axis.X), (2, Axis.Y)):
        gamma, lam = coefficient_arrays(xyt[..., 0], xyt[..., 1], F, axis, points)
        row = F * col
        out[..., row : row + F, col] = gamma
        out[..., row : row + F, col + 1] = -lam
        out[..., row + F : row + 2 * F, col] = lam
        out[..., row + F : row + 2 * F, col + 1] = gamma
    out[..., 4 * F :, 4:6] = rot2(xyt[..., 2])
    return out


def target_matrix(rel) -> np.ndarray:
    """Exact block-diagonal target diag[rot(x), rot(y), rot(theta)] of a relative pose."""
    xyt = as_xyt(rel)
    out = np.zeros(xyt.shape[:-1] + (6, 6))
    for k in range(3):
        out[..., 2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = rot2(xyt[..., k])
    return out


def approx_errors(query_poses, key_poses, F: int, points: int | None = None) -> np.ndarray:
    """Vectorized :func:`approx_error` over broadcast pose arrays."""
    qp = as_xyt(query_poses)
    kp = as_xyt(key_poses)
    approx = query_factor(qp, F) @ key_factor(kp, F, points)
    exact = target_matrix(relative_xyt(qp, kp))
    return np.asarray(spectral_norm(exact - approx))


def approx_error(p_n, p_m, F: int, points: int | None = None) -> float:
    """Spectral-norm error of the factorized product against the exact target."""
    return float(approx_errors(p_n, p_m, F, points))


@dataclass(frozen=True)
class ErrorStats:
    radius: float
    basis_size: int
    mean_error: float
    p025_error: float
    p975_error: float
    samples: int
    seed: int


def _sample_stream(seed: int, radius_index: int, basis_index: int, sample_index: int):
    return np.random.default_rng([seed, radius_index, basis_index, sample_index])


def error_sweep(
    radii: Sequence[float],
    basis_sizes: Sequence[int],
    samples: int = 1000,
    seed: int = 42,
    points: int | None = None,
) -> list[ErrorStats]:
    """Approximation-error statistics over key radius and basis size.

    Each sample draws a key angle and a query heading uniformly from
    [0, 2pi); the key sits on the circle of the given radius and the query
    sits at the origin. Every sample has its own RNG stream keyed on
    ``(seed, radius index, basis index, sample index)``. Percentiles use the
    nearest-rank rule.
    """
    radii = list(radii)
    basis_sizes = list(basis_sizes)
    if not radii or not basis_sizes:
        raise ValueError("radii and basis_sizes must be non-empty")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if any(not (r > 0 and math.isfinite(r)) for r in radii):
        raise ValueError(f"radii must be positive and finite, got {radii}")
    if any(int(F) < 1 for F in basis_sizes):
        raise ValueError(f"basis sizes must be >= 1, got {basis_sizes}")

    stats = []
    for ri, radius in enumerate(radii):
        for fi, F in enumerate(basis_sizes):
            draws = np.array(
                [_sample_stream(seed, ri, fi, si).uniform(0.0, 2.0 * math.pi, size=2) for si in range(samples)]
            )
            key_angle, heading = draws[:, 0], draws[:, 1]
            zeros = np.zeros(samples)
            queries = np.stack([zeros, zeros, heading], axis=-1)
            keys = np.stack([radius * np.cos(key_angle), radius * np.sin(key_angle), zeros], axis=-1)
            errors = approx_errors(queries, keys, int(F), points)
            p025, p975 = np.percentile(errors, [2.5, 97.5], method="inverted_cdf")
            stats.append(
                ErrorStats(
                    radius=float(radius),
                    basis_size=int(F),
                    mean_error=float(np.mean(errors)),
                    p025_error=float(p025),
                    p975_error=float(p975),
                    samples=samples,
                    seed=seed,
                )
            )
    return stats


class TargetCurve(NamedTuple):
    theta: np.ndarray
    exact: np.ndarray
    approx: np.ndarray


def target_curve(
    key_x: float,
    key_y: float,
    F: int,
    grid: int = 361,
    points: int | None = None,
    axis: Axis = Axis.X,
) -> TargetCurve:
    """cos(u(theta)) against its truncated series on a uniform grid over [-pi, pi]."""
    if grid < 2:
        raise ValueError(f"grid must have at least 2 points, got {grid}")
    theta = np.linspace(-math.pi, math.pi, grid)
    exact = np.cos(_phase(key_x, key_y, theta, axis))
    gamma, _ = coefficient_arrays(key_x, key_y, F, axis, points)
    return TargetCurve(theta, exact, basis_vector(theta, F) @ gamma)
