"""Quaternion algebra on numpy arrays.

Quaternions are stored as float arrays whose last axis holds the
coordinates ``(a, b, c, d)`` in the basis ``{1, i, j, k}``.  Every function
broadcasts over leading axes, so a stack of quaternions of shape ``(n, 4)``
can be handled in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EPS_ALG = 1e-9
EPS_MATCH = 1e-6

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])


class PoleHasNoAxis(ValueError):
    """Raised when the rotation axis of +1 or -1 is requested."""


class NorthPoleProjection(ValueError):
    """Raised when stereographic projection is applied at (or next to) -1."""


def quat(a=0.0, b=0.0, c=0.0, d=0.0) -> np.ndarray:
    return np.array([a, b, c, d], dtype=float)


def imag(u) -> np.ndarray:
    """Embed a 3-vector as a pure imaginary quaternion."""
    u = np.asarray(u, dtype=float)
    return np.concatenate([np.zeros(u.shape[:-1] + (1,)), u], axis=-1)


def mul(p, q) -> np.ndarray:
    """Hamilton product ``p * q``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a1, b1, c1, d1 = np.moveaxis(p, -1, 0)
    a2, b2, c2, d2 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ],
        axis=-1,
    )


def conj(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def norm(q):
    return np.linalg.norm(np.asarray(q, dtype=float), axis=-1)


def normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / norm(q)[..., None]


def inverse(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return conj(q) / (norm(q) ** 2)[..., None]


def power(q, n: int) -> np.ndarray:
    """Integer power by repeated multiplication (``n`` may be negative)."""
    base = inverse(q) if n < 0 else np.asarray(q, dtype=float)
    out = np.broadcast_to(ONE, base.shape).copy()
    for _ in range(abs(n)):
        out = mul(out, base)
    return out


def exp_imag(u, alpha) -> np.ndarray:
    """``cos(alpha) + u sin(alpha)`` for a unit imaginary direction ``u``.

    ``u`` may be given either as a 3-vector or as a pure imaginary
    quaternion.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1] == 4:
        u = u[..., 1:]
    alpha = np.asarray(alpha, dtype=float)
    return np.concatenate(
        [np.cos(alpha)[..., None], np.sin(alpha)[..., None] * u], axis=-1
    )


@dataclass(frozen=True)
class AxisAngle:
    """Result of :func:`log_unit`: ``q = exp_imag(axis, alpha)``.

    At the poles the angle is still meaningful (0 or pi) but the axis is
    not, and reading it raises :class:`PoleHasNoAxis`.
    """

    alpha: float
    _axis: np.ndarray | None

    @property
    def axis(self) -> np.ndarray:
        if self._axis is None:
            raise PoleHasNoAxis(f"no rotation axis at alpha={self.alpha!r}")
        return self._axis

    @property
    def is_pole(self) -> bool:
        return self._axis is None


def log_unit(q, eps: float = EPS_ALG) -> AxisAngle:
    q = np.asarray(q, dtype=float)
    a = float(np.clip(q[0], -1.0, 1.0))
    if abs(a) >= 1.0 - eps:
        return AxisAngle(0.0 if a > 0 else math.pi, None)
    v = q[1:]
    s = float(np.linalg.norm(v))
    return AxisAngle(math.atan2(s, a), v / s)


def inner(p, q):
    return np.sum(np.asarray(p, dtype=float) * np.asarray(q, dtype=float), axis=-1)


def dist_s3(p, q):
    """Great-circle distance on the unit three-sphere."""
    return np.arccos(np.clip(inner(p, q), -1.0, 1.0))


def stereographic(q, eps: float = EPS_ALG) -> np.ndarray:
    """Project from -1 onto the imaginary 3-space; +1 goes to the origin.

    With ``q = exp(u alpha)`` the image is ``sin(alpha) / (1 + cos(alpha)) u``,
    which is the same as ``Im(q) / (1 + Re(q))``.
    """
    q = np.asarray(q, dtype=float)
    denom = 1.0 + q[..., 0]
    if np.any(dist_s3(q, -ONE) < eps) or np.any(denom <= 0.0):
        raise NorthPoleProjection("stereographic projection is undefined at -1")
    return q[..., 1:] / denom[..., None]


def inverse_stereographic(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)[..., None]
    return np.concatenate([(1.0 - r2) / (1.0 + r2), 2.0 * x / (1.0 + r2)], axis=-1)


def stereo_derivative(alpha: float) -> float:
    """Radial stretch ``1 / (1 + cos alpha)`` of the projection at angle alpha."""
    if not 0.0 <= alpha < math.pi:
        raise ValueError(f"alpha must lie in [0, pi), got {alpha!r}")
    return 1.0 / (1.0 + math.cos(alpha))


def twisted_action(q, v) -> np.ndarray:
    """``q v q^-1``."""
    return mul(mul(q, v), inverse(q))


def rotation_matrix(q) -> np.ndarray:
    """3x3 matrix of ``v -> q v q^-1`` restricted to the imaginary part."""
    cols = [twisted_action(q, e)[..., 1:] for e in (I, J, K)]
    return np.stack(cols, axis=-1)


def gnomonic(p, center) -> np.ndarray:
    """Tangent-chart coordinates of ``p`` around ``center``.

    Great spheres through the chart become planes, so polytopes in the
    sphere become Euclidean polytopes here.
    """
    w = mul(conj(center), p)
    return w[..., 1:] / w[..., :1]


def from_gnomonic(x, center) -> np.ndarray:
    """Inverse of :func:`gnomonic`."""
    return mul(center, normalize(imag(x) + ONE))
