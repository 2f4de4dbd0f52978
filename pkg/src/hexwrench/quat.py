"""Quaternion algebra, Rodrigues-parameter conversions and the discrete
attitude integrator shared by the vehicle model and the estimator.

Conventions (fixed once, used everywhere in this package):
    * layout ``[x, y, z, w]``: vector part first, scalar part last;
    * Hamilton product, so ``rotmat(a * b) = rotmat(a) @ rotmat(b)``
      (``a * b`` applies ``b`` first);
    * a quaternion represents the body-to-inertial rotation, i.e.
      ``quat_rotate(q, v_body) = v_inertial``;
    * the canonical representative has scalar part >= 0 (double cover).

All functions accept stacked inputs with arbitrary leading dimensions.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularRotation

__all__ = [
    "quat_identity",
    "quat_normalize",
    "quat_multiply",
    "quat_inverse",
    "quat_rotate",
    "quat_to_rotmat",
    "quat_from_axis_angle",
    "quat_to_yaw",
    "mrp_from_quat",
    "mrp_to_quat",
    "quat_integrate",
]

# Angles below this (in rad, per step) use the series branch of the
# integrator instead of dividing by ||omega||.
_SMALL_ANGLE = 1e-8


def quat_identity() -> np.ndarray:
    """Identity quaternion ``[0, 0, 0, 1]``."""
    return np.array([0.0, 0.0, 0.0, 1.0])


def quat_normalize(q: np.ndarray, canonical: bool = True) -> np.ndarray:
    """Return ``q`` scaled to unit norm, optionally with scalar part >= 0."""
    q = np.asarray(q, dtype=float)
    out = q / np.linalg.norm(q, axis=-1, keepdims=True)
    if canonical:
        flip = out[..., 3:4] < 0.0
        out = np.where(flip, -out, out)
    return out


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product ``a * b`` (applies rotation ``b`` first).

    Both inputs must be unit quaternions; the result is renormalized and
    canonicalized so accumulated products cannot drift off the unit sphere.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    av, aw = a[..., :3], a[..., 3:4]
    bv, bw = b[..., :3], b[..., 3:4]
    vec = aw * bv + bw * av + np.cross(av, bv)
    scal = aw * bw - np.sum(av * bv, axis=-1, keepdims=True)
    return quat_normalize(np.concatenate([vec, scal], axis=-1))


def quat_inverse(q: np.ndarray) -> np.ndarray:
    """Conjugate of a unit quaternion: ``q * quat_inverse(q) = identity``."""
    q = np.asarray(q, dtype=float)
    return np.concatenate([-q[..., :3], q[..., 3:4]], axis=-1)


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) ``v`` from body to inertial frame."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    qv, qw = q[..., :3], q[..., 3:4]
    t = 2.0 * np.cross(qv, v)
    return v + qw * t + np.cross(qv, t)


def quat_to_rotmat(q: np.ndarray) -> np.ndarray:
    """Body-to-inertial rotation matrix (stacked ``(..., 3, 3)``) of ``q``."""
    q = np.asarray(q, dtype=float)
    x, y, z, w = (q[..., i] for i in range(4))
    rows = [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Unit quaternion rotating by ``angle`` (rad) about ``axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return quat_normalize(np.concatenate([np.sin(half) * axis, [np.cos(half)]]))


def quat_to_yaw(q: np.ndarray) -> np.ndarray:
    """Yaw (Z-Y-X convention) of the rotation, in rad, wrapped to (-pi, pi]."""
    q = np.asarray(q, dtype=float)
    x, y, z, w = (q[..., i] for i in range(4))
    return np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


def mrp_from_quat(dq: np.ndarray, a: float = 1.0) -> np.ndarray:
    """Modified Rodrigues parameters of an error quaternion.

    Computes ``p = f * qv / (a + qs)`` with scale ``f = 2 (a + 1)``; ``a``
    must lie in [0, 1].  For small rotations ``p`` approximates the rotation
    vector regardless of ``a``.

    Raises:
        SingularRotation: if ``|a + qs| < 1e-9`` (the parametrized rotation
            approaches the representation singularity; with ``a = 1`` that is
            a 360 degree flip, with ``a = 0`` a 180 degree one).
    """
    dq = np.asarray(dq, dtype=float)
    denom = a + dq[..., 3:4]
    if np.any(np.abs(denom) < 1e-9):
        raise SingularRotation(
            f"rotation too large for parametrization with a={a}"
        )
    return 2.0 * (a + 1.0) * dq[..., :3] / denom


def mrp_to_quat(p: np.ndarray, a: float = 1.0) -> np.ndarray:
    """Inverse of :func:`mrp_from_quat`; always returns a unit quaternion."""
    p = np.asarray(p, dtype=float)
    f = 2.0 * (a + 1.0)
    n2 = np.sum(p * p, axis=-1, keepdims=True)
    # denominator f^2 + ||p||^2 is strictly positive for every finite p
    qs = (-a * n2 + f * np.sqrt(f * f + (1.0 - a * a) * n2)) / (f * f + n2)
    qv = (a + qs) / f * p
    return quat_normalize(np.concatenate([qv, qs], axis=-1), canonical=False)


def quat_integrate(
    q: np.ndarray,
    omega: np.ndarray,
    ts: float,
    renormalize: bool = True,
) -> np.ndarray:
    """Advance attitude one step under a constant body rate.

    Composes ``q`` with the incremental rotation built from
    ``cos(||omega|| ts / 2)`` and ``sin(||omega|| ts / 2) omega / ||omega||``.
    The map is orthogonal, hence exact for a constant rate, and a series
    branch covers ``||omega|| ts -> 0`` where the closed form divides by the
    rate norm.

    Arguments:
        q: current attitude (unit quaternion), any leading batch shape.
        omega: body angular rate [rad/s], broadcastable against ``q``.
        ts: step length [s], > 0.
        renormalize: renormalize the result (default); with ``False`` the
            raw product is returned, which stays unit-norm up to float
            roundoff only.
    """
    q = np.asarray(q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    angle = np.linalg.norm(omega, axis=-1, keepdims=True) * ts
    half = 0.5 * angle
    small = angle < _SMALL_ANGLE
    # sin(half)/||omega|| = (ts/2) * sinc(half); series keeps the 0/0 finite
    sinc_half = np.where(small, 1.0 - half * half / 6.0, np.sin(half) / np.where(small, 1.0, half))
    dq_vec = 0.5 * ts * sinc_half * omega
    dq_scal = np.cos(half)
    dq = np.concatenate([dq_vec, dq_scal], axis=-1)

    av, aw = q[..., :3], q[..., 3:4]
    bv, bw = dq[..., :3], dq[..., 3:4]
    vec = aw * bv + bw * av + np.cross(av, bv)
    scal = aw * bw - np.sum(av * bv, axis=-1, keepdims=True)
    out = np.concatenate([vec, scal], axis=-1)
    if renormalize:
        out = quat_normalize(out)
    return out
