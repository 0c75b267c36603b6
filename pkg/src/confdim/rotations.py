"""Rotation bookkeeping shared by the conformal and dynamics modules.

In the plane a rotation is stored as an angle; in higher dimension as an
orthogonal matrix. Arrays of rotations carry a leading batch axis.
"""

from __future__ import annotations

import numpy as np

from . import streams

TWO_PI = 2.0 * np.pi


def wrap(angle):
    return np.mod(angle, TWO_PI)


def cumulative_angle(steps, block: int = 1024) -> np.ndarray:
    """Wrapped partial sums of planar rotation angles.

    Summed in extended precision and re-wrapped every ``block`` steps, so
    rational-angle orbits stay on their atoms to ~1e-13 over 10^6 steps.
    """
    s = np.asarray(steps, dtype=np.longdouble)
    period = np.longdouble(TWO_PI)
    out = np.empty(len(s), dtype=np.longdouble)
    carry = np.longdouble(0)
    for start in range(0, len(s), block):
        blk = np.cumsum(s[start : start + block]) + carry
        out[start : start + block] = blk
        carry = np.mod(blk[-1], period)
    return wrap(np.mod(out, period).astype(float))


def identity(d: int, shape=()):
    if d == 2:
        return np.zeros(shape)
    return np.broadcast_to(np.eye(d), tuple(shape) + (d, d)).copy()


def compose(a, b, d: int):
    """The product ``a @ b``."""
    if d == 2:
        return a + b
    return a @ b


def as_matrix(rot, d: int) -> np.ndarray:
    if d != 2:
        return np.asarray(rot)
    t = np.asarray(rot, dtype=float)
    c, s = np.cos(t), np.sin(t)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def angle_of(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix)
    return wrap(np.arctan2(m[..., 1, 0], m[..., 0, 0]))


def reorthonormalize(rot, d: int):
    """Nearest rotation (polar factor); a no-op for planar angles."""
    if d == 2:
        return wrap(rot)
    u, _, vt = np.linalg.svd(rot)
    return u @ vt


def orthogonality_residual(rot, d: int) -> float:
    if d == 2:
        return 0.0
    m = np.asarray(rot)
    eye = np.eye(d)
    res = np.abs(np.swapaxes(m, -1, -2) @ m - eye).max()
    det = np.abs(np.linalg.det(m) - 1.0).max()
    return float(max(res, det))


def haar(d: int, n: int, seed: int, purpose: str = "haar") -> np.ndarray:
    """``n`` Haar-distributed elements of SO(d) as ``(n, d, d)`` matrices.

    QR of a Gaussian matrix with the sign convention that makes the law exactly
    invariant, then one column flipped where needed to land in SO(d).
    """
    g = streams.generator(seed, purpose)
    z = g.standard_normal((n, d, d))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    q = q * signs[:, None, :]
    neg = np.linalg.det(q) < 0
    q[neg, :, 0] *= -1.0
    return q


def haar_angles(n: int, seed: int, purpose: str = "haar") -> np.ndarray:
    return streams.generator(seed, purpose).random(n) * TWO_PI
