"""Head orientation and real spherical-harmonic rotation.

Rotation matrices for ACN-ordered real SH signals are built per order
band by the Ivanic-Ruedenberg recurrence from the first-order band,
which is just the permuted 3x3 rotation matrix (ACN first order is
(Y, Z, X)). Normalization is uniform inside each band for both SN3D and
N3D, so the same matrices apply to either convention.

``sh_rotation_matrix(q, order)`` returns M with M @ a moving every
source in the encoded field by q: a plane wave from direction d ends up
at q*d. Listener compensation therefore uses the inverse orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import errors


@dataclass(frozen=True)
class Orientation:
    """Unit quaternion, scalar first."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @staticmethod
    def identity() -> "Orientation":
        return Orientation()

    @staticmethod
    def about_axis(axis, angle: float) -> "Orientation":
        """Rotation of ``angle`` radians about ``axis`` (right-handed)."""
        ax = np.asarray(axis, dtype=float)
        n = np.linalg.norm(ax)
        if n == 0:
            raise errors.DimensionMismatch("rotation axis must be non-zero")
        ax = ax / n * math.sin(angle / 2)
        return Orientation(math.cos(angle / 2), ax[0], ax[1], ax[2])

    def normalized(self) -> "Orientation":
        n = math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)
        if not math.isfinite(n) or n < 1e-12:
            raise errors.DimensionMismatch("quaternion norm is zero or non-finite")
        return Orientation(self.w / n, self.x / n, self.y / n, self.z / n)

    def inverse(self) -> "Orientation":
        q = self.normalized()
        return Orientation(q.w, -q.x, -q.y, -q.z)

    def compose(self, other: "Orientation") -> "Orientation":
        """Hamilton product self * other (apply ``other`` first)."""
        a, b = self, other
        return Orientation(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )

    def matrix(self) -> np.ndarray:
        """3x3 matrix rotating column vectors by this quaternion."""
        q = self.normalized()
        w, x, y, z = q.w, q.x, q.y, q.z
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])


# first-order ACN channel order is (Y, Z, X): permute cartesian axes
_ACN1_PERM = (1, 2, 0)


def _p(l, i, a, b, r1, prev):
    if b == l:
        return r1[i + 1, 2] * prev[a + l - 1, 2 * l - 2] - r1[i + 1, 0] * prev[a + l - 1, 0]
    if b == -l:
        return r1[i + 1, 2] * prev[a + l - 1, 0] + r1[i + 1, 0] * prev[a + l - 1, 2 * l - 2]
    return r1[i + 1, 1] * prev[a + l - 1, b + l - 1]


def _band(l, r1, prev):
    out = np.zeros((2 * l + 1, 2 * l + 1))
    for m in range(-l, l + 1):
        for n in range(-l, l + 1):
            am = abs(m)
            denom = (2 * l) * (2 * l - 1) if abs(n) == l else (l + n) * (l - n)
            dm0 = 1.0 if m == 0 else 0.0
            u = math.sqrt((l + m) * (l - m) / denom)
            v = 0.5 * math.sqrt((1 + dm0) * (l + am - 1) * (l + am) / denom) * (1 - 2 * dm0)
            w = -0.5 * math.sqrt((l - am - 1) * (l - am) / denom) * (1 - dm0)

            val = 0.0
            if u:
                val += u * _p(l, 0, m, n, r1, prev)
            if v:
                if m == 0:
                    t = _p(l, 1, 1, n, r1, prev) + _p(l, -1, -1, n, r1, prev)
                elif m > 0:
                    d1 = 1.0 if m == 1 else 0.0
                    t = _p(l, 1, m - 1, n, r1, prev) * math.sqrt(1 + d1) \
                        - _p(l, -1, 1 - m, n, r1, prev) * (1 - d1)
                else:
                    d1 = 1.0 if m == -1 else 0.0
                    t = _p(l, 1, m + 1, n, r1, prev) * (1 - d1) \
                        + _p(l, -1, -m - 1, n, r1, prev) * math.sqrt(1 + d1)
                val += v * t
            if w:
                if m > 0:
                    t = _p(l, 1, m + 1, n, r1, prev) + _p(l, -1, -m - 1, n, r1, prev)
                else:
                    t = _p(l, 1, m - 1, n, r1, prev) - _p(l, -1, 1 - m, n, r1, prev)
                val += w * t
            out[m + l, n + l] = val
    return out


def sh_rotation_matrix(orientation: Orientation, order: int = 2) -> np.ndarray:
    """Block-diagonal ((order+1)^2)^2 rotation matrix for ACN-ordered SH."""
    if not isinstance(order, int) or order < 0:
        raise errors.UnsupportedOrder(f"order must be a non-negative integer, got {order!r}")
    rot = orientation.matrix()
    n_ch = (order + 1) ** 2
    out = np.zeros((n_ch, n_ch))
    out[0, 0] = 1.0
    if order == 0:
        return out
    r1 = rot[np.ix_(_ACN1_PERM, _ACN1_PERM)]
    out[1:4, 1:4] = r1
    prev = r1
    for l in range(2, order + 1):
        prev = _band(l, r1, prev)
        lo = l * l
        out[lo:lo + 2 * l + 1, lo:lo + 2 * l + 1] = prev
    return out


def apply_rotation(block: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Rotate an SH signal block (channels, samples) by ``matrix``."""
    block = np.asarray(block)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise errors.DimensionMismatch(f"rotation matrix must be square, got {matrix.shape}")
    if block.ndim != 2 or block.shape[0] != matrix.shape[1]:
        raise errors.DimensionMismatch(
            f"block has {block.shape} channels, matrix expects {matrix.shape[1]}")
    return matrix @ block
