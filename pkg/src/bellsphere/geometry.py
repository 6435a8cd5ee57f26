"""Axes, unit angular-momentum vectors, and seeded sampling on the sphere.

Every measurement axis lies in a single plane containing the z axis, so an
axis is one angle measured from z.  Angular momenta are unit 3-vectors
(magnitudes are carried by the ensembles that use them, in units where
J = 1).  All sampling goes through :class:`RngStream`, a counter-based
stream whose output is a pure function of ``(seed, stream_id, counter)``,
which is what makes block-parallel Monte Carlo runs bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    # splitmix64 finalizer: a bijective 64-bit mixer
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def _derive_stream_id(parent: int, index: int) -> int:
    return _mix64(parent ^ ((index + 1) * _GOLDEN))


class RngStream:
    """Counter-based random stream (Philox 4x64 under the hood).

    The draw sequence is a pure function of ``(seed, stream_id, counter)``:
    the same triple reproduces the same bits on every platform and run.
    Distinct stream ids give statistically independent sequences, so
    parallel workers may own disjoint streams with no coordination.

    ``counter`` is the Philox block counter at which the stream starts;
    one block is four 64-bit words, i.e. four uniform doubles.  The object
    holds a cursor that advances as draws are consumed; pass streams by
    value (one owner each) rather than sharing them across workers.
    """

    __slots__ = ("seed", "stream_id", "counter", "_gen")

    def __init__(self, seed: int, stream_id: int = 0, counter: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.counter = int(counter)
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key, counter=self.counter))

    def uniform(self, size=None):
        """Uniform draws in [0, 1): a float when ``size`` is None, else an array."""
        return self._gen.random(size)

    def split(self, index: int) -> "RngStream":
        """Independent child stream for work unit ``index``.

        The child id is a fixed hash of (parent stream_id, index), so block
        assignments are stable across runs and worker counts.
        """
        return RngStream(self.seed, _derive_stream_id(self.stream_id, index))

    def __repr__(self) -> str:
        return (
            f"RngStream(seed={self.seed}, stream_id={self.stream_id}, "
            f"counter={self.counter})"
        )


@dataclass(frozen=True)
class Axis:
    """A measurement direction in the shared plane: angle from the z axis."""

    theta: float

    def __post_init__(self):
        t = float(self.theta) % TWO_PI
        if t >= TWO_PI:  # guard the rounding edge of %
            t -= TWO_PI
        object.__setattr__(self, "theta", t)

    @property
    def direction(self) -> np.ndarray:
        """Unit vector (0, sin theta, cos theta)."""
        return np.array([0.0, math.sin(self.theta), math.cos(self.theta)])


def angle_delta(theta_a: float, theta_b: float) -> float:
    """Axis separation |theta_b - theta_a| reduced to [0, pi]."""
    d = abs(theta_b - theta_a) % TWO_PI
    return TWO_PI - d if d > math.pi else d


def delta(a: Axis, b: Axis) -> float:
    """Separation of two axes, in [0, pi]."""
    return angle_delta(a.theta, b.theta)


@dataclass(frozen=True)
class PhaseSpacePoint:
    """Canonical coordinates (theta, phi) on the sphere plus conjugate momenta.

    Houses the defining relations J_z = p_phi and
    J^2 = p_theta^2 + p_phi^2 / sin^2(theta).
    """

    theta: float
    phi: float
    p_theta: float
    p_phi: float

    def j_z(self) -> float:
        return self.p_phi

    def j_squared(self) -> float:
        s = math.sin(self.theta)
        if s == 0.0:
            return math.inf if self.p_phi != 0.0 else self.p_theta**2
        return self.p_theta**2 + (self.p_phi / s) ** 2


def project(j, axis: Axis):
    """Projection of j onto the axis: j . (0, sin theta, cos theta).

    Accepts a single vector of shape (3,) or a batch of shape (n, 3);
    returns a float or an (n,) array accordingly.
    """
    j = np.asarray(j, dtype=float)
    out = j[..., 1] * math.sin(axis.theta) + j[..., 2] * math.cos(axis.theta)
    return float(out) if out.ndim == 0 else out


def is_unit(j, tol: float = 1e-12) -> bool:
    """True when every vector in ``j`` has norm within ``tol`` of 1."""
    norms = np.linalg.norm(np.asarray(j, dtype=float), axis=-1)
    return bool(np.all(np.abs(norms - 1.0) < tol))


def sample_sphere(rng: RngStream, n: int | None = None):
    """Uniform unit vectors: z = 2u - 1, azimuth = 2 pi v.

    Returns one (3,) vector when ``n`` is None, else an (n, 3) array.
    Calling this n times with n=None consumes the stream exactly like one
    batched call, so both paths yield identical vectors.
    """
    scalar = n is None
    draws = np.atleast_2d(rng.uniform((1 if scalar else n, 2)))
    z = 2.0 * draws[:, 0] - 1.0
    az = TWO_PI * draws[:, 1]
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    out = np.stack([r * np.cos(az), r * np.sin(az), z], axis=-1)
    return out[0] if scalar else out


def sample_hemisphere(axis: Axis, sign: int, rng: RngStream, n: int | None = None):
    """Uniform on the hemisphere where sign * project(j, axis) > 0.

    Sampled in the hemisphere's own frame and rotated into place; the frame
    z-coordinate is drawn in (0, 1], so the support constraint holds
    strictly for every draw (no rejection step).
    """
    if sign not in (-1, 1):
        raise ValueError(f"hemisphere sign must be -1 or +1, got {sign!r}")
    scalar = n is None
    draws = np.atleast_2d(rng.uniform((1 if scalar else n, 2)))
    zf = sign * (1.0 - draws[:, 0])
    az = TWO_PI * draws[:, 1]
    rf = np.sqrt(np.maximum(1.0 - zf * zf, 0.0))
    xf = rf * np.cos(az)
    yf = rf * np.sin(az)
    sin_t = math.sin(axis.theta)
    cos_t = math.cos(axis.theta)
    out = np.stack(
        [xf, zf * sin_t + yf * cos_t, zf * cos_t - yf * sin_t], axis=-1
    )
    return out[0] if scalar else out


def sample_ring(j0: float, jz0: float, rng: RngStream, n: int | None = None):
    """Unit vectors with z fixed at jz0/j0 and uniform azimuth."""
    if j0 <= 0.0:
        raise ValueError(f"ring magnitude j0 must be positive, got {j0!r}")
    if abs(jz0) > j0:
        raise ValueError(f"|jz0| <= j0 required, got jz0={jz0!r}, j0={j0!r}")
    scalar = n is None
    z = jz0 / j0
    r = math.sqrt(max(1.0 - z * z, 0.0))
    az = TWO_PI * np.atleast_1d(rng.uniform(1 if scalar else n))
    out = np.stack(
        [r * np.cos(az), r * np.sin(az), np.full_like(az, z)], axis=-1
    )
    return out[0] if scalar else out
