"""Ensembles on the angular-momentum sphere and the anti-correlated source.

Three ensemble families: the uniform sphere, uniform hemispheres about an
axis in the measurement plane, and rings of fixed magnitude ``j0`` and
z-projection ``jz0``.  The ring family comes with its configuration-space
density (an inverse-square-root profile with an integrable blow-up at the
support boundary) and quadrature helpers that integrate it against the
solid-angle measure.  The pair source emits exactly anti-correlated
two-particle draws, ``j2 = -j1`` component for component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    TWO_PI,
    Axis,
    RngStream,
    angle_delta,
    delta,
    project,
    sample_hemisphere,
    sample_ring,
    sample_sphere,
)


@dataclass(frozen=True)
class FullSphere:
    """Uniform distribution over the whole angular-momentum sphere."""


@dataclass(frozen=True)
class Hemisphere:
    """Uniform distribution on one hemisphere about ``axis``.

    ``sign=+1`` selects the side where the projection onto the axis is
    positive, ``sign=-1`` the other side.
    """

    axis: Axis
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError(f"hemisphere sign must be -1 or +1, got {self.sign!r}")


@dataclass(frozen=True)
class Ring:
    """Fixed-magnitude, fixed-z-projection ring (azimuth uniform)."""

    j0: float
    jz0: float

    def __post_init__(self):
        if self.j0 <= 0.0:
            raise ValueError(f"ring magnitude j0 must be positive, got {self.j0!r}")
        if abs(self.jz0) > self.j0:
            raise ValueError(
                f"|jz0| <= j0 required, got jz0={self.jz0!r}, j0={self.j0!r}"
            )


Ensemble = FullSphere | Hemisphere | Ring


def sample_ensemble(ensemble: Ensemble, rng: RngStream, n: int | None = None):
    """Draw unit vectors from an ensemble (shape (3,) or (n, 3))."""
    if isinstance(ensemble, FullSphere):
        return sample_sphere(rng, n)
    if isinstance(ensemble, Hemisphere):
        return sample_hemisphere(ensemble.axis, ensemble.sign, rng, n)
    if isinstance(ensemble, Ring):
        return sample_ring(ensemble.j0, ensemble.jz0, rng, n)
    raise TypeError(f"not an ensemble: {ensemble!r}")


def ensemble_mean_projection(ensemble: Ensemble, b: Axis) -> float:
    """Mean angular-momentum projection onto axis ``b``.

    Full sphere: 0.  Hemisphere about ``a`` with sign s: s cos(b - a) / 2.
    Ring: jz0 cos(theta_b), in physical units of the ring magnitude (the
    sampled unit vectors average to this divided by j0).
    """
    if isinstance(ensemble, FullSphere):
        return 0.0
    if isinstance(ensemble, Hemisphere):
        return 0.5 * ensemble.sign * math.cos(delta(ensemble.axis, b))
    if isinstance(ensemble, Ring):
        return ensemble.jz0 * math.cos(angle_delta(0.0, b.theta))
    raise TypeError(f"not an ensemble: {ensemble!r}")


def half_mean_projection(ensemble: Ensemble, b: Axis, side: int) -> float:
    """Mean of the projection restricted to one sign side of axis ``b``.

    This is the step-function moment <H(side * J_b) J_b>; the two sides sum
    to the full ensemble mean.  Defined for the sphere and hemispheres only.
    """
    if side not in (-1, 1):
        raise ValueError(f"side must be -1 or +1, got {side!r}")
    if isinstance(ensemble, FullSphere):
        return side * 0.25
    if isinstance(ensemble, Hemisphere):
        return (ensemble.sign * math.cos(delta(ensemble.axis, b)) + side) / 4.0
    if isinstance(ensemble, Ring):
        raise ValueError("half_mean_projection is undefined for ring ensembles")
    raise TypeError(f"not an ensemble: {ensemble!r}")


@dataclass(frozen=True)
class ConfigDensity:
    """Configuration-space density for fixed (j0, jz0).

    value(theta) = N / (sin(theta) * sqrt(j0^2 - jz0^2 / sin^2(theta)))
    on the support sin^2(theta) >= (jz0/j0)^2 and 0 outside; the value at
    the support boundary is +inf (an integrable singularity).  N = j0/2pi^2
    normalizes the density against the solid-angle measure
    sin(theta) dtheta dphi.
    """

    j0: float
    jz0: float

    def __post_init__(self):
        if self.j0 <= 0.0:
            raise ValueError(f"j0 must be positive, got {self.j0!r}")
        if abs(self.jz0) > self.j0:
            raise ValueError(
                f"|jz0| <= j0 required, got jz0={self.jz0!r}, j0={self.j0!r}"
            )

    @property
    def norm_constant(self) -> float:
        return self.j0 / (2.0 * math.pi**2)

    def at(self, theta, phi=0.0):
        """Density at polar angle(s) ``theta`` (azimuth-independent).

        Returns 0 outside the support and +inf on its boundary.
        """
        theta = np.asarray(theta, dtype=float)
        s2 = np.sin(theta) ** 2
        ratio2 = (self.jz0 / self.j0) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            radicand = self.j0**2 - self.jz0**2 / np.where(s2 > 0.0, s2, np.nan)
            inner = self.norm_constant / (
                np.sqrt(s2) * np.sqrt(np.where(radicand > 0.0, radicand, np.nan))
            )
        on_support = s2 >= ratio2
        # s2 == 0 is on-support only for jz0 == 0, where the density blows up
        boundary = on_support & ~(np.nan_to_num(radicand, nan=-1.0) > 0.0)
        out = np.where(on_support, np.where(boundary, np.inf, inner), 0.0)
        return float(out) if out.ndim == 0 else out


def quad_density_normalization(density: ConfigDensity, n_nodes: int = 2048) -> float:
    """Integral of the density against sin(theta) dtheta dphi, by midpoint rule.

    Substituting u = cos(theta) and then u = u0 sin(t) (u0 the half-width of
    the support in u) absorbs the inverse-square-root boundary blow-up, so
    the transformed integrand is bounded and the rule converges cleanly.
    A naive rule in theta would straddle the singularity.
    """
    if n_nodes < 8:
        raise ValueError("n_nodes must be at least 8")
    u0sq = 1.0 - (density.jz0 / density.j0) ** 2
    if u0sq <= 0.0:
        raise ValueError("degenerate ring (|jz0| = j0) has no areal density")
    u0 = math.sqrt(u0sq)
    dt = math.pi / n_nodes
    t = -0.5 * math.pi + (np.arange(n_nodes) + 0.5) * dt
    u = u0 * np.sin(t)
    theta = np.arccos(u)
    values = density.at(theta)
    # du = u0 cos(t) dt; the phi integral contributes 2 pi
    return float(TWO_PI * dt * np.sum(values * u0 * np.cos(t)))


def quad_ring_mean_projection(
    j0: float, jz0: float, axis: Axis, n_nodes: int = 4096
) -> float:
    """Mean projection of the ring's angular momentum onto ``axis``.

    Direct azimuthal quadrature over the ring (physical magnitude ``j0``),
    an independent check of the jz0 cos(theta) closed form.
    """
    if n_nodes < 8:
        raise ValueError("n_nodes must be at least 8")
    if j0 <= 0.0 or abs(jz0) > j0:
        raise ValueError("need j0 > 0 and |jz0| <= j0")
    phi = (np.arange(n_nodes) + 0.5) * (TWO_PI / n_nodes)
    r = math.sqrt(max(j0**2 - jz0**2, 0.0))
    vectors = np.stack(
        [r * np.cos(phi), r * np.sin(phi), np.full_like(phi, jz0)], axis=-1
    )
    return float(np.mean(project(vectors, axis)))


@dataclass(frozen=True)
class StaticSphere:
    """Pair source with j1 uniform on the sphere and j2 = -j1 exactly."""


@dataclass(frozen=True)
class RotatingHemispheres:
    """Pair source drawing, for each pair, a fresh random plane axis and
    opposite hemispheres about it for the two particles (j2 = -j1 exactly).

    Averaged over the per-pair axis the single-particle marginal is uniform
    on the sphere, so the emitted statistics match :class:`StaticSphere`.
    """


PairSource = StaticSphere | RotatingHemispheres


def sample_pair(source: PairSource, rng: RngStream, n: int | None = None):
    """Draw anti-correlated pairs; returns (j1, j2) with j2 = -j1 exactly."""
    if isinstance(source, StaticSphere):
        j1 = sample_sphere(rng, n)
        return j1, -j1
    if isinstance(source, RotatingHemispheres):
        scalar = n is None
        draws = np.atleast_2d(rng.uniform((1 if scalar else n, 4)))
        beta = TWO_PI * draws[:, 0]
        side = np.where(draws[:, 1] < 0.5, 1.0, -1.0)
        zf = side * (1.0 - draws[:, 2])
        az = TWO_PI * draws[:, 3]
        rf = np.sqrt(np.maximum(1.0 - zf * zf, 0.0))
        xf = rf * np.cos(az)
        yf = rf * np.sin(az)
        sin_b = np.sin(beta)
        cos_b = np.cos(beta)
        j1 = np.stack(
            [xf, zf * sin_b + yf * cos_b, zf * cos_b - yf * sin_b], axis=-1
        )
        if scalar:
            j1 = j1[0]
        return j1, -j1
    raise TypeError(f"not a pair source: {source!r}")
