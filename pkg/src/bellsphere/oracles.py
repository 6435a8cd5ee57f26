"""Deliberately naive reference computations used to validate the library.

Sphere quadrature, exact outcome-tree enumeration, and closed two-branch
sums.  The formulas here are restated from first principles on purpose:
these functions must stay independent of the modules they check (no shared
closed forms), since they are the main defense against transcription
errors in the expectation formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Ensemble, FullSphere, Hemisphere, Ring
from .detectors import DetectorModel, Sign, StochasticSign

_TWO_PI = 2.0 * math.pi


def _reduced(delta: float) -> float:
    # |delta| folded into [0, pi]; restated locally, see module docstring
    return abs(math.remainder(delta, _TWO_PI))


@dataclass(frozen=True)
class QuadratureSpec:
    """Midpoint-rule grid on (cos theta, phi).

    The default resolves smooth moments to a few 1e-7: the midpoint error
    for f = z^2 is exactly 1/(3 n_theta^2).
    """

    n_theta: int = 1024
    n_phi: int = 1024

    def __post_init__(self):
        if self.n_theta < 8 or self.n_phi < 8:
            raise ValueError("quadrature grids need at least 8 nodes per axis")


def quad_expectation(f, spec: QuadratureSpec | None = None) -> float:
    """Sphere average (1/4pi) integral of f dOmega by the midpoint rule.

    ``f`` maps an (m, 3) array of unit vectors to (m,) values.  Midpoint on
    (cos theta, phi) makes all node weights equal, so the average is just
    the mean of f over the grid; error falls off as the square of the grid
    spacing for smooth integrands.
    """
    spec = spec or QuadratureSpec()
    u = -1.0 + (np.arange(spec.n_theta) + 0.5) * (2.0 / spec.n_theta)
    phi = (np.arange(spec.n_phi) + 0.5) * (_TWO_PI / spec.n_phi)
    uu, pp = np.meshgrid(u, phi, indexing="ij")
    rr = np.sqrt(np.maximum(1.0 - uu * uu, 0.0))
    points = np.stack(
        [rr * np.cos(pp), rr * np.sin(pp), uu], axis=-1
    ).reshape(-1, 3)
    return float(np.mean(f(points)))


def _sign_outcome_weight(outcome: float, sign: int, p_hi: float) -> float:
    # P(outcome | sign of the projection), for threshold-type detectors
    agrees = (outcome > 0) == (sign > 0)
    return p_hi if agrees else 1.0 - p_hi


def enumerate_pointlike_E(model: DetectorModel, delta: float) -> float:
    """Exact pair expectation for the threshold detectors, with no sampling.

    Enumerates the four joint sign configurations of (J_1a, J_1b) -- same
    sign with probability 1 - d/pi from the lune geometry -- applies the
    source anti-correlation sign(J_2b) = -sign(J_1b), and sums the four
    weighted outcome products per configuration.
    """
    if isinstance(model, Sign):
        p_hi = 1.0
    elif isinstance(model, StochasticSign):
        p_hi = model.p_hi
    else:
        raise TypeError("enumeration covers the Sign and StochasticSign models")
    d = _reduced(delta)
    p_same = 1.0 - d / math.pi
    expectation = 0.0
    for s1 in (-1, 1):
        for t in (-1, 1):
            p_signs = 0.5 * (p_same if s1 == t else 1.0 - p_same)
            s2 = -t
            for o1 in (-0.5, 0.5):
                for o2 in (-0.5, 0.5):
                    expectation += (
                        p_signs
                        * _sign_outcome_weight(o1, s1, p_hi)
                        * _sign_outcome_weight(o2, s2, p_hi)
                        * o1
                        * o2
                    )
    return expectation


def enumerate_ensemble_E(delta: float) -> float:
    """Exact pair expectation for the ensemble detector via the two-branch
    outcome tree: P(R_1a = k) = 1/2, then particle 2 measured on the
    opposite hemisphere with P(+1/2) = (1 - sign(k) cos d) / 2."""
    d = _reduced(delta)
    expectation = 0.0
    for k in (-0.5, 0.5):
        sign_k = 1 if k > 0 else -1
        p2_plus = 0.5 * (1.0 - sign_k * math.cos(d))
        for k_prime, p_branch in ((0.5, p2_plus), (-0.5, 1.0 - p2_plus)):
            expectation += 0.5 * p_branch * k * k_prime
    return expectation


def sequence_tree_mean(e0: Ensemble, axes, max_depth: int = 20) -> float:
    """Exact expected final outcome of an ensemble-measurement sequence,
    by full enumeration of the 2^n outcome branches.

    The branch probabilities restate the measurement law locally: from a
    hemisphere of sign s about theta0, measuring theta gives +1/2 with
    probability (1 + s cos(theta - theta0)) / 2 and leaves a hemisphere of
    the outcome's sign about theta.
    """
    axes = list(axes)
    if not axes:
        raise ValueError("need at least one axis")
    if len(axes) > max_depth:
        raise ValueError(f"sequence depth {len(axes)} exceeds cap {max_depth}")
    if isinstance(e0, Ring):
        raise ValueError("ensemble measurement is defined on sphere/hemisphere only")
    if isinstance(e0, Hemisphere):
        state = (e0.axis.theta, float(e0.sign))
    elif isinstance(e0, FullSphere):
        state = None
    else:
        raise TypeError(f"not an ensemble: {e0!r}")

    def walk(state, remaining) -> float:
        theta = remaining[0].theta
        if state is None:
            p_plus = 0.5
        else:
            theta0, s = state
            p_plus = 0.5 * (1.0 + s * math.cos(theta - theta0))
        total = 0.0
        for outcome, p_branch in ((0.5, p_plus), (-0.5, 1.0 - p_plus)):
            if len(remaining) == 1:
                total += p_branch * outcome
            else:
                next_state = (theta, 1.0 if outcome > 0 else -1.0)
                total += p_branch * walk(next_state, remaining[1:])
        return total

    return walk(state, axes)
