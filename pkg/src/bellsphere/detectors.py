"""The four detector models and their measurement protocols.

Three models are point-like (the outcome is a function of the measured
vector, possibly through per-vector outcome probabilities): ``Direct``
reads the projection itself, ``Sign`` thresholds it to +-1/2, and
``StochasticSign`` flips the thresholded outcome with probability
``1 - p_hi``.  The fourth, ``EnsembleDep``, ties outcome statistics to the
particle's *ensemble*: measuring along an axis draws +-1/2 with
probabilities fixed by the ensemble's mean projection, then replaces the
ensemble with the hemisphere about the measured axis matching the outcome.
That update makes sequential measurements along different axes order
dependent, and, combined with exact pair anti-correlation, it is the
mechanism probed by the CHSH analysis layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Axis, RngStream, delta, project
from .distributions import (
    Ensemble,
    FullSphere,
    Hemisphere,
    PairSource,
    Ring,
    ensemble_mean_projection,
    sample_pair,
)


@dataclass(frozen=True)
class Direct:
    """Reads the projection value itself; outcomes lie in [-1, 1]."""


@dataclass(frozen=True)
class Sign:
    """+1/2 when the projection is positive, -1/2 when negative.

    A projection of exactly zero (measure zero) counts as positive.
    """


@dataclass(frozen=True)
class StochasticSign:
    """+-1/2, matching the projection's sign with probability ``p_hi``."""

    p_hi: float = 0.75

    def __post_init__(self):
        if not 0.5 <= self.p_hi <= 1.0:
            raise ValueError(f"p_hi must lie in [1/2, 1], got {self.p_hi!r}")


@dataclass(frozen=True)
class EnsembleDep:
    """Ensemble-updating detector: outcomes depend on the ensemble, not on
    the individual vector, and each measurement collapses the ensemble to a
    hemisphere about its own axis."""


DetectorModel = Direct | Sign | StochasticSign | EnsembleDep

_POINTLIKE = (Direct, Sign, StochasticSign)

_NAMES = {
    Direct: "direct",
    Sign: "sign",
    StochasticSign: "stochastic",
    EnsembleDep: "ensemble",
}


def is_pointlike(model: DetectorModel) -> bool:
    return isinstance(model, _POINTLIKE)


def v_max(model: DetectorModel) -> float:
    """Largest absolute detector reading: 1 for Direct, 1/2 otherwise."""
    return 1.0 if isinstance(model, Direct) else 0.5


def model_name(model: DetectorModel) -> str:
    return _NAMES[type(model)]


def model_from_name(name: str, p_hi: float = 0.75) -> DetectorModel:
    if name == "direct":
        return Direct()
    if name == "sign":
        return Sign()
    if name == "stochastic":
        return StochasticSign(p_hi)
    if name == "ensemble":
        return EnsembleDep()
    raise ValueError(f"unknown detector model {name!r}")


@dataclass(frozen=True)
class MeasurementRecord:
    """One step of an ensemble measurement sequence.

    ``delta_mean_projection`` is the direct difference
    mean(post, axis) - mean(pre, axis); an alternative bookkeeping of the
    same quantity is provided by :func:`projection_delta_alt_form` (the two
    disagree, and the CLI reports both).
    """

    axis: Axis
    outcome: float
    pre_ensemble: Ensemble
    post_ensemble: Ensemble
    delta_mean_projection: float


def measure_pointlike(model: DetectorModel, j, axis: Axis, rng: RngStream | None = None):
    """Measure vector(s) ``j`` with a point-like detector.

    Accepts one vector (3,) or a batch (n, 3); outcomes come back as a
    float or an (n,) array.  ``rng`` is only consumed by StochasticSign.
    """
    if not is_pointlike(model):
        raise TypeError(
            "measure_pointlike needs a point-like model; the ensemble "
            "detector is driven through measure_ensemble/measure_pair"
        )
    p = project(j, axis)
    if isinstance(model, Direct):
        return p
    base = np.where(np.asarray(p) >= 0.0, 0.5, -0.5)
    if isinstance(model, Sign):
        return float(base) if np.isscalar(p) else base
    if rng is None:
        raise ValueError("StochasticSign needs an RngStream")
    u = rng.uniform(None if np.isscalar(p) else np.shape(p))
    out = np.where(np.asarray(u) < model.p_hi, base, -base)
    return float(out) if np.isscalar(p) else out


def outcome_probabilities(ensemble: Ensemble, axis: Axis) -> tuple[float, float]:
    """(P(+1/2), P(-1/2)) for an ensemble measurement along ``axis``.

    The probabilities are pinned by requiring the outcome average to equal
    the ensemble's mean projection: P(+-1/2) = 1/2 +- mean.
    """
    if isinstance(ensemble, Ring):
        raise ValueError("ensemble measurement is defined on sphere/hemisphere only")
    p_plus = 0.5 + ensemble_mean_projection(ensemble, axis)
    p_plus = min(max(p_plus, 0.0), 1.0)
    return p_plus, 1.0 - p_plus


def measure_ensemble(
    ensemble: Ensemble, axis: Axis, rng: RngStream
) -> tuple[float, Ensemble]:
    """One ensemble measurement: returns (outcome, post ensemble).

    The post ensemble is always the hemisphere about the measured axis on
    the side selected by the outcome, so re-measuring the same axis
    reproduces the outcome with certainty.
    """
    p_plus, _ = outcome_probabilities(ensemble, axis)
    outcome = 0.5 if rng.uniform() < p_plus else -0.5
    post = Hemisphere(axis, 1 if outcome > 0 else -1)
    return outcome, post


def measure_sequence(
    e0: Ensemble, axes, rng: RngStream
) -> list[MeasurementRecord]:
    """Fold ensemble measurements over ``axes``, recording each step."""
    records = []
    current = e0
    for axis in axes:
        pre_mean = ensemble_mean_projection(current, axis)
        outcome, post = measure_ensemble(current, axis, rng)
        records.append(
            MeasurementRecord(
                axis=axis,
                outcome=outcome,
                pre_ensemble=current,
                post_ensemble=post,
                delta_mean_projection=ensemble_mean_projection(post, axis) - pre_mean,
            )
        )
        current = post
    return records


def projection_delta_alt_form(pre: Ensemble, axis: Axis, outcome: float) -> float:
    """Alternative bookkeeping of the measurement-induced projection change:
    -2 k P(R = k) for outcome k measured on ``pre``.

    For this update rule the direct post-minus-pre difference and this form
    disagree (already in sign for small axis separations), so callers report
    both rather than silently picking one.
    """
    p_plus, p_minus = outcome_probabilities(pre, axis)
    p_k = p_plus if outcome > 0 else p_minus
    return -2.0 * outcome * p_k


def sequence_outcomes(
    e0: Ensemble, axes, n: int, rng: RngStream
) -> np.ndarray:
    """Vectorized ensemble-measurement sequences: (len(axes), n) outcomes.

    Exploits that after the first measurement every trial's ensemble is a
    hemisphere about the current axis, so the per-trial state reduces to a
    sign.  Row i holds the n outcomes of step i.
    """
    if isinstance(e0, Ring):
        raise ValueError("ensemble measurement is defined on sphere/hemisphere only")
    axes = list(axes)
    out = np.empty((len(axes), n))
    if isinstance(e0, Hemisphere):
        cur_theta, signs = e0.axis.theta, np.full(n, float(e0.sign))
    else:
        cur_theta, signs = None, np.zeros(n)
    for i, axis in enumerate(axes):
        if cur_theta is None:
            p_plus = np.full(n, 0.5)
        else:
            p_plus = 0.5 * (1.0 + signs * math.cos(delta(Axis(cur_theta), axis)))
        signs = np.where(rng.uniform(n) < p_plus, 1.0, -1.0)
        out[i] = 0.5 * signs
        cur_theta = axis.theta
    return out


def measure_pair(
    model: DetectorModel, source: PairSource, a: Axis, b: Axis, rng: RngStream
) -> tuple[float, float]:
    """Measure one correlated pair; particle 1 along ``a``, particle 2 along ``b``.

    Point-like models draw (j1, j2) from the source and measure each vector
    locally.  The ensemble detector instead measures particle 1 from the
    full-sphere ensemble; angular-momentum conservation then places
    particle 2 in the opposite hemisphere about ``a``, which is measured
    along ``b``.  (The source argument is ignored in that branch: the
    emitted statistics of both sources coincide with the full-sphere
    ensemble.)
    """
    if isinstance(model, EnsembleDep):
        o1, post1 = measure_ensemble(FullSphere(), a, rng)
        partner = Hemisphere(a, -post1.sign)
        o2, _ = measure_ensemble(partner, b, rng)
        return o1, o2
    j1, j2 = sample_pair(source, rng)
    o1 = measure_pointlike(model, j1, a, rng)
    o2 = measure_pointlike(model, j2, b, rng)
    return float(o1), float(o2)


def measure_pair_batch(
    model: DetectorModel,
    source: PairSource,
    a: Axis,
    b: Axis,
    n: int,
    rng: RngStream,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`measure_pair`: two (n,) outcome arrays."""
    if isinstance(model, EnsembleDep):
        draws = rng.uniform((n, 2))
        o1 = np.where(draws[:, 0] < 0.5, 0.5, -0.5)
        # particle 2 occupies the opposite hemisphere about a; its +1/2
        # probability along b is (1 - sign(o1) cos(b - a)) / 2
        p2_plus = 0.5 * (1.0 - 2.0 * o1 * math.cos(delta(a, b)))
        o2 = np.where(draws[:, 1] < p2_plus, 0.5, -0.5)
        return o1, o2
    j1, j2 = sample_pair(source, rng, n)
    o1 = measure_pointlike(model, j1, a, rng)
    o2 = measure_pointlike(model, j2, b, rng)
    return np.asarray(o1, dtype=float), np.asarray(o2, dtype=float)
