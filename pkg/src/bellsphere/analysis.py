"""Correlation estimation, closed-form expectations, CHSH scans, and
joint-distribution feasibility.

The two-particle expectation E(a, b) is estimated by block-parallel Monte
Carlo and compared against each model's closed form.  The CHSH combination
C = (|E(a,b) - E(a,b')| + |E(a',b) + E(a',b')|) / v_max^2 is bounded by 2
for any model admitting a joint outcome distribution over all four axes;
feasibility of such a joint table (Fine's criterion) is decided by a small
linear program over the 16 outcome atoms and cross-checked against the
eight-inequality CHSH test.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .geometry import Axis, RngStream, angle_delta
from .distributions import PairSource, StaticSphere
from .detectors import (
    DetectorModel,
    Direct,
    EnsembleDep,
    Sign,
    StochasticSign,
    measure_pair_batch,
    model_name,
    v_max,
)

CLOSED_FORM_SLACK = 1e-9
OUTCOME_VALUES = (-0.5, 0.5)  # table index 0 -> -1/2, index 1 -> +1/2


def e_closed(model: DetectorModel, theta_a: float, theta_b: float) -> float:
    """Closed-form pair expectation E(a, b); depends only on the reduced
    separation d = |theta_b - theta_a| in [0, pi].

    Direct: -cos(d)/3.  Sign: -1/4 + d/2pi.  EnsembleDep: -cos(d)/4.
    StochasticSign: -(p_hi - 1/2)^2 (1 - 2d/pi), the enumeration-validated
    form (see :func:`stochastic_sign_alt_form` for the contested variant).
    """
    d = angle_delta(theta_a, theta_b)
    if isinstance(model, Direct):
        return -math.cos(d) / 3.0
    if isinstance(model, Sign):
        return -0.25 + d / (2.0 * math.pi)
    if isinstance(model, StochasticSign):
        return -((model.p_hi - 0.5) ** 2) * (1.0 - 2.0 * d / math.pi)
    if isinstance(model, EnsembleDep):
        return -0.25 * math.cos(d)
    raise TypeError(f"not a detector model: {model!r}")


def stochastic_sign_alt_form(theta_a: float, theta_b: float) -> float:
    """Alternative closed form for the noisy sign detector: (d/pi - 1)/8.

    The exact outcome enumeration contradicts it -- per-vector outcome
    averages are +-(p_hi - 1/2) = +-1/4 at the default weights, capping
    |E| at 1/16, while this form reaches 1/8 at d = 0.  It is kept only so
    ``verify`` can print both values side by side; it is not used by any
    estimator.
    """
    d = angle_delta(theta_a, theta_b)
    return (d / math.pi - 1.0) / 8.0


def lune_probability(k: float, k_prime: float, delta: float) -> float:
    """Joint sign-detector probability P(D_1a = k, D_2b = k') from the area
    of the spherical lune cut by the two axes:
    k (k - k') + (2 k k' / pi) |delta|.
    """
    if k not in (-0.5, 0.5) or k_prime not in (-0.5, 0.5):
        raise ValueError("outcomes must be -1/2 or +1/2")
    d = angle_delta(0.0, delta)
    return k * (k - k_prime) + (2.0 * k * k_prime / math.pi) * d


@dataclass(frozen=True)
class CorrelationRecord:
    """One estimated pair correlation with its closed-form reference."""

    model: str
    theta_a: float
    theta_b: float
    n_trials: int
    e_hat: float
    std_err: float
    e_closed: float

    @property
    def z_score(self) -> float:
        if self.std_err > 0.0:
            return (self.e_hat - self.e_closed) / self.std_err
        return 0.0 if self.e_hat == self.e_closed else math.inf


@dataclass(frozen=True)
class ChshResult:
    """CHSH evaluation at one angle quadruple."""

    model: str
    a: float
    b: float
    a_prime: float
    b_prime: float
    c_value: float
    v_max: float
    violated: bool
    c_std_err: float | None = None


def estimate_correlation(
    model: DetectorModel,
    source: PairSource,
    theta_a: float,
    theta_b: float,
    n: int,
    rng: RngStream,
    block_size: int = 4096,
    workers: int = 1,
) -> CorrelationRecord:
    """Monte Carlo estimate of E(a, b) over ``n`` pair measurements.

    Trials are partitioned into fixed-size blocks; block i draws from the
    child stream ``rng.split(i)`` and block partials are reduced in block
    order, so the result is bit-identical for a given (seed, stream_id,
    block_size) no matter how many workers run the blocks.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if block_size < 1:
        raise ValueError("block_size must be at least 1")
    axis_a, axis_b = Axis(theta_a), Axis(theta_b)
    n_blocks = (n + block_size - 1) // block_size

    def block_partial(i: int) -> tuple[float, float]:
        m = min(block_size, n - i * block_size)
        o1, o2 = measure_pair_batch(model, source, axis_a, axis_b, m, rng.split(i))
        prod = o1 * o2
        return float(prod.sum()), float((prod * prod).sum())

    if workers <= 1:
        partials = [block_partial(i) for i in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(block_partial, range(n_blocks)))

    total = 0.0
    total_sq = 0.0
    for part, part_sq in partials:  # ordered, deterministic reduction
        total += part
        total_sq += part_sq
    e_hat = total / n
    if n > 1:
        variance = max(total_sq - n * e_hat * e_hat, 0.0) / (n - 1)
    else:
        variance = 0.0
    return CorrelationRecord(
        model=model_name(model),
        theta_a=theta_a,
        theta_b=theta_b,
        n_trials=n,
        e_hat=e_hat,
        std_err=math.sqrt(variance / n),
        e_closed=e_closed(model, theta_a, theta_b),
    )


def chsh(
    model: DetectorModel,
    angles: tuple[float, float, float, float],
    mode: str = "closed",
    n: int | None = None,
    rng: RngStream | None = None,
    source: PairSource | None = None,
    block_size: int = 4096,
    workers: int = 1,
) -> ChshResult:
    """Evaluate the CHSH combination at angles (a, b, a', b').

    ``mode="closed"`` uses the closed forms and flags a violation when
    C > 2 + 1e-9; ``mode="montecarlo"`` estimates each of the four pair
    correlations with ``n`` trials and flags one when C exceeds 2 by at
    least three propagated standard errors.
    """
    a, b, a_prime, b_prime = angles
    pairs = [(a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime)]
    v = v_max(model)
    if mode == "closed":
        es = [e_closed(model, ta, tb) for ta, tb in pairs]
        c_value = (abs(es[0] - es[1]) + abs(es[2] + es[3])) / v**2
        return ChshResult(
            model=model_name(model),
            a=a,
            b=b,
            a_prime=a_prime,
            b_prime=b_prime,
            c_value=c_value,
            v_max=v,
            violated=c_value > 2.0 + CLOSED_FORM_SLACK,
        )
    if mode != "montecarlo":
        raise ValueError(f"mode must be 'closed' or 'montecarlo', got {mode!r}")
    if n is None or rng is None:
        raise ValueError("montecarlo mode needs n and rng")
    source = source if source is not None else StaticSphere()
    records = [
        estimate_correlation(
            model, source, ta, tb, n, rng.split(i), block_size, workers
        )
        for i, (ta, tb) in enumerate(pairs)
    ]
    es = [r.e_hat for r in records]
    c_value = (abs(es[0] - es[1]) + abs(es[2] + es[3])) / v**2
    c_std_err = math.sqrt(sum(r.std_err**2 for r in records)) / v**2
    return ChshResult(
        model=model_name(model),
        a=a,
        b=b,
        a_prime=a_prime,
        b_prime=b_prime,
        c_value=c_value,
        v_max=v,
        violated=c_value > 2.0 + 3.0 * c_std_err,
        c_std_err=c_std_err,
    )


def sweep_chsh(
    model: DetectorModel,
    grid_step: float,
    mode: str = "closed",
    n: int | None = None,
    rng: RngStream | None = None,
    source: PairSource | None = None,
    block_size: int = 4096,
    workers: int = 1,
) -> tuple[ChshResult, list[ChshResult]]:
    """Exhaustive CHSH scan over all angle quadruples on a grid of spacing
    ``grid_step`` covering [0, pi); returns (argmax result, all results).

    The step must divide pi; correlations depend only on reduced axis
    separations, so the [0, pi) grid already realizes every quadruple of
    separations the full circle would.
    """
    ratio = math.pi / grid_step
    m = round(ratio)
    if m < 1 or abs(ratio - m) > 1e-9:
        raise ValueError(f"grid_step must divide pi, got {grid_step!r}")
    grid = [i * grid_step for i in range(m)]
    results = []
    best = None
    for index, quad in enumerate(itertools.product(grid, repeat=4)):
        result = chsh(
            model,
            quad,
            mode=mode,
            n=n,
            rng=rng.split(index) if rng is not None else None,
            source=source,
            block_size=block_size,
            workers=workers,
        )
        results.append(result)
        if best is None or result.c_value > best.c_value:
            best = result
    return best, results


class JointTable:
    """Probability table over the 16 joint outcome assignments
    (v_1a, v_1a', v_2b, v_2b') with each value in {-1/2, +1/2}.

    ``probs`` has shape (2, 2, 2, 2) with axes in that observable order and
    index 0 -> -1/2, index 1 -> +1/2; entries are nonnegative and sum to 1.
    """

    __slots__ = ("probs",)

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (2, 2, 2, 2):
            raise ValueError(f"expected shape (2, 2, 2, 2), got {probs.shape}")
        if probs.min() < -1e-9:
            raise ValueError("joint table entries must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-6:
            raise ValueError("joint table must sum to 1")
        self.probs = np.maximum(probs, 0.0)

    @classmethod
    def uniform(cls) -> "JointTable":
        return cls(np.full((2, 2, 2, 2), 1.0 / 16.0))

    def correlations(self) -> tuple[float, float, float, float]:
        """(E_ab, E_ab', E_a'b, E_a'b') reproduced by the table."""
        values = np.array(OUTCOME_VALUES)
        v1a, v1ap, v2b, v2bp = np.meshgrid(values, values, values, values, indexing="ij")
        return (
            float((self.probs * v1a * v2b).sum()),
            float((self.probs * v1a * v2bp).sum()),
            float((self.probs * v1ap * v2b).sum()),
            float((self.probs * v1ap * v2bp).sum()),
        )

    def marginals(self) -> tuple[float, ...]:
        """Eight single-outcome marginals, (P(X = +1/2), P(X = -1/2)) for
        each observable in the order (v_1a, v_1a', v_2b, v_2b')."""
        out = []
        for obs_axis in range(4):
            summed = self.probs.sum(axis=tuple(i for i in range(4) if i != obs_axis))
            out.extend([float(summed[1]), float(summed[0])])
        return tuple(out)

    def __repr__(self) -> str:
        return f"JointTable(sum={self.probs.sum():.6f})"


def _feasibility_system(correlations, marginals):
    atoms = list(itertools.product((0, 1), repeat=4))
    rows = [[1.0] * 16]
    rhs = [1.0]
    for i, j in [(0, 2), (0, 3), (1, 2), (1, 3)]:
        rows.append(
            [OUTCOME_VALUES[atom[i]] * OUTCOME_VALUES[atom[j]] for atom in atoms]
        )
    rhs.extend(correlations)
    for obs_axis in range(4):
        for outcome_index in (1, 0):  # +1/2 first, then -1/2
            rows.append(
                [1.0 if atom[obs_axis] == outcome_index else 0.0 for atom in atoms]
            )
    rhs.extend(marginals)
    return np.array(rows), np.array(rhs)


def fine_feasible(
    correlations, marginals
) -> tuple[bool, JointTable | None]:
    """Decide whether a joint outcome table reproduces the four pairwise
    correlations and the eight single-outcome marginals.

    ``correlations`` is (E_ab, E_ab', E_a'b, E_a'b') on the +-1/2 outcome
    scale (each in [-1/4, 1/4]; correlations of a detector with a different
    v_max should be multiplied by (1/4)/v_max^2 first, exactly as the CHSH
    combination normalizes them).  ``marginals`` lists (P(X = +1/2),
    P(X = -1/2)) per observable in the order (v_1a, v_1a', v_2b, v_2b').
    Feasibility is a linear program over the 16 atoms (one normalization,
    four correlation and eight marginal equality rows) accepted at
    constraint residuals below 1e-9; a witness table is returned when one
    exists.
    """
    correlations = [float(e) for e in correlations]
    marginals = [float(p) for p in marginals]
    if len(correlations) != 4 or len(marginals) != 8:
        raise ValueError("need 4 correlations and 8 marginals")
    for p in marginals:
        if not -1e-9 <= p <= 1.0 + 1e-9:
            raise ValueError(f"marginal out of [0, 1]: {p!r}")
    for obs_axis in range(4):
        pair_sum = marginals[2 * obs_axis] + marginals[2 * obs_axis + 1]
        if abs(pair_sum - 1.0) > 1e-9:
            raise ValueError(
                f"marginals for observable {obs_axis} sum to {pair_sum!r}, not 1"
            )
    a_eq, b_eq = _feasibility_system(correlations, marginals)
    result = linprog(
        np.zeros(16), A_eq=a_eq, b_eq=b_eq, bounds=(0.0, 1.0), method="highs"
    )
    if result.status != 0:
        return False, None
    residual = float(np.max(np.abs(a_eq @ result.x - b_eq)))
    if residual > 1e-9:
        return False, None
    return True, JointTable(np.clip(result.x, 0.0, 1.0).reshape(2, 2, 2, 2))


def chsh_inequalities_hold(correlations, v_max: float = 0.5, slack: float = 1e-9) -> bool:
    """Direct check of the eight CHSH sign variants:
    |+-E_ab +- E_ab' +- E_a'b +- E_a'b'| <= 2 v_max^2 for every odd number
    of minus signs.  Independent of the linear-programming route on purpose.
    """
    e = [float(x) for x in correlations]
    bound = 2.0 * v_max**2
    for flip in range(4):
        signed = sum(-v if i == flip else v for i, v in enumerate(e))
        if abs(signed) > bound + slack:
            return False
    return True


def inequality_from_joint(table: JointTable) -> float:
    """The bounded sum sum_atoms P * (|v_1a (v_2b - v_2b')| +
    |v_1a' (v_2b + v_2b')|); at most 2 v_max^2 = 1/2 for any valid table."""
    values = np.array(OUTCOME_VALUES)
    v1a, v1ap, v2b, v2bp = np.meshgrid(values, values, values, values, indexing="ij")
    terms = np.abs(v1a * (v2b - v2bp)) + np.abs(v1ap * (v2b + v2bp))
    return float((table.probs * terms).sum())
