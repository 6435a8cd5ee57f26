import math

import numpy as np
import pytest

from bellsphere import (
    Axis,
    Direct,
    EnsembleDep,
    FullSphere,
    Hemisphere,
    Ring,
    RngStream,
    Sign,
    StaticSphere,
    StochasticSign,
    ensemble_mean_projection,
    measure_ensemble,
    measure_pair,
    measure_pair_batch,
    measure_pointlike,
    measure_sequence,
    model_from_name,
    model_name,
    outcome_probabilities,
    projection_delta_alt_form,
    sequence_outcomes,
    v_max,
)

Z_AXIS = np.array([0.0, 0.0, 1.0])


def sigma_bound(samples, expected):
    se = np.std(samples, ddof=1) / math.sqrt(len(samples))
    return abs(float(np.mean(samples)) - expected) / max(se, 1e-300)


class TestModelPlumbing:
    def test_names_round_trip(self):
        for name in ("direct", "sign", "stochastic", "ensemble"):
            assert model_name(model_from_name(name)) == name
        with pytest.raises(ValueError):
            model_from_name("laser")

    def test_v_max(self):
        assert v_max(Direct()) == 1.0
        assert v_max(Sign()) == 0.5
        assert v_max(StochasticSign()) == 0.5
        assert v_max(EnsembleDep()) == 0.5

    def test_stochastic_weight_validation(self):
        with pytest.raises(ValueError):
            StochasticSign(0.3)
        with pytest.raises(ValueError):
            StochasticSign(1.1)


class TestPointlike:
    def test_direct_returns_projection(self):
        assert measure_pointlike(Direct(), Z_AXIS, Axis(math.pi / 3)) == (
            pytest.approx(0.5)
        )

    def test_sign_thresholds(self):
        assert measure_pointlike(Sign(), Z_AXIS, Axis(0.0)) == 0.5
        assert measure_pointlike(Sign(), -Z_AXIS, Axis(0.0)) == -0.5

    def test_zero_projection_counts_as_positive(self):
        # x is orthogonal to the measurement plane: projection is exactly 0
        x = np.array([1.0, 0.0, 0.0])
        assert measure_pointlike(Sign(), x, Axis(1.0)) == 0.5

    def test_sign_outcomes_are_pure_in_the_vector(self):
        j = np.array([0.0, 0.6, -0.8])
        a = Axis(2.0)
        assert measure_pointlike(Sign(), j, a) == measure_pointlike(Sign(), j, a)

    def test_stochastic_agreement_frequency(self):
        js = np.tile(Z_AXIS, (1_000_000, 1))
        out = measure_pointlike(StochasticSign(), js, Axis(0.0), RngStream(41))
        p_hat = float(np.mean(out > 0))
        assert abs(p_hat - 0.75) <= 5.0 * math.sqrt(0.75 * 0.25 / len(js))
        assert sigma_bound(out, 0.25) <= 5.0  # mean outcome given J_a > 0

    def test_stochastic_reduces_to_sign_at_unit_weight(self):
        js = np.tile(Z_AXIS, (100, 1))
        out = measure_pointlike(StochasticSign(1.0), js, Axis(0.0), RngStream(42))
        assert np.all(out == 0.5)

    def test_ensemble_model_is_rejected(self):
        with pytest.raises(TypeError):
            measure_pointlike(EnsembleDep(), Z_AXIS, Axis(0.0), RngStream(1))


class TestEnsembleMeasurement:
    def test_probabilities_sum_to_one_everywhere(self):
        gen = np.random.default_rng(2)
        for _ in range(1000):
            ensemble = Hemisphere(
                Axis(float(gen.uniform(0, 2 * math.pi))),
                1 if gen.uniform() < 0.5 else -1,
            )
            p_plus, p_minus = outcome_probabilities(
                ensemble, Axis(float(gen.uniform(0, 2 * math.pi)))
            )
            assert 0.0 <= p_plus <= 1.0
            assert p_plus + p_minus == 1.0

    def test_mean_preservation_constraint(self):
        # the outcome average must reproduce the ensemble mean projection
        gen = np.random.default_rng(3)
        for _ in range(20):
            ensemble = Hemisphere(
                Axis(float(gen.uniform(0, 2 * math.pi))),
                1 if gen.uniform() < 0.5 else -1,
            )
            axis = Axis(float(gen.uniform(0, 2 * math.pi)))
            p_plus, p_minus = outcome_probabilities(ensemble, axis)
            assert 0.5 * p_plus - 0.5 * p_minus == pytest.approx(
                ensemble_mean_projection(ensemble, axis), abs=1e-12
            )

    def test_aligned_measurement_is_certain(self):
        a = Axis(0.8)
        rng = RngStream(43)
        for _ in range(200):
            outcome, post = measure_ensemble(Hemisphere(a, 1), a, rng)
            assert outcome == 0.5
            assert post == Hemisphere(a, 1)

    def test_branch_probability_at_sixty_degrees(self):
        e0 = Hemisphere(Axis(0.0), 1)
        outcomes = sequence_outcomes(e0, [Axis(math.pi / 3)], 200_000, RngStream(44))
        p_hat = float(np.mean(outcomes[0] > 0))
        assert abs(p_hat - 0.75) <= 5.0 * math.sqrt(0.75 * 0.25 / 200_000)

    def test_full_sphere_is_unbiased_for_any_axis(self):
        outcomes = sequence_outcomes(FullSphere(), [Axis(2.1)], 200_000, RngStream(45))
        p_hat = float(np.mean(outcomes[0] > 0))
        assert abs(p_hat - 0.5) <= 5.0 * math.sqrt(0.25 / 200_000)

    def test_ring_rejected(self):
        with pytest.raises(ValueError):
            measure_ensemble(Ring(1.0, 0.5), Axis(0.0), RngStream(1))

    def test_repeatability(self):
        rng = RngStream(46)
        a = Axis(1.4)
        for _ in range(200):
            records = measure_sequence(FullSphere(), [a, a, a], rng)
            outcomes = {r.outcome for r in records}
            assert len(outcomes) == 1


class TestMeasureSequence:
    def test_records_chain_ensembles(self):
        axes = [Axis(0.0), Axis(1.0)]
        records = measure_sequence(Hemisphere(Axis(0.0), 1), axes, RngStream(47))
        assert records[0].post_ensemble == records[1].pre_ensemble
        assert isinstance(records[1].post_ensemble, Hemisphere)
        assert records[1].post_ensemble.axis == axes[1]

    def test_delta_bookkeeping_values(self):
        # from the + hemisphere about 0, measuring pi/3: post mean is +-1/2,
        # pre mean is cos(pi/3)/2 = 1/4
        e0 = Hemisphere(Axis(0.0), 1)
        b = Axis(math.pi / 3)
        rng = RngStream(48)
        seen = set()
        for _ in range(100):
            record = measure_sequence(e0, [b], rng)[0]
            seen.add(record.outcome)
            if record.outcome > 0:
                assert record.delta_mean_projection == pytest.approx(0.25)
            else:
                assert record.delta_mean_projection == pytest.approx(-0.75)
        assert seen == {0.5, -0.5}

    def test_alt_form_disagrees_with_direct_difference(self):
        e0 = Hemisphere(Axis(0.0), 1)
        b = Axis(math.pi / 3)
        assert projection_delta_alt_form(e0, b, 0.5) == pytest.approx(-0.75)
        assert projection_delta_alt_form(e0, b, -0.5) == pytest.approx(0.25)

    def test_sequence_means_match_tree_oracle(self):
        from bellsphere import sequence_tree_mean

        e0 = Hemisphere(Axis(0.0), 1)
        axes = [Axis(math.pi / 3), Axis(2 * math.pi / 3)]
        outcomes = sequence_outcomes(e0, axes, 300_000, RngStream(49))
        assert sigma_bound(outcomes[-1], sequence_tree_mean(e0, axes)) <= 5.0
        reverse = list(reversed(axes))
        outcomes_r = sequence_outcomes(e0, reverse, 300_000, RngStream(50))
        assert sigma_bound(outcomes_r[-1], sequence_tree_mean(e0, reverse)) <= 5.0

    def test_scalar_sequence_agrees_with_tree(self):
        from bellsphere import sequence_tree_mean

        e0 = Hemisphere(Axis(0.2), -1)
        axes = [Axis(1.0), Axis(2.4)]
        rng = RngStream(51)
        finals = [measure_sequence(e0, axes, rng)[-1].outcome for _ in range(20_000)]
        assert sigma_bound(np.array(finals), sequence_tree_mean(e0, axes)) <= 5.0


class TestMeasurePair:
    def test_ensemble_outcomes_opposite_on_same_axis(self):
        a = Axis(0.6)
        o1, o2 = measure_pair_batch(
            EnsembleDep(), StaticSphere(), a, a, 100_000, RngStream(52)
        )
        assert np.all(o1 == -o2)

    def test_ensemble_correlation_at_quarter_turn(self):
        a, b = Axis(0.0), Axis(math.pi / 4)
        o1, o2 = measure_pair_batch(
            EnsembleDep(), StaticSphere(), a, b, 400_000, RngStream(53)
        )
        assert sigma_bound(o1 * o2, -0.25 * math.cos(math.pi / 4)) <= 5.0

    def test_sign_correlation_values(self):
        # E = -1/4 + d/2pi: -1/8 at pi/4 and 0 at pi/2
        for d, expected in ((math.pi / 4, -0.125), (math.pi / 2, 0.0)):
            o1, o2 = measure_pair_batch(
                Sign(), StaticSphere(), Axis(0.0), Axis(d), 400_000, RngStream(54)
            )
            assert sigma_bound(o1 * o2, expected) <= 5.0

    def test_conditional_expectation_tracks_distant_outcome(self):
        # mean of the second outcome conditioned on the first equals
        # -k cos(delta): outcome dependence through the conserved ensembles
        a, b = Axis(0.0), Axis(math.pi / 4)
        o1, o2 = measure_pair_batch(
            EnsembleDep(), StaticSphere(), a, b, 400_000, RngStream(55)
        )
        for k in (0.5, -0.5):
            sel = o2[o1 == k]
            assert sigma_bound(sel, -k * math.cos(math.pi / 4)) <= 5.0

    def test_parameter_independence_of_marginal(self):
        a = Axis(0.3)
        n = 100_000
        for i in range(8):
            b = Axis(i * math.pi / 8)
            o1, _ = measure_pair_batch(
                EnsembleDep(), StaticSphere(), a, b, n, RngStream(56).split(i)
            )
            p_hat = float(np.mean(o1 > 0))
            assert abs(p_hat - 0.5) <= 5.0 * math.sqrt(0.25 / n)

    def test_pair_protocol_is_order_symmetric(self):
        # measuring particle 2 first and conditioning particle 1 yields the
        # same joint law (Bayes symmetry of the conserved-ensemble protocol)
        a, b = Axis(0.0), Axis(1.0)
        n = 200_000
        o1, o2 = measure_pair_batch(EnsembleDep(), StaticSphere(), a, b, n, RngStream(57))

        rng = RngStream(58)
        draws = rng.uniform((n, 2))
        o2_first = np.where(draws[:, 0] < 0.5, 0.5, -0.5)
        p1_plus = 0.5 * (1.0 - 2.0 * o2_first * math.cos(1.0))
        o1_second = np.where(draws[:, 1] < p1_plus, 0.5, -0.5)

        for k1 in (0.5, -0.5):
            for k2 in (0.5, -0.5):
                f_forward = float(np.mean((o1 == k1) & (o2 == k2)))
                f_reverse = float(np.mean((o1_second == k1) & (o2_first == k2)))
                se = math.sqrt(2 * 0.25 / n)
                assert abs(f_forward - f_reverse) <= 5.0 * se

    def test_scalar_pair_entry_point(self):
        o1, o2 = measure_pair(EnsembleDep(), StaticSphere(), Axis(0.5), Axis(0.5), RngStream(59))
        assert o1 == -o2
        o1, o2 = measure_pair(Sign(), StaticSphere(), Axis(0.5), Axis(0.5), RngStream(60))
        assert o1 == -o2  # exact anti-correlation on a common axis

    def test_direct_pair_bounded_outcomes(self):
        o1, o2 = measure_pair_batch(
            Direct(), StaticSphere(), Axis(0.1), Axis(0.7), 10_000, RngStream(61)
        )
        assert float(np.max(np.abs(o1))) <= 1.0
        assert float(np.max(np.abs(o2))) <= 1.0
