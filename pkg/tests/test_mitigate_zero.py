"""Unit tests for truncated all-zeros recovery and its analytic bounds."""

import numpy as np
import pytest

import pertmit as pm


def _observed(R, prior_values):
    prior = pm.ProbabilityVector(n=R.n, values=np.asarray(prior_values, dtype=float))
    return pm.apply_response(R, prior)


def _uniform_observed(R):
    size = 1 << R.n
    return _observed(R, np.full(size, 1.0 / size))


class TestTruncate:
    def test_two_qubit_w1_by_hand(self):
        T = pm.truncate(pm.relaxation_only(2, 0.1), 1)
        expected = np.array([[1.0, 0.1, 0.1], [0.0, 0.9, 0.0], [0.0, 0.0, 0.9]])
        np.testing.assert_allclose(T.matrix, expected)
        np.testing.assert_array_equal(T.selector.members, [0, 1, 2])

    def test_full_weight_keeps_everything(self):
        R = pm.random_tensor(3, 0.2, 4)
        T = pm.truncate(R, 3)
        order = T.selector.members
        np.testing.assert_array_equal(T.matrix, R.matrix[np.ix_(order, order)])

    def test_out_of_range_w(self):
        R = pm.relaxation_only(2, 0.1)
        with pytest.raises(pm.ValidationError):
            pm.truncate(R, 3)


class TestRecoverP0:
    def test_w0_is_the_uncorrected_value(self):
        R = pm.relaxation_only(3, 0.2)
        p_obs = _uniform_observed(R)
        assert pm.recover_p0(pm.truncate(R, 0), p_obs) == p_obs.values[0]

    def test_full_truncation_is_exact(self):
        rng = np.random.default_rng(17)
        for _ in range(15):
            n = int(rng.integers(1, 7))
            R = pm.random_tensor(n, 0.3, int(rng.integers(0, 2**31)))
            raw = rng.uniform(0.0, 1.0, 1 << n)
            p_obs = _observed(R, raw / raw.sum())
            oracle = pm.dense_invert_mitigate(R, p_obs).vector.values[0]
            assert pm.recover_p0(pm.truncate(R, n), p_obs) == pytest.approx(
                oracle, abs=1e-12
            )

    def test_error_within_relaxation_bound(self):
        rng = np.random.default_rng(23)
        for _ in range(40):
            n = int(rng.integers(2, 9))
            q = float(rng.uniform(0.01, 0.45))
            w = int(rng.integers(0, n))
            R = pm.relaxation_only(n, q)
            raw = rng.uniform(0.0, 1.0, 1 << n)
            p_obs = _observed(R, raw / raw.sum())
            p0 = pm.dense_invert_mitigate(R, p_obs).vector.values[0]
            err = abs(pm.recover_p0(pm.truncate(R, w), p_obs) - p0)
            assert err <= pm.truncation_bound(q, w) + 1e-12

    def test_error_shrinks_with_w(self):
        R = pm.relaxation_only(6, 0.2)
        rng = np.random.default_rng(6)
        raw = rng.uniform(0.0, 1.0, 64)
        p_obs = _observed(R, raw / raw.sum())
        p0 = pm.dense_invert_mitigate(R, p_obs).vector.values[0]
        errors = [
            abs(pm.recover_p0(pm.truncate(R, w), p_obs) - p0) for w in range(0, 6)
        ]
        assert all(a >= b for a, b in zip(errors, errors[1:]))

    def test_flavor_guard(self):
        R = pm.relaxation_only(2, 0.1)
        prior = pm.ProbabilityVector(n=2, values=np.full(4, 0.25))
        with pytest.raises(pm.ValidationError):
            pm.recover_p0(pm.truncate(R, 1), prior)

    def test_singular_truncation_raises_without_lstsq(self):
        # columns 0 and 1 identical, so the w=1 block is exactly singular
        matrix = np.array(
            [
                [0.5, 0.5, 0.0, 0.25],
                [0.5, 0.5, 0.0, 0.25],
                [0.0, 0.0, 1.0, 0.25],
                [0.0, 0.0, 0.0, 0.25],
            ]
        )
        R = pm.ResponseMatrix(n=2, matrix=matrix)
        p_obs = _uniform_observed(R)
        T = pm.truncate(R, 1)
        with pytest.raises(pm.SingularMatrixError):
            pm.recover_p0(T, p_obs)
        fallback = pm.recover_p0(T, p_obs, lstsq=True)
        assert np.isfinite(fallback)


class TestBounds:
    def test_truncation_bound_values(self):
        assert pm.truncation_bound(0.1, 2) == pytest.approx(0.008)
        assert pm.truncation_bound(0.3, 0) == pytest.approx(0.6)
        assert pm.truncation_bound(0.0, 3) == 0.0

    def test_truncation_bound_guards(self):
        with pytest.raises(pm.ValidationError):
            pm.truncation_bound(0.5, 1)
        with pytest.raises(pm.ValidationError):
            pm.truncation_bound(0.1, -1)

    def test_tensor_bound_reduces_to_uniform(self):
        assert pm.tensor_truncation_bound([0.2, 0.2, 0.2], 1) == pm.truncation_bound(
            0.2, 1
        )

    def test_tensor_bound_uses_worst_rate(self):
        assert pm.tensor_truncation_bound([0.05, 0.3, 0.1], 2) == pm.truncation_bound(
            0.3, 2
        )

    def test_guide_doubles_the_bound(self):
        assert pm.approximate_model_guide(0.06, 2) == pytest.approx(
            2 * pm.truncation_bound(0.06, 2)
        )

    def test_inverse_row_magnitude_values(self):
        # index 0b11 with rates (0.1, 0.3): (0.1/0.9)(0.3/0.7)
        assert pm.inverse_row_magnitude([0.1, 0.3], 0b11) == pytest.approx(
            (0.1 / 0.9) * (0.3 / 0.7)
        )
        assert pm.inverse_row_magnitude([0.1, 0.3], 0) == 1.0
        # rates map to bits most significant first
        assert pm.inverse_row_magnitude([0.1, 0.3], 0b10) == pytest.approx(0.1 / 0.9)

    def test_inverse_row_magnitude_guards(self):
        with pytest.raises(pm.ValidationError):
            pm.inverse_row_magnitude([0.5], 0)
        with pytest.raises(pm.ValidationError):
            pm.inverse_row_magnitude([0.1], 2)


class TestFirstRowClosedForm:
    def test_single_qubit_row(self):
        sel = pm.weight_subspace(1, 1)
        np.testing.assert_allclose(
            pm.first_row_closed_form([0.1], sel), [1.0, -0.1 / 0.9]
        )

    def test_signs_alternate_with_weight(self):
        sel = pm.weight_subspace(3, 3)
        row = pm.first_row_closed_form([0.2, 0.2, 0.2], sel)
        weights = np.array([pm.hamming_weight(int(m)) for m in sel.members])
        assert np.all(np.sign(row) == (-1.0) ** weights)

    def test_matches_solved_inverse_row(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            n = int(rng.integers(2, 7))
            rates = rng.uniform(0.01, 0.4, n)
            factors = [pm.single_qubit_relaxation(float(q)) for q in rates]
            R = pm.tensor_response(factors)
            sel = pm.weight_subspace(n, n)
            row = pm.first_row_closed_form(rates, sel)
            inverse_row = np.linalg.inv(R.matrix)[0][sel.members]
            np.testing.assert_allclose(row, inverse_row, atol=1e-10)

    def test_magnitudes_match_refined_bound(self):
        sel = pm.weight_subspace(2, 2)
        row = pm.first_row_closed_form([0.1, 0.3], sel)
        for value, member in zip(row, sel.members):
            assert abs(value) == pytest.approx(
                pm.inverse_row_magnitude([0.1, 0.3], int(member))
            )

    def test_recovery_equals_row_dot_observed(self):
        # the solved recovery and the analytic row agree on relaxation models
        R = pm.relaxation_only(5, 0.15)
        rng = np.random.default_rng(2)
        raw = rng.uniform(0.0, 1.0, 32)
        p_obs = _observed(R, raw / raw.sum())
        for w in (1, 2, 3):
            T = pm.truncate(R, w)
            row = pm.first_row_closed_form([0.15] * 5, T.selector)
            via_row = float(row @ pm.project_vector(p_obs.values, T.selector))
            assert pm.recover_p0(T, p_obs) == pytest.approx(via_row, abs=1e-12)


class TestInverseProjectionCheck:
    def test_relaxation_is_consistent(self):
        for n in (2, 4, 6):
            for w in range(0, n + 1):
                check = pm.inverse_projection_check(pm.relaxation_only(n, 0.2), w)
                assert check.applicable
                assert check.consistent
                assert check.max_deviation < 1e-10

    def test_generic_tensor_is_inapplicable(self):
        check = pm.inverse_projection_check(pm.random_tensor(4, 0.2, 9), 2)
        assert not check.applicable
        assert check.consistent is None
        assert check.max_deviation is None

    def test_distinct_rate_relaxation_is_consistent(self):
        factors = [pm.single_qubit_relaxation(q) for q in (0.05, 0.2, 0.35)]
        R = pm.tensor_response(factors)
        check = pm.inverse_projection_check(R, 1)
        assert check.applicable and check.consistent
