import json
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conclab import (
    DataError,
    DimensionError,
    FiniteMeasure,
    ParameterError,
    kl_divergence,
    lp_norm,
    nonstationarity_index,
    tau_p_empirical,
    tau_p_upper,
    tv_distance,
)


def simplex(size):
    raw = arrays(np.float64, size, elements=st.floats(0.0, 1.0))
    return raw.filter(lambda w: w.sum() > 1e-3).map(lambda w: FiniteMeasure(w / w.sum()))


def positive_simplex(size):
    raw = arrays(np.float64, size, elements=st.floats(1e-3, 1.0))
    return raw.map(lambda w: FiniteMeasure(w / w.sum()))


class TestFiniteMeasure:
    def test_basic(self):
        mu = FiniteMeasure([0.25, 0.75])
        assert mu.support_size == 2
        assert not mu.weights.flags.writeable

    def test_small_drift_renormalized(self):
        mu = FiniteMeasure([0.5, 0.5 + 5e-10])
        assert mu.weights.sum() == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("w", [[0.5, 0.6], [1.2, -0.2], [], [math.nan, 1.0]])
    def test_rejects_invalid(self, w):
        with pytest.raises(DataError):
            FiniteMeasure(w)

    def test_json_roundtrip(self):
        mu = FiniteMeasure([0.1, 0.2, 0.7])
        back = FiniteMeasure.from_json(mu.to_json())
        assert np.array_equal(back.weights, mu.weights)
        assert json.loads(mu.to_json()) == [0.1, 0.2, 0.7]


class TestKL:
    def test_identical(self):
        assert kl_divergence(FiniteMeasure([0.5, 0.5]), FiniteMeasure([0.5, 0.5])) == 0.0

    def test_not_absolutely_continuous(self):
        assert kl_divergence(FiniteMeasure([0.5, 0.5]), FiniteMeasure([1, 0])) == math.inf

    def test_point_mass_against_uniform(self):
        assert kl_divergence(FiniteMeasure([1, 0]), FiniteMeasure([0.5, 0.5])) == pytest.approx(
            0.693147, abs=1e-6
        )

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            kl_divergence(FiniteMeasure([1.0]), FiniteMeasure([0.5, 0.5]))

    @given(simplex(4), positive_simplex(4))
    def test_gibbs_inequality(self, mu, nu):
        d = kl_divergence(mu, nu)
        assert d >= 0
        if np.allclose(mu.weights, nu.weights, atol=0, rtol=0):
            assert d <= 1e-10

    @given(positive_simplex(3))
    def test_zero_iff_equal(self, mu):
        assert kl_divergence(mu, mu) <= 1e-10

    @given(simplex(3), positive_simplex(3))
    def test_pinsker(self, mu, nu):
        # independent consistency check between the two divergences
        assert tv_distance(mu, nu) <= math.sqrt(kl_divergence(mu, nu) / 2) + 1e-12


class TestTV:
    def test_disjoint(self):
        assert tv_distance(FiniteMeasure([1, 0]), FiniteMeasure([0, 1])) == 1.0

    def test_self(self):
        mu = FiniteMeasure([0.3, 0.7])
        assert tv_distance(mu, mu) == 0.0

    def test_value(self):
        assert tv_distance(FiniteMeasure([0.9, 0.1]), FiniteMeasure([0.2, 0.8])) == pytest.approx(0.7)

    @given(simplex(5), simplex(5), simplex(5))
    def test_metric(self, a, b, c):
        assert tv_distance(a, b) == pytest.approx(tv_distance(b, a), abs=1e-12)
        assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-12
        assert 0 <= tv_distance(a, b) <= 1 + 1e-12


class TestNonstationarityIndex:
    def test_equal(self):
        pi = FiniteMeasure([0.2, 0.3, 0.5])
        assert nonstationarity_index(pi, pi) == pytest.approx(1.0)

    def test_not_absolutely_continuous(self):
        assert nonstationarity_index(FiniteMeasure([1, 0]), FiniteMeasure([0, 1])) == math.inf

    def test_point_mass(self):
        value = nonstationarity_index(FiniteMeasure([1, 0]), FiniteMeasure([0.5, 0.5]))
        assert value == pytest.approx(1.414214, abs=1e-6)

    @given(simplex(4), positive_simplex(4))
    def test_range(self, rho, pi):
        value = nonstationarity_index(rho, pi)
        assert value >= 1
        assert value <= 1 / math.sqrt(pi.weights.min()) * (1 + 1e-12)


class TestNorms:
    @pytest.mark.parametrize(
        "v,p,expected", [((3, 4), 2, 5), ((1, -1, 1), 1, 3), ((1, -1), math.inf, 1)]
    )
    def test_values(self, v, p, expected):
        assert lp_norm(v, p) == pytest.approx(expected)

    def test_bad_p(self):
        with pytest.raises(ParameterError):
            lp_norm([1, 2], 0.5)

    @given(
        arrays(np.float64, 6, elements=st.floats(-10, 10)),
        st.floats(1, 8),
        st.floats(1, 8),
    )
    def test_monotone_in_p(self, v, p1, p2):
        p1, p2 = sorted((p1, p2))
        assert lp_norm(v, p1) >= lp_norm(v, p2) * (1 - 1e-12)
        assert lp_norm(v, p2) >= lp_norm(v, math.inf) * (1 - 1e-12)


class TestTau:
    @pytest.mark.parametrize("p,k,expected", [(1, 4, 2.0), (2, 10, 1.0), (3, 5, 1.0)])
    def test_upper(self, p, k, expected):
        assert tau_p_upper(p, k) == pytest.approx(expected)

    @pytest.mark.parametrize("p,k", [(0.9, 3), (1, 0)])
    def test_upper_rejects(self, p, k):
        with pytest.raises(ParameterError):
            tau_p_upper(p, k)

    def test_empirical_values(self):
        assert tau_p_empirical([(1, 0)], (0, 0), 1).value == pytest.approx(1.0)
        assert tau_p_empirical([(1, 1)], (0, 0), 1).value == pytest.approx(math.sqrt(2))

    def test_empirical_all_skipped(self):
        est = tau_p_empirical([(0.5, 0.5)], (0.5, 0.5), 1)
        assert est.value == 0 and est.all_skipped

    def test_empirical_empty(self):
        with pytest.raises(ParameterError):
            tau_p_empirical([], (0, 0), 1)

    @given(
        arrays(np.float64, (12, 5), elements=st.floats(-5, 5)),
        st.sampled_from([1, 1.5, 2, 3, math.inf]),
    )
    def test_empirical_below_upper(self, pts, p):
        est = tau_p_empirical(pts, np.zeros(5), p)
        assume(not est.all_skipped)
        assert est.value <= tau_p_upper(p, 5) * (1 + 1e-12)
