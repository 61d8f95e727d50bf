import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from richlab.errors import DegenerateFractionError, InvalidInputError
from richlab.extrapolation import (
    SampleSweep,
    Verdict,
    diagnose,
    fraction_series,
    richardson_estimate,
    richardson_fraction,
    sweep_from_values,
    validate_estimates,
)


def synthetic(T, alpha, p, beta=0.0, q=None, kmax=15, h0=1.0):
    """Closed-form approximations A_h = T - alpha h^p - beta h^q at h = h0 2^-k."""
    vals = []
    for k in range(kmax + 1):
        h = math.ldexp(h0, -k)
        a = T - alpha * h**p
        if beta:
            a -= beta * h**q
        vals.append(a)
    return sweep_from_values(vals, h0=h0)


class TestRichardsonEstimate:
    def test_identical_samples(self):
        assert richardson_estimate(1.0, 1.0, 2) == 0.0

    def test_first_order(self):
        assert richardson_estimate(1.75, 1.0, 1) == 0.75

    def test_fractional_order(self):
        # 0.0025 / (2 sqrt 2 - 1), evaluated at 40 digits with mpmath
        assert_allclose(richardson_estimate(0.6659, 0.6634, 1.5), 0.001367295401695067892, rtol=1e-12)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(InvalidInputError):
            richardson_estimate(bad, 1.0, 1.0)
        with pytest.raises(InvalidInputError):
            richardson_estimate(1.0, 1.0, bad)

    def test_rejects_nonpositive_order(self):
        with pytest.raises(InvalidInputError):
            richardson_estimate(1.0, 0.5, 0.0)

    @settings(max_examples=200, deadline=None)
    @given(
        alpha=st.floats(-10, 10).filter(lambda a: abs(a) > 1e-3),
        p=st.floats(0.5, 6),
        k=st.integers(1, 20),
    )
    def test_exact_for_single_term(self, alpha, p, k):
        h = math.ldexp(1.0, -k)
        e_h = alpha * h**p
        e_2h = alpha * (2 * h) ** p
        r = richardson_estimate(-e_h, -e_2h, p)
        assert abs(r - e_h) <= 4 * np.spacing(abs(e_2h)) * 2**p / (2**p - 1) + 4 * np.spacing(abs(e_h))


class TestRichardsonFraction:
    @pytest.mark.parametrize("p", [1, 2])
    @pytest.mark.parametrize("h,alpha", [(0.5, 1.0), (0.125, -3.0), (2.0**-10, 0.7)])
    def test_pure_power(self, p, h, alpha):
        T = 0.0
        a = [T - alpha * (c * h) ** p for c in (1, 2, 4)]
        assert_allclose(richardson_fraction(*a), 2.0**p, rtol=1e-14)

    def test_degenerate(self):
        with pytest.raises(DegenerateFractionError):
            richardson_fraction(1.0, 1.0, 2.0)


class TestFractionSeries:
    def test_three_entries_one_fraction(self):
        fr = fraction_series(sweep_from_values([1.0, 0.5, 0.25]))
        assert len(fr) == 1
        assert fr[0].k == 2

    def test_constant_all_degenerate(self):
        fr = fraction_series(sweep_from_values([3.0] * 6))
        assert len(fr) == 4
        assert all(f.degenerate and math.isnan(f.value) for f in fr)

    def test_gap_in_levels(self):
        sweep = SampleSweep(1.0, ((0, 1.0), (1, 0.5), (2, 0.3), (4, 0.2), (5, 0.1), (6, 0.05)))
        assert [f.k for f in fraction_series(sweep)] == [2, 6]

    def test_short_sweep(self):
        assert fraction_series(sweep_from_values([1.0, 2.0])) == []


class TestSampleSweep:
    def test_steps(self):
        s = SampleSweep(8.0, ((1, 0.0), (2, 0.0), (5, 0.0)))
        assert s.steps == [4.0, 2.0, 0.25]

    @pytest.mark.parametrize("entries", [((1, 0.0), (1, 1.0)), ((2, 0.0), (1, 1.0)), ((-1, 0.0),)])
    def test_invalid_levels(self, entries):
        with pytest.raises(InvalidInputError):
            SampleSweep(1.0, entries)

    @pytest.mark.parametrize("h0", [0.0, -1.0, math.inf, math.nan])
    def test_invalid_h0(self, h0):
        with pytest.raises(InvalidInputError):
            SampleSweep(h0, ())


class TestDiagnose:
    def test_first_plus_second_order(self):
        d = diagnose(synthetic(0.0, 1.0, 1, 0.5, 2, kmax=15))
        assert d.verdict is Verdict.ASYMPTOTIC_RANGE_FOUND
        assert abs(d.p_hat - 1) < 0.02
        assert abs(d.m_hat - 1) < 0.1
        lo, hi = d.asymptotic_window
        assert hi - lo + 1 >= 4

    def test_nominal_order_used_for_estimates(self):
        sweep = synthetic(1.0, 1.0, 2, kmax=8)
        d = diagnose(sweep, p_nominal=2)
        for k, r in d.estimates:
            assert_allclose(r, 1.0 - sweep.as_dict()[k], rtol=1e-9)

    def test_white_noise(self):
        rng = np.random.default_rng(7)
        d = diagnose(sweep_from_values(rng.standard_normal(16)))
        assert d.verdict is Verdict.NO_EXPANSION_EVIDENCE
        assert d.asymptotic_window is None
        assert math.isnan(d.p_hat)

    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_insufficient(self, n):
        d = diagnose(sweep_from_values([1.0, 0.5][:n]))
        assert d.verdict is Verdict.INSUFFICIENT_DATA

    def test_constant_sweep(self):
        d = diagnose(sweep_from_values([2.0] * 10))
        assert d.verdict is Verdict.NO_EXPANSION_EVIDENCE
        assert len(d.degenerate) == 8

    def test_fractional_order_not_rounded(self):
        d = diagnose(synthetic(0.0, 1.0, 1.5, 0.1, 2, kmax=30))
        assert abs(d.p_hat - 1.5) < 1e-3
        assert d.p_hat != 1.5  # the quarter grid is only used for the reference

    def test_summary_line(self):
        d = diagnose(synthetic(0.0, 1.0, 1, 0.5, 2, kmax=12))
        assert d.summary().startswith("verdict=ASYMPTOTIC_RANGE_FOUND p_hat=")
        assert "window=" in d.summary()

    def test_rejects_bad_nominal(self):
        with pytest.raises(InvalidInputError):
            diagnose(synthetic(0.0, 1.0, 1), p_nominal=-1)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=20))
    def test_pure_function(self, vals):
        s = sweep_from_values(vals)
        a, b = diagnose(s), diagnose(s)
        assert a.summary() == b.summary()
        assert a.verdict in set(Verdict)
        if a.verdict is Verdict.ASYMPTOTIC_RANGE_FOUND:
            lo, hi = a.asymptotic_window
            assert hi - lo + 1 >= 4


class TestTheorems:
    # Closed-form oracle: E_h = alpha h^p + beta h^q, T = 0 so that no
    # cancellation against T occurs.

    @pytest.mark.parametrize("p,q", [(1, 2), (2, 4), (1.5, 2)])
    def test_defect_limit(self, p, q):
        alpha, beta = 1.0, 0.7
        limit = (1 - (2**q - 1) / (2**p - 1)) * beta
        for k in range(4, 16):
            h = math.ldexp(1.0, -k)
            a_h = -(alpha * h**p + beta * h**q)
            a_2h = -(alpha * (2 * h) ** p + beta * (2 * h) ** q)
            defect = -a_h - richardson_estimate(a_h, a_2h, p)
            assert_allclose(defect / h**q, limit, rtol=1e-2)

    @pytest.mark.parametrize("p,q", [(1, 2), (2, 4), (1.5, 2)])
    def test_fraction_limit(self, p, q):
        alpha, beta = 1.0, 0.7
        m = q - p
        nu = (2**q - 1) / (2**p - 1) * beta / alpha
        # F_h = 2^p (1 + 2^m nu h^m) / (1 + nu h^m), hence
        # (F_h - 2^p) / h^m -> 2^p (2^m - 1) nu
        limit = 2**p * (2**m - 1) * nu
        k = 40 if m < 1 else 20
        h = math.ldexp(1.0, -k)
        a = [-(alpha * (c * h) ** p + beta * (c * h) ** q) for c in (1, 2, 4)]
        F = richardson_fraction(*a)
        assert_allclose(F, 2**p, rtol=1e-2)
        assert_allclose((F - 2**p) / h**m, limit, rtol=1e-2)

    @pytest.mark.parametrize("p,q", [(1, 2), (2, 4), (1.5, 2)])
    def test_slope_recovered(self, p, q):
        d = diagnose(synthetic(0.0, 1.0, p, 0.1, q, kmax=30))
        assert d.verdict is Verdict.ASYMPTOTIC_RANGE_FOUND
        assert_allclose(d.p_hat, p, rtol=1e-2)
        assert_allclose(d.m_hat, q - p, rtol=1e-2)


class TestValidateEstimates:
    def test_exact_single_term(self):
        sweep = synthetic(0.0, 0.3, 2, kmax=10)
        d = diagnose(sweep, p_nominal=2)
        rel = [r for _, r in validate_estimates(d, sweep, 0.0)]
        assert max(rel) < 1e-10

    def test_zero_error_flagged(self):
        sweep = sweep_from_values([1.0, 1.0, 1.0, 1.0])
        d = diagnose(sweep, p_nominal=1)
        assert all(math.isnan(r) for _, r in validate_estimates(d, sweep, 1.0))

    def test_rejects_non_finite_target(self):
        sweep = synthetic(2.0, 0.3, 2, kmax=5)
        with pytest.raises(InvalidInputError):
            validate_estimates(diagnose(sweep, 2), sweep, math.nan)
