import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from richlab.errors import IntegrationBlowupError, InvalidInputError
from richlab.extrapolation import Verdict, diagnose, sweep_from_values
from richlab.integrators import METHODS, get_method, integrate_fixed, rk_step

NAMES = ["rk1", "rk2", "rk3", "rk4"]


def growth(t, y):
    return y


def butcher_defects(m):
    """Residuals of the rooted-tree order conditions up to order m.order."""
    A, b, c = m.a, m.b, m.c
    one = np.ones_like(c)
    conds = [(b @ one, 1.0)]
    if m.order >= 2:
        conds += [(b @ c, 1 / 2)]
    if m.order >= 3:
        conds += [(b @ c**2, 1 / 3), (b @ (A @ c), 1 / 6)]
    if m.order >= 4:
        conds += [
            (b @ c**3, 1 / 4),
            (b @ (c * (A @ c)), 1 / 8),
            (b @ (A @ c**2), 1 / 12),
            (b @ (A @ (A @ c)), 1 / 24),
        ]
    return [abs(x - y) for x, y in conds]


@pytest.mark.parametrize("name", NAMES)
def test_tableau(name):
    m = get_method(name)
    assert m.order == int(name[-1])
    assert_allclose(m.a.sum(axis=1), m.c, atol=1e-15)
    assert np.all(np.triu(m.a) == 0)
    assert max(butcher_defects(m)) < 1e-15


@pytest.mark.parametrize("name", NAMES)
def test_tableau_is_read_only(name):
    with pytest.raises(ValueError):
        get_method(name).b[0] = 2.0


def test_euler_step():
    assert rk_step("rk1", growth, 0.0, np.array([1.0]), 0.25)[0] == 1.25


def test_heun_step():
    h = 0.1
    assert_allclose(rk_step("rk2", growth, 0.0, np.array([1.0]), h)[0], 1 + h + h * h / 2, rtol=1e-15)


def test_rk4_step():
    # series 1 + h + h^2/2 + h^3/6 + h^4/24 at h = 0.1, 40-digit evaluation
    assert_allclose(rk_step("rk4", growth, 0.0, np.array([1.0]), 0.1)[0], 1.1051708333333333333, rtol=1e-15)


def test_step_does_not_mutate():
    y = np.array([1.0, 2.0])
    rk_step("rk4", lambda t, y: -y, 0.0, y, 0.1)
    assert y.tolist() == [1.0, 2.0]


def test_blowup_reports_stage():
    def F(t, y):
        return np.array([math.inf]) if t > 0 else y

    with pytest.raises(IntegrationBlowupError) as info:
        rk_step("rk2", F, 0.0, np.array([1.0]), 0.1)
    assert info.value.stage == 1
    assert info.value.t == 0.0


def test_unknown_method():
    with pytest.raises(InvalidInputError):
        get_method("rk5")


@pytest.mark.parametrize("h", [0.0, -0.1])
def test_nonpositive_step(h):
    with pytest.raises(InvalidInputError):
        rk_step("rk1", growth, 0.0, np.array([1.0]), h)


def test_zero_steps():
    traj = integrate_fixed("rk4", growth, 0.5, np.array([1.0]), 0.1, 0)
    assert len(traj) == 1
    assert traj[0][0] == 0.5


def test_harmonic_oscillator():
    F = lambda t, y: np.array([y[1], -y[0]])  # noqa: E731
    t, y = integrate_fixed("rk4", F, 0.0, np.array([1.0, 0.0]), 0.01, 100)[-1]
    assert_allclose(y[0], math.cos(1.0), atol=1e-9)
    assert_allclose(y[1], -math.sin(1.0), atol=1e-9)


def test_times_not_accumulated():
    traj = integrate_fixed("rk1", lambda t, y: 0 * y, 0.0, np.array([0.0]), 0.1, 1000)
    assert [t for t, _ in traj[::100]] == [n * 0.1 for n in range(0, 1001, 100)]


@pytest.mark.parametrize("name", NAMES)
def test_constant_solution(name):
    traj = integrate_fixed(name, lambda t, y: np.zeros_like(y), 0.0, np.array([3.0, -1.0]), 0.3, 7)
    assert all(np.array_equal(y, [3.0, -1.0]) for _, y in traj)


@pytest.mark.parametrize("name", NAMES)
def test_store_false_matches(name):
    full = integrate_fixed(name, growth, 0.0, np.array([1.0]), 0.125, 8)
    last = integrate_fixed(name, growth, 0.0, np.array([1.0]), 0.125, 8, store=False)
    assert len(last) == 1
    assert last[0][0] == full[-1][0]
    assert np.array_equal(last[0][1], full[-1][1])


@pytest.mark.parametrize("name", NAMES)
def test_order_from_diagnosis(name):
    kmax = {"rk1": 16, "rk2": 14, "rk3": 11, "rk4": 9}[name]
    vals = [
        integrate_fixed(name, growth, 0.0, np.array([1.0]), 2.0**-k, 1 << k, store=False)[-1][1][0]
        for k in range(kmax + 1)
    ]
    d = diagnose(sweep_from_values(vals))
    assert d.verdict is Verdict.ASYMPTOTIC_RANGE_FOUND
    assert abs(d.p_hat - METHODS[name].order) < 0.1


@settings(max_examples=30, deadline=None)
@given(c=st.floats(-1e3, 1e3).filter(lambda c: c != 0), name=st.sampled_from(NAMES))
def test_linear_scaling(c, name):
    A = np.array([[0.0, 1.0], [-2.0, -0.3]])
    F = lambda t, y: A @ y  # noqa: E731
    y0 = np.array([1.0, 0.5])
    a = integrate_fixed(name, F, 0.0, y0, 0.05, 20, store=False)[-1][1]
    b = integrate_fixed(name, F, 0.0, c * y0, 0.05, 20, store=False)[-1][1]
    assert_allclose(b, c * a, rtol=1e-12, atol=1e-300)


def test_deterministic():
    F = lambda t, y: np.array([math.sin(t * y[0]), y[0] - y[1]])  # noqa: E731
    a = integrate_fixed("rk3", F, 0.0, np.array([1.0, 0.0]), 0.01, 300)
    b = integrate_fixed("rk3", F, 0.0, np.array([1.0, 0.0]), 0.01, 300)
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
