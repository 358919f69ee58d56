import math

import mpmath
import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from downstep.errors import DegenerateInput, EvanescentAsymptote, NonpositiveEnergy, SliceCountTooSmall
from downstep.qcore import PhysicalParams, Plateau, RectStep, SoftStep
from downstep.stationary import (
    DimensionlessStep,
    Provenance,
    R_uv,
    ScatteringCoefficients,
    dimensionless,
    match_coefficients,
    paradoxical_region,
    rect_step_R,
    soft_step_R,
    taylor_remainder,
    taylor_sqrt_R,
    transfer_matrix_R,
    wave_numbers,
)

energies = st.floats(1e-6, 1e3)
depths = st.floats(0.0, 1e4)
widths = st.floats(1e-4, 10.0)


def mp_soft_R(E, dE, L, hbar=1, m=1, dps=60):
    """Reflection for the tanh step from the hypergeometric solution, in mpmath."""
    with mpmath.workdps(dps):
        k1 = mpmath.sqrt(2 * m * mpmath.mpf(E)) / hbar
        k2 = mpmath.sqrt(2 * m * (mpmath.mpf(E) + dE)) / hbar
        a = mpmath.pi * L * (k2 - k1) / 2
        b = mpmath.pi * L * (k2 + k1) / 2
        return float((mpmath.sinh(a) / mpmath.sinh(b)) ** 2)


def mp_rect_R(E, dE, dps=60):
    with mpmath.workdps(dps):
        k1 = mpmath.sqrt(2 * mpmath.mpf(E))
        k2 = mpmath.sqrt(2 * (mpmath.mpf(E) + dE))
        return float(((k2 - k1) / (k2 + k1)) ** 2)


def test_rect_reference_value():
    R = rect_step_R(1.0, 18.4)
    assert R.provenance is Provenance.CLOSED_FORM_RECT
    assert R.R == pytest.approx(mp_rect_R(1.0, 18.4), abs=1e-14)


@given(E=energies, dE=depths)
def test_rect_unitarity_and_oracle(E, dE):
    c = rect_step_R(E, dE)
    assert 0 <= c.R <= 1 and 0 <= c.T <= 1
    assert abs(c.R + c.T - 1) < 1e-10
    assert c.R == pytest.approx(mp_rect_R(E, dE), rel=1e-10, abs=1e-15)


@given(E=energies, dE=st.floats(1e-3, 1e4), L=widths)
@settings(max_examples=200)
def test_soft_matches_oracle(E, dE, L):
    c = soft_step_R(E, dE, L)
    assert abs(c.R + c.T - 1) < 1e-10
    ref = mp_soft_R(E, dE, L)
    assert c.R == pytest.approx(ref, rel=1e-9, abs=1e-300)


@given(E=energies, dE=st.floats(1e-3, 1e4), L=widths)
def test_soft_below_rect(E, dE, L):
    assert soft_step_R(E, dE, L).R <= rect_step_R(E, dE).R


@given(E=st.floats(1e-3, 1e2), dE=st.floats(1e-2, 1e3))
@settings(max_examples=50)
def test_soft_monotone_in_L(E, dE):
    Ls = np.geomspace(1e-3, 1.0, 20)
    R = np.array([soft_step_R(E, dE, L).R for L in Ls])
    R = R[R > 1e-250]
    assert np.all(np.diff(R) < 0)


@given(E=energies, dE=st.floats(1e-3, 1e4), L=widths)
@example(E=1.0, dE=9458.296875, L=6.0)  # sinh arguments near 1300
def test_uv_consistency(E, dE, L):
    assert R_uv(dimensionless(E, dE, L)) == pytest.approx(soft_step_R(E, dE, L).R, rel=1e-12, abs=1e-300)


def test_uv_validation():
    with pytest.raises(ValueError):
        DimensionlessStep(-1.0, 1.0)
    with pytest.raises(DegenerateInput):
        R_uv(DimensionlessStep(0.0, 0.0))
    assert R_uv(DimensionlessStep(0.0, 1.0)) == 1.0
    assert R_uv(DimensionlessStep(1.0, 0.0)) == 0.0


def mp_sqrt_R_uv(u, v, dps=50):
    with mpmath.workdps(dps):
        s = mpmath.sqrt(mpmath.mpf(u) ** 2 + mpmath.mpf(v) ** 2)
        return mpmath.sinh(s - u) / mpmath.sinh(s + u)


@given(u=st.floats(1e-6, 1e-2), v=st.floats(0.1, 10.0))
def test_taylor_remainder_bounds_error(u, v):
    with mpmath.workdps(50):
        err = abs(mp_sqrt_R_uv(u, v) - (1 - 2 * mpmath.mpf(u) / mpmath.tanh(v)))
        assert err <= 2 * mpmath.mpf(u) ** 2 / mpmath.tanh(v) ** 2


@given(u=st.floats(1e-6, 1.0), v=st.floats(1e-3, 10.0))
def test_R_uv_oracle(u, v):
    assert R_uv(DimensionlessStep(u, v)) == pytest.approx(float(mp_sqrt_R_uv(u, v) ** 2), rel=1e-12)


def test_taylor_remainder_is_leading_term():
    # the ratio error / (2 u^2 coth^2 v) tends to 1 as u -> 0
    for v in (0.1, 0.5, 3.0):
        u = 1e-5
        err = abs(math.sqrt(R_uv(DimensionlessStep(u, v))) - taylor_sqrt_R(u, v))
        assert err / taylor_remainder(u, v) == pytest.approx(1.0, abs=1e-3)


def test_wave_numbers_and_match():
    w = wave_numbers(2.0, 6.0, PhysicalParams(1.0, 1.0))
    assert w.k1 == pytest.approx(2.0) and w.k2 == pytest.approx(4.0)
    m = match_coefficients(2.0, 6.0)
    assert m.A == pytest.approx(2 * 2 / 6) and m.B == pytest.approx(-2 / 6)
    with pytest.raises(NonpositiveEnergy):
        rect_step_R(0.0, 1.0)
    with pytest.raises(NonpositiveEnergy):
        soft_step_R(-1.0, 1.0, 1.0)


def test_units_thread_through():
    p = PhysicalParams(hbar=2.0, mass=3.0)
    E, dE, L = 0.7, 5.0, 0.4
    # same dimensionless numbers with hbar=m=1 after rescaling L by hbar/sqrt(m)
    assert soft_step_R(E, dE, L, p).R == pytest.approx(soft_step_R(E, dE, L * math.sqrt(3.0) / 2.0).R, rel=1e-12)


def test_transfer_matrix_exact_for_rect():
    for inc in ("left", "right"):
        tm = transfer_matrix_R(RectStep(18.4), 1.0, -1.0, 1.0, 2, incidence=inc)
        assert tm.R == pytest.approx(rect_step_R(1.0, 18.4).R, abs=1e-12)
        assert abs(tm.R + tm.T - 1) < 1e-10


def test_transfer_matrix_order():
    V = SoftStep(18.4, 0.3)
    ref = soft_step_R(1.0, 18.4, 0.3).R
    errs = [abs(transfer_matrix_R(V, 1.0, -8.0, 8.0, n).R - ref) for n in (1024, 2048, 4096)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 1.9


@given(E=st.floats(0.5, 20.0), dE=st.floats(0.1, 30.0), L=st.floats(0.05, 1.0), c=st.floats(-0.5, 0.5))
@settings(max_examples=25, deadline=None)
def test_transfer_matrix_reciprocity(E, dE, L, c):
    V = SoftStep(dE, L, c)
    a = transfer_matrix_R(V, E, -6.0, 6.0, 200)
    b = transfer_matrix_R(V.reflected(), E, -6.0, 6.0, 200)
    assert abs(a.R - b.R) < 1e-10
    r = transfer_matrix_R(V, E, -6.0, 6.0, 200, incidence="right")
    assert abs(a.R - r.R) < 1e-10


def test_transfer_matrix_errors():
    with pytest.raises(SliceCountTooSmall):
        transfer_matrix_R(RectStep(1.0), 1.0, -1, 1, 0)
    with pytest.raises(EvanescentAsymptote):
        transfer_matrix_R(RectStep(1.0).reflected(), -0.5, -1, 1, 4)
    with pytest.raises(ValueError):
        transfer_matrix_R(RectStep(1.0), 1.0, -1, 1, 4, incidence="up")


def test_transfer_matrix_plateau_barrier_free():
    # a plateau well with E above both asymptotes still gives R + T = 1
    tm = transfer_matrix_R(Plateau(5.0, 1.0), 2.0, -2.0, 2.0, 400)
    assert abs(tm.R + tm.T - 1) < 1e-10


def test_coefficients_validation():
    with pytest.raises(ValueError):
        ScatteringCoefficients(0.6, 0.6, Provenance.PROPAGATION)
    with pytest.raises(ValueError):
        ScatteringCoefficients(-0.1, 1.1, Provenance.PROPAGATION)


def test_paradoxical_region():
    v = paradoxical_region(k1=1.0, L=0.01, dE=100.0, sigma=100.0)
    assert v.inside
    assert v.margins == pytest.approx((100.0, 200.0, 100.0))
    assert not paradoxical_region(k1=1.0, L=1.0, dE=100.0, sigma=100.0).inside
    with pytest.raises(ValueError):
        paradoxical_region(0.0, 1.0, 1.0, 1.0)
