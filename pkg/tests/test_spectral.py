import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from downstep.errors import LeftMovingPacket, UnsupportedPotential
from downstep.qcore import Free, GaussianPacketSpec, Grid, HardBox, Plateau, RectStep, SoftStep, build_gaussian
from downstep.spectral import epsilon_delta_bound, fourier, momentum_density, packet_reflection
from downstep.stationary import Provenance, rect_R_of_k, soft_R_of_k, rect_step_R
from downstep.tdse import PropagatorConfig, propagate


def gaussian_k_weight(k, k0, sigma):
    """|psi_hat(k)|^2 of the unit Gaussian packet with position width sigma."""
    s = 1 / (2 * sigma)
    return np.exp(-((k - k0) ** 2) / (2 * s * s)) / math.sqrt(2 * math.pi * s * s)


def test_fourier_of_gaussian_is_gaussian():
    g = Grid(-20, 20, 4001)
    w = build_gaussian(GaussianPacketSpec(1.5, 1.0, 3.0), g)
    k, ph, dk = fourier(w)
    np.testing.assert_allclose(np.abs(ph) ** 2, gaussian_k_weight(k, 3.0, 1.0), atol=1e-12)
    # g(x - mu) e^{i k0 (x - mu)} transforms to e^{-i k mu} g_hat(k - k0)
    m = np.abs(ph) > 1e-3
    np.testing.assert_allclose(np.angle(ph[m] * np.exp(1j * k[m] * 1.5)), 0.0, atol=1e-9)


def test_momentum_density_moments():
    g = Grid(0.0, 1.0, 32001)
    w = build_gaussian(GaussianPacketSpec(0.1, 0.01, 200 * math.pi), g)
    md = momentum_density(w)
    assert md.mass() == pytest.approx(1.0, abs=1e-8)
    assert np.all(md.density >= 0)
    assert md.mean() == pytest.approx(200 * math.pi, rel=1e-10)
    assert md.std() * 2 * 0.01 == pytest.approx(1.0, rel=1e-6)
    assert md.negative_mass() < 1e-20


def test_free_evolution_keeps_momentum_density():
    g = Grid(-60, 60, 6001)
    w = build_gaussian(GaussianPacketSpec(-10.0, 1.5, 1.0), g)
    w2 = propagate(w, HardBox(-60, 60, Free()), PropagatorConfig(0.05), 10.0)
    a, b = momentum_density(w), momentum_density(w2)
    assert np.max(np.abs(a.density - b.density)) < 1e-8


@pytest.mark.parametrize("step", [RectStep(30.0, 0.0), SoftStep(30.0, 0.05, 0.0)])
def test_packet_reflection_matches_quadrature(step):
    k0, sigma = 4.0, 2.0
    g = Grid(-60, 60, 8001)
    w = build_gaussian(GaussianPacketSpec(-20.0, sigma, k0), g)
    Rk = (lambda k: rect_R_of_k(k, 30.0)) if isinstance(step, RectStep) else (lambda k: soft_R_of_k(k, 30.0, 0.05))
    num = quad(lambda k: float(Rk(np.array([k]))[0]) * gaussian_k_weight(k, k0, sigma), 0, 20, limit=200)[0]
    den = quad(lambda k: gaussian_k_weight(k, k0, sigma), 0, 20)[0]
    c = packet_reflection(w, step)
    assert c.provenance is Provenance.SPECTRAL_INTEGRAL
    assert c.R == pytest.approx(num / den, abs=1e-10)
    assert abs(c.R + c.T - 1) < 1e-12


def test_narrow_band_limit():
    g = Grid(-2000, 2000, 40001)
    w = build_gaussian(GaussianPacketSpec(0.0, 200.0, 1.0), g)
    assert packet_reflection(w, RectStep(18.4, 500.0)).R == pytest.approx(rect_step_R(0.5, 18.4).R, abs=1e-4)


def test_errors():
    g = Grid(-20, 20, 2001)
    with pytest.raises(LeftMovingPacket):
        packet_reflection(build_gaussian(GaussianPacketSpec(0, 1.0, -2.0), g), RectStep(1.0))
    with pytest.raises(UnsupportedPotential):
        packet_reflection(build_gaussian(GaussianPacketSpec(0, 1.0, 5.0), g), Plateau(1.0, 1.0))


@pytest.fixture(scope="module")
def wide_packet():
    g = Grid(-2e4, 2e4, 80001)
    return momentum_density(build_gaussian(GaussianPacketSpec(0.0, 1e3, 1.0), g))


@given(eps=st.floats(1e-3, 0.5), dE=st.sampled_from([1e2, 1e4, 1e6]), L=st.sampled_from([1e-4, 1e-2, 0.3]))
@settings(max_examples=30, deadline=None)
def test_epsilon_delta_is_a_lower_bound(wide_packet, eps, dE, L):
    step = SoftStep(dE, L)
    b = epsilon_delta_bound(wide_packet, step, eps)
    # R from the same density, independent of the bound code
    pos = wide_packet.k > 0
    R = np.sum(soft_R_of_k(wide_packet.k[pos], dE, L) * wide_packet.density[pos]) / np.sum(wide_packet.density[pos])
    assert b.bound <= R + 1e-8
    assert b.vacuous == (b.bound <= 0)


def test_epsilon_delta_examples(wide_packet):
    deep = epsilon_delta_bound(wide_packet, RectStep(1e6), 0.01)
    assert not deep.vacuous and deep.bound == pytest.approx(0.99, abs=1e-6)
    shallow = epsilon_delta_bound(wide_packet, RectStep(1e4), 0.01)
    assert shallow.vacuous
    with pytest.raises(ValueError):
        epsilon_delta_bound(wide_packet, RectStep(1.0), 1.5)
