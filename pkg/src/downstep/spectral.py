"""Momentum-space view of packets and packet-level reflection probabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LeftMovingPacket, UnsupportedPotential
from .qcore import NATURAL, PhysicalParams, Potential, RectStep, SoftStep, WaveFunction, unwrap
from .stationary import Provenance, ScatteringCoefficients, rect_R_of_k, soft_R_of_k


@dataclass(frozen=True)
class MomentumDensity:
    """|psi_hat(k)|^2 on the FFT grid, sorted by k and normalized to unit mass."""

    k: np.ndarray
    density: np.ndarray
    dk: float

    def mass(self, mask=None) -> float:
        d = self.density if mask is None else self.density[mask]
        return float(np.sum(d) * self.dk)

    def negative_mass(self) -> float:
        return self.mass(self.k < 0)

    def mean(self) -> float:
        return float(np.sum(self.k * self.density) * self.dk)

    def std(self) -> float:
        m = self.mean()
        return float(np.sqrt(np.sum((self.k - m) ** 2 * self.density) * self.dk))


def fourier(psi: WaveFunction) -> tuple[np.ndarray, np.ndarray, float]:
    """psi_hat(k) = (2 pi)^(-1/2) sum psi(x) e^{-ikx} dx on k = 2 pi fftfreq/dx.

    Discrete Parseval holds exactly: sum |psi_hat|^2 dk = sum |psi|^2 dx.
    """
    g = psi.grid
    n = g.n_points
    k = 2 * np.pi * np.fft.fftfreq(n, g.dx)
    ph = np.fft.fft(psi.amplitudes) * g.dx / np.sqrt(2 * np.pi)
    ph = ph * np.exp(-1j * k * g.x_min)
    return k, ph, 2 * np.pi / (n * g.dx)


def momentum_density(psi: WaveFunction) -> MomentumDensity:
    k, ph, dk = fourier(psi)
    order = np.argsort(k, kind="stable")
    dens = np.abs(ph[order]) ** 2
    total = np.sum(dens) * dk
    return MomentumDensity(k[order], dens / total, dk)


def _R_of_k(step: Potential, k, params):
    if isinstance(step, RectStep):
        return rect_R_of_k(k, step.dE, params)
    if isinstance(step, SoftStep):
        return soft_R_of_k(k, step.dE, step.L, params)
    raise UnsupportedPotential(f"{type(step).__name__} is not a step")


def packet_reflection(psi_in: WaveFunction, step: Potential, params: PhysicalParams = NATURAL,
                      neg_tol: float = 1e-6) -> ScatteringCoefficients:
    """R = int_0^inf R(k) |psi_hat_in(k)|^2 dk, with T from the same weights."""
    step = unwrap(step)
    md = momentum_density(psi_in)
    if md.negative_mass() > neg_tol:
        raise LeftMovingPacket(f"negative-k mass {md.negative_mass():.3g} > {neg_tol:g}")
    pos = md.k > 0
    k = md.k[pos]
    w = md.density[pos]
    Rk = _R_of_k(step, k, params)
    total = np.sum(w)
    R = float(np.sum(Rk * w) / total)
    T = float(np.sum((1 - Rk) * w) / total)
    return ScatteringCoefficients(R, T, Provenance.SPECTRAL_INTEGRAL)


@dataclass(frozen=True)
class EpsDeltaBound:
    bound: float
    eps: float
    delta: float
    vacuous: bool


def epsilon_delta_bound(density: MomentumDensity, step: Potential, eps: float,
                        params: PhysicalParams = NATURAL) -> EpsDeltaBound:
    """R > 1 - eps - delta, delta being the mass where R(k) <= 1 - eps."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    step = unwrap(step)
    good = np.zeros(density.k.shape, dtype=bool)
    pos = density.k > 0
    good[pos] = _R_of_k(step, density.k[pos], params) > 1 - eps
    delta = max(0.0, 1.0 - density.mass(good))
    b = 1.0 - eps - delta
    return EpsDeltaBound(b, eps, delta, b <= 0)
