"""Stationary scattering at downward steps.

Closed forms for the sharp and tanh steps, the dimensionless surface R(u, v),
the parameter-region predicate, and a transfer-matrix oracle for arbitrary
potentials that are constant outside a window.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInput,
    EvanescentAsymptote,
    NonpositiveEnergy,
    NonpositiveWidth,
    SliceCountTooSmall,
)
from .qcore import NATURAL, PhysicalParams, Potential


class Provenance(enum.Enum):
    CLOSED_FORM_RECT = "ClosedFormRect"
    CLOSED_FORM_SOFT = "ClosedFormSoft"
    TRANSFER_MATRIX = "TransferMatrix"
    SPECTRAL_INTEGRAL = "SpectralIntegral"
    PROPAGATION = "Propagation"


@dataclass(frozen=True)
class ScatteringCoefficients:
    R: float
    T: float
    provenance: Provenance

    def __post_init__(self):
        if not (-1e-12 <= self.R <= 1 + 1e-12 and -1e-12 <= self.T <= 1 + 1e-12):
            raise ValueError(f"R={self.R}, T={self.T} outside [0, 1]")
        if abs(self.R + self.T - 1) > 1e-6:
            raise ValueError(f"R + T = {self.R + self.T} != 1")


@dataclass(frozen=True)
class WaveNumbers:
    k1: float
    k2: float


@dataclass(frozen=True)
class MatchCoefficients:
    A: complex  # transmitted
    B: complex  # reflected


@dataclass(frozen=True)
class DimensionlessStep:
    u: float
    v: float

    def __post_init__(self):
        if self.u < 0 or self.v < 0:
            raise ValueError("u and v must be >= 0")


def _check_E(E, dE):
    if not E > 0:
        raise NonpositiveEnergy(f"E={E} must be > 0")
    if dE < 0:
        raise ValueError("dE must be >= 0")


def wave_numbers(E: float, dE: float, params: PhysicalParams = NATURAL) -> WaveNumbers:
    _check_E(E, dE)
    return WaveNumbers(float(params.k_of_E(E)), float(params.k_of_E(E + dE)))


def match_coefficients(E: float, dE: float, params: PhysicalParams = NATURAL) -> MatchCoefficients:
    w = wave_numbers(E, dE, params)
    s = w.k1 + w.k2
    return MatchCoefficients(complex(2 * w.k1 / s), complex((w.k1 - w.k2) / s))


# vectorized kernels over k1 (used by `spectral` as well)

def _k_gap(k1, dE, params):
    """k2 - k1 and k2 + k1 without cancellation."""
    k1 = np.asarray(k1, dtype=float)
    q2 = 2 * params.mass * dE / params.hbar**2
    k2 = np.sqrt(k1 * k1 + q2)
    ksum = k1 + k2
    with np.errstate(divide="ignore", invalid="ignore"):
        kdiff = np.where(ksum > 0, q2 / ksum, 0.0)
    return kdiff, ksum


def rect_R_of_k(k1, dE: float, params: PhysicalParams = NATURAL):
    kdiff, ksum = _k_gap(k1, dE, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(ksum > 0, kdiff / ksum, 1.0)
    return r * r


def _sinh_ratio(a, b, gap=None):
    """sinh(a)/sinh(b) for 0 <= a <= b, stable for large arguments.

    gap = b - a, if known without cancellation.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    gap = b - a if gap is None else np.asarray(gap, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = np.exp(-gap) * np.expm1(-2 * a) / np.expm1(-2 * b)
        small = b < 1e-8
        r = np.where(small, np.where(b > 0, a / b, 1.0), r)
    return r


def soft_R_of_k(k1, dE: float, L: float, params: PhysicalParams = NATURAL):
    kdiff, ksum = _k_gap(k1, dE, params)
    h = 0.5 * np.pi * L
    return _sinh_ratio(h * kdiff, h * ksum, 2 * h * np.asarray(k1, dtype=float)) ** 2


def rect_step_R(E: float, dE: float, params: PhysicalParams = NATURAL) -> ScatteringCoefficients:
    """Sharp downward step of depth dE, incoming kinetic energy E."""
    _check_E(E, dE)
    R = float(rect_R_of_k(params.k_of_E(E), dE, params))
    return ScatteringCoefficients(R, 1.0 - R, Provenance.CLOSED_FORM_RECT)


def soft_step_R(E: float, dE: float, L: float, params: PhysicalParams = NATURAL) -> ScatteringCoefficients:
    """tanh step of width L; the sinh ratio is evaluated in exponential form."""
    _check_E(E, dE)
    if not L > 0:
        raise NonpositiveWidth(f"L={L} must be > 0")
    R = float(soft_R_of_k(params.k_of_E(E), dE, L, params))
    return ScatteringCoefficients(R, 1.0 - R, Provenance.CLOSED_FORM_SOFT)


def dimensionless(E: float, dE: float, L: float, params: PhysicalParams = NATURAL) -> DimensionlessStep:
    h = 0.5 * np.pi * L
    return DimensionlessStep(float(h * params.k_of_E(E)), float(h * params.k_of_E(dE)))


def R_uv(d: DimensionlessStep) -> float:
    """R in terms of u = (pi/2) k1 L and v = (pi/2) sqrt(2 m dE) L / hbar."""
    u, v = d.u, d.v
    if u == 0 and v == 0:
        raise DegenerateInput("u = v = 0")
    s = np.hypot(u, v)
    return float(_sinh_ratio(v * v / (s + u), s + u, 2 * u) ** 2)


def taylor_sqrt_R(u: float, v: float) -> float:
    """First-order expansion of sqrt(R) in u at fixed v."""
    return 1.0 - 2.0 * u / np.tanh(v)


def taylor_remainder(u: float, v: float) -> float:
    """Leading term of sqrt(R) - (1 - 2u/tanh v), namely 2 u^2 coth^2 v."""
    return 2.0 * u * u / np.tanh(v) ** 2


@dataclass(frozen=True)
class RegionVerdict:
    margins: tuple[float, float, float]  # 1/(k1 L), dE/E, sigma k1
    thresholds: tuple[float, float, float]
    inside: bool


def paradoxical_region(k1: float, L: float, dE: float, sigma: float,
                       params: PhysicalParams = NATURAL,
                       thresholds: tuple[float, float, float] = (10.0, 10.0, 10.0)) -> RegionVerdict:
    """Margins for 1/k1 >> L, dE >> E and sigma >> 1/k1."""
    if min(k1, L, dE, sigma) <= 0:
        raise ValueError("all inputs must be positive")
    E = float(params.E_of_k(k1))
    m = (1.0 / (k1 * L), dE / E, sigma * k1)
    return RegionVerdict(m, tuple(thresholds), all(mi > ti for mi, ti in zip(m, thresholds)))


def _slice_matrix(q2: float, d: float) -> np.ndarray:
    """(psi, psi') transfer over width d with psi'' = -q2 psi (q2 may be negative)."""
    q = np.sqrt(complex(q2))
    qd = q * d
    # d * sinc(qd) and cos(qd) as entire functions of q^2
    if abs(qd) < 1e-4:
        z = qd * qd
        c = 1 - z / 2 + z * z / 24
        sd = d * (1 - z / 6 + z * z / 120)
    else:
        c = np.cos(qd)
        sd = np.sin(qd) / q
    return np.array([[c, sd], [-q2 * sd, c]], dtype=complex)


def transfer_matrix_R(V: Potential, E: float, x_lo: float, x_hi: float, n_slices: int,
                      params: PhysicalParams = NATURAL, incidence: str = "left") -> ScatteringCoefficients:
    """Reflection for total energy E by midpoint slicing of V on [x_lo, x_hi].

    Outside the window V takes its asymptotic values. Each slice is a 2x2
    (psi, psi') propagator; the plane-wave bases of the two outer media close
    the product.
    """
    if n_slices < 1:
        raise SliceCountTooSmall("need at least one slice")
    if not x_lo < x_hi:
        raise ValueError("x_lo must be below x_hi")
    VL, VR = V.asymptotes()
    if not (E > VL and E > VR):
        raise EvanescentAsymptote(f"E={E} not above asymptotes ({VL}, {VR})")
    fac = 2 * params.mass / params.hbar**2
    kL = np.sqrt(fac * (E - VL))
    kR = np.sqrt(fac * (E - VR))
    edges = np.linspace(x_lo, x_hi, n_slices + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    Vm = np.asarray(V(mids), dtype=float)
    d = (x_hi - x_lo) / n_slices
    M = np.eye(2, dtype=complex)
    for v in Vm:
        M = _slice_matrix(fac * (E - v), d) @ M
    # amplitudes (a, b) of a e^{ikx} + b e^{-ikx} at each window edge
    DL = np.array([[1, 1], [1j * kL, -1j * kL]])
    DRinv = 0.5 * np.array([[1, -1j / kR], [1, 1j / kR]])
    T = DRinv @ M @ DL
    if incidence == "left":
        r = -T[1, 0] / T[1, 1]
        t = T[0, 0] + T[0, 1] * r
        R, Tc = abs(r) ** 2, kR / kL * abs(t) ** 2
    elif incidence == "right":
        t = 1 / T[1, 1]
        r = T[0, 1] / T[1, 1]
        R, Tc = abs(r) ** 2, kL / kR * abs(t) ** 2
    else:
        raise ValueError("incidence must be 'left' or 'right'")
    return ScatteringCoefficients(float(R), float(Tc), Provenance.TRANSFER_MATRIX)
