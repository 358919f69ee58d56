"""Decay (Gamow) eigenvalues of the potential plateau.

The plateau V = 0 on |x| <= a, -dE outside, carries purely outgoing
solutions with complex energy Z. In the dimensionless variable
kappa = k lambda0 / (2 pi), with lambda0 = 2 pi hbar / sqrt(2 m dE) and
alpha = 2a / lambda0, the n-th root solves

    kappa = F(kappa) = n/(2 alpha) - (i/(pi alpha)) log(kappa + sqrt(1 + kappa^2)),

which is a contraction with constant K <= 1/(pi alpha sqrt(1 - r^2)) on the
ball |kappa| <= r. Iterating from kappa = 0 converges with the a-priori error
|kappa - kappa^(j)| <= n alpha^-(j+1).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import NonDecayRoot, NonpositiveEnergy, NotContracting, OutsideRadius
from .qcore import NATURAL, Grid, PhysicalParams, WaveFunction


def psqrt(z: complex) -> complex:
    """Square root with Re > 0, and i sqrt|z| on the cut z <= 0.

    Handles signed zeros so that -x + 0j and -x - 0j both map to +i sqrt(x).
    """
    z = complex(z)
    if z.imag == 0 and z.real <= 0:
        return 1j * np.sqrt(-z.real)
    r = np.sqrt(z)
    return r if r.real > 0 else -r


class Parity(enum.Enum):
    COS = "cos"  # odd n, even function
    SIN = "sin"  # even n, odd function


@dataclass(frozen=True)
class PlateauSpec:
    a: float
    dE: float
    params: PhysicalParams = NATURAL

    def __post_init__(self):
        if not (self.a > 0 and self.dE > 0):
            raise ValueError("a and dE must be positive")

    @property
    def lambda0(self) -> float:
        p = self.params
        return 2 * np.pi * p.hbar / np.sqrt(2 * p.mass * self.dE)

    @property
    def alpha(self) -> float:
        return 2 * self.a / self.lambda0

    @classmethod
    def from_alpha(cls, alpha: float, a: float = 1.0, params: PhysicalParams = NATURAL) -> "PlateauSpec":
        """Depth that gives the requested alpha at half-width a."""
        dE = (np.pi * alpha * params.hbar / a) ** 2 / (2 * params.mass)
        return cls(a, dE, params)


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 200
    tol: float = 1e-14
    radius: float = 1 / np.sqrt(2)
    allow_unverified: bool = False  # permit alpha < 10

    def contraction_K(self, alpha: float) -> float:
        return 1.0 / (np.pi * alpha * np.sqrt(1 - self.radius**2))


def F(kappa: complex, alpha: float, n: int) -> complex:
    return n / (2 * alpha) - 1j / (np.pi * alpha) * np.log(kappa + psqrt(1 + kappa * kappa))


def iterates(alpha: float, n: int, j: int) -> list[complex]:
    """kappa^(0) = 0, kappa^(1), ..., kappa^(j)."""
    out = [0j]
    for _ in range(j):
        out.append(F(out[-1], alpha, n))
    return out


def fixed_point(alpha: float, n: int, cfg: SolverConfig = SolverConfig()) -> tuple[complex, int, float]:
    """Raw Banach iteration for any integer n; returns (kappa, iterations, residual)."""
    K = cfg.contraction_K(alpha)
    if K >= 1:
        raise NotContracting(f"contraction constant K={K:.3g} >= 1 at alpha={alpha:g}")
    kap = 0j
    for it in range(1, cfg.max_iter + 1):
        new = F(kap, alpha, n)
        kap = new
        res = abs(F(kap, alpha, n) - kap)
        if res < cfg.tol:
            return kap, it, res
    raise NotContracting(f"no convergence in {cfg.max_iter} iterations (residual {res:.3g})")


@dataclass(frozen=True)
class GamowMode:
    n: int
    alpha: float
    kappa: complex
    Z: complex
    k: complex
    k_tilde: complex
    parity: Parity
    B: complex
    tau: float
    escape_speed: float
    beta: float
    residual: float
    iterations: int
    in_census: bool  # |kappa| <= 1/2
    within_radius: bool  # |kappa| <= radius of the uniqueness ball
    unverified_regime: bool  # alpha < 10

    def error_bound(self, j: int) -> float:
        """A-priori bound on |kappa - kappa^(j)|."""
        return abs(self.n) * self.alpha ** -(j + 1)


def solve_mode(spec: PlateauSpec, n: int, cfg: SolverConfig = SolverConfig()) -> GamowMode:
    alpha = spec.alpha
    unverified = alpha < 10
    if unverified and not cfg.allow_unverified:
        raise ValueError(f"alpha={alpha:g} < 10 needs SolverConfig(allow_unverified=True)")
    if not 1 <= n <= alpha + 2:
        if n < 1:
            kap, _, _ = fixed_point(alpha, n, cfg)
            raise NonDecayRoot(f"n={n} gives kappa={kap:.6g}, not a decaying root")
        raise ValueError(f"n={n} outside 1..alpha+2")
    kap, it, res = fixed_point(alpha, n, cfg)
    if not (kap.real > 0 and kap.imag < 0):
        raise NonDecayRoot(f"kappa={kap} lacks Re > 0, Im < 0")
    if abs(kap) > cfg.radius:
        warnings.warn(OutsideRadius(f"|kappa_{n}|={abs(kap):.4f} > {cfg.radius:.4f}"), stacklevel=2)
    p = spec.params
    q = 2 * np.pi / spec.lambda0
    Z = kap * kap * spec.dE
    k = q * kap
    kt = q * psqrt(1 + kap * kap)
    return GamowMode(
        n=n, alpha=alpha, kappa=kap, Z=Z, k=k, k_tilde=kt,
        parity=Parity.COS if n % 2 else Parity.SIN,
        B=(1j ** n) * kap,
        tau=-p.hbar / (2 * Z.imag),
        escape_speed=p.hbar / p.mass * kt.real,
        beta=-kt.imag,
        residual=res, iterations=it,
        in_census=abs(kap) <= 0.5,
        within_radius=abs(kap) <= cfg.radius,
        unverified_regime=unverified,
    )


def enumerate_modes(spec: PlateauSpec, cfg: SolverConfig = SolverConfig()) -> list[GamowMode]:
    """All decay modes with |Z| <= dE/4, i.e. |kappa| <= 1/2, sorted by n."""
    out = []
    for n in range(1, int(np.ceil(spec.alpha)) + 3):
        if n > spec.alpha + 2:
            break
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OutsideRadius)
            m = solve_mode(spec, n, cfg)
        if m.in_census:
            out.append(m)
    return out


def asymptotic_Z(spec: PlateauSpec, n: int) -> complex:
    """Large-alpha estimate (n^2 dE / 4 alpha^2)(1 - 2i/(pi alpha))."""
    nu = n / (2 * spec.alpha)
    return nu * nu * spec.dE * (1 - 2j / (np.pi * spec.alpha))


def infinite_well_level(spec: PlateauSpec, n: int) -> float:
    p = spec.params
    return (p.hbar * np.pi * n) ** 2 / (8 * p.mass * spec.a**2)


@dataclass(frozen=True)
class Lifetimes:
    tau_qu: float
    tau_cl: float
    tau_solver: float

    @property
    def relative_gap(self) -> float:
        return abs(self.tau_solver - self.tau_qu) / self.tau_solver


def step_transmission_leading(E: float, dE: float) -> float:
    """Leading small-E/dE transmission of the sharp step, 4 sqrt(E/dE)."""
    return 4 * np.sqrt(E / dE)


def lifetime(spec: PlateauSpec, mode: GamowMode) -> Lifetimes:
    """Classical crossing time and the semiclassical quantum lifetime at E = Re Z."""
    E = mode.Z.real
    if not E > 0:
        raise NonpositiveEnergy(f"Re Z = {E} <= 0")
    p = spec.params
    tau_cl = spec.a * np.sqrt(2 * p.mass / E)
    tau_qu = 0.25 * np.sqrt(spec.dE / E) * tau_cl
    return Lifetimes(tau_qu, tau_cl, mode.tau)


# ---------------------------------------------------------- matching data

@dataclass(frozen=True)
class GamowCoefficients:
    A_plus: complex
    A_minus: complex
    B_plus: complex
    B_minus: complex
    C_plus: complex = 0j
    C_minus: complex = 0j


def coefficients(mode: GamowMode, spec: PlateauSpec) -> GamowCoefficients:
    """Interior e^{+-ikx} and exterior e^{+-i k~ x} amplitudes with A+ = 1/2."""
    a, k, kt = spec.a, mode.k, mode.k_tilde
    Ap = 0.5
    Am = np.exp(2j * a * k) * (k - kt) / (k + kt) * Ap
    Bp = np.exp(1j * a * (k - kt)) * 2 * k / (k + kt) * Ap
    Bm = np.exp(-1j * a * (k + kt)) * 2 * k / (k - kt) * Ap
    return GamowCoefficients(Ap, Am, Bp, Bm)


def matching_identity_residual(mode: GamowMode, spec: PlateauSpec) -> float:
    """|((k + k~)/(k - k~))^2 - e^{4iak}|."""
    k, kt = mode.k, mode.k_tilde
    return abs(((k + kt) / (k - kt)) ** 2 - np.exp(4j * spec.a * k))


class Eigenfunction:
    """Piecewise analytic psi_n: cos or sin inside, B e^{i k~ (|x| - a)} outside.

    The exterior is mirrored with the parity sign, so psi(-x) = +-psi(x).
    """

    def __init__(self, mode: GamowMode, spec: PlateauSpec):
        self.mode, self.spec = mode, spec
        self.k, self.kt, self.a = mode.k, mode.k_tilde, spec.a
        self.odd_n = mode.parity is Parity.COS
        # exterior amplitude equal to the interior value at x = a
        self.B = np.cos(self.k * self.a) if self.odd_n else np.sin(self.k * self.a)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k, kt, a = self.k, self.kt, self.a
        ax = np.abs(x)
        inner = np.cos(k * x) if self.odd_n else np.sin(k * x)
        sgn = 1.0 if self.odd_n else np.sign(x)
        with np.errstate(over="ignore", invalid="ignore"):
            outer = sgn * self.B * np.exp(1j * kt * (ax - a))
        return np.where(ax <= a, inner, outer)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        k, kt, a = self.k, self.kt, self.a
        ax = np.abs(x)
        inner = -k * np.sin(k * x) if self.odd_n else k * np.cos(k * x)
        # d/dx of s(x) B e^{i k~ (|x|-a)} = s(x) sign(x) i k~ B e^{...}
        sgn = np.sign(x) if self.odd_n else 1.0
        outer = sgn * 1j * kt * self.B * np.exp(1j * kt * (ax - a))
        return np.where(ax <= a, inner, outer)

    def one_sided(self, x0: float, side: str):
        """(psi, psi') at x0 from the interior ('in') or exterior ('out') branch."""
        k, kt, a = self.k, self.kt, self.a
        if side == "in":
            if self.odd_n:
                return np.cos(k * x0), -k * np.sin(k * x0)
            return np.sin(k * x0), k * np.cos(k * x0)
        s = np.sign(x0)
        e = np.exp(1j * kt * (abs(x0) - a))
        val = (1.0 if self.odd_n else s) * self.B * e
        return val, (s if self.odd_n else 1.0) * 1j * kt * self.B * e

    def mp_value(self, x, dps: int = 40):
        """High-precision evaluation of the same branch formulas."""
        with mpmath.workdps(dps):
            x = mpmath.mpf(x)
            k = mpmath.mpc(self.k)
            kt = mpmath.mpc(self.kt)
            a = mpmath.mpf(self.a)
            if abs(x) <= a:
                return mpmath.cos(k * x) if self.odd_n else mpmath.sin(k * x)
            B = mpmath.cos(k * a) if self.odd_n else mpmath.sin(k * a)
            s = 1 if (self.odd_n or x > 0) else -1
            return s * B * mpmath.exp(1j * kt * (abs(x) - a))

    def ode_residual(self, x, h: float = 1e-12, dps: int = 40) -> float:
        """|-(hbar^2/2m) psi'' + (V - Z) psi| / (|Z| |psi|) with a high-precision
        central difference, evaluated on the smooth piece containing x."""
        p = self.spec.params
        with mpmath.workdps(dps):
            hh = mpmath.mpf(h)
            f0 = self.mp_value(x, dps)
            fp = self.mp_value(mpmath.mpf(x) + hh, dps)
            fm = self.mp_value(mpmath.mpf(x) - hh, dps)
            d2 = (fp - 2 * f0 + fm) / hh**2
            V = 0 if abs(x) <= self.a else -self.spec.dE
            Z = mpmath.mpc(self.mode.Z)
            r = -(p.hbar**2) / (2 * p.mass) * d2 + (V - Z) * f0
            return float(abs(r) / (abs(Z) * abs(f0)))

    def evolved(self, x, t: float):
        """psi_{n,t}(x) = e^{-i Z t / hbar} psi_n(x)."""
        return np.exp(-1j * self.mode.Z * t / self.spec.params.hbar) * self(x)

    def sample(self, grid: Grid) -> WaveFunction:
        return WaveFunction(grid, self(grid.x))


def eigenfunction(mode: GamowMode, spec: PlateauSpec) -> Eigenfunction:
    return Eigenfunction(mode, spec)


# ------------------------------------------------------------ lattice mode

@dataclass(frozen=True)
class LatticeMode:
    """Outgoing eigenvector of the 3-point discrete Hamiltonian.

    Plateau edges sit half-way between nodes: dx = a/(J + 1/2), nodes
    |j| <= J carry V = 0. Inside psi_j = cos(q j) or sin(q j); outside
    psi_j = +-psi_J rho^(|j| - J) with rho = e^{i p}.
    """

    Z: complex
    q: complex
    p: complex
    dx: float
    J: int
    odd_n: bool
    group_velocity: float
    residual: float
    hbar: float = 1.0

    @property
    def tau(self) -> float:
        return -self.hbar / (2 * self.Z.imag)

    def values(self, j: np.ndarray) -> np.ndarray:
        j = np.asarray(j)
        aj = np.abs(j)
        f = np.cos if self.odd_n else np.sin
        edge = f(self.q * self.J)
        sgn = 1.0 if self.odd_n else np.sign(j)
        with np.errstate(over="ignore", invalid="ignore"):
            outer = sgn * edge * np.exp(1j * self.p * (aj - self.J))
        return np.where(aj <= self.J, f(self.q * j), outer)


def lattice_dx(a: float, J: int) -> float:
    return a / (J + 0.5)


def lattice_mode(mode: GamowMode, spec: PlateauSpec, J: int) -> LatticeMode:
    """Discrete counterpart of `mode` found by Newton from the continuum Z."""
    pp = spec.params
    dx = lattice_dx(spec.a, J)
    c = pp.hbar**2 / (2 * pp.mass * dx * dx)
    f = np.cos if mode.parity is Parity.COS else np.sin

    def angles(Z):
        q = np.arccos(1 - Z / (2 * c) + 0j)
        p = np.arccos(1 - (Z + spec.dE) / (2 * c) + 0j)
        if p.real < 0:
            p = -p
        return q, p

    def G(Z):
        q, p = angles(Z)
        return f(q * (J + 1)) / f(q * J) - np.exp(1j * p)

    # complex Newton; G is analytic in Z near the root
    Z = complex(mode.Z)
    h = 1e-7 * abs(Z)
    for _ in range(50):
        g = G(Z)
        dZ = -g / ((G(Z + h) - G(Z - h)) / (2 * h))
        Z += dZ
        if abs(dZ) < 1e-15 * abs(Z):
            break
    q, p = angles(Z)
    res = float(abs(G(Z)))
    vg = pp.hbar / pp.mass * np.sin(p.real) / dx
    return LatticeMode(Z, q, p, dx, J, mode.parity is Parity.COS, float(vg), res, pp.hbar)
