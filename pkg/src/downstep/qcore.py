"""Units, grids, wavefunctions, potentials and Gaussian packets.

Everything downstream works on uniform grids in natural units (hbar = m = 1
unless a :class:`PhysicalParams` says otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .errors import RegionOutOfGrid, UnresolvedPacket


@dataclass(frozen=True)
class PhysicalParams:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")

    def k_of_E(self, E):
        """Wavenumber sqrt(2 m E)/hbar for kinetic energy E >= 0."""
        return np.sqrt(2.0 * self.mass * np.asarray(E, dtype=float)) / self.hbar

    def E_of_k(self, k):
        return (self.hbar * np.asarray(k)) ** 2 / (2.0 * self.mass)


NATURAL = PhysicalParams()


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        if self.n_points < 3:
            raise ValueError("a grid needs at least 3 points")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @classmethod
    def symmetric(cls, dx: float, half_width: float) -> "Grid":
        """Grid with spacing exactly dx, node at 0 and extent >= half_width."""
        m = int(np.ceil(half_width / dx - 1e-9))
        return cls(-m * dx, m * dx, 2 * m + 1)


@dataclass
class WaveFunction:
    grid: Grid
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.grid.n_points,):
            raise ValueError("amplitude array does not match the grid")

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm_sq(self) -> float:
        """Discrete squared norm sum |psi_i|^2 dx."""
        return float(np.sum(self.density) * self.grid.dx)

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def normalize(self) -> "WaveFunction":
        n = self.norm()
        if n == 0 or not np.isfinite(n):
            raise ValueError("cannot normalize a zero or non-finite wavefunction")
        self.amplitudes = self.amplitudes / n
        return self

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes.copy())

    def mean_x(self) -> float:
        d = self.density
        return float(np.sum(self.x * d) / np.sum(d))

    def width(self) -> float:
        """Position standard deviation."""
        d = self.density
        x = self.x
        m = np.sum(x * d) / np.sum(d)
        return float(np.sqrt(np.sum((x - m) ** 2 * d) / np.sum(d)))


# ---------------------------------------------------------------- potentials

class Potential:
    """Base class. Subclasses are frozen dataclasses evaluable on arrays."""

    def __call__(self, x):
        raise NotImplementedError

    def asymptotes(self) -> tuple[float, float]:
        """Values at -inf and +inf."""
        raise NotImplementedError

    def reflected(self) -> "Potential":
        """The mirror image V(-x)."""
        return Mirrored(self)


@dataclass(frozen=True)
class Free(Potential):
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def asymptotes(self):
        return 0.0, 0.0


def _heaviside(s):
    return np.heaviside(s, 0.5)


@dataclass(frozen=True)
class RectStep(Potential):
    """V = -dE * Theta(x - center), with Theta(0) = 1/2."""

    dE: float
    center: float = 0.0

    def __post_init__(self):
        if self.dE < 0:
            raise ValueError("step depth dE must be >= 0")

    def __call__(self, x):
        return -self.dE * _heaviside(np.asarray(x, dtype=float) - self.center)

    def asymptotes(self):
        return 0.0, -float(self.dE)


@dataclass(frozen=True)
class SoftStep(Potential):
    """V = -(dE/2) (1 + tanh((x - center)/L))."""

    dE: float
    L: float
    center: float = 0.0

    def __post_init__(self):
        if self.dE < 0:
            raise ValueError("step depth dE must be >= 0")
        if not self.L > 0:
            raise ValueError("step width L must be > 0")

    def __call__(self, x):
        s = (np.asarray(x, dtype=float) - self.center) / self.L
        return -0.5 * self.dE * (1.0 + np.tanh(s))

    def asymptotes(self):
        return 0.0, -float(self.dE)


@dataclass(frozen=True)
class Plateau(Potential):
    """V = 0 on |x| <= a and -dE outside."""

    dE: float
    a: float

    def __post_init__(self):
        if self.dE < 0:
            raise ValueError("plateau depth dE must be >= 0")
        if not self.a > 0:
            raise ValueError("plateau half-width a must be > 0")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.a, 0.0, -float(self.dE))

    def asymptotes(self):
        return -float(self.dE), -float(self.dE)


@dataclass(frozen=True)
class Parabola(Potential):
    """Inverted parabola V = -c (x - x0)^2."""

    c: float
    x0: float = 0.0

    def __call__(self, x):
        return -self.c * (np.asarray(x, dtype=float) - self.x0) ** 2

    def asymptotes(self):
        return -np.inf, -np.inf


@dataclass(frozen=True)
class HardBox(Potential):
    """Inner potential between infinite walls at x_lo and x_hi (Dirichlet)."""

    x_lo: float
    x_hi: float
    inner: Potential = field(default_factory=Free)

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError("x_lo must be below x_hi")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v = np.asarray(self.inner(x), dtype=float)
        return np.where((x < self.x_lo) | (x > self.x_hi), np.inf, v)

    def asymptotes(self):
        return np.inf, np.inf

    def reflected(self):
        return HardBox(-self.x_hi, -self.x_lo, self.inner.reflected())


@dataclass(frozen=True)
class Mirrored(Potential):
    inner: Potential

    def __call__(self, x):
        return self.inner(-np.asarray(x, dtype=float))

    def asymptotes(self):
        lo, hi = self.inner.asymptotes()
        return hi, lo

    def reflected(self):
        return self.inner


def unwrap(V: Potential) -> Potential:
    """Strip a HardBox to get at the physical potential inside."""
    while isinstance(V, HardBox):
        V = V.inner
    return V


# ------------------------------------------------------------------ packets

@dataclass(frozen=True)
class GaussianPacketSpec:
    mu: float
    sigma: float
    k0: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")


def build_gaussian(spec: GaussianPacketSpec, grid: Grid, check: bool = True) -> WaveFunction:
    """Sampled, normalized packet with density G_{mu,sigma} and carrier e^{i k0 x}.

    check=False skips the resolution test; only the mesh-pathology demo,
    which is about under-resolved meshes, should need that.
    """
    dx = grid.dx
    if check and not dx < spec.sigma / 5:
        raise UnresolvedPacket(f"dx={dx:g} does not resolve sigma={spec.sigma:g}")
    if check and spec.k0 != 0 and not dx < np.pi / (4 * abs(spec.k0)):
        raise UnresolvedPacket(f"dx={dx:g} aliases the carrier k0={spec.k0:g}")
    x = grid.x
    s = x - spec.mu
    amp = (2 * np.pi * spec.sigma**2) ** -0.25 * np.exp(-(s**2) / (4 * spec.sigma**2))
    # carrier phase referenced to mu keeps the phase small near the packet
    psi = amp * np.exp(1j * spec.k0 * s)
    return WaveFunction(grid, psi).normalize()


def probability_current(psi: WaveFunction, params: PhysicalParams = NATURAL) -> np.ndarray:
    """j = (hbar/m) Im(psi* psi') at interior nodes, central differences."""
    p = psi.amplitudes
    dpsi = (p[2:] - p[:-2]) / (2 * psi.grid.dx)
    return params.hbar / params.mass * np.imag(np.conj(p[1:-1]) * dpsi)


def _density_at(psi: WaveFunction, x0: float) -> float:
    return float(np.interp(x0, psi.x, psi.density))


def region_probability(psi: WaveFunction, x_lo: float, x_hi: float) -> float:
    """Trapezoid integral of |psi|^2 over [x_lo, x_hi].

    Endpoints that fall between nodes use linearly interpolated density, so
    the rule is exact trapezoid on the sub-interval.
    """
    g = psi.grid
    tol = 1e-12 * max(1.0, abs(g.x_min), abs(g.x_max))
    if not x_lo < x_hi:
        raise RegionOutOfGrid("x_lo must be below x_hi")
    if x_lo < g.x_min - tol or x_hi > g.x_max + tol:
        raise RegionOutOfGrid(f"[{x_lo}, {x_hi}] outside [{g.x_min}, {g.x_max}]")
    x_lo = max(x_lo, g.x_min)
    x_hi = min(x_hi, g.x_max)
    x = psi.x
    d = psi.density
    inside = (x > x_lo) & (x < x_hi)
    xs = np.concatenate(([x_lo], x[inside], [x_hi]))
    ds = np.concatenate(([_density_at(psi, x_lo)], d[inside], [_density_at(psi, x_hi)]))
    return float(trapezoid(ds, xs))
