"""Metastable plateau states: construction, decay runs and superpositions.

phi_n equals A_n psi_n on the plateau and psi_n times a Gaussian cut-off
e^{-(|x| - a)^2 / 4 sigma^2} outside. Propagation uses the Crank-Nicolson
propagator on a grid whose plateau edges sit half-way between nodes, and a
domain wide enough that escaping probability never returns from the walls
within the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooSmall, WallReturn
from .gamow import (
    GamowMode,
    PlateauSpec,
    SolverConfig,
    eigenfunction,
    lattice_dx,
    lattice_mode,
    solve_mode,
)
from .qcore import Grid, HardBox, Plateau, WaveFunction, region_probability
from .tdse import WALL_DENSITY, CrankNicolson, PropagatorConfig

DISCREPANCY_THRESHOLD = 0.05


@dataclass
class MetastableState:
    mode: GamowMode
    spec: PlateauSpec
    sigma_cut: float
    A_n: complex
    psi0: WaveFunction

    @property
    def plateau_probability(self) -> float:
        a = self.spec.a
        return region_probability(self.psi0, -a, a)

    @property
    def off_plateau_mass(self) -> float:
        return 1.0 - self.plateau_probability

    @property
    def fitted_c(self) -> float:
        """c in 1 - P_plateau = c / alpha^2."""
        return self.off_plateau_mass * self.mode.alpha**2


def plateau_grid(spec: PlateauSpec, J: int, half_width: float) -> Grid:
    """Uniform grid with dx = a/(J + 1/2), so +-a fall midway between nodes."""
    return Grid.symmetric(lattice_dx(spec.a, J), half_width)


def required_half_width(spec: PlateauSpec, mode: GamowMode, sigma_cut: float, horizon: float,
                        margin: float = 1.02) -> float:
    """a + v horizon + 8 sigma, with a small safety factor on the escape front."""
    return spec.a + margin * mode.escape_speed * horizon + 8 * sigma_cut


def build_metastable(mode: GamowMode, spec: PlateauSpec, sigma_cut: float, grid: Grid) -> MetastableState:
    if not sigma_cut > 0:
        raise ValueError("sigma_cut must be > 0")
    if min(-grid.x_min, grid.x_max) < spec.a + 8 * sigma_cut:
        raise GridTooSmall(f"grid must reach a + 8 sigma = {spec.a + 8 * sigma_cut:g}")
    ef = eigenfunction(mode, spec)
    x = grid.x
    cut = np.exp(-np.clip(np.abs(x) - spec.a, 0, None) ** 2 / (4 * sigma_cut**2))
    raw = WaveFunction(grid, ef(x) * cut)
    raw.amplitudes[[0, -1]] = 0
    A = 1.0 / raw.norm()
    psi0 = WaveFunction(grid, raw.amplitudes * A)
    return MetastableState(mode, spec, sigma_cut, A, psi0)


@dataclass
class DecayTimeSeries:
    times: np.ndarray
    plateau_prob: np.ndarray
    region_discrepancy: np.ndarray  # on-plateau, against A psi_{n,t}
    growing_discrepancy: np.ndarray | None = None
    expected_rate: float = np.nan
    extras: dict = field(default_factory=dict)

    def fitted_rate(self, t_lo: float, t_hi: float) -> float:
        """Least-squares slope of -log P on [t_lo, t_hi]."""
        m = (self.times >= t_lo * (1 - 1e-12)) & (self.times <= t_hi * (1 + 1e-12))
        if m.sum() < 2:
            return np.nan
        return float(-np.polyfit(self.times[m], np.log(self.plateau_prob[m]), 1)[0])

    def rate_so_far(self, t_lo: float) -> np.ndarray:
        out = np.full(self.times.shape, np.nan)
        for i, t in enumerate(self.times):
            if t > t_lo:
                out[i] = self.fitted_rate(t_lo, t)
        return out

    def survival_at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.plateau_prob))


def _interior_mask(x, a):
    return np.abs(x) <= a


def _run(grid: Grid, spec: PlateauSpec, cfg: PropagatorConfig, psi0: WaveFunction,
         times: np.ndarray, references: list, region_fns: list):
    """Propagate and evaluate integrals of |psi - ref(t)|^2 over regions.

    references[i](t) gives the comparison function on the grid; region_fns[i](t)
    returns the half-width of the symmetric comparison window.
    """
    V = HardBox(grid.x_min, grid.x_max, Plateau(spec.dE, spec.a))
    prop = CrankNicolson(grid, V, cfg, spec.params)
    amps = np.ascontiguousarray(psi0.amplitudes).copy()
    prop.advance(amps, 0)
    prop.check_step(amps)
    idx = np.rint(np.asarray(times) / cfg.dt).astype(int)
    if np.any(np.abs(idx * cfg.dt - times) > 1e-9 * max(1.0, float(np.max(times)))):
        raise ValueError("sample times must be multiples of dt")
    a = spec.a
    P = np.empty(len(times))
    D = np.empty((len(references), len(times)))
    n = 0
    for s, target in enumerate(idx):
        prop.advance(amps, int(target - n))
        n = int(target)
        if prop.wall_density(amps) > WALL_DENSITY:
            raise WallReturn(f"escaped probability reached the walls at t={n * cfg.dt:g}")
        psi = WaveFunction(grid, amps)
        P[s] = region_probability(psi, -a, a)
        t = n * cfg.dt
        for r, (ref, hw) in enumerate(zip(references, region_fns)):
            w = min(hw(t), grid.x_max)
            diff = WaveFunction(grid, amps - ref(t))
            D[r, s] = region_probability(diff, -w, w)
    return P, D, prop


def decay_config(mode: GamowMode, dt: float) -> PropagatorConfig:
    """Propagator settings used for plateau runs: phase referenced to Re Z."""
    return PropagatorConfig(dt, energy_shift=float(mode.Z.real), step_check="spectral")


def decay_experiment(state: MetastableState, spec: PlateauSpec, cfg: PropagatorConfig, horizon: float,
                     n_samples: int = 41, J: int | None = None, growing_scale: float = 1.0) -> DecayTimeSeries:
    """Plateau survival and discrepancies up to `horizon`.

    The on-plateau discrepancy compares against A_n e^{-i Z t/hbar} psi_n. The
    growing-region discrepancy compares on |x| <= a + s v t against the
    outgoing eigenvector of the discrete Hamiltonian (needs the grid built by
    `plateau_grid` with the same J), whose exterior phase matches the lattice.
    """
    mode = state.mode
    grid = state.psi0.grid
    x = grid.x
    if horizon > mode.tau * (1 + 1e-9):
        raise ValueError("horizon must not exceed tau")
    need = required_half_width(spec, mode, state.sigma_cut, horizon)
    if grid.x_max < need:
        raise GridTooSmall(f"domain half-width {grid.x_max:g} < {need:g}")
    steps = int(round(horizon / cfg.dt))
    idx = np.unique(np.rint(np.linspace(0, steps, n_samples)).astype(int))
    times = idx * cfg.dt
    ef = eigenfunction(mode, spec)
    base = state.A_n * ef(x) * _interior_mask(x, spec.a)
    hb = spec.params.hbar
    refs = [lambda t: np.exp(-1j * mode.Z * t / hb) * base]
    regions = [lambda t: spec.a]
    lat = None
    if J is not None:
        lat = lattice_mode(mode, spec, J)
        if abs(lat.dx - grid.dx) > 1e-12 * grid.dx:
            raise ValueError("grid spacing does not match the lattice mode")
        j = np.rint(x / grid.dx).astype(int)
        vals = state.A_n * lat.values(j)
        vg = lat.group_velocity

        def growing_ref(t, vals=vals, Z=lat.Z):
            w = spec.a + growing_scale * vg * t
            # restrict before multiplying to avoid overflow of the growing tail
            out = np.zeros_like(vals)
            m = np.abs(x) <= w + grid.dx
            out[m] = np.exp(-1j * Z * t / hb) * vals[m]
            return out

        refs.append(growing_ref)
        regions.append(lambda t: spec.a + growing_scale * vg * t)
    P, D, _ = _run(grid, spec, cfg, state.psi0, times, refs, regions)
    extras = {}
    if lat is not None:
        extras = {"lattice_Z": lat.Z, "lattice_rate": 1 / lat.tau, "lattice_velocity": lat.group_velocity}
    return DecayTimeSeries(times, P, D[0], D[1] if lat is not None else None,
                           expected_rate=1 / mode.tau, extras=extras)


def growing_region_check(state: MetastableState, spec: PlateauSpec, cfg: PropagatorConfig, times,
                         J: int, scale: float = 1.0) -> np.ndarray:
    """Discrepancy on [-a - s v t, a + s v t] at the requested times."""
    times = np.asarray(times, dtype=float)
    mode = state.mode
    grid = state.psi0.grid
    x = grid.x
    lat = lattice_mode(mode, spec, J)
    j = np.rint(x / grid.dx).astype(int)
    vals = state.A_n * lat.values(j)
    vg = lat.group_velocity
    hb = spec.params.hbar

    def ref(t):
        w = spec.a + scale * vg * t
        out = np.zeros_like(vals)
        m = np.abs(x) <= w + grid.dx
        out[m] = np.exp(-1j * lat.Z * t / hb) * vals[m]
        return out

    _, D, _ = _run(grid, spec, cfg, state.psi0, times, [ref], [lambda t: spec.a + scale * vg * t])
    return D[0]


# ------------------------------------------------------------ superposition

@dataclass(frozen=True)
class SuperpositionSpec:
    coefficients: tuple[tuple[int, complex], ...]

    @property
    def n_max(self) -> int:
        return max(n for n, _ in self.coefficients)


@dataclass
class SuperpositionResult:
    series: DecayTimeSeries
    modes: list[GamowMode]
    weights: np.ndarray  # |c_n|^2 after renormalization
    mixture_prediction: np.ndarray  # sum_n w_n e^{-t/tau_n}


def superposition_experiment(spec: PlateauSpec, coeffs: SuperpositionSpec, cfg: PropagatorConfig,
                             horizon: float, grid: Grid, n_samples: int = 41,
                             solver: SolverConfig = SolverConfig()) -> SuperpositionResult:
    """Propagate sum c_n psi_n truncated to [-a, a] and compare on the plateau."""
    modes = [solve_mode(spec, n, solver) for n, _ in coeffs.coefficients]
    cs = np.array([c for _, c in coeffs.coefficients], dtype=complex)
    if horizon > min(m.tau for m in modes) * (1 + 1e-9):
        raise ValueError("horizon must not exceed min(tau_n)")
    need = spec.a + 1.02 * max(m.escape_speed for m in modes) * horizon
    if grid.x_max < need:
        raise GridTooSmall(f"domain half-width {grid.x_max:g} < {need:g}")
    x = grid.x
    inside = _interior_mask(x, spec.a)
    efs = [eigenfunction(m, spec)(x) * inside for m in modes]
    raw = WaveFunction(grid, sum(c * f for c, f in zip(cs, efs)))
    A = 1.0 / raw.norm()
    psi0 = WaveFunction(grid, raw.amplitudes * A)
    hb = spec.params.hbar

    def ref(t):
        return A * sum(c * np.exp(-1j * m.Z * t / hb) * f for c, m, f in zip(cs, modes, efs))

    steps = int(round(horizon / cfg.dt))
    idx = np.unique(np.rint(np.linspace(0, steps, n_samples)).astype(int))
    times = idx * cfg.dt
    P, D, _ = _run(grid, spec, cfg, psi0, times, [ref], [lambda t: spec.a])
    # plateau weight of each component in the initial state
    w = np.array([abs(A * c) ** 2 * np.sum(np.abs(f) ** 2) * grid.dx for c, f in zip(cs, efs)])
    w = w / w.sum()
    mix = sum(wi * np.exp(-times / m.tau) for wi, m in zip(w, modes))
    series = DecayTimeSeries(times, P, D[0], expected_rate=float(np.dot(w, [1 / m.tau for m in modes])))
    return SuperpositionResult(series, modes, w, mix)
