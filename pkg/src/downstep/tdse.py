"""Crank-Nicolson propagation in a hard-walled box, scattering runs and the
finite-mesh pathology demo.

The discrete Hamiltonian is the 3-point Laplacian plus the sampled potential.
Nodes where the potential is infinite (outside a HardBox) and the two grid
end nodes are held at zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import PacketsNotSeparated, UnstableStep, UnsupportedPotential, WallContact
from .qcore import (
    NATURAL,
    Free,
    GaussianPacketSpec,
    Grid,
    HardBox,
    Parabola,
    PhysicalParams,
    Potential,
    RectStep,
    SoftStep,
    WaveFunction,
    build_gaussian,
    probability_current,
    region_probability,
    unwrap,
)
from .spectral import momentum_density
from .stationary import Provenance, ScatteringCoefficients

WALL_DENSITY = 1e-8
WALL_BAND = 10  # nodes next to each wall watched for contact


@dataclass(frozen=True)
class PropagatorConfig:
    """Time step and scheme options.

    energy_shift propagates with H - E_ref and restores the phase
    exp(-i E_ref dt/hbar) exactly, which removes the fast global phase of
    states centred at E_ref. step_check selects the dt precondition:
    "potential" bounds dt by max(|V|, kinetic energy of the state),
    "spectral" by ||(H - E_ref) psi|| / ||psi||, "off" skips it.
    """

    dt: float
    scheme: str = "crank-nicolson"
    energy_shift: float = 0.0
    step_check: str = "potential"
    walls: str = "dirichlet"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.scheme != "crank-nicolson":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.step_check not in ("potential", "spectral", "off"):
            raise ValueError(f"unknown step_check {self.step_check!r}")
        if self.walls != "dirichlet":
            raise ValueError("only Dirichlet walls are supported")


class CrankNicolson:
    """Factorized propagator for one (grid, potential, config) triple."""

    def __init__(self, grid: Grid, V: Potential, cfg: PropagatorConfig, params: PhysicalParams = NATURAL):
        self.grid, self.V, self.cfg, self.params = grid, V, cfg, params
        x = grid.x
        v = np.asarray(V(x), dtype=float)
        active = np.isfinite(v)
        active[0] = active[-1] = False
        idx = np.flatnonzero(active)
        if idx.size < 1:
            raise ValueError("no interior nodes inside the walls")
        if idx[-1] - idx[0] + 1 != idx.size:
            raise ValueError("walls must enclose one contiguous interval")
        self.i0, self.i1 = int(idx[0]), int(idx[-1])
        self.v = np.where(active, v, 0.0)
        self.c = params.hbar**2 / (2 * params.mass * grid.dx**2)
        g = 1j * cfg.dt / (2 * params.hbar)
        hdiag = 2 * self.c + v[self.i0:self.i1 + 1] - cfg.energy_shift
        self._diag = (1 + g * hdiag).astype(np.complex128)
        self._off = complex(g * -self.c)
        self._w, self._minv = _kernels.factor(self._diag, self._off)
        self._phase = complex(np.exp(-1j * cfg.energy_shift * cfg.dt / params.hbar))
        self._y = np.empty(self._diag.size, dtype=np.complex128)

    @property
    def active_slice(self) -> slice:
        return slice(self.i0, self.i1 + 1)

    def apply_H(self, amps: np.ndarray) -> np.ndarray:
        """Discrete H psi with walls; zero outside the active interval."""
        p = np.zeros_like(amps, dtype=complex)
        s = self.active_slice
        p[s] = amps[s]
        out = np.zeros_like(p)
        out[1:-1] = self.c * (2 * p[1:-1] - p[:-2] - p[2:]) + self.v[1:-1] * p[1:-1]
        out[~self._mask()] = 0
        return out

    def _mask(self):
        m = np.zeros(self.grid.n_points, dtype=bool)
        m[self.active_slice] = True
        return m

    def energy(self, amps: np.ndarray) -> float:
        """<H> / <psi|psi>."""
        Hp = self.apply_H(amps)
        return float(np.real(np.vdot(amps, Hp)) / np.real(np.vdot(amps, amps)))

    def check_step(self, amps: np.ndarray) -> float:
        """Phase-per-step estimate; raises UnstableStep when >= 0.5."""
        cfg, hb = self.cfg, self.params.hbar
        if cfg.step_check == "off":
            return 0.0
        if cfg.step_check == "potential":
            vmax = float(np.max(np.abs(self.v[self.active_slice])))
            md = momentum_density(WaveFunction(self.grid, amps))
            kmax = abs(md.mean()) + 4 * md.std()
            emax = max(vmax, float(self.params.E_of_k(kmax)))
            phase = cfg.dt * emax / hb
        else:
            Hp = self.apply_H(amps) - cfg.energy_shift * amps * self._mask()
            phase = cfg.dt * float(np.linalg.norm(Hp) / np.linalg.norm(amps)) / hb
        if not phase < 0.5:
            raise UnstableStep(f"dt*E/hbar = {phase:.3g} >= 0.5 ({cfg.step_check} check)")
        return phase

    def advance(self, amps: np.ndarray, nsteps: int) -> np.ndarray:
        """In-place advance of a full-grid amplitude array."""
        if amps.dtype != np.complex128 or not amps.flags.c_contiguous:
            raise TypeError("amplitudes must be a contiguous complex128 array")
        amps[: self.i0] = 0
        amps[self.i1 + 1:] = 0
        if nsteps > 0:
            view = amps[self.i0 - 1: self.i1 + 2]
            _kernels.cn_steps(view, self._diag, self._off, self._w, self._minv,
                              self._phase, int(nsteps), self._y)
        return amps

    def wall_density(self, amps: np.ndarray) -> float:
        lo = amps[self.i0: self.i0 + WALL_BAND]
        hi = amps[max(self.i0, self.i1 + 1 - WALL_BAND): self.i1 + 1]
        return float(max(np.max(np.abs(lo)) ** 2, np.max(np.abs(hi)) ** 2))


def _nsteps(t: float, dt: float) -> int:
    n = int(round(t / dt))
    if abs(n * dt - t) > 1e-9 * max(abs(t), dt):
        raise ValueError(f"duration {t} is not a multiple of dt={dt}")
    return n


def propagate(psi: WaveFunction, V: Potential, cfg: PropagatorConfig, t: float,
              params: PhysicalParams = NATURAL, prop: CrankNicolson | None = None) -> WaveFunction:
    """Evolve psi for duration t (a multiple of cfg.dt)."""
    prop = prop or CrankNicolson(psi.grid, V, cfg, params)
    amps = np.ascontiguousarray(psi.amplitudes, dtype=np.complex128).copy()
    prop.check_step(amps)
    prop.advance(amps, _nsteps(t, cfg.dt))
    if prop.wall_density(amps) > WALL_DENSITY:
        warnings.warn(WallContact(f"density {prop.wall_density(amps):.3g} at the walls"), stacklevel=2)
    return WaveFunction(psi.grid, amps)


# -------------------------------------------------------------- scattering

@dataclass(frozen=True)
class FixedTime:
    t: float


@dataclass(frozen=True)
class PacketsSeparated:
    """Stop once the packets have left the step region.

    half_width=None uses max(3 L, 3 sigma) around the step center; the sharp
    step has L = 0 so the packet width sets the window.
    """

    threshold: float = 1e-4
    half_width: float | None = None  # t_max=inf means ten box crossings at the group velocity
    check_every: int = 20
    t_max: float = np.inf


@dataclass(frozen=True)
class ScatteringRun:
    initial: GaussianPacketSpec
    potential: Potential
    grid: Grid
    config: PropagatorConfig
    stop_rule: FixedTime | PacketsSeparated = field(default_factory=PacketsSeparated)
    params: PhysicalParams = NATURAL

    def __post_init__(self):
        step = unwrap(self.potential)
        if not isinstance(step, (RectStep, SoftStep)):
            raise UnsupportedPotential("scattering runs need a RectStep or SoftStep")
        box = self.potential if isinstance(self.potential, HardBox) else None
        lo = box.x_lo if box else self.grid.x_min
        hi = box.x_hi if box else self.grid.x_max
        s, mu = self.initial.sigma, self.initial.mu
        if min(mu - lo, hi - mu, abs(mu - step.center)) < 5 * s:
            raise ValueError("initial packet must be at least 5 sigma from walls and step")


@dataclass
class ScatteringResult:
    coefficients: ScatteringCoefficients
    snapshots: list[tuple[float, WaveFunction]]
    t_stop: float
    separated: bool
    wall_contact: bool
    norm_drift: float
    max_step_drift: float


def _separation(psi: WaveFunction, center: float, half_width: float, k_sign: float,
                threshold: float, params: PhysicalParams) -> bool:
    g = psi.grid
    lo = max(center - half_width, g.x_min)
    hi = min(center + half_width, g.x_max)
    if region_probability(psi, lo, hi) >= threshold:
        return False
    j = probability_current(psi, params)
    xi = psi.x[1:-1]
    dens = psi.density[1:-1]
    ok = True
    for side, want in ((xi < center, -k_sign), (xi > center, k_sign)):
        if np.sum(dens[side]) * g.dx > threshold:
            ok &= bool(np.sign(np.sum(j[side])) == want)
    return ok


def run_scattering(run: ScatteringRun, snapshot_times=()) -> ScatteringResult:
    """Propagate the packet onto the step and read R, T from the two sides."""
    step = unwrap(run.potential)
    cfg, params = run.config, run.params
    psi0 = build_gaussian(run.initial, run.grid)
    prop = CrankNicolson(run.grid, run.potential, cfg, params)
    amps = np.ascontiguousarray(psi0.amplitudes).copy()
    prop.advance(amps, 0)
    n0 = np.sum(np.abs(amps) ** 2)
    prop.check_step(amps)
    dt = cfg.dt
    snaps_idx = sorted({int(round(t / dt)) for t in snapshot_times})
    L = getattr(step, "L", 0.0)
    rule = run.stop_rule
    hw = rule.half_width if isinstance(rule, PacketsSeparated) and rule.half_width else max(3 * L, 3 * run.initial.sigma)
    ksign = 1.0 if run.initial.k0 >= 0 else -1.0

    if isinstance(rule, FixedTime):
        n_end = _nsteps(rule.t, dt)
    else:
        t_max = rule.t_max
        if not np.isfinite(t_max):
            # ten crossings of the box at the group velocity
            v0 = params.hbar * abs(run.initial.k0) / params.mass
            t_max = 10 * (run.grid.x_max - run.grid.x_min) / v0 if v0 > 0 else 0.0
        n_end = int(np.floor(t_max / dt))

    snapshots = []
    n = 0
    separated = False
    wall = False
    max_step_drift = 0.0
    every = rule.check_every if isinstance(rule, PacketsSeparated) else 0
    while True:
        targets = [i for i in snaps_idx if i > n]
        nxt = []
        if targets:
            nxt.append(targets[0])
        if every:
            nxt.append((n // every + 1) * every)
        if n_end is not None:
            nxt.append(n_end)
        if 0 in snaps_idx and n == 0:
            snapshots.append((0.0, WaveFunction(run.grid, amps.copy())))
        if not nxt:
            break
        target = min(nxt)
        prop.advance(amps, target - 1 - n)
        mid = np.sum(np.abs(amps) ** 2)
        prop.advance(amps, 1)
        after = np.sum(np.abs(amps) ** 2)
        max_step_drift = max(max_step_drift, abs(after - mid) * run.grid.dx)
        n = target
        wall |= prop.wall_density(amps) > WALL_DENSITY
        if n in snaps_idx:
            snapshots.append((n * dt, WaveFunction(run.grid, amps.copy())))
        psi = WaveFunction(run.grid, amps)
        if every and n % every == 0:
            if _separation(psi, step.center, hw, ksign, rule.threshold, params):
                separated = True
                if not [i for i in snaps_idx if i > n]:
                    break
        if n_end is not None and n >= n_end:
            break

    psi = WaveFunction(run.grid, amps.copy())
    if isinstance(rule, FixedTime):
        separated = _separation(psi, step.center, hw, ksign, 1e-4, params)
        if not separated:
            raise PacketsNotSeparated(f"packets still overlap the step at t={n * dt:g}")
    elif not separated:
        raise PacketsNotSeparated(f"no separation before t={n * dt:g}")
    if wall:
        warnings.warn(WallContact("density reached the walls during the run"), stacklevel=2)
    total = psi.norm_sq()
    g = run.grid
    left = region_probability(psi, g.x_min, step.center)
    right = region_probability(psi, step.center, g.x_max)
    inc, far = (left, right) if ksign > 0 else (right, left)
    s = inc + far
    coeffs = ScatteringCoefficients(inc / s, far / s, Provenance.PROPAGATION)
    return ScatteringResult(coeffs, snapshots, n * dt, separated, wall,
                            abs(total - n0 * g.dx), max_step_drift)


# ------------------------------------------------------ mesh pathology demo

@dataclass
class MeshRun:
    n_points: int
    times: np.ndarray
    mean_x: np.ndarray
    turnaround_time: float | None
    turnaround_x: float | None
    wall_contact: bool


def turnaround(times: np.ndarray, xs: np.ndarray) -> tuple[float, float] | None:
    """First interior maximum of <x>(t), refined by a parabola through 3 samples."""
    d = np.diff(xs)
    idx = np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0))
    if idx.size == 0:
        return None
    i = int(idx[0]) + 1
    y0, y1, y2 = xs[i - 1: i + 2]
    den = y0 - 2 * y1 + y2
    s = 0.5 * (y0 - y2) / den if den != 0 else 0.0
    h = times[i] - times[i - 1]
    return float(times[i] + s * h), float(y1 - 0.25 * (y0 - y2) * s)


def mesh_pathology_demo(n_values, k0: float = 200 * np.pi, sigma: float = 0.01, mu: float = 0.1,
                        c_factor: float = 50.0, x0: float = 0.3, t_end: float = 2e-4,
                        dt_factor: float = 0.4, free: bool = False,
                        params: PhysicalParams = NATURAL) -> list[MeshRun]:
    """<x>(t) of the packet on an inverted parabola for several mesh sizes.

    dt = dt_factor / max|V| on the box, so every N sees the same time step
    and only the spatial mesh changes.
    """
    V = HardBox(0.0, 1.0, Free() if free else Parabola(c_factor * k0**2, x0))
    vmax = c_factor * k0**2 * max(x0, 1 - x0) ** 2
    dt = dt_factor * params.hbar / vmax
    nsteps = int(np.ceil(t_end / dt))
    cfg = PropagatorConfig(dt)
    runs = []
    for N in n_values:
        grid = Grid(0.0, 1.0, int(N))
        psi = build_gaussian(GaussianPacketSpec(mu, sigma, k0), grid, check=False)
        prop = CrankNicolson(grid, V, cfg, params)
        amps = np.ascontiguousarray(psi.amplitudes).copy()
        prop.advance(amps, 0)
        x = grid.x
        xs = np.empty(nsteps + 1)
        wall = False
        for i in range(nsteps + 1):
            d = np.abs(amps) ** 2
            xs[i] = np.dot(x, d) / np.sum(d)
            if i < nsteps:
                prop.advance(amps, 1)
                if i % 50 == 0:
                    wall |= prop.wall_density(amps) > WALL_DENSITY
        times = np.arange(nsteps + 1) * dt
        ta = None if free else turnaround(times, xs)
        runs.append(MeshRun(int(N), times, xs, ta[0] if ta else None, ta[1] if ta else None, wall))
    return runs

