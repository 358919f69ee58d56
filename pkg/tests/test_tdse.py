import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import solve_banded

from downstep.errors import PacketsNotSeparated, UnstableStep, UnsupportedPotential, WallContact
from downstep.qcore import (
    Free,
    GaussianPacketSpec,
    Grid,
    HardBox,
    Plateau,
    PhysicalParams,
    RectStep,
    SoftStep,
    WaveFunction,
    build_gaussian,
)
from downstep.spectral import packet_reflection
from downstep.tdse import (
    CrankNicolson,
    FixedTime,
    PacketsSeparated,
    PropagatorConfig,
    ScatteringRun,
    mesh_pathology_demo,
    propagate,
    run_scattering,
    turnaround,
)


def cn_reference_step(psi, v, dx, dt, hbar=1.0, m=1.0):
    """One CN step with zero end nodes via scipy's banded solver."""
    n = psi.size - 2
    c = hbar**2 / (2 * m * dx * dx)
    g = 1j * dt / (2 * hbar)
    d = 1 + g * (2 * c + v[1:-1])
    o = -g * c
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = o
    ab[1] = d
    ab[2, :-1] = o
    inner = psi[1:-1]
    Hp = (2 * c + v[1:-1]) * inner
    Hp[1:] -= c * inner[:-1]
    Hp[:-1] -= c * inner[1:]
    rhs = inner - g * Hp
    out = np.zeros_like(psi)
    out[1:-1] = solve_banded((1, 1), ab, rhs)
    return out


def test_kernel_matches_banded_solver():
    g = Grid(-5, 5, 401)
    rng = np.random.default_rng(1)
    amps = (rng.normal(size=401) + 1j * rng.normal(size=401)).astype(complex)
    amps[[0, -1]] = 0
    V = SoftStep(3.0, 0.4)
    cfg = PropagatorConfig(0.01, step_check="off")
    p = CrankNicolson(g, V, cfg, PhysicalParams(1.3, 0.7))
    ref = cn_reference_step(amps, V(g.x), g.dx, 0.01, 1.3, 0.7)
    a = amps.copy()
    p.advance(a, 1)
    np.testing.assert_allclose(a, ref, atol=1e-13)


def test_energy_shift_restores_phase():
    # stepping with H - E_ref and restoring e^{-i E_ref dt} agrees with the
    # unshifted scheme up to the O(dt^2) Cayley error
    g = Grid(-20, 20, 801)
    w = build_gaussian(GaussianPacketSpec(0, 1.0, 1.0), g)
    # smooth V: a discontinuous one lowers the observed order at these dt
    V = HardBox(-20, 20, SoftStep(2.0, 1.0))
    errs = []
    for dt in (0.02, 0.01):
        a = propagate(w, V, PropagatorConfig(dt), 1.0)
        b = propagate(w, V, PropagatorConfig(dt, energy_shift=1.7), 1.0)
        errs.append(np.linalg.norm(b.amplitudes - a.amplitudes))
        assert abs(b.norm_sq() - a.norm_sq()) < 1e-12
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.3)


@given(seed=st.integers(0, 2**31 - 1), dt=st.floats(1e-4, 0.1), depth=st.floats(0, 50))
@settings(max_examples=25, deadline=None)
def test_unitarity_per_step(seed, dt, depth):
    g = Grid(-3, 3, 301)
    rng = np.random.default_rng(seed)
    a = rng.normal(size=301) + 1j * rng.normal(size=301)
    a[[0, -1]] = 0
    w = WaveFunction(g, a).normalize()
    p = CrankNicolson(g, RectStep(depth), PropagatorConfig(dt, step_check="off"))
    amps = w.amplitudes.copy()
    for _ in range(5):
        before = np.sum(np.abs(amps) ** 2) * g.dx
        p.advance(amps, 1)
        assert abs(np.sum(np.abs(amps) ** 2) * g.dx - before) < 1e-12


def test_energy_conserved():
    g = Grid(0, 1, 4001)
    w = build_gaussian(GaussianPacketSpec(0.3, 0.03, 60.0), g)
    V = HardBox(0, 1, SoftStep(2000.0, 0.01, 0.5))
    cfg = PropagatorConfig(2e-5)
    p = CrankNicolson(g, V, cfg)
    amps = w.amplitudes.copy()
    E0 = p.energy(amps)
    p.advance(amps, 1000)
    assert abs(p.energy(amps) / E0 - 1) < 1e-8


def test_free_dispersion():
    g = Grid(-40, 40, 8001)
    w = build_gaussian(GaussianPacketSpec(-10, 1.0, 1.0), g)
    T = 6.0
    out = propagate(w, HardBox(-40, 40, Free()), PropagatorConfig(0.005), T)
    assert out.width() == pytest.approx(math.sqrt(1 + (T / 2) ** 2), rel=5e-3)
    # centre moves at the lattice group velocity, close to k0
    assert out.mean_x() == pytest.approx(-10 + T, rel=1e-3)


def test_second_order_in_dt():
    g = Grid(-40, 40, 4001)
    w = build_gaussian(GaussianPacketSpec(-10, 1.0, 1.0), g)
    V = HardBox(-40, 40, Free())
    ref = propagate(w, V, PropagatorConfig(0.1 / 8), 2.0).amplitudes
    errs = [np.linalg.norm(propagate(w, V, PropagatorConfig(dt), 2.0).amplitudes - ref) for dt in (0.1, 0.05)]
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.3)


def test_step_checks():
    g = Grid(0, 1, 2001)
    w = build_gaussian(GaussianPacketSpec(0.5, 0.02, 100.0), g)
    with pytest.raises(UnstableStep):
        propagate(w, Free(), PropagatorConfig(1e-3), 1e-3)
    with pytest.raises(UnstableStep):
        propagate(w, Free(), PropagatorConfig(1e-3, step_check="spectral"), 1e-3)
    propagate(w, Free(), PropagatorConfig(1e-3, step_check="off"), 1e-3)
    with pytest.raises(ValueError):
        PropagatorConfig(0.0)
    with pytest.raises(ValueError):
        PropagatorConfig(0.1, step_check="maybe")
    with pytest.raises(ValueError):
        propagate(w, Free(), PropagatorConfig(1e-5), 1.5e-5)


def test_wall_contact_warning():
    g = Grid(0, 1, 1001)
    w = build_gaussian(GaussianPacketSpec(0.8, 0.03, 40.0), g)
    with pytest.warns(WallContact):
        propagate(w, Free(), PropagatorConfig(5e-5), 1e-2)


def _fig3_like(L=1e-3, n=4001):
    g = Grid(0, 1, n)
    spec = GaussianPacketSpec(0.1, 0.01, 200 * math.pi)
    step = SoftStep(18.4 * spec.k0**2 / 2, L, 0.2)
    return g, spec, step, PropagatorConfig(0.4 / step.dE)


def test_scattering_matches_spectral():
    g, spec, step, cfg = _fig3_like()
    res = run_scattering(ScatteringRun(spec, HardBox(0, 1, step), g, cfg))
    Rs = packet_reflection(build_gaussian(spec, g), step).R
    assert res.separated and not res.wall_contact
    assert abs(res.coefficients.R - Rs) < 5e-3
    assert res.norm_drift < 1e-9 and res.max_step_drift < 1e-12


def test_scattering_run_validation():
    g = Grid(0, 1, 2001)
    cfg = PropagatorConfig(1e-5)
    with pytest.raises(ValueError):
        ScatteringRun(GaussianPacketSpec(0.03, 0.01, 100.0), HardBox(0, 1, RectStep(1.0, 0.5)), g, cfg)
    with pytest.raises(ValueError):
        ScatteringRun(GaussianPacketSpec(0.47, 0.01, 100.0), HardBox(0, 1, RectStep(1.0, 0.5)), g, cfg)
    with pytest.raises(UnsupportedPotential):
        ScatteringRun(GaussianPacketSpec(0.2, 0.01, 100.0), HardBox(0, 1, Plateau(1.0, 0.1)), g, cfg)


def test_fixed_time_and_snapshots():
    g, spec, step, cfg = _fig3_like()
    box = HardBox(0, 1, step)
    sep = run_scattering(ScatteringRun(spec, box, g, cfg))
    n = round(sep.t_stop / cfg.dt)
    res = run_scattering(ScatteringRun(spec, box, g, cfg, FixedTime(n * cfg.dt)),
                         snapshot_times=[0.0, 10 * cfg.dt, 20 * cfg.dt])
    assert [round(t / cfg.dt) for t, _ in res.snapshots] == [0, 10, 20]
    assert res.coefficients.R == pytest.approx(sep.coefficients.R, abs=1e-12)
    with pytest.raises(PacketsNotSeparated):
        run_scattering(ScatteringRun(spec, box, g, cfg, FixedTime((n // 2) * cfg.dt)))


def test_separation_gives_up():
    # default t_max caps the run at ten box crossings
    g, spec, step, cfg = _fig3_like(n=1001)
    with pytest.raises(PacketsNotSeparated):
        run_scattering(ScatteringRun(spec, HardBox(0, 1, step), g, cfg, PacketsSeparated(threshold=1e-30)))


def test_turnaround_parabola():
    t = np.linspace(0, 1, 21)
    x = 1 - (t - 0.433) ** 2
    tt, xx = turnaround(t, x)
    assert tt == pytest.approx(0.433, abs=1e-12)
    assert xx == pytest.approx(1.0, abs=1e-12)
    assert turnaround(t, t) is None


def test_mesh_pathology_ordering():
    runs = mesh_pathology_demo([500, 1000, 2000])
    ts = [r.turnaround_time for r in runs]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    assert all(r.turnaround_x < 0.5 for r in runs)
