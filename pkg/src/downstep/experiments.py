"""Named experiments behind the command line.

Each runner takes a resolved parameter dict and an output directory, writes
CSV files there and returns a summary dict with a list of checks. Runners
are deterministic: no clocks, no random numbers, fixed iteration order.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import mpmath
import numpy as np

from . import gamow, metastable, spectral, stationary, tdse
from .qcore import (
    Free,
    GaussianPacketSpec,
    Grid,
    HardBox,
    PhysicalParams,
    RectStep,
    SoftStep,
    build_gaussian,
)

# ------------------------------------------------------------------ helpers


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return v


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def check(name: str, value, target=None, tolerance=None, passed: bool = False, note: str = "") -> dict:
    d = {"name": name, "value": _jsonable(value), "passed": bool(passed)}
    if target is not None:
        d["target"] = _jsonable(target)
    if tolerance is not None:
        d["tolerance"] = _jsonable(tolerance)
    if note:
        d["note"] = note
    return d


def _jsonable(v):
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def pmap(fn: Callable, items: list, workers: int = 1) -> list:
    """Ordered map, optionally over a process pool; order never depends on timing."""
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _params(p: dict) -> PhysicalParams:
    return PhysicalParams(float(p["hbar"]), float(p["mass"]))


def rect_R_reference(r: float, dps: int = 50) -> float:
    """High-precision sharp-step R as a function of r = E/dE."""
    with mpmath.workdps(dps):
        r = mpmath.mpf(r)
        num = mpmath.sqrt(1 + 1 / r) - 1
        den = mpmath.sqrt(1 + 1 / r) + 1
        return float((num / den) ** 2)


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    columns: dict[str, list[str]]
    defaults: dict
    runner: Callable
    plot: str


UNITS = {"hbar": 1.0, "mass": 1.0}

# -------------------------------------------------------------- step-sweep


def run_step_sweep(p: dict, out: Path, workers: int = 1) -> dict:
    pp = _params(p)
    E = float(p["E"])
    dE = float(p["dE"])
    ratios = np.logspace(math.log10(p["ratio_min"]), math.log10(p["ratio_max"]), int(p["n_ratio"]))
    rows = []
    for q in ratios:
        sc = stationary.rect_step_R(E, q * E, pp)
        tm = stationary.transfer_matrix_R(RectStep(q * E), E, -1.0, 1.0, 2, pp)
        rows.append((q, sc.R, sc.T, tm.R))
    write_csv(out / "step_sweep.csv", ["dE_over_E", "R", "T", "R_transfer2"], rows)

    R = stationary.rect_step_R(E, dE, pp).R
    ref = rect_R_reference(E / dE)
    tm = stationary.transfer_matrix_R(RectStep(dE), E, -1.0, 1.0, 2, pp).R
    seq = [stationary.rect_step_R(r * 1.0, 1.0, pp).R for r in p["r_sequence"]]
    mono = all(b > a for a, b in zip(seq, seq[1:]))
    R0 = stationary.rect_step_R(E, 0.0, pp).R
    checks = [
        check("rect_R_vs_target", R, p["R_target"], 1e-4, abs(R - p["R_target"]) < 1e-4),
        check("rect_R_vs_high_precision", R, ref, 1e-12, abs(R - ref) < 1e-12),
        check("transfer_matrix_2_slices", tm, R, 1e-10, abs(tm - R) < 1e-10),
        check("R_increasing_as_r_to_0", seq, None, None, mono),
        check("R_final_above_0.996", seq[-1], 0.996, None, seq[-1] > 0.996),
        check("R_at_dE_0", R0, 0.0, 0.0, R0 == 0.0),
    ]
    return {"R": R, "R_reference": ref, "R_sequence": seq, "checks": checks}


STEP_SWEEP_PLOT = """
d = np.genfromtxt("step_sweep.csv", delimiter=",", names=True)
plt.semilogx(d["dE_over_E"], d["R"], label="R")
plt.semilogx(d["dE_over_E"], d["T"], label="T")
plt.xlabel("dE / E"); plt.ylabel("probability"); plt.legend()
plt.savefig("step_sweep.png", dpi=150)
"""

# --------------------------------------------------------- soft-step-sweep


def run_soft_step_sweep(p: dict, out: Path, workers: int = 1) -> dict:
    pp = _params(p)
    E, dE = float(p["E"]), float(p["dE"])
    Ls = np.geomspace(p["L_min"], p["L_max"], int(p["n_L"]))
    R_rect = stationary.rect_step_R(E, dE, pp).R
    rows = []
    for L in Ls:
        Rs = stationary.soft_step_R(E, dE, L, pp).R
        Ru = stationary.R_uv(stationary.dimensionless(E, dE, L, pp))
        rows.append((L, Rs, R_rect, Ru))
    write_csv(out / "soft_step_sweep.csv", ["L", "R_soft", "R_rect", "R_uv"], rows)
    Rs = np.array([r[1] for r in rows])
    k2 = float(pp.k_of_E(E + dE))
    R_small = stationary.soft_step_R(E, dE, 1e-9 / k2, pp).R
    big_dE = float(p["large_ratio"]) * E
    L_big = float(p["large_L"])
    R_big = stationary.soft_step_R(E, big_dE, L_big, pp).R
    lim = math.exp(-2 * math.pi * math.sqrt(2 * pp.mass * E) * L_big / pp.hbar)
    uv_gap = max(abs(r[1] - r[3]) for r in rows)
    checks = [
        check("L_to_0_matches_rect", R_small, R_rect, 1e-6, abs(R_small - R_rect) < 1e-6),
        check("strictly_decreasing_in_L", float(np.max(np.diff(Rs))), 0.0, None, bool(np.all(np.diff(Rs) < 0))),
        check("bounded_by_rect", float(np.max(Rs - R_rect)), 0.0, None, bool(np.all(Rs <= R_rect))),
        check("large_dE_limit_rel_error", abs(R_big / lim - 1), 0.0, 0.01, abs(R_big / lim - 1) < 0.01),
        check("R_uv_consistency", uv_gap, 0.0, 1e-12, uv_gap < 1e-12),
    ]
    return {"R_rect": R_rect, "R_small_L": R_small, "R_large_dE": R_big, "limit": lim, "checks": checks}


SOFT_PLOT = """
d = np.genfromtxt("soft_step_sweep.csv", delimiter=",", names=True)
plt.loglog(d["L"], d["R_soft"], label="soft step")
plt.loglog(d["L"], d["R_rect"], "--", label="sharp step")
plt.xlabel("L"); plt.ylabel("R"); plt.legend()
plt.savefig("soft_step_sweep.png", dpi=150)
"""

# ------------------------------------------------------------------ uv-map


def run_uv_map(p: dict, out: Path, workers: int = 1) -> dict:
    U = np.geomspace(p["u_min"], p["u_max"], int(p["n_u"]))
    V = np.geomspace(p["v_min"], p["v_max"], int(p["n_v"]))
    rows = []
    region_ok = True
    region_n = 0
    taylor_worst = 0.0
    remainder_worst = 0.0
    for u in U:
        for v in V:
            R = stationary.R_uv(stationary.DimensionlessStep(float(u), float(v)))
            rows.append((u, v, R, int(R > 0.99)))
            if u < 1e-3 and v > 1e3 * u:
                region_n += 1
                region_ok &= R > 0.99
            if u <= 1e-2 and 0.1 <= v <= 10:
                err = abs(math.sqrt(R) - stationary.taylor_sqrt_R(u, v))
                taylor_worst = max(taylor_worst, err / u**2)
                remainder_worst = max(remainder_worst, err / stationary.taylor_remainder(u, v))
    write_csv(out / "uv_map.csv", ["u", "v", "R", "above_0.99"], rows)
    checks = [
        check("region_u<1e-3_v>1e3u_has_R>0.99", region_n, None, None, region_ok),
        check("taylor_error_over_u2", taylor_worst, 10.0, None, taylor_worst < 10,
              note="bound < 10 u^2 on u <= 1e-2, 0.1 <= v <= 10"),
        check("taylor_error_over_2u2coth2v", remainder_worst, 1.0, None, remainder_worst <= 1.0,
              note="leading remainder 2 u^2 coth^2 v"),
    ]
    return {"region_points": region_n, "taylor_worst_ratio": taylor_worst,
            "remainder_worst_ratio": remainder_worst, "checks": checks}


UV_PLOT = """
d = np.genfromtxt("uv_map.csv", delimiter=",", names=True)
u = np.unique(d["u"]); v = np.unique(d["v"])
R = d["R"].reshape(len(u), len(v)).T
plt.contourf(u, v, R > 0.99, levels=[0.5, 1.5], colors=["0.7"])
plt.contour(u, v, R, levels=[0.5, 0.9, 0.99], colors="k")
plt.xscale("log"); plt.yscale("log"); plt.xlabel("u"); plt.ylabel("v")
plt.savefig("uv_map.png", dpi=150)
"""

# ----------------------------------------------------------- packet-scatter

FIG3_FRAMES = (1, 4, 8, 11, 12, 13, 16, 18, 22, 27)


def _scatter_setup(p: dict):
    pp = _params(p)
    k0 = float(p["k0"])
    E = float(pp.E_of_k(k0))
    dE = float(p["dE_ratio"]) * E
    c = float(p["step_center"])
    step = SoftStep(dE, float(p["L"]), c) if p["step"] == "soft" else RectStep(dE, c)
    grid = Grid(0.0, 1.0, int(p["n_points"]))
    spec = GaussianPacketSpec(float(p["mu"]), float(p["sigma"]), k0)
    cfg = tdse.PropagatorConfig(float(p["dt_factor"]) * pp.hbar / dE)
    return pp, E, dE, step, grid, spec, cfg


def propagator_properties(p: dict) -> dict:
    """Free-Gaussian spreading and observed time order of the propagator.

    Order is estimated from differences between successive dt halvings, so the
    spatial discretization (identical for all runs) cancels.
    """
    pp = _params(p)
    half = float(p["free_half_width"])
    grid = Grid(-half, half, int(p["free_n_points"]))
    spec = GaussianPacketSpec(-0.25 * half, float(p["free_sigma"]), float(p["free_k0"]))
    psi = build_gaussian(spec, grid)
    V = HardBox(-half, half, Free())
    T = float(p["free_t"])
    w = tdse.propagate(psi, V, tdse.PropagatorConfig(float(p["free_dt"])), T, pp)
    s = spec.sigma
    exact = s * math.sqrt(1 + (pp.hbar * T / (2 * pp.mass * s * s)) ** 2)
    dts = [float(p["order_dt"]) / 2**i for i in range(4)]
    amps = [tdse.propagate(psi, V, tdse.PropagatorConfig(dt), float(p["order_t"]), pp).amplitudes for dt in dts]
    diffs = [math.sqrt(np.sum(np.abs(a - b) ** 2) * grid.dx) for a, b in zip(amps, amps[1:])]
    orders = [math.log2(a / b) for a, b in zip(diffs, diffs[1:])]
    return {"width": w.width(), "width_exact": exact, "dts": dts, "diffs": diffs, "orders": orders}


def run_packet_scatter(p: dict, out: Path, workers: int = 1) -> dict:
    pp, E, dE, step, grid, spec, cfg = _scatter_setup(p)
    v0 = pp.hbar * spec.k0 / pp.mass
    # frame unit: the packet centre reaches the step at frame 12
    frame = (step.center - spec.mu) / v0 / 12
    snap_t = [round(f * frame / cfg.dt) * cfg.dt for f in FIG3_FRAMES]
    run = tdse.ScatteringRun(spec, HardBox(0.0, 1.0, step), grid, cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", tdse.WallContact)
        res = tdse.run_scattering(run, snapshot_times=snap_t)
    psi0 = build_gaussian(spec, grid)
    Rs = spectral.packet_reflection(psi0, step, pp).R
    Rp = res.coefficients.R
    Rr = stationary.rect_step_R(E, dE, pp).R
    stride = max(1, grid.n_points // 2000)
    x = grid.x
    Vd = step(x) / dE  # display units: step depth -> 1
    rows = []
    for i, (t, w) in enumerate(res.snapshots):
        d = w.density
        for j in range(0, grid.n_points, stride):
            rows.append((i, t, x[j], w.amplitudes[j].real, w.amplitudes[j].imag, d[j], Vd[j]))
    write_csv(out / "snapshots.csv", ["frame", "t", "x", "re_psi", "im_psi", "density", "V_display"], rows)
    write_csv(out / "coefficients.csv", ["provenance", "R", "T"],
              [("SpectralIntegral", Rs, 1 - Rs), ("Propagation", Rp, res.coefficients.T),
               ("ClosedFormRect", Rr, 1 - Rr)])
    prop = propagator_properties(p)
    write_csv(out / "propagator.csv", ["dt", "diff_to_half_dt"], zip(prop["dts"], prop["diffs"]))
    werr = abs(prop["width"] / prop["width_exact"] - 1)
    order = prop["orders"][-1]
    checks = [
        check("spectral_vs_propagation", abs(Rs - Rp), 0.0, 5e-3, abs(Rs - Rp) < 5e-3),
        check("spectral_within_0.02_of_rect", abs(Rs - Rr), 0.0, 0.02, abs(Rs - Rr) < 0.02),
        check("propagation_within_0.02_of_rect", abs(Rp - Rr), 0.0, 0.02, abs(Rp - Rr) < 0.02),
        check("norm_drift", res.norm_drift, 0.0, 1e-9, res.norm_drift < 1e-9),
        check("max_step_norm_drift", res.max_step_drift, 0.0, 1e-12, res.max_step_drift < 1e-12),
        check("free_dispersion_width", werr, 0.0, 5e-3, werr < 5e-3),
        check("dt_convergence_order", order, 2.0, 0.3, abs(order - 2) <= 0.3),
    ]
    return {"R_spectral": Rs, "R_propagation": Rp, "R_rect": Rr, "t_stop": res.t_stop,
            "frame_unit": frame, "dt_orders": prop["orders"], "wall_contact": res.wall_contact, "checks": checks}


SCATTER_PLOT = """
d = np.genfromtxt("snapshots.csv", delimiter=",", names=True)
frames = np.unique(d["frame"]).astype(int)
fig, axes = plt.subplots(5, 2, figsize=(8, 10), sharex=True)
for f, ax in zip(frames, axes.T.ravel()):
    m = d["frame"] == f
    ax.plot(d["x"][m], d["density"][m], "k")
    ax.plot(d["x"][m], -d["V_display"][m] * d["density"].max(), "0.6")
    ax.set_title("t = %.3g" % d["t"][m][0], fontsize=8)
plt.tight_layout(); plt.savefig("packet_scatter.png", dpi=150)
"""

# ----------------------------------------------------------- mesh-pathology


def _mesh_one(args):
    N, free, p = args
    return tdse.mesh_pathology_demo([N], k0=p["k0"], sigma=p["sigma"], mu=p["mu"], c_factor=p["c_factor"],
                                    x0=p["x0"], t_end=p["t_end"], dt_factor=p["dt_factor"], free=free,
                                    params=_params(p))[0]


def run_mesh_pathology(p: dict, out: Path, workers: int = 1) -> dict:
    ns = [int(n) for n in p["n_values"]]
    runs = pmap(_mesh_one, [(n, False, p) for n in ns], workers)
    rows = [(r.n_points, t, xm) for r in runs for t, xm in zip(r.times, r.mean_x)]
    write_csv(out / "mean_x.csv", ["N", "t", "mean_x"], rows)
    free = _mesh_one((int(p["free_n_points"]), True, p))
    write_csv(out / "free_reference.csv", ["t", "mean_x"], zip(free.times, free.mean_x))
    write_csv(out / "turnaround.csv", ["N", "turnaround_time", "turnaround_x", "wall_contact"],
              [(r.n_points, r.turnaround_time if r.turnaround_time is not None else float("nan"),
                r.turnaround_x if r.turnaround_x is not None else float("nan"), r.wall_contact) for r in runs])
    ts = [r.turnaround_time for r in runs]
    ok = all(t is not None for t in ts) and all(b > a for a, b in zip(ts, ts[1:]))
    far = runs[0].turnaround_x
    fit = np.polyfit(free.times, free.mean_x, 1)
    lin = float(np.max(np.abs(np.polyval(fit, free.times) - free.mean_x)))
    checks = [
        check("turnaround_increasing_in_N", ts, None, None, ok),
        check("first_turnaround_far_from_x=1", far, None, None, far is not None and far < 0.5),
        check("free_reference_linear", lin, 0.0, 1e-3, lin < 1e-3),
    ]
    return {"turnaround_times": ts, "checks": checks}


MESH_PLOT = """
d = np.genfromtxt("mean_x.csv", delimiter=",", names=True)
for N in np.unique(d["N"]).astype(int):
    m = d["N"] == N
    plt.plot(d["t"][m], d["mean_x"][m], label="N=%d" % N)
f = np.genfromtxt("free_reference.csv", delimiter=",", names=True)
plt.plot(f["t"], f["mean_x"], "k--", label="V=0")
plt.xlabel("t"); plt.ylabel("<x>"); plt.legend()
plt.savefig("mesh_pathology.png", dpi=150)
"""

# ------------------------------------------------------------ gamow-census


def _census_one(args):
    alpha, a, pp = args
    spec = gamow.PlateauSpec.from_alpha(alpha, a, pp)
    return alpha, gamow.enumerate_modes(spec)


def _eigen_checks(spec, modes) -> dict:
    worst_c1 = worst_ode = worst_decay = 0.0
    parity_ok = True
    a = spec.a
    for m in modes:
        ef = gamow.eigenfunction(m, spec)
        for x0 in (a, -a):
            vi, di = ef.one_sided(x0, "in")
            vo, do = ef.one_sided(x0, "out")
            worst_c1 = max(worst_c1, abs(vi - vo) / abs(vi), abs(di - do) / abs(di))
        for x in (-2.5 * a, -0.7 * a, -0.2 * a, 0.3 * a, 0.9 * a, 1.6 * a, 3.0 * a):
            worst_ode = max(worst_ode, ef.ode_residual(x))
        xs = np.linspace(-3 * a, 3 * a, 61)
        sgn = 1 if m.n % 2 else -1
        parity_ok &= bool(np.allclose(ef(-xs), sgn * ef(xs), rtol=1e-12, atol=1e-14))
        for t in (0.3 * m.tau, m.tau):
            lhs = np.abs(ef.evolved(xs, t)) ** 2
            rhs = np.exp(2 * m.Z.imag * t / spec.params.hbar) * np.abs(ef(xs)) ** 2
            nz = rhs > 0  # skip exact nodes of psi
            worst_decay = max(worst_decay, float(np.max(np.abs(lhs - rhs)[nz] / rhs[nz])))
    return {"c1": worst_c1, "ode": worst_ode, "parity": parity_ok, "decay": worst_decay}


def run_gamow_census(p: dict, out: Path, workers: int = 1) -> dict:
    pp = _params(p)
    a = float(p["a"])
    alphas = [float(p["alpha"])] if p["alpha"] is not None else [float(x) for x in p["alphas"]]
    results = pmap(_census_one, [(al, a, pp) for al in alphas], workers)
    rows = []
    checks = []
    counts = {}
    for alpha, modes in results:
        counts[alpha] = len(modes)
        for m in modes:
            rows.append((alpha, m.n, m.kappa.real, m.kappa.imag, m.Z.real, m.Z.imag, m.tau,
                         m.escape_speed, m.beta, m.residual))
        N = len(modes)
        checks.append(check(f"census_alpha_{alpha:g}", N, [alpha - 2, alpha + 2], None, alpha - 2 < N <= alpha + 2))
        checks.append(check(f"signs_alpha_{alpha:g}", N, None, None,
                            all(m.kappa.real > 0 and m.kappa.imag < 0 for m in modes)))
        worst_res = max(m.residual for m in modes)
        checks.append(check(f"residual_alpha_{alpha:g}", worst_res, 0.0, 1e-14, worst_res < 1e-14))
        ok = True
        worst_ratio = 0.0
        for m in modes:
            it = gamow.iterates(alpha, m.n, 3)
            for j in (1, 2, 3):
                r = abs(m.kappa - it[j]) / m.error_bound(j)
                worst_ratio = max(worst_ratio, r)
                ok &= r <= 1
        checks.append(check(f"apriori_bound_alpha_{alpha:g}", worst_ratio, 1.0, None, ok))
    write_csv(out / "modes.csv", ["alpha", "n", "re_kappa", "im_kappa", "re_Z", "im_Z", "tau", "v", "beta",
                                  "residual"], rows)

    # asymptotics
    aa = float(p["asym_alpha"])
    spec = gamow.PlateauSpec.from_alpha(aa, a, pp)
    arows = []
    for n in p["asym_n"]:
        m = gamow.solve_mode(spec, int(n))
        Za = gamow.asymptotic_Z(spec, int(n))
        rel = abs(m.Z - Za) / abs(m.Z)
        well = gamow.infinite_well_level(spec, int(n))
        lt = gamow.lifetime(spec, m)
        arows.append((n, m.Z.real, m.Z.imag, Za.real, Za.imag, rel, well, m.tau, lt.tau_qu))
        checks.append(check(f"asymptotic_Z_n{n}", rel * aa**2, 10.0, None, rel < 10 / aa**2,
                            note="relative error times alpha^2"))
        checks.append(check(f"infinite_well_n{n}", abs(m.Z.real / well - 1), 0.0, 0.01, abs(m.Z.real / well - 1) < 0.01))
        checks.append(check(f"tau_vs_semiclassical_n{n}", lt.relative_gap, 0.0, 0.02, lt.relative_gap < 0.02))
    write_csv(out / "asymptotics.csv", ["n", "re_Z", "im_Z", "re_Z_asym", "im_Z_asym", "rel_error", "well_level",
                                        "tau", "tau_qu"], arows)

    # eigenfunction checks on the first few modes of the smallest alpha
    espec = gamow.PlateauSpec.from_alpha(float(p["eig_alpha"]), a, pp)
    emodes = [gamow.solve_mode(espec, n) for n in range(1, int(p["eig_n_max"]) + 1)]
    e = _eigen_checks(espec, emodes)
    checks += [
        check("C1_matching", e["c1"], 0.0, 1e-10, e["c1"] < 1e-10),
        check("ode_residual", e["ode"], 0.0, 1e-8, e["ode"] < 1e-8),
        check("parity", e["parity"], None, None, e["parity"]),
        check("decay_identity", e["decay"], 0.0, 1e-12, e["decay"] < 1e-12),
    ]

    # the sub-threshold example plotted as |psi|^2
    fspec = gamow.PlateauSpec.from_alpha(float(p["fig_alpha"]), a, pp)
    fm = gamow.solve_mode(fspec, int(p["fig_n"]), gamow.SolverConfig(allow_unverified=True))
    xs = np.linspace(-p["fig_x_max"] * a, p["fig_x_max"] * a, 601)
    ef = gamow.eigenfunction(fm, fspec)
    write_csv(out / "eigenfunction.csv", ["x", "abs_psi_sq"], zip(xs, np.abs(ef(xs)) ** 2))
    return {"counts": {f"{k:g}": v for k, v in counts.items()},
            "figure_mode": {"alpha": fm.alpha, "n": fm.n, "Z": fm.Z, "unverified_regime": fm.unverified_regime},
            "checks": checks}


CENSUS_PLOT = """
d = np.genfromtxt("modes.csv", delimiter=",", names=True)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
for al in np.unique(d["alpha"]):
    m = d["alpha"] == al
    ax1.plot(d["re_Z"][m], d["im_Z"][m], ".", label="alpha=%g" % al)
ax1.set_xlabel("Re Z"); ax1.set_ylabel("Im Z"); ax1.legend()
e = np.genfromtxt("eigenfunction.csv", delimiter=",", names=True)
ax2.plot(e["x"], e["abs_psi_sq"], "k"); ax2.set_xlabel("x"); ax2.set_ylabel("|psi|^2")
plt.tight_layout(); plt.savefig("gamow_census.png", dpi=150)
"""

# ------------------------------------------------------------ plateau-decay


def _off_mass(args):
    alpha, n, sigma, J, pp = args
    spec = gamow.PlateauSpec.from_alpha(alpha, 1.0, pp)
    m = gamow.solve_mode(spec, n)
    g = metastable.plateau_grid(spec, J, spec.a + 12 * sigma)
    st = metastable.build_metastable(m, spec, sigma, g)
    return alpha, st.off_plateau_mass


def run_plateau_decay(p: dict, out: Path, workers: int = 1) -> dict:
    pp = _params(p)
    alpha, n, J = float(p["alpha"]), int(p["n"]), int(p["J"])
    sigma, dt = float(p["sigma_cut"]), float(p["dt"])
    spec = gamow.PlateauSpec.from_alpha(alpha, float(p["a"]), pp)
    mode = gamow.solve_mode(spec, n)
    horizon = math.floor(mode.tau / dt) * dt
    grid = metastable.plateau_grid(spec, J, metastable.required_half_width(spec, mode, sigma, horizon))
    st = metastable.build_metastable(mode, spec, sigma, grid)
    cfg = metastable.decay_config(mode, dt)
    ser = metastable.decay_experiment(st, spec, cfg, horizon, int(p["n_samples"]), J=J)
    t_lo = 0.1 * mode.tau
    write_csv(out / "decay.csv", ["t", "plateau_prob", "region_discrepancy", "growing_discrepancy",
                                  "fitted_rate_so_far"],
              zip(ser.times, ser.plateau_prob, ser.region_discrepancy, ser.growing_discrepancy,
                  ser.rate_so_far(t_lo)))
    scan = pmap(_off_mass, [(float(al), n, sigma, J, pp) for al in p["alpha_scan"]], workers)
    write_csv(out / "off_plateau.csv", ["alpha", "off_plateau_mass", "c"],
              [(al, mo, mo * al**2) for al, mo in scan])
    slope = float(np.polyfit(np.log([s[0] for s in scan]), np.log([s[1] for s in scan]), 1)[0])
    rate = ser.fitted_rate(t_lo, mode.tau)
    expect = 1 / mode.tau
    P_tau = ser.plateau_prob[-1] * math.exp((horizon - mode.tau) * rate)  # extrapolate to tau
    lt = gamow.lifetime(spec, mode)
    checks = [
        check("off_plateau_mass", st.off_plateau_mass, 0.0, 0.01, st.off_plateau_mass < 0.01),
        check("off_plateau_slope", slope, -2.0, 0.3, abs(slope + 2) <= 0.3),
        check("decay_rate", rate, expect, 0.1, abs(rate / expect - 1) < 0.1),
        check("survival_at_tau", P_tau, 1 / math.e, 0.15, abs(P_tau * math.e - 1) < 0.15),
        check("growing_region_discrepancy", float(np.max(ser.growing_discrepancy)), 0.0,
              metastable.DISCREPANCY_THRESHOLD, float(np.max(ser.growing_discrepancy)) <= 0.05),
        check("plateau_discrepancy", float(np.max(ser.region_discrepancy)), 0.0, 0.05,
              float(np.max(ser.region_discrepancy)) < 0.05),
        check("survival_non_increasing", float(np.max(np.diff(ser.plateau_prob))), 0.0, 1e-3,
              bool(np.all(np.diff(ser.plateau_prob) <= 1e-3))),
        check("quantum_not_classical_time", 1 / rate / lt.tau_cl, 5.0, None, 1 / rate > 5 * lt.tau_cl,
              note="fitted lifetime over classical crossing time"),
    ]
    return {"alpha": alpha, "n": n, "Z": mode.Z, "tau": mode.tau, "tau_cl": lt.tau_cl, "fitted_rate": rate,
            "expected_rate": expect, "lattice_rate": ser.extras["lattice_rate"], "P_tau": P_tau,
            "horizon": horizon, "grid_points": grid.n_points, "off_plateau_slope": slope, "checks": checks}


DECAY_PLOT = """
d = np.genfromtxt("decay.csv", delimiter=",", names=True)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.semilogy(d["t"], d["plateau_prob"], "k.-"); ax1.set_xlabel("t"); ax1.set_ylabel("P(plateau)")
ax2.plot(d["t"], d["region_discrepancy"], label="plateau")
ax2.plot(d["t"], d["growing_discrepancy"], label="growing region")
ax2.set_xlabel("t"); ax2.legend()
plt.tight_layout(); plt.savefig("plateau_decay.png", dpi=150)
"""

# ------------------------------------------------------------ superposition


def _sup_one(args):
    coeffs, p = args
    pp = _params(p)
    spec = gamow.PlateauSpec.from_alpha(float(p["alpha"]), float(p["a"]), pp)
    modes = [gamow.solve_mode(spec, n) for n, _ in coeffs]
    dt = float(p["dt"])
    all_modes = [gamow.solve_mode(spec, n) for n in (1, 2)]
    horizon = math.floor(min(m.tau for m in all_modes) / dt) * dt
    vmax = max(m.escape_speed for m in all_modes)
    grid = metastable.plateau_grid(spec, int(p["J"]), spec.a + 1.02 * vmax * horizon + 1.0)
    eref = float(np.mean([m.Z.real for m in modes]))
    cfg = tdse.PropagatorConfig(dt, energy_shift=eref, step_check="spectral")
    return metastable.superposition_experiment(spec, metastable.SuperpositionSpec(tuple(coeffs)), cfg,
                                               horizon, grid, int(p["n_samples"]))


def run_superposition(p: dict, out: Path, workers: int = 1) -> dict:
    c1, c2 = float(p["c1"]), float(p["c2"])
    jobs = [(((1, c1), (2, c2)), p), (((1, 1.0),), p), (((2, 1.0),), p)]
    mix, s1, s2 = pmap(_sup_one, jobs, workers)
    t = mix.series.times
    write_csv(out / "superposition.csv", ["t", "plateau_prob", "discrepancy", "single_n1", "single_n2",
                                          "mixture_prediction"],
              zip(t, mix.series.plateau_prob, mix.series.region_discrepancy, s1.series.plateau_prob,
                  s2.series.plateau_prob, mix.mixture_prediction))
    P = mix.series.plateau_prob
    lo = np.minimum(s1.series.plateau_prob, s2.series.plateau_prob)
    hi = np.maximum(s1.series.plateau_prob, s2.series.plateau_prob)
    tol = float(p["envelope_tol"])
    env = bool(np.all((P >= lo - tol) & (P <= hi + tol)))
    taus = [m.tau for m in mix.modes]
    dmax = float(np.max(mix.series.region_discrepancy))
    checks = [
        check("plateau_discrepancy", dmax, 0.0, 0.05, dmax < 0.05),
        check("between_single_mode_curves", float(np.max(np.maximum(lo - P, P - hi))), 0.0, tol, env),
    ]
    return {"taus": taus, "weights": mix.weights, "horizon": float(t[-1]), "checks": checks}


SUP_PLOT = """
d = np.genfromtxt("superposition.csv", delimiter=",", names=True)
plt.plot(d["t"], d["plateau_prob"], "k", label="superposition")
plt.plot(d["t"], d["single_n1"], "--", label="n=1")
plt.plot(d["t"], d["single_n2"], "--", label="n=2")
plt.xlabel("t"); plt.ylabel("P(plateau)"); plt.legend()
plt.savefig("superposition.png", dpi=150)
"""

# ------------------------------------------------------------------ registry

REGISTRY: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment(
            "step-sweep", "Sharp-step R and T against dE/E, with the transfer-matrix cross-check.",
            {"step_sweep.csv": ["dE_over_E", "R", "T", "R_transfer2"]},
            dict(UNITS, E=1.0, dE=18.4, R_target=0.39688, r_sequence=[1e-2, 1e-4, 1e-6], ratio_min=1e-3,
                 ratio_max=1e3, n_ratio=61),
            run_step_sweep, STEP_SWEEP_PLOT),
        Experiment(
            "soft-step-sweep", "tanh-step R against width L: monotonicity, sharp-step bound, limits.",
            {"soft_step_sweep.csv": ["L", "R_soft", "R_rect", "R_uv"]},
            dict(UNITS, E=1.0, dE=18.4, L_min=1e-3, L_max=10.0, n_L=20, large_ratio=1e6, large_L=0.1),
            run_soft_step_sweep, SOFT_PLOT),
        Experiment(
            "uv-map", "R(u, v) on log grids, the R > 0.99 region and the first-order expansion.",
            {"uv_map.csv": ["u", "v", "R", "above_0.99"]},
            dict(u_min=1e-4, u_max=1.0, v_min=1e-3, v_max=10.0, n_u=200, n_v=200),
            run_uv_map, UV_PLOT),
        Experiment(
            "packet-scatter", "Gaussian packet on a step in a hard box: propagation vs momentum integral.",
            {"snapshots.csv": ["frame", "t", "x", "re_psi", "im_psi", "density", "V_display"],
             "coefficients.csv": ["provenance", "R", "T"], "propagator.csv": ["dt", "diff_to_half_dt"]},
            dict(UNITS, n_points=2001, step="soft", L=0.01, dE_ratio=18.4, sigma=0.01, k0=200 * math.pi,
                 mu=0.1, step_center=0.2, dt_factor=0.4, free_half_width=40.0, free_n_points=8001,
                 free_sigma=1.0, free_k0=1.0, free_t=6.0, free_dt=0.005, order_dt=0.1, order_t=2.0),
            run_packet_scatter, SCATTER_PLOT),
        Experiment(
            "mesh-pathology", "<x>(t) on an inverted parabola for several mesh sizes.",
            {"mean_x.csv": ["N", "t", "mean_x"], "free_reference.csv": ["t", "mean_x"],
             "turnaround.csv": ["N", "turnaround_time", "turnaround_x", "wall_contact"]},
            dict(UNITS, n_values=[500, 1000, 2000], k0=200 * math.pi, sigma=0.01, mu=0.1, c_factor=50.0,
                 x0=0.3, t_end=2e-4, dt_factor=0.4, free_n_points=2000),
            run_mesh_pathology, MESH_PLOT),
        Experiment(
            "gamow-census", "Decay eigenvalues of the plateau: census, asymptotics, eigenfunction checks.",
            {"modes.csv": ["alpha", "n", "re_kappa", "im_kappa", "re_Z", "im_Z", "tau", "v", "beta", "residual"],
             "asymptotics.csv": ["n", "re_Z", "im_Z", "re_Z_asym", "im_Z_asym", "rel_error", "well_level", "tau",
                                 "tau_qu"],
             "eigenfunction.csv": ["x", "abs_psi_sq"]},
            dict(UNITS, a=1.0, alpha=None, alphas=[10, 20, 50, 100], asym_alpha=100, asym_n=[1, 2, 3], eig_alpha=10,
                 eig_n_max=4, fig_alpha=8, fig_n=4, fig_x_max=3.0),
            run_gamow_census, CENSUS_PLOT),
        Experiment(
            "plateau-decay", "Metastable state on the plateau: survival, decay rate, growing region.",
            {"decay.csv": ["t", "plateau_prob", "region_discrepancy", "growing_discrepancy", "fitted_rate_so_far"],
             "off_plateau.csv": ["alpha", "off_plateau_mass", "c"]},
            dict(UNITS, a=1.0, alpha=40, n=1, J=400, dt=0.025, sigma_cut=1.0, n_samples=41,
                 alpha_scan=[20, 40, 80]),
            run_plateau_decay, DECAY_PLOT),
        Experiment(
            "superposition", "Two-mode plateau state truncated at the edges, against single-mode runs.",
            {"superposition.csv": ["t", "plateau_prob", "discrepancy", "single_n1", "single_n2",
                                   "mixture_prediction"]},
            dict(UNITS, a=1.0, alpha=20, J=100, dt=0.005, c1=1 / math.sqrt(2), c2=1 / math.sqrt(2), n_samples=41,
                 envelope_tol=0.0),
            run_superposition, SUP_PLOT),
    ]
}
