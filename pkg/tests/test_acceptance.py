"""Acceptance gate: one test per criterion, each run at its stated tolerance.

Every test records a PASS/FAIL line that conftest prints in the terminal
summary; running this file as a script prints the same lines.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest

from fracphase import cli, diagnostics, fracops, stepper
from fracphase.config import build_config
from fracphase.diagnostics import EnergyRecorder
from fracphase.fracops import L1Kernel
from fracphase.initial import initial_flower, initial_random
from fracphase.models import ModelSpec, critical_stabilization
from fracphase.spectral import Grid
from fracphase.stepper import SolverSettings

from conftest import ACCEPTANCE_LINES
from oracles import DenseOps, dense_step

# Mid-stage window for the coarsening fit (criterion 9), chosen from the
# energy curves of the 128^2 runs: after the spinodal transient, before the
# late stage where few domains remain.
COARSEN_WINDOW = (1.0, 20.0)


def record(n, ok, detail, elapsed):
    ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  ({elapsed:.1f} s)  {detail}"


def simulate(grid, spec, alpha, tau, n_steps, phi0, stride=1, tol=1e-10):
    settings = SolverSettings(tau, n_steps, nonlinear_tol=tol)
    return stepper.run(grid, spec, L1Kernel(alpha, tau, n_steps), settings, phi0,
                       [EnergyRecorder(grid, spec, stride)])


# -- 1 -----------------------------------------------------------------------


def test_c01_kernel_positivity():
    t0 = time.perf_counter()
    worst, fails = math.inf, []
    for alpha in (0.1, 0.3, 0.5, 0.7, 0.9):
        for tau in (0.001, 0.1, 1.0):
            for n in (4, 16, 64, 256):
                lam, s_n, ok = fracops.kernel_form_certificate(alpha, tau, n)
                ok = ok and lam >= s_n - 1e-12
                worst = min(worst, lam - s_n)
                if not ok:
                    fails.append((alpha, tau, n))
    el = time.perf_counter() - t0
    ok = not fails and el < 30
    record(1, ok, f"60 (alpha, tau, n) cases, min(lambda_min - s_n) = {worst:.3e}, failures {fails}", el)
    assert ok


# -- 2 -----------------------------------------------------------------------


def test_c02_a_alpha_positivity_and_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst = math.inf
    for _ in range(1000):
        alpha = rng.uniform(0.01, 0.99)
        tau = rng.uniform(1e-3, 1.0)
        worst = min(worst, fracops.a_alpha_piecewise_constant(rng.uniform(-1, 1, 32), alpha, tau))
    errs = []
    for alpha in (0.1, 0.3, 0.5, 0.7, 0.9):
        for n, tau in ((32, 1 / 32), (10, 0.1), (7, 0.3)):
            T = n * tau
            ref = T ** (2 - alpha) / math.gamma(3 - alpha)
            errs.append(abs(fracops.a_alpha_piecewise_constant(np.ones(n), alpha, tau) - ref))
    el = time.perf_counter() - t0
    ok = worst >= -1e-12 and max(errs) <= 1e-10 and el < 5
    record(2, ok, f"min over 1000 random = {worst:.3e}, max constant-input error = {max(errs):.2e}", el)
    assert ok


# -- 3 -----------------------------------------------------------------------


def test_c03_l1_convergence_order():
    t0 = time.perf_counter()
    orders = {a: diagnostics.l1_convergence_order(a, [1 / 32, 1 / 64, 1 / 128]) for a in (0.3, 0.5, 0.8)}
    el = time.perf_counter() - t0
    ok = all(abs(p - (2 - a)) <= 0.1 for a, p in orders.items()) and el < 10
    record(3, ok, "observed orders " + ", ".join(f"alpha={a}: {p:.4f} (2-alpha={2 - a})" for a, p in orders.items()), el)
    assert ok


# -- 4, 5 --------------------------------------------------------------------


def _stability_setups():
    g_ac = Grid(64, 64, 2.0, 2.0)
    ac = ModelSpec("AC", 0.05, 0.05, 5.5, "truncated_quartic")
    ch = ModelSpec("CH", 0.05, 0.0025, 0.0, "truncated_quartic")
    ch = ModelSpec("CH", 0.05, 0.0025, critical_stabilization(ch), "truncated_quartic")
    g_mbe = Grid(64, 64, 2 * np.pi, 2 * np.pi)
    mbe = ModelSpec("MBE_noslope", 0.1, 0.1, 0.1 / (16 * 0.1))
    return {
        "AC": (g_ac, ac, initial_flower(g_ac, 0.05)),
        "CH": (g_ac, ch, initial_random(g_ac, 11, 1.0)),
        "MBE_noslope": (g_mbe, mbe, initial_random(g_mbe, 12, 0.1)),
    }


@lru_cache(maxsize=None)
def stability_runs():
    out = {}
    for name, (g, spec, phi0) in _stability_setups().items():
        for alpha in (0.3, 0.5, 1.0):
            _, rep = simulate(g, spec, alpha, 0.01, 500, phi0)
            out[name, alpha] = rep
    return out


def test_c04_endpoint_energy_stability():
    t0 = time.perf_counter()
    runs = stability_runs()
    el = time.perf_counter() - t0
    parts, ok = [], el < 300
    for (name, alpha), rep in runs.items():
        e = rep.total_energy
        excess = float(np.max(e - e[0]))
        good = len(e) == 501 and excess <= 1e-10
        ok &= good
        parts.append(f"{name} a={alpha}: max(E_n-E_0)={excess:.2e}")
    assert abs(_stability_setups()["AC"][1].stabilization_S - 5.5) < 1e-15
    record(4, ok, "; ".join(parts), el)
    assert ok


def test_c05_mass_conservation():
    t0 = time.perf_counter()
    runs = stability_runs()
    parts, ok = [], True
    for (name, alpha), rep in runs.items():
        if name == "AC":
            continue
        m = np.array(rep.mass)
        drift = float(np.max(np.abs(m - m[0])) / (1 + abs(m[0])))
        ok &= drift <= 1e-12
        parts.append(f"{name} a={alpha}: {drift:.1e}")
    record(5, ok, "relative mean drift " + "; ".join(parts), time.perf_counter() - t0)
    assert ok


# -- 6 -----------------------------------------------------------------------

DEGEN = [
    # (stepper, oracle scheme, spec, L, amplitude)
    (stepper.step_ac_stabilized, "ac_stabilized", ModelSpec("AC", 0.05, 0.05, 0.1), 2.0, 1.0),
    (stepper.step_ac_convex_split, "ac_convex_split", ModelSpec("AC", 0.05, 0.05, splitting="convex_split"), 2.0, 1.0),
    (stepper.step_ch_stabilized, "ch_stabilized", ModelSpec("CH", 0.05, 0.0025, 0.01), 2.0, 1.0),
    (stepper.step_ch_convex_split, "ch_convex_split", ModelSpec("CH", 0.05, 0.0025, splitting="convex_split"), 2.0, 1.0),
    (stepper.step_mbe_stabilized, "mbe_stabilized", ModelSpec("MBE_slope", 0.1, 0.1, 0.1), 2 * np.pi, 0.1),
    (stepper.step_mbe_convex_split, "mbe_convex_split",
     ModelSpec("MBE_slope", 0.1, 0.1, splitting="convex_split"), 2 * np.pi, 0.1),
]


def test_c06_alpha_one_degeneration():
    t0 = time.perf_counter()
    tau, n = 0.01, 20
    parts, ok = [], True
    for step, scheme, spec, L, amp in DEGEN:
        g = Grid(32, 32, L, L)
        ops = DenseOps(32, 32, L, L)
        phi0 = initial_random(g, 31, amp)
        settings = SolverSettings(tau, n, nonlinear_tol=1e-13)
        kernel = L1Kernel(1.0, tau, n)
        state = stepper.RunState.initial(g, phi0, n)
        ref = phi0
        err = 0.0
        for _ in range(n):
            state = step(state, spec, kernel, settings)
            ref = dense_step(ops, scheme, ref, [], 1.0, tau, spec.epsilon, spec.gamma,
                             spec.stabilization_S, spec.family)
            err = max(err, float(np.max(np.abs(state.phi - ref))))
        ok &= err <= 1e-10
        parts.append(f"{scheme}: {err:.1e}")
    el = time.perf_counter() - t0
    ok &= el < 30
    record(6, ok, "max-norm gap to backward Euler over 20 steps " + "; ".join(parts), el)
    assert ok


# -- 7 -----------------------------------------------------------------------


def test_c07_dense_oracle_one_step():
    t0 = time.perf_counter()
    tau, alpha = 0.02, 0.5
    cases = [
        (stepper.step_ac_stabilized, "ac_stabilized", ModelSpec("AC", 0.05, 0.05, 0.1), 2.0),
        (stepper.step_ch_stabilized, "ch_stabilized", ModelSpec("CH", 0.05, 0.0025, 0.01), 2.0),
        (stepper.step_mbe_stabilized, "mbe_stabilized", ModelSpec("MBE_slope", 0.1, 0.1, 0.1), 2 * np.pi),
        (stepper.step_mbe_stabilized, "mbe_stabilized", ModelSpec("MBE_noslope", 0.1, 0.1, 0.0625), 2 * np.pi),
    ]
    parts, ok = [], True
    for step, scheme, spec, L in cases:
        g = Grid(8, 8, L, L)
        rng = np.random.default_rng(7)
        phi = rng.uniform(-1, 1, g.shape)
        inc = [0.1 * rng.standard_normal(g.shape) for _ in range(3)]
        h = fracops.History(g.shape, 5)
        for d in inc:
            h.append(d)
        state = stepper.RunState(g, phi, h, 3, 3 * tau)
        new = step(state, spec, L1Kernel(alpha, tau, 5), SolverSettings(tau, 5))
        ref = dense_step(DenseOps(8, 8, L, L), scheme, phi, inc, alpha, tau, spec.epsilon, spec.gamma,
                         spec.stabilization_S, spec.family)
        err = float(np.max(np.abs(new.phi - ref)))
        ok &= err <= 1e-11
        parts.append(f"{spec.family}: {err:.1e}")
    el = time.perf_counter() - t0
    ok &= el < 5
    record(7, ok, "one step vs dense assembly (k=3 history) " + "; ".join(parts), el)
    assert ok


# -- 8, 10 -------------------------------------------------------------------


@lru_cache(maxsize=None)
def flower_runs():
    cfg = build_config("ac-flower", overrides={"nx": 64, "ny": 64})
    out = {}
    for alpha in (1.0, 0.5, 0.3):
        grid, spec, _, _, phi0 = cli.build_run(cfg)
        _, rep = simulate(grid, spec, alpha, 0.1, 300, phi0)
        out[alpha] = rep
    return out


def test_c08_relaxation_slowdown():
    t0 = time.perf_counter()
    runs = flower_runs()
    el = time.perf_counter() - t0
    alphas = (1.0, 0.5, 0.3)
    cross = [diagnostics.first_crossing_time(runs[a]) for a in alphas]
    final = [float(runs[a].total_energy[-1]) for a in alphas]
    # a run that never drops below half its initial energy within T = 30 has
    # crossing time beyond the horizon; ties between such runs are broken by
    # the energy still left at T, which is the slower relaxation
    keys = [(c, e) for c, e in zip(cross, final)]
    ok = all(a < b for a, b in zip(keys, keys[1:])) and math.isfinite(cross[0]) and el < 120
    censored = [a for a, c in zip(alphas, cross) if not math.isfinite(c)]
    detail = ("first t with E < E0/2: " + ", ".join(f"alpha={a}: {c:g}" for a, c in zip(alphas, cross))
              + "; E(T=30): " + ", ".join(f"{e:.4f}" for e in final))
    if censored:
        detail += f"; alpha in {censored} never crosses before T=30 (ordered by E(T))"
    record(8, ok, detail, el)
    assert ok


def test_c10_max_principle_overshoot():
    t0 = time.perf_counter()
    runs = flower_runs()
    over = {a: diagnostics.max_principle_overshoot(r) for a, r in runs.items()}
    ok = all(v <= 0.05 for v in over.values())
    record(10, ok, "overshoot " + ", ".join(f"alpha={a}: {v:.2e}" for a, v in over.items()), time.perf_counter() - t0)
    assert ok


# -- 9 -----------------------------------------------------------------------


@pytest.mark.slow
def test_c09_coarsening_exponent():
    t0 = time.perf_counter()
    parts, ok = [], True
    for alpha in (0.5, 1.0):
        cfg = build_config("ch-random", overrides={"nx": 128, "ny": 128, "alpha": alpha, "tau": 0.002,
                                                    "n_steps": 10000, "energy_stride": 10})
        grid, spec, kernel, settings, phi0 = cli.build_run(cfg)
        _, rep = stepper.run(grid, spec, kernel, settings, phi0, [EnergyRecorder(grid, spec, 10)])
        fit = diagnostics.fit_power_law(rep, COARSEN_WINDOW)
        target = -alpha / 3
        good = target - 0.15 <= fit.exponent <= target + 0.15
        ok &= good
        parts.append(f"alpha={alpha}: p={fit.exponent:.4f} (target {target:.4f} +/- 0.15, rms {fit.residual:.2e})")
    el = time.perf_counter() - t0
    ok &= el < 1800
    record(9, ok, f"window t in {COARSEN_WINDOW}: " + "; ".join(parts), el)
    assert ok


# -- 11 ----------------------------------------------------------------------


def test_c11_determinism(tmp_path):
    t0 = time.perf_counter()
    runs = [("ac-flower", []), ("ch-random", ["--steps", "40"]), ("mbe-random", ["--steps", "40"])]
    ok, parts = True, []
    for preset, extra in runs:
        blobs = []
        for i in range(2):
            out = tmp_path / f"{preset}-{i}"
            assert cli.main(["run", "--preset", preset, "--out", str(out), *extra]) == 0
            blobs.append((out / "energy.csv").read_bytes())
        same = blobs[0] == blobs[1]
        ok &= same
        parts.append(f"{preset}{' ' + ' '.join(extra) if extra else ''}: {'identical' if same else 'DIFFERENT'}")
    record(11, ok, "energy.csv " + "; ".join(parts), time.perf_counter() - t0)
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
