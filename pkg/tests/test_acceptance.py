"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) and then
asserts. Criteria 3 and 6 are long full-scale runs and only execute when the
environment variable EWAVE_FULL=1 is set.
"""
import math
import os

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ewave_ipdg import cg_assembly as cg
from ewave_ipdg import dg_assembly as dg
from ewave_ipdg import experiment as ex
from ewave_ipdg import spectral as spc
from ewave_ipdg import timeslab as ts
from ewave_ipdg.discretization import make_discretization
from ewave_ipdg.elasticity import EXPERIMENT_MATERIAL, ProblemData, homogeneous_problem, manufactured_problem
from ewave_ipdg.mesh import build_unit_square_mesh

FULL = os.environ.get("EWAVE_FULL") == "1"
full_only = pytest.mark.skipif(not FULL, reason="full-scale run; set EWAVE_FULL=1")

DESK_TAUS = (1e-1, 5e-2, 2.5e-2, 1.25e-2)
PLATEAU_TAUS = tuple(1e-1 / 2**k for k in range(16))  # 1e-1 ... 3.0518e-6


def _errors(tmp_path, gamma0, taus, n=10, scheme="SIPG"):
    cfg = ex.ExperimentConfig(n=n, p=2, scheme=(scheme,), gamma0=(gamma0,), tau=taus, out=str(tmp_path))
    return ex.run_convergence(cfg)


def test_criterion_01_time_convergence_order(tmp_path, verdict):
    rows = _errors(tmp_path, 1e6, DESK_TAUS)
    eoc = rows[-1].eoc
    ok = abs(eoc - 2.0) <= 0.15
    detail = "EOCs " + ", ".join(f"{r.eoc:.2f}" for r in rows[1:]) + f" (errors {rows[0].error:.3e} -> {rows[-1].error:.3e})"
    verdict("1", ok, f"last-halving EOC {eoc:.3f}, need 2.00 +- 0.15; {detail}")
    assert ok


def test_criterion_02_penalty_limited_stagnation(tmp_path, verdict):
    taus = DESK_TAUS + (6.25e-3,)
    low = _errors(tmp_path / "low", 1e3, taus)
    high = _errors(tmp_path / "high", 1e6, taus)
    r_low = low[0].error / low[-1].error
    r_high = high[0].error / high[-1].error
    ok = r_low < 2.0 and r_high > 50.0
    verdict("2", ok, f"error reduction 1e-1 -> 6.25e-3: gamma0=1e3 {r_low:.2f}x (need < 2), "
                     f"gamma0=1e6 {r_high:.2f}x (need > 50)")
    assert ok


@full_only
def test_criterion_03_full_scale_errors(tmp_path, verdict):
    res = {}
    for scheme, target in (("SIPG", 1.1355e-4), ("FEM", 1.2630e-4)):
        cfg = ex.ExperimentConfig(n=40, scheme=(scheme,), tau=(6.25e-3,), solver="direct", out=str(tmp_path / scheme))
        err = ex.run_convergence(cfg)[0].error
        res[scheme] = (err, target, abs(err / target - 1))
    ok = all(rel <= 0.15 for _, _, rel in res.values())
    verdict("3", ok, "; ".join(f"{k} {e:.4e} vs {t:.4e} ({100 * r:.1f}% off, need <= 15%)" for k, (e, t, r) in res.items()))
    assert ok


def test_criterion_03_full_scale_errors_gate(verdict):
    if not FULL:
        verdict("3", None, "full-scale run skipped; set EWAVE_FULL=1 (about five minutes)")


def _kappas(M, A, taus):
    return np.array([spc.condition_number_spd(ts.condensed_matrix(M, A, t)) for t in taus])


def test_criterion_04_condition_plateau(verdict):
    cfg = ex.ExperimentConfig(n=10, p=2)
    sipg = ex.build(cfg, "SIPG", 1e6)
    k = _kappas(sipg.M, sipg.A, PLATEAU_TAUS)
    monotone = bool(np.all(np.diff(k) <= 1e-12 * k[:-1]))
    k_limit = spc.condition_number_spd(ts.condensed_matrix(sipg.M, sipg.A, 1e-8))
    kM = spc.condition_number_spd(sipg.M)
    rel = abs(k_limit / kM - 1)

    fem = ex.build(cfg, "FEM", None)
    Mf, Af = ex.spectral_pair(fem, cfg)
    kf = _kappas(Mf, Af, PLATEAU_TAUS)
    kf_limit = spc.condition_number_spd(ts.condensed_matrix(Mf, Af, 1e-8))
    kMf = spc.condition_number_spd(Mf)
    rel_f = abs(kf_limit / kMf - 1)
    ok = monotone and rel <= 1e-3 and rel_f <= 1e-3
    verdict("4", ok, f"SIPG kappa {k[0]:.4e} -> {k[-1]:.4f}, non-increasing={monotone}, "
                     f"limit(tau=1e-8) {k_limit:.4f} vs kappa(M) {kM:.4f} ({100 * rel:.4f}%); "
                     f"FEM limit {kf_limit:.4f} vs kappa(M_fem) {kMf:.4f} ({100 * rel_f:.4f}%), "
                     f"FEM kappa {kf[0]:.1f} at 1e-1, {kf.min():.2f} min")
    assert ok


def test_criterion_05_penalty_scaling(verdict):
    mesh = build_unit_square_mesh(10)
    dm = dg.DgDofMap(mesh, 2)
    kap = {}
    for g in (1e4, 1e5, 1e6):
        A = dg.assemble_stiffness_ip(mesh, dm, EXPERIMENT_MATERIAL, dg.PenaltyConfig(gamma0=g))
        kap[g] = spc.condition_number_spd(A, method="dense")
    ok = kap[1e6] > kap[1e5] > kap[1e4]
    verdict("5", ok, "kappa(A): " + ", ".join(f"gamma0={g:g} {v:.4e}" for g, v in kap.items()))
    assert ok


@full_only
def test_criterion_06_full_scale_conditioning(verdict):
    cfg = ex.ExperimentConfig(n=40, p=2)
    taus = (1e-1, 6.25e-3, 3.0518e-6)
    series = {}
    for scheme, g in (("SIPG", 1e6), ("SIPG", 1e5), ("FEM", None)):
        disc = ex.build(cfg, scheme, g)
        M, A = ex.spectral_pair(disc, cfg)
        series[(scheme, g)] = [spc.condition_number_spd(ts.condensed_matrix(M, A, t)) for t in taus]
    checks = [
        ("SIPG 1e6 tau=1e-1", series[("SIPG", 1e6)][0], 5.548e6),
        ("SIPG 1e5 tau=1e-1", series[("SIPG", 1e5)][0], 1.156e7),
        ("FEM tau=3.0518e-6", series[("FEM", None)][2], 29.216),
    ]
    within = [max(v / t, t / v) <= 3.0 for _, v, t in checks]
    monotone = all(all(a >= b for a, b in zip(s, s[1:])) for s in series.values())
    ordered = series[("FEM", None)][2] < min(series[("SIPG", 1e6)][2], series[("SIPG", 1e5)][2])
    ok = all(within) and monotone and ordered
    verdict("6", ok, "; ".join(f"{name} {v:.4e} vs {t:.4e} (x{max(v / t, t / v):.2f})" for name, v, t in checks)
            + f"; monotone={monotone}, plateau FEM < SIPG={ordered}")
    assert ok


def test_criterion_06_full_scale_conditioning_gate(verdict):
    if not FULL:
        verdict("6", None, "full-scale run skipped; set EWAVE_FULL=1 (about five minutes)")


def test_criterion_07_eigenvalue_clustering(verdict):
    parts, ok = [], True
    for n in (6, 8, 10):
        disc = make_discretization("SIPG", build_unit_square_mesh(n), 2, manufactured_problem(), 1e6)
        comp = {}
        for tau in (1e-2, 1e-6):
            rep = spc.spectrum_report(ts.condensed_matrix(disc.M, disc.A, tau), label="SIPG", tau=tau, p=2, n=n)
            comp[tau] = (rep.compactness, len(rep.clusters))
        ratio = comp[1e-6][0] / comp[1e-2][0]
        ok &= ratio <= 0.1
        parts.append(f"n={n}: {comp[1e-6][0]:.4f} ({comp[1e-6][1]} clusters) / {comp[1e-2][0]:.4f} = {ratio:.3f}")
    verdict("7", ok, "compactness(1e-6)/compactness(1e-2) <= 0.1 for every n in 6..10; " + "; ".join(parts))
    assert ok


def test_criterion_08_block_condensed_equivalence(verdict):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(20):
        n, p = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        scheme = ("SIPG", "FEM")[i % 2]
        disc = make_discretization(scheme, build_unit_square_mesh(n), p, manufactured_problem(), 1e6)
        N = disc.n_dofs
        if N == 0:  # FEM with n = p = 1 has no free dofs; fall back to the dG space
            disc = make_discretization("SIPG", build_unit_square_mesh(n), p, manufactured_problem(), 1e6)
            N = disc.n_dofs
        tau = float(10 ** rng.uniform(-4, 0))
        sys1 = ts.TimeSlabSystem(disc.M, disc.A, tau, rng.standard_normal(N), rng.standard_normal(N))
        u0, v0 = rng.standard_normal(N), rng.standard_normal(N)
        ub, vb, _ = ts.step(sys1, u0, v0, ts.SolverConfig("dense"), path="block")
        uc, vc, _ = ts.step(sys1, u0, v0, ts.SolverConfig("dense"), path="condensed")
        worst = max(worst, np.linalg.norm(uc - ub) / np.linalg.norm(ub), np.linalg.norm(vc - vb) / np.linalg.norm(vb))
    ok = worst <= 1e-9
    verdict("8", ok, f"20 random slabs, worst relative difference {worst:.2e} (need <= 1e-9)")
    assert ok


def test_criterion_09_patch_test(verdict):
    u_lin = lambda t, x: np.stack([x[..., 0] + 2 * x[..., 1], 3 * x[..., 0]], axis=-1)  # noqa: E731
    zero = lambda t, x: np.zeros(np.shape(x))  # noqa: E731
    prob = ProblemData(EXPERIMENT_MATERIAL, forcing=zero, dirichlet=u_lin, initial_u=None, initial_v=None)
    mesh = build_unit_square_mesh(3)
    errs = {}
    for p in (1, 2):
        dm = dg.DgDofMap(mesh, p)
        cfg = dg.PenaltyConfig(gamma0=10.0)
        A = dg.assemble_stiffness_ip(mesh, dm, EXPERIMENT_MATERIAL, cfg)
        x = spla.spsolve(A.tocsc(), dg.assemble_dg_rhs(mesh, dm, prob, cfg, 0.0))
        ref = dm.interpolate(lambda X: u_lin(0, X))
        errs[f"SIPG p={p}"] = np.linalg.norm(x - ref) / np.linalg.norm(ref)
        cdm = cg.CgDofMap(mesh, p)
        ops = cg.assemble_cg(mesh, cdm, EXPERIMENT_MATERIAL)
        xf = spla.spsolve(ops.A.tocsc(), cg.reduced_rhs(ops, prob, 0.0, static=True))
        ref_f = cdm.interpolate(lambda X: u_lin(0, X))[cdm.free]
        errs[f"FEM p={p}"] = np.linalg.norm(xf - ref_f) / np.linalg.norm(ref_f)
    ok = max(errs.values()) <= 1e-9
    verdict("9", ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + " (need <= 1e-9)")
    assert ok


def test_criterion_10_energy_conservation(verdict):
    bump = lambda x: np.stack([np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1]),  # noqa: E731
                               0.5 * np.sin(2 * np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])], axis=-1)
    prob = homogeneous_problem(EXPERIMENT_MATERIAL, u0=bump)
    disc = make_discretization("SIPG", build_unit_square_mesh(6), 2, prob, 1e6)
    u0, v0 = disc.initial()
    traj = ts.run(np.linspace(0, 1, 101), u0, v0, disc.M, disc.A, disc.rhs, ts.SolverConfig())
    e = np.array([ts.discrete_energy(disc.M, disc.A, u, v) for u, v in zip(traj.u, traj.v)])
    drift = np.abs(e - e[0]).max() / e[0]
    ok = drift <= 1e-6
    verdict("10", ok, f"100 steps at tau=1e-2, relative energy drift {drift:.2e} (need <= 1e-6)")
    assert ok


def test_criterion_11_time_coefficients(verdict):
    from test_timeslab import _symbolic_coefficients

    worst = 0.0
    for r in (1, 2, 3):
        c = ts.time_coefficients(r)
        a, b = _symbolic_coefficients(r)
        worst = max(worst, np.abs(c.alpha - a).max(), np.abs(c.beta - b).max())
    c1 = ts.time_coefficients(1)
    exact = c1.alpha.tolist() == [[-1.0, 1.0]] and c1.beta.tolist() == [[0.5, 0.5]]
    ok = worst <= 1e-13 and exact
    verdict("11", ok, f"max deviation from symbolic integrals {worst:.1e} (need <= 1e-13); "
                      f"r=1 alpha=(-1, 1), beta=(tau/2, tau/2) exactly: {exact}")
    assert ok
