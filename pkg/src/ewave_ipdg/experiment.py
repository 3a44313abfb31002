"""Convergence, conditioning, spectrum and field studies for the sine-wave benchmark."""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as spla

from . import timeslab as ts
from .discretization import DgDiscretization, FemDiscretization, evaluate_cells, make_discretization
from .elasticity import IsotropicMaterial, manufactured_problem
from .fe_basis import gauss_legendre, lagrange_shapes_2d, tensor_rule
from .mesh import build_unit_square_mesh
from .output import write_csv, write_matrix_market
from .spectral import (
    DEFAULT_GAP,
    SpectralError,
    cluster_labels,
    condition_number_general,
    estimate_condition_spd,
    spectrum_report,
)

log = logging.getLogger(__name__)

SCHEME_NAMES = ("SIPG", "NIPG", "IIPG", "FEM")
FULL_SCALE_N = 40


@dataclass
class ExperimentConfig:
    scheme: tuple[str, ...] = ("SIPG",)
    p: int = 2
    n: int = 10
    gamma0: tuple[float, ...] = (1e6,)
    tau: tuple[float, ...] | None = None
    tau_max: float = 1e-1
    halvings: int = 4
    T: float = 1.0
    E: float = 70.0
    nu: float = 0.34
    rho: float = 2.8
    solver: str = "cg"
    rel_tolerance: float = 1e-10
    max_iterations: int = 100_000
    path: str = "condensed"
    cond_method: str = "auto"
    fem_operator: str = "unreduced"
    block: bool = False
    gap: float = DEFAULT_GAP
    out: str = "results"
    emit_matrix: str | None = None
    dump_trajectory: bool = False

    def __post_init__(self):
        self.scheme = tuple(s.upper() for s in _as_tuple(self.scheme))
        self.gamma0 = tuple(float(g) for g in _as_tuple(self.gamma0))
        if self.tau is not None:
            self.tau = tuple(float(t) for t in _as_tuple(self.tau))
        for s in self.scheme:
            if s not in SCHEME_NAMES:
                raise ValueError(f"unknown scheme {s!r}; choose from {SCHEME_NAMES}")
        positive = dict(p=self.p, n=self.n, tau_max=self.tau_max, T=self.T, E=self.E, rho=self.rho, gap=self.gap)
        for k, v in positive.items():
            if not v > 0:
                raise ValueError(f"{k} must be positive, got {v}")
        if any(g <= 0 for g in self.gamma0):
            raise ValueError("gamma0 values must be positive")
        if self.tau is not None and any(t <= 0 for t in self.tau):
            raise ValueError("tau values must be positive")
        IsotropicMaterial(self.E, self.nu, self.rho)
        ts.SolverConfig(self.solver, self.rel_tolerance, self.max_iterations)

    @property
    def taus(self) -> tuple[float, ...]:
        if self.tau is not None:
            return self.tau
        return tuple(self.tau_max / 2**k for k in range(self.halvings + 1))

    @property
    def material(self) -> IsotropicMaterial:
        return IsotropicMaterial(self.E, self.nu, self.rho)

    @property
    def solver_config(self) -> ts.SolverConfig:
        return ts.SolverConfig(self.solver, self.rel_tolerance, self.max_iterations)

    def variants(self):
        """(scheme, gamma0) pairs; FEM appears once and carries no gamma0."""
        for s in self.scheme:
            if s == "FEM":
                yield s, None
            else:
                for g in self.gamma0:
                    yield s, g

    def resolved(self) -> str:
        return "\n".join(f"{f.name} = {_render(getattr(self, f.name))}" for f in dataclasses.fields(self))


def _as_tuple(v):
    if isinstance(v, str):
        return tuple(x.strip() for x in v.split(",") if x.strip())
    if isinstance(v, (list, tuple)):
        return tuple(v)
    return (v,)


def _render(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(map(str, v))
    return "" if v is None else str(v)


_BOOL = {"true": True, "1": True, "yes": True, "on": True, "false": False, "0": False, "no": False, "off": False}


def coerce(key: str, raw: str):
    """Parse a config value according to the field's declared type."""
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    if key not in fields:
        raise KeyError(f"unknown config key {key!r}")
    typ = str(fields[key].type)
    raw = raw.strip()
    if "None" in typ and raw.lower() in ("", "none"):
        return None
    if typ.startswith("tuple[float"):
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if typ.startswith("tuple[str"):
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if typ == "bool":
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise ValueError(f"{key}: expected a boolean, got {raw!r}") from None
    if typ == "int":
        return int(raw)
    if typ == "float":
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = coerce(key, value)
    return out


def load_config(path=None, overrides: dict | None = None, full: bool = False) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    if full:
        values["n"] = FULL_SCALE_N
    values.update(overrides or {})
    return ExperimentConfig(**values)


# --- error measurement -------------------------------------------------------


def l2l2_error(trajectory: ts.Trajectory, exact_u, disc) -> float:
    """L2(0,T; L2(Omega)) norm of u - u_h with u_h linear in time on each slab.

    3-point Gauss in time per interval, (p+2)-point Gauss per axis in space.
    """
    times = trajectory.times
    if len(trajectory.u) != len(times):
        raise ValueError(f"trajectory has {len(trajectory.u)} states for {len(times)} time points")
    rule = tensor_rule(gauss_legendre(disc.p + 2))
    trule = gauss_legendre(3)
    ext = disc.mesh.cell_extents()
    X = disc.mesh.cell_origins()[:, None, :] + rule.points[None] * ext[:, None, :]
    jxw = rule.weights[None, :, None] * (ext[:, 0] * ext[:, 1])[:, None, None]
    sh = lagrange_shapes_2d(disc.p, rule.points).values
    prev = np.einsum("cks,qs->cqk", disc.cell_coefficients(disc.full_u(trajectory.u[0], times[0])), sh)
    total = 0.0
    for k in range(1, len(times)):
        cur = np.einsum("cks,qs->cqk", disc.cell_coefficients(disc.full_u(trajectory.u[k], times[k])), sh)
        t0, tau = times[k - 1], times[k] - times[k - 1]
        for s, w in zip(trule.points, trule.weights):
            e = np.asarray(exact_u(t0 + s * tau, X)) - ((1.0 - s) * prev + s * cur)
            total += w * tau * float(np.sum(jxw * e * e))
        prev = cur
    return float(np.sqrt(total))


# --- single simulation ---------------------------------------------------------


def build(cfg: ExperimentConfig, scheme: str, gamma0: float | None):
    mesh = build_unit_square_mesh(cfg.n)
    problem = manufactured_problem(cfg.material)
    return make_discretization(scheme, mesh, cfg.p, problem, gamma0 if gamma0 is not None else 1.0)


def simulate(disc, tau: float, cfg: ExperimentConfig) -> ts.Trajectory:
    n_steps = int(round(cfg.T / tau))
    if n_steps < 1 or not np.isclose(n_steps * tau, cfg.T, rtol=1e-9):
        raise ValueError(f"tau = {tau} does not divide T = {cfg.T}")
    times = np.linspace(0.0, cfg.T, n_steps + 1)
    u0, v0 = disc.initial()
    solver = cfg.solver_config
    if isinstance(disc, DgDiscretization) and disc.penalty.S != 1 and solver.method == "cg":
        solver = dataclasses.replace(solver, method="gmres")
    return ts.run(times, u0, v0, disc.M, disc.A, disc.rhs, solver, path=cfg.path)


@dataclass
class ConvergenceRow:
    scheme: str
    gamma0: float | None
    tau: float
    error: float
    eoc: float = float("nan")


def _tag(scheme, gamma0) -> str:
    return scheme if gamma0 is None else f"{scheme}_g{gamma0:g}"


def _emit(cfg, disc, tag: str, tau: float | None = None):
    if not cfg.emit_matrix:
        return []
    base = Path(cfg.emit_matrix)
    stem = base.with_suffix("") if base.suffix == ".mtx" else base
    written = []
    M, A = disc.M, disc.A
    written.append(write_matrix_market(f"{stem}.{tag}.M.mtx", M, f"mass matrix, {tag}"))
    written.append(write_matrix_market(f"{stem}.{tag}.A.mtx", A, f"stiffness matrix, {tag}"))
    if tau is not None:
        K = ts.condensed_matrix(M, A, tau)
        written.append(write_matrix_market(f"{stem}.{tag}.K.mtx", K, f"condensed matrix M + tau^2/4 A, tau={tau!r}"))
    return written


def _dump_trajectory(cfg, traj: ts.Trajectory, disc, tag: str, tau: float):
    path = Path(cfg.out) / f"trajectory_{tag}_tau{tau:g}.csv"

    def rows():
        for t, u, v in zip(traj.times, traj.u, traj.v):
            fu, fv = disc.full_u(u, t), disc.full_v(v, t)
            for i in range(len(fu)):
                yield t, i, fu[i], fv[i]

    return write_csv(path, ["t", "dof", "u", "v"], rows())


def run_convergence(cfg: ExperimentConfig) -> list[ConvergenceRow]:
    taus = cfg.taus
    rows: list[ConvergenceRow] = []
    telemetry = []
    for scheme, gamma0 in cfg.variants():
        disc = build(cfg, scheme, gamma0)
        tag = _tag(scheme, gamma0)
        _emit(cfg, disc, tag)
        prev = None
        for tau in taus:
            t0 = time.perf_counter()
            traj = simulate(disc, tau, cfg)
            err = l2l2_error(traj, disc.problem.exact_u, disc)
            row = ConvergenceRow(scheme, gamma0, tau, err)
            if prev is not None:
                row.eoc = float(np.log(prev.error / err) / np.log(prev.tau / tau))
            rows.append(row)
            prev = row
            telemetry += [(scheme, gamma0, tau, k + 1, i.iterations, i.residual) for k, i in enumerate(traj.telemetry)]
            if cfg.dump_trajectory:
                _dump_trajectory(cfg, traj, disc, tag, tau)
            log.info("%s tau=%.4e error=%.6e eoc=%.3f (%.1fs)", tag, tau, err, row.eoc, time.perf_counter() - t0)
    out = Path(cfg.out)
    write_csv(out / "convergence.csv", ["scheme", "gamma0", "tau", "error", "eoc"],
              [(r.scheme, r.gamma0, r.tau, r.error, r.eoc) for r in rows])
    write_csv(out / "telemetry.csv", ["scheme", "gamma0", "tau", "interval", "iterations", "residual"], telemetry)
    return rows


def spectral_pair(disc, cfg: ExperimentConfig):
    if isinstance(disc, FemDiscretization):
        return disc.spectral_matrices(cfg.fem_operator)
    return disc.spectral_matrices()


def _cg_iterations(K, tol: float) -> int:
    rhs = K @ np.ones(K.shape[0])
    count = [0]
    spla.cg(K, rhs, rtol=tol, atol=0.0, maxiter=100_000, callback=lambda _: count.__setitem__(0, count[0] + 1))
    return count[0]


@dataclass
class CondRow:
    scheme: str
    gamma0: float | None
    tau: float
    kappa: float
    method: str
    iterations: int
    cg_iterations: int
    kappa_block: float = float("nan")


def run_condnum_sweep(cfg: ExperimentConfig) -> list[CondRow]:
    rows: list[CondRow] = []
    for scheme, gamma0 in cfg.variants():
        disc = build(cfg, scheme, gamma0)
        M, A = spectral_pair(disc, cfg)
        _emit(cfg, disc, _tag(scheme, gamma0))
        for tau in cfg.taus:
            K = ts.condensed_matrix(M, A, tau)
            try:
                est = estimate_condition_spd(K, cfg.cond_method)
                row = CondRow(scheme, gamma0, tau, est.kappa, est.method, est.iterations,
                              _cg_iterations(K, cfg.rel_tolerance))
            except SpectralError as exc:
                log.warning("%s tau=%g: %s", _tag(scheme, gamma0), tau, exc)
                row = CondRow(scheme, gamma0, tau, float("nan"), "failed", 0, 0)
            if cfg.block:
                try:
                    row.kappa_block = condition_number_general(ts.build_block_matrix(ts.TimeSlabSystem(M, A, tau)))
                except SpectralError as exc:
                    log.warning("block system at tau=%g: %s", tau, exc)
            rows.append(row)
            log.info("%s tau=%.4e kappa=%.6e", _tag(scheme, gamma0), tau, row.kappa)
    write_csv(
        Path(cfg.out) / "condnum.csv",
        ["tau", "gamma0", "scheme", "kappa", "method", "iterations", "cg_iterations", "kappa_block"],
        [(r.tau, r.gamma0, r.scheme, r.kappa, r.method, r.iterations, r.cg_iterations, r.kappa_block) for r in rows],
    )
    return rows


def run_spectrum_study(cfg: ExperimentConfig):
    reports = []
    for scheme, gamma0 in cfg.variants():
        disc = build(cfg, scheme, gamma0)
        M, A = spectral_pair(disc, cfg)
        S = getattr(getattr(disc, "penalty", None), "S", None)
        for tau in cfg.taus:
            rep = spectrum_report(ts.condensed_matrix(M, A, tau), label=scheme, tau=tau, p=cfg.p, n=cfg.n,
                                  gamma0=gamma0, S=S, gap=cfg.gap)
            reports.append(rep)
            log.info("%s tau=%.4e clusters=%d compactness=%.6g", _tag(scheme, gamma0), tau,
                     len(rep.clusters), rep.compactness)
    out = Path(cfg.out)

    def spec_rows():
        for rep in reports:
            labels = cluster_labels(rep.normalized, rep.clusters)
            for lam, x, c in zip(rep.eigenvalues, rep.normalized, labels):
                yield rep.tau, rep.gamma0, rep.label, lam, x, c

    write_csv(out / "spectrum.csv", ["tau", "gamma0", "scheme", "eigenvalue", "normalized", "cluster_id"], spec_rows())
    write_csv(
        out / "clusters.csv",
        ["tau", "gamma0", "scheme", "cluster_id", "lo", "hi", "compactness", "kappa"],
        [(r.tau, r.gamma0, r.label, i, lo, hi, r.compactness, r.condition_number)
         for r in reports for i, (lo, hi) in enumerate(r.clusters)],
    )
    return reports


def run_field_dump(cfg: ExperimentConfig, tau: float | None = None):
    """Nodal displacement/velocity at t = T for the first configured variant."""
    tau = tau if tau is not None else cfg.taus[0]
    scheme, gamma0 = next(cfg.variants())
    disc = build(cfg, scheme, gamma0)
    traj = simulate(disc, tau, cfg)
    tag = _tag(scheme, gamma0)
    if cfg.dump_trajectory:
        _dump_trajectory(cfg, traj, disc, tag, tau)
    T = traj.times[-1]
    ref = lagrange_shapes_2d(cfg.p, np.zeros((1, 2))).nodes
    u = evaluate_cells(disc, disc.full_u(traj.u[-1], T), ref)
    v = evaluate_cells(disc, disc.full_v(traj.v[-1], T), ref)
    X = disc.mesh.cell_origins()[:, None, :] + ref[None] * disc.mesh.cell_extents()[:, None, :]
    rows = []
    for c in range(disc.mesh.n_cells):
        for q in range(len(ref)):
            rows.append((c, X[c, q, 0], X[c, q, 1], u[c, q, 0], u[c, q, 1], v[c, q, 0], v[c, q, 1],
                         np.hypot(*u[c, q]), np.hypot(*v[c, q])))
    write_csv(Path(cfg.out) / "field.csv", ["cell", "x", "y", "u1", "u2", "v1", "v2", "u_mag", "v_mag"], rows)
    return np.array(rows)


def run_assemble(cfg: ExperimentConfig):
    if not cfg.emit_matrix:
        raise ValueError("assemble needs --emit-matrix <path>")
    written = []
    for scheme, gamma0 in cfg.variants():
        disc = build(cfg, scheme, gamma0)
        tau = cfg.tau[0] if cfg.tau else None
        written += _emit(cfg, disc, _tag(scheme, gamma0), tau)
        log.info("%s: %d dofs, nnz(A)=%d", _tag(scheme, gamma0), disc.n_dofs, disc.A.nnz)
    return written
