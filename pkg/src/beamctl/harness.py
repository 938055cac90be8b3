"""Experiment driver: simulation runs, self-convergence studies in h and
dt, spectrum dumps, certificate checks; CSV persistence throughout.

Initial data are polynomials satisfying the clamping u(0) = u_x(0) = 0
(checked on the coefficients).  Defaults u0 = x^2, v0 = 0 excite many
modes; absolute error values of the convergence studies depend on this
choice and on the energy-norm error measure, so only the observed rates
are meaningful reference numbers.
"""

import os
from dataclasses import dataclass, replace

import numpy as np

from . import config as configmod
from . import controller, csvio, fem, spectral, stepper
from .errors import ConfigError, MeshMismatch


@dataclass(frozen=True)
class ExperimentConfig:
    """System plus initial data, time grid, mesh and output settings."""

    system: object
    u0: tuple = configmod.DEFAULT_INITIAL_U0
    v0: tuple = configmod.DEFAULT_INITIAL_V0
    zeta1_0: np.ndarray | None = None
    zeta2_0: np.ndarray | None = None
    t_final: float = 50.0
    dt: float = 0.01
    mesh_p: int = 100
    flush_every: int = 100
    kind: str = "simulate"

    def __post_init__(self):
        for name, poly in (("u0", self.u0), ("v0", self.v0)):
            c = np.asarray(poly, dtype=float)
            if c.size >= 1 and c[0] != 0.0 or c.size >= 2 and c[1] != 0.0:
                raise ConfigError(
                    f"{name} must vanish with its derivative at x=0 "
                    f"(coefficients of 1 and x must be zero)")
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")
        if self.t_final < self.dt:
            raise ConfigError("t_final must be >= dt")
        if self.mesh_p < 1:
            raise ConfigError("mesh must have at least one element")

    def initial_dofs(self, mesh):
        u = np.polynomial.Polynomial(self.u0)
        v = np.polynomial.Polynomial(self.v0)
        return (fem.interpolate_dofs(mesh, u, u.deriv()),
                fem.interpolate_dofs(mesh, v, v.deriv()))

    def initial_zetas(self):
        n1 = self.system.channel1.n
        n2 = self.system.channel2.n
        z1 = np.zeros(n1) if self.zeta1_0 is None else \
            np.asarray(self.zeta1_0, dtype=float).reshape(n1)
        z2 = np.zeros(n2) if self.zeta2_0 is None else \
            np.asarray(self.zeta2_0, dtype=float).reshape(n2)
        return z1, z2


def load_config(path, **overrides):
    doc = configmod.load_document(path)
    system = configmod.load_system(doc)
    init = doc.get("initial") or {}
    sim = doc.get("simulation") or {}
    exp = doc.get("experiment") or {}
    kwargs = dict(
        system=system,
        u0=tuple(init.get("u0", configmod.DEFAULT_INITIAL_U0)),
        v0=tuple(init.get("v0", configmod.DEFAULT_INITIAL_V0)),
        zeta1_0=init.get("zeta1"),
        zeta2_0=init.get("zeta2"),
        t_final=float(sim.get("t_final", 50.0)),
        dt=float(sim.get("dt", 0.01)),
        mesh_p=int(sim.get("mesh", 100)),
        flush_every=int(sim.get("flush_every", 100)),
        kind=str(exp.get("kind", "simulate")),
    )
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# simulation

@dataclass(frozen=True)
class SimulationSummary:
    energy_initial: float
    energy_final: float
    max_identity_violation: float
    steps: int
    certificate_notes: tuple
    trajectory_path: str | None


def _prepared_run(cfg, mesh_p=None, dt=None):
    system, notes = stepper.ensure_certificates(cfg.system)
    mesh = fem.Mesh(p=mesh_p or cfg.mesh_p, length=system.beam.length)
    sys_a = fem.assemble(system, mesh)
    coords = stepper.EnergyCoordinates(sys_a)
    op = stepper.build_stepper(sys_a, system.channels, dt or cfg.dt,
                               coords=coords)
    u0, v0 = cfg.initial_dofs(mesh)
    z1, z2 = cfg.initial_zetas()
    state = stepper.initial_state(coords, u0, v0, z1, z2)
    return system, sys_a, op, state, notes


def simulate(cfg, out_dir=None):
    """Run the configured simulation; returns a summary and, when out_dir
    is given, writes trajectory.csv and summary.csv there."""
    system, sys_a, op, state, notes = _prepared_run(cfg)
    n_steps = int(round(cfg.t_final / cfg.dt))
    writer = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        writer = stepper.TrajectoryWriter(
            os.path.join(out_dir, "trajectory.csv"), cfg.flush_every)

    energy = stepper.discrete_norm_sq(state, sys_a, system.channels)
    e0 = energy
    if writer:
        writer.write(state, energy)
    max_violation = 0.0
    for _ in range(n_steps):
        new_state = op.step(state)
        new_energy = stepper.discrete_norm_sq(new_state, sys_a,
                                              system.channels)
        predicted = stepper.dissipation_decrement(state, new_state,
                                                  system.channels, cfg.dt)
        actual = energy - new_energy
        max_violation = max(max_violation,
                            abs(actual - predicted) / max(e0, 1e-300))
        if writer:
            writer.write(new_state, new_energy, predicted, actual)
        state, energy = new_state, new_energy
    if writer:
        writer.close()

    summary = SimulationSummary(
        energy_initial=e0,
        energy_final=energy,
        max_identity_violation=max_violation,
        steps=n_steps,
        certificate_notes=tuple(notes),
        trajectory_path=(os.path.join(out_dir, "trajectory.csv")
                         if out_dir else None),
    )
    if out_dir is not None:
        csvio.write_rows(
            os.path.join(out_dir, "summary.csv"), ("key", "value"),
            [("energy_initial", summary.energy_initial),
             ("energy_final", summary.energy_final),
             ("max_identity_violation", summary.max_identity_violation),
             ("steps", summary.steps),
             ("certificate_channel1", notes[0]),
             ("certificate_channel2", notes[1])])
    return summary


# ---------------------------------------------------------------------------
# convergence studies

@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    h: float
    error: float
    rate: float | None


def inject_dofs(dofs, mesh_coarse, mesh_fine):
    """Exact embedding of a coarse Hermite function into a nested fine mesh
    (values and slopes of the coarse piecewise cubic at the fine nodes)."""
    if mesh_fine.p % mesh_coarse.p != 0:
        raise MeshMismatch(
            f"fine mesh P={mesh_fine.p} is not a multiple of coarse "
            f"P={mesh_coarse.p}")
    xs = mesh_fine.nodes[1:]
    vals = fem.eval_dofs(mesh_coarse, dofs, xs, deriv=0)
    slps = fem.eval_dofs(mesh_coarse, dofs, xs, deriv=1)
    out = np.empty(mesh_fine.n_dofs)
    out[0::2] = vals
    out[1::2] = slps
    return out


def _snapshot_run(cfg, mesh_p, dt, n_steps, keep_every):
    system, sys_a, op, state, _ = _prepared_run(cfg, mesh_p=mesh_p, dt=dt)
    snaps = [(state.u, state.v, state.zeta1, state.zeta2)]
    for n in range(n_steps):
        state = op.step(state)
        if (n + 1) % keep_every == 0:
            snaps.append((state.u, state.v, state.zeta1, state.zeta2))
    return sys_a, snaps


def _l2_time_error(coords_ref, mesh_ref, mesh_run, snaps_run, snaps_ref,
                   stride, dt, channels):
    """sqrt(dt sum_n ||z_run^n - z_ref^n||^2) with coarse dofs injected."""
    total = 0.0
    for i, (u, v, z1, z2) in enumerate(snaps_run):
        ur, vr, z1r, z2r = snaps_ref[i * stride]
        ui = inject_dofs(u, mesh_run, mesh_ref) if mesh_run.p != mesh_ref.p \
            else u
        vi = inject_dofs(v, mesh_run, mesh_ref) if mesh_run.p != mesh_ref.p \
            else v
        total += stepper.dof_norm_sq(coords_ref, ui - ur, vi - vr,
                                     z1 - z1r, z2 - z2r, channels)
    return float(np.sqrt(dt * total))


def _rates(rows):
    out = []
    prev = None
    for dt, h, err in rows:
        rate = None if prev is None or err == 0.0 else float(np.log2(prev / err))
        out.append(ConvergenceRow(dt=dt, h=h, error=err, rate=rate))
        prev = err
    return out


def converge_space(cfg, h_list=None):
    """Self-convergence in h at fixed dt; reference on a doubled mesh.

    The reference runs at the *same* dt as every test run so that the
    (h-independent) time-discretization error cancels from the comparison;
    a dt/4 reference buries the spatial error under an O(dt^2) offset and
    produces flat rates.
    """
    system, _ = stepper.ensure_certificates(cfg.system)
    cfg = replace(cfg, system=system)
    length = system.beam.length
    if h_list is None:
        h_list = [length / p for p in (16, 32, 64, 128)]
    ps = []
    for h in h_list:
        p = length / h
        if abs(p - round(p)) > 1e-9:
            raise MeshMismatch(f"h = {h:g} does not divide the length")
        ps.append(int(round(p)))
    if any(b <= a for a, b in zip(ps, ps[1:])):
        raise MeshMismatch("h_list must be strictly decreasing")
    p_ref = 2 * ps[-1]
    if any(p_ref % p for p in ps):
        raise MeshMismatch("h_list entries do not nest into the reference")

    dt = cfg.dt
    n_steps = int(round(cfg.t_final / dt))
    mesh_ref = fem.Mesh(p=p_ref, length=length)
    sys_ref, snaps_ref = _snapshot_run(cfg, p_ref, dt, n_steps, 1)
    coords_ref = stepper.EnergyCoordinates(sys_ref)
    rows = []
    for p, h in zip(ps, h_list):
        mesh_run = fem.Mesh(p=p, length=length)
        _, snaps = _snapshot_run(cfg, p, dt, n_steps, 1)
        err = _l2_time_error(coords_ref, mesh_ref, mesh_run, snaps,
                             snaps_ref, 1, dt, system.channels)
        rows.append((dt, h, err))
    return _rates(rows)


def converge_time(cfg, dt_list=None):
    """Self-convergence in dt at fixed h; reference at dt_min / 4."""
    system, _ = stepper.ensure_certificates(cfg.system)
    cfg = replace(cfg, system=system)
    if dt_list is None:
        dt_list = [6.4e-6, 3.2e-6, 1.6e-6, 8e-7, 4e-7, 2e-7]
    for a, b in zip(dt_list, dt_list[1:]):
        if abs(a / b - 2.0) > 1e-9:
            raise ConfigError("dt_list must decrease by exact factors of 2")
    dt_ref = dt_list[-1] / 4.0
    t_final = cfg.t_final
    mesh = fem.Mesh(p=cfg.mesh_p, length=system.beam.length)
    n_ref = int(t_final / dt_ref + 1e-9)
    _, snaps_ref = _snapshot_run(cfg, cfg.mesh_p, dt_ref, n_ref, 1)
    sys_a = fem.assemble(system, mesh)
    coords = stepper.EnergyCoordinates(sys_a)
    rows = []
    for dt in dt_list:
        n_steps = int(t_final / dt + 1e-9)
        stride = int(round(dt / dt_ref))
        _, snaps = _snapshot_run(cfg, cfg.mesh_p, dt, n_steps, 1)
        err = _l2_time_error(coords, mesh, mesh, snaps, snaps_ref,
                             stride, dt, system.channels)
        rows.append((dt, mesh.h, err))
    return _rates(rows)


def write_convergence_csv(rows, path):
    csvio.write_rows(
        path, ("dt", "h", "error", "rate"),
        [(r.dt, r.h, r.error, "" if r.rate is None else r.rate)
         for r in rows])


# ---------------------------------------------------------------------------
# spectrum

def spectrum_study(cfg, n_max, out_path=None, cross_check_mesh=None):
    """Newton roots for n = 1..n_max with the asymptotic comparison column;
    optional discrete-spectrum cross-check on a given mesh."""
    problem = spectral.transform_tables(cfg.system)
    roots = []
    for n in range(1, n_max + 1):
        roots.append(spectral.newton_root(n, problem, known_roots=roots))
    asym = [spectral.asymptotic_lambda(r.n, problem) for r in roots]
    if out_path is not None:
        csvio.write_rows(
            out_path,
            ("n", "re_tau", "im_tau", "re_lambda", "im_lambda",
             "residual", "abs_err_vs_asymptotic"),
            [(r.n, r.tau.real, r.tau.imag, r.lam.real, r.lam.imag,
              r.residual, abs(r.lam - a)) for r, a in zip(roots, asym)])
    cross = None
    if cross_check_mesh:
        system, _ = stepper.ensure_certificates(cfg.system)
        mesh = fem.Mesh(p=cross_check_mesh, length=system.beam.length)
        sys_a = fem.assemble(system, mesh)
        vals = spectral.discrete_spectrum(sys_a, system.channels)
        cross = []
        for r in roots[:5]:
            j = int(np.argmin(np.abs(vals - r.lam)))
            cross.append((r.n, r.lam, complex(vals[j]),
                          abs(vals[j] - r.lam) / abs(r.lam)))
    return roots, asym, cross


# ---------------------------------------------------------------------------
# certificate check

def kyp_check(cfg, write_back_path=None):
    """Print margin, certificate and residuals per channel; optionally
    write solved certificates back into the configuration file."""
    system = cfg.system
    lines = []
    solved = []
    for name, ch in (("channel1", system.channel1),
                     ("channel2", system.channel2)):
        margin = controller.spr_margin(ch) if (ch.n or ch.d > 0) else 0.0
        cert = ch.certificate
        if cert is None and (ch.n or ch.d > 0):
            cert = controller.kyp_solve(ch)
        solved.append(ch.with_certificate(cert) if cert else ch)
        if cert is None:
            lines.append(f"{name}: uncontrolled (no certificate needed)")
            continue
        r1, r2 = controller.kyp_residual(ch, cert)
        lines.append(
            f"{name}: margin={margin:.6g} eps={cert.eps:g} "
            f"delta={cert.delta:g} min_eig_P={cert.min_eig_p():.3e} "
            f"residuals=({r1:.3e}, {r2:.3e}) [{cert.provenance}]")
    ok = True
    for ch in solved:
        if ch.certificate is not None and ch.n > 0:
            r1, r2 = controller.kyp_residual(ch, ch.certificate)
            ok = ok and r1 <= 1e-10 and r2 <= 1e-10
    if write_back_path:
        configmod.write_certificates(
            write_back_path,
            replace(system, channel1=solved[0], channel2=solved[1]))
    return lines, ok
