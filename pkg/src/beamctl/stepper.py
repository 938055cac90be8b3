"""Crank-Nicolson time stepping of the coupled beam/controller system.

The semi-discrete system

    A U'' + B U' + K U + C(zeta) = 0,
    zeta1' = A1 zeta1 + b1 V[ux(L)],    zeta2' = A2 zeta2 + b2 V[u(L)],

is advanced as a first-order system in z = (U, V, zeta1, zeta2) with the
midpoint (Crank-Nicolson) rule.  Internally the beam blocks are stored in
energy coordinates

    uhat = L_K^T U,    vhat = L_A^T V,

where K = L_K L_K^T and A = L_A L_A^T are the (banded) Cholesky
factorizations of the stiffness and mass matrices.  In these coordinates
the squared energy norm

    ||z||^2 = 1/2 U^T K U + 1/2 V^T A V + 1/2 zeta1^T P1 zeta1
              + 1/2 zeta2^T P2 zeta2

is the cancellation-free sum 1/2(|uhat|^2 + |vhat|^2) + certificate terms,
and the uncontrolled update is a Cayley transform of an exactly skew
matrix, hence orthogonal: the scheme's conservation and per-step
dissipation identity hold at machine precision independent of step size.
A physical-coordinate implementation loses ~1e-10 of both to the rounding
of the O(1/h^3) stiffness entries.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from . import controller, fem
from .errors import MissingCertificate, NonFiniteState, SingularSystem

FACTOR_RESIDUAL_TOL = 1e-12


class EnergyCoordinates:
    """Cholesky transforms between physical dofs and energy coordinates."""

    def __init__(self, sys):
        self.sys = sys
        n = sys.n_dofs
        lk_b = sys.k_mat.cholesky_banded()
        la_b = sys.a_mat.cholesky_banded()
        self.lk = _banded_lower_to_dense(lk_b)
        self.la = _banded_lower_to_dense(la_b)
        iv, isl = sys.tip_value_index, sys.tip_slope_index
        eye = np.eye(n)
        # boundary functionals: u(L) = siv.uhat, ux(L) = ssl.uhat,
        # v(L) = riv.vhat, vx(L) = rsl.vhat
        self.siv = sla.solve_triangular(self.lk, eye[iv], lower=True)
        self.ssl = sla.solve_triangular(self.lk, eye[isl], lower=True)
        self.riv = sla.solve_triangular(self.la, eye[iv], lower=True)
        self.rsl = sla.solve_triangular(self.la, eye[isl], lower=True)
        # W = L_K^T L_A^{-T}: the (uhat', vhat) block of the generator
        self.w = sla.solve_triangular(self.la, self.lk, lower=True).T

    @property
    def n_dofs(self):
        return self.sys.n_dofs

    def u_to_hat(self, u_dofs):
        return self.lk.T @ u_dofs

    def v_to_hat(self, v_dofs):
        return self.la.T @ v_dofs

    def u_from_hat(self, uhat):
        return sla.solve_triangular(self.lk, uhat, lower=True, trans="T")

    def v_from_hat(self, vhat):
        return sla.solve_triangular(self.la, vhat, lower=True, trans="T")


def _banded_lower_to_dense(bands):
    bw = bands.shape[0] - 1
    n = bands.shape[1]
    dense = np.zeros((n, n))
    for i in range(bw + 1):
        idx = np.arange(n - i)
        dense[idx + i, idx] = bands[i, :n - i]
    return dense


def hat_generator(coords, channels):
    """Dense first-order generator in energy coordinates.

    Block structure over (uhat, vhat, zeta1, zeta2); the beam block is skew
    by construction and the damping/coupling blocks carry the boundary
    functionals.  Shared by the stepper and the discrete spectrum.
    """
    ch1, ch2 = channels
    n = coords.n_dofs
    n1, n2 = ch1.n, ch2.n
    nz = 2 * n + n1 + n2
    g = np.zeros((nz, nz))
    g[:n, n:2 * n] = coords.w
    g[n:2 * n, :n] = -coords.w.T
    damp = ch2.d * np.outer(coords.riv, coords.riv) \
        + ch1.d * np.outer(coords.rsl, coords.rsl)
    g[n:2 * n, n:2 * n] = -damp
    s1 = slice(2 * n, 2 * n + n1)
    s2 = slice(2 * n + n1, nz)
    if n1:
        g[n:2 * n, s1] = -np.outer(coords.rsl, ch1.c)
        g[s1, n:2 * n] = np.outer(ch1.b, coords.rsl)
        g[s1, s1] = ch1.a
    if n2:
        g[n:2 * n, s2] = -np.outer(coords.riv, ch2.c)
        g[s2, n:2 * n] = np.outer(ch2.b, coords.riv)
        g[s2, s2] = ch2.a
    return g


@dataclass(frozen=True)
class DiscreteState:
    """State (U, V, zeta1, zeta2, t) at one time level.

    The beam blocks are held in energy coordinates; ``u`` and ``v`` expose
    the physical Hermite dof vectors.
    """

    uhat: np.ndarray
    vhat: np.ndarray
    zeta1: np.ndarray
    zeta2: np.ndarray
    t: float
    step_index: int
    coords: EnergyCoordinates

    @property
    def u(self):
        return self.coords.u_from_hat(self.uhat)

    @property
    def v(self):
        return self.coords.v_from_hat(self.vhat)

    @property
    def u_tip(self):
        return float(self.coords.siv @ self.uhat)

    @property
    def ux_tip(self):
        return float(self.coords.ssl @ self.uhat)

    @property
    def v_tip(self):
        return float(self.coords.riv @ self.vhat)

    @property
    def vx_tip(self):
        return float(self.coords.rsl @ self.vhat)

    # tip momenta of the first-order formulation, derived not stored
    @property
    def tip_momentum(self):
        return self.coords.sys.tip_mass * self.v_tip

    @property
    def tip_angular_momentum(self):
        return self.coords.sys.tip_inertia * self.vx_tip

    def pack(self):
        return np.concatenate([self.uhat, self.vhat, self.zeta1, self.zeta2])


def initial_state(coords, u_dofs, v_dofs, zeta1, zeta2, t=0.0):
    """Build a state from physical dof vectors and controller states."""
    n = coords.n_dofs
    u_dofs = np.asarray(u_dofs, dtype=float).reshape(n)
    v_dofs = np.asarray(v_dofs, dtype=float).reshape(n)
    return DiscreteState(
        uhat=coords.u_to_hat(u_dofs),
        vhat=coords.v_to_hat(v_dofs),
        zeta1=np.asarray(zeta1, dtype=float).reshape(-1).copy(),
        zeta2=np.asarray(zeta2, dtype=float).reshape(-1).copy(),
        t=float(t),
        step_index=0,
        coords=coords,
    )


class SteppingOperator:
    """Factored Crank-Nicolson update for a fixed step dt (dt < 0 steps
    backwards; the scheme is symmetric)."""

    def __init__(self, coords, channels, dt):
        if dt == 0.0:
            raise ValueError("dt must be nonzero")
        self.coords = coords
        self.channels = channels
        self.dt = float(dt)
        self.n1 = channels[0].n
        self.n2 = channels[1].n
        g = hat_generator(coords, channels)
        x = 0.5 * self.dt * g
        nz = g.shape[0]
        self.m_hat = np.eye(nz) - x
        self.r_hat = np.eye(nz) + x
        try:
            self.lu = sla.lu_factor(self.m_hat)
        except Exception as exc:          # pragma: no cover - guarded anyway
            raise SingularSystem(str(exc)) from exc
        res = self.factorization_residual()
        if not np.isfinite(res) or res > FACTOR_RESIDUAL_TOL:
            raise SingularSystem(
                f"factorization residual {res:.3e} exceeds "
                f"{FACTOR_RESIDUAL_TOL:g}")

    def factorization_residual(self, seed=0):
        rng = np.random.default_rng(seed)
        y = rng.standard_normal(self.m_hat.shape[0])
        x = sla.lu_solve(self.lu, y)
        return float(np.linalg.norm(self.m_hat @ x - y)
                     / np.linalg.norm(y))

    def _advance(self, z):
        rhs = self.r_hat @ z
        x = sla.lu_solve(self.lu, rhs)
        x += sla.lu_solve(self.lu, rhs - self.m_hat @ x)
        return x

    def step(self, state):
        """Advance one step; raises NonFiniteState on overflow/NaN."""
        z_in = state.pack()
        if not np.all(np.isfinite(z_in)):
            raise NonFiniteState(f"non-finite state at t = {state.t:g}")
        z = self._advance(z_in)
        if not np.all(np.isfinite(z)):
            raise NonFiniteState(f"non-finite state at t = {state.t:g}")
        n = self.coords.n_dofs
        return DiscreteState(
            uhat=z[:n],
            vhat=z[n:2 * n],
            zeta1=z[2 * n:2 * n + self.n1],
            zeta2=z[2 * n + self.n1:],
            t=state.t + self.dt,
            step_index=state.step_index + 1,
            coords=state.coords,
        )


def build_stepper(sys, channels, dt, coords=None):
    """Assemble and factor the coupled Crank-Nicolson update."""
    if coords is None:
        coords = EnergyCoordinates(sys)
    return SteppingOperator(coords, channels, dt)


def ensure_certificates(system):
    """Attach kyp_solve certificates to channels lacking one.

    Returns (system, notes); notes records the provenance of every
    certificate so energy curves are reproducible.
    """
    notes = []
    chans = []
    for label, ch in zip(("channel1", "channel2"), system.channels):
        if ch.certificate is None:
            cert = controller.kyp_solve(ch)
            chans.append(ch.with_certificate(cert))
            notes.append(f"{label}: {cert.provenance} "
                         f"(eps={cert.eps:g}, delta={cert.delta:g})")
        else:
            chans.append(ch)
            notes.append(f"{label}: {ch.certificate.provenance}")
    return replace(system, channel1=chans[0], channel2=chans[1]), notes


def _zeta_energy(zeta, channel):
    if channel.n == 0:
        return 0.0
    if channel.certificate is None:
        raise MissingCertificate(
            "channel has controller states but no certificate; call "
            "kyp_solve or ensure_certificates first")
    return 0.5 * float(zeta @ channel.certificate.p @ zeta)


def discrete_norm_sq(state, sys, channels):
    """Squared energy norm 1/2 U^T K U + 1/2 V^T A V + certificate terms.

    K and A already contain the boundary spring/mass contributions, so no
    separate boundary terms appear.
    """
    e = 0.5 * (float(state.uhat @ state.uhat)
               + float(state.vhat @ state.vhat))
    e += _zeta_energy(state.zeta1, channels[0])
    e += _zeta_energy(state.zeta2, channels[1])
    return e


def dof_norm_sq(sys_or_coords, u_dofs, v_dofs, zeta1, zeta2, channels):
    """discrete_norm_sq for raw physical dof vectors (used for error norms)."""
    coords = sys_or_coords if isinstance(sys_or_coords, EnergyCoordinates) \
        else EnergyCoordinates(sys_or_coords)
    uh = coords.u_to_hat(np.asarray(u_dofs, dtype=float))
    vh = coords.v_to_hat(np.asarray(v_dofs, dtype=float))
    e = 0.5 * (float(uh @ uh) + float(vh @ vh))
    e += _zeta_energy(np.asarray(zeta1, dtype=float), channels[0])
    e += _zeta_energy(np.asarray(zeta2, dtype=float), channels[1])
    return e


def dissipation_decrement(state_n, state_np1, channels, dt):
    """Predicted drop ||z^n||^2 - ||z^{n+1}||^2 of the scheme.

    Evaluates the exact per-step dissipation of the coupled Crank-Nicolson
    update: boundary-velocity squares weighted by delta, completed squares
    with the certificate vector q, and the eps-weighted midpoint controller
    energies.  Zero in the uncontrolled limit.
    """
    ch1, ch2 = channels
    dux = float(state_n.coords.ssl @ (state_np1.uhat - state_n.uhat)) / dt
    du = float(state_n.coords.siv @ (state_np1.uhat - state_n.uhat)) / dt
    total = 0.0
    for ch, rate, za, zb in (
        (ch1, dux, state_n.zeta1, state_np1.zeta1),
        (ch2, du, state_n.zeta2, state_np1.zeta2),
    ):
        if ch.n == 0 and ch.d == 0.0:
            continue
        cert = ch.certificate
        if cert is None:
            raise MissingCertificate(
                "dissipation decrement requires certificates")
        zbar = 0.5 * (za + zb)
        total += cert.delta * rate**2
        qdot = float(cert.q @ zbar) if ch.n else 0.0
        total += 0.5 * (qdot + cert.delta_tilde * rate) ** 2
        if ch.n:
            total += 0.5 * cert.eps * float(zbar @ cert.p @ zbar)
    return dt * total


def cn_velocity_residual(state_n, state_np1, dt):
    """||(U^{n+1}-U^n)/dt - (V^{n+1}+V^n)/2|| in physical dofs.

    Diagnostic for the displacement update equation of the scheme.
    """
    du = (state_np1.u - state_n.u) / dt
    vbar = 0.5 * (state_np1.v + state_n.v)
    return float(np.linalg.norm(du - vbar))


class TrajectoryWriter:
    """CSV writer for simulation trajectories.

    Columns: step, t, energy, u_L, ux_L, decrement_predicted,
    decrement_actual.
    """

    HEADER = ("step", "t", "energy", "u_L", "ux_L",
              "decrement_predicted", "decrement_actual")

    def __init__(self, path, flush_every=100):
        from .csvio import RowWriter
        self._writer = RowWriter(path, self.HEADER, flush_every)

    def write(self, state, energy, decrement_predicted=0.0,
              decrement_actual=0.0):
        self._writer.write((
            state.step_index, state.t, energy,
            state.u_tip, state.ux_tip,
            decrement_predicted, decrement_actual,
        ))

    def close(self):
        self._writer.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
