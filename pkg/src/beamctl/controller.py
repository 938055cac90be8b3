"""Transfer-function analysis and dissipativity certificates for a channel.

The transfer function of a channel (A, b, c, d) is

    G(s) = c . (sI - A)^{-1} b + d.

A channel is strictly positive real when Re G(i w) >= delta > 0 for all
w >= 0.  ``kyp_solve`` constructs matrices (P, q) and scalars (eps, delta)
certifying this via

    P A + A^T P = -q q^T - eps P,          (R1)
    P b         = c - q sqrt(2 (d-delta)). (R2)

Strategy: on a minimal realization, scan eps over a fixed decreasing grid
and solve the coupled system (R1)-(R2) exactly, using that for any q the
Lyapunov solution P(q) of (R1) is PSD when A + (eps/2) I is Hurwitz; the
remaining equation F(q) = P(q) b - c + delta_tilde q = 0 is solved by a
damped Newton iteration.  Non-minimal realizations are orthogonally reduced
(Kalman controllable/observable stages), solved there, and embedded back as
P = V P_min V^T + gamma (I - V V^T), q = V q_min, with the residuals
re-verified after embedding.
"""

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import (NoCertificateFound, NonMinimalRealization, NotSpr,
                     SingularResolvent)
from .model import TOL_KYP, KypCertificate

EPS_GRID = (2.0, 1.0, 0.5, 0.1, 0.01)
RANK_RTOL = 1e-8
COND_LIMIT = 1e14
EMBED_GAMMA = 1e-12


def transfer_eval(channel, s):
    """Evaluate G(s) = c.(sI-A)^{-1}b + d with one linear solve.

    Raises SingularResolvent when the condition estimate of (sI - A)
    exceeds 1e14.
    """
    n = channel.n
    if n == 0:
        return complex(channel.d)
    m = s * np.eye(n) - channel.a
    if np.linalg.cond(m, 1) > COND_LIMIT:
        raise SingularResolvent(f"s = {s} is too close to an eigenvalue of A")
    x = np.linalg.solve(m, channel.b.astype(complex))
    return complex(channel.c @ x + channel.d)


def spr_margin(channel, omega_max=1e6, samples=512):
    """Min of Re G(i w) over a log grid on [0, omega_max] plus the w->inf
    limit Re G(i inf) = d; raises NotSpr when the minimum is <= 0."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if omega_max <= 0:
        raise ValueError("omega_max must be positive")
    values = [channel.d]                       # analytic limit at w = inf
    values.append(transfer_eval(channel, 0.0).real)
    if channel.n > 0:
        scale = max(np.abs(np.linalg.eigvals(channel.a)).min(), 1e-6)
        lo = min(1e-3 * scale, omega_max * 1e-9)
        grid = np.geomspace(lo, omega_max, samples - 1)
        values.extend(transfer_eval(channel, 1j * w).real for w in grid)
    margin = float(min(values))
    if margin <= 0.0:
        raise NotSpr(f"min Re G(i w) = {margin:.6g} <= 0")
    return margin


def kyp_residual(channel, cert):
    """Residual norms (Frobenius, 2-norm) of the two certificate identities."""
    if channel.n == 0:
        return (0.0, 0.0)
    p, q = cert.p, cert.q
    r1 = p @ channel.a + channel.a.T @ p + np.outer(q, q) + cert.eps * p
    r2 = p @ channel.b - channel.c + q * cert.delta_tilde
    return (float(np.linalg.norm(r1, "fro")), float(np.linalg.norm(r2)))


def _staircase_basis(a, vecs):
    """Orthonormal basis of the smallest A-invariant subspace containing
    the given vectors (Krylov span), via one SVD."""
    n = a.shape[0]
    cols = []
    for v in np.atleast_2d(vecs):
        w = v.astype(float)
        for _ in range(n):
            cols.append(w)
            w = a @ w
    m = np.stack(cols, axis=1)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    rank = int(np.sum(s > RANK_RTOL * s[0])) if s.size else 0
    return u[:, :rank]


def controllability_rank(channel):
    return _staircase_basis(channel.a, channel.b).shape[1]


def observability_rank(channel):
    return _staircase_basis(channel.a.T, channel.c).shape[1]


def is_minimal(channel):
    n = channel.n
    return (controllability_rank(channel) == n
            and observability_rank(channel) == n)


def minimal_realization(channel):
    """Orthogonal reduction to a minimal (A, b, c) preserving G.

    Returns (a, b, c, v) where v is the isometry from the minimal space
    into R^n, i.e. the reduced system is (v^T A v, v^T b, v^T c).
    """
    a, b, c = channel.a, channel.b, channel.c
    v = _staircase_basis(a, b)                      # controllable subspace
    a1, b1, c1 = v.T @ a @ v, v.T @ b, v.T @ c
    w = _staircase_basis(a1.T, c1)                  # observable part of it
    if w.shape[1] < a1.shape[0]:
        a1, b1, c1 = w.T @ a1 @ w, w.T @ b1, w.T @ c1
        v = v @ w
    return a1, b1, c1, v


def _lyap_p(a_eps, q):
    """PSD solution of a_eps^T P + P a_eps = -q q^T."""
    return sla.solve_continuous_lyapunov(a_eps.T, -np.outer(q, q))


def _solve_minimal(a, b, c, d, delta, eps):
    """Solve (R1)-(R2) for a minimal realization at fixed eps.

    Returns (P, q) or None.  delta_tilde = 0 reduces, for n = 1, to the
    closed form P = c/b, q = sqrt(-P (2A + eps)); otherwise a damped Newton
    iteration on F(q) = P(q) b - c + delta_tilde q is used.
    """
    n = a.shape[0]
    dt = float(np.sqrt(max(2.0 * (d - delta), 0.0)))
    a_eps = a + 0.5 * eps * np.eye(n)
    if np.linalg.eigvals(a_eps).real.max() >= -1e-10:
        return None                      # Lyapunov operator (near) singular

    if n == 1 and dt == 0.0:
        if b[0] == 0.0:
            return None
        p = c[0] / b[0]
        rhs = -p * (2.0 * a[0, 0] + eps)
        if p <= 0.0 or rhs < -1e-15:
            return None
        return np.array([[p]]), np.array([np.sqrt(max(rhs, 0.0))])

    def f_of(q):
        return _lyap_p(a_eps, q) @ b - c + dt * q

    seeds = [np.zeros(n)]
    cn = np.linalg.norm(c)
    if cn > 0:
        seeds += [c / cn * s for s in (0.1, 1.0, 10.0)]
    for q in seeds:
        q = q.astype(float)
        fq = f_of(q)
        for _ in range(100):
            if np.linalg.norm(fq) <= 1e-13 * max(1.0, np.linalg.norm(c)):
                break
            # Jacobian dF/dq by columns: dP = lyap(-(e_j q^T + q e_j^T))
            jac = np.empty((n, n))
            for j in range(n):
                e = np.zeros(n)
                e[j] = 1.0
                dp = sla.solve_continuous_lyapunov(
                    a_eps.T, -(np.outer(e, q) + np.outer(q, e)))
                jac[:, j] = dp @ b
            jac += dt * np.eye(n)
            try:
                step = np.linalg.solve(jac, fq)
            except np.linalg.LinAlgError:
                break
            t = 1.0
            for _ in range(30):
                qn = q - t * step
                fn = f_of(qn)
                if np.linalg.norm(fn) < np.linalg.norm(fq):
                    break
                t *= 0.5
            else:
                break
            q, fq = qn, fn
        if np.linalg.norm(fq) <= 1e-12 * max(1.0, np.linalg.norm(c)):
            p = _lyap_p(a_eps, q)
            if n == 0 or np.linalg.eigvalsh(p).min() > 0.0:
                return p, q
    return None


def kyp_solve(channel, delta=None, tol=TOL_KYP, eps_grid=EPS_GRID):
    """Construct a certificate (P, q, eps, delta) for an SPR channel.

    delta defaults to the sampled SPR margin (tight).  Requires
    0 < delta <= d and a Hurwitz A.  Non-minimal realizations emit a
    NonMinimalRealization warning and go through orthogonal reduction and
    embedding.  Raises NoCertificateFound if no eps on the grid yields
    residuals within ``tol``.
    """
    n = channel.n
    if n == 0:
        return KypCertificate(
            p=np.zeros((0, 0)), q=np.zeros(0), eps=0.0,
            delta=channel.d, d=channel.d, provenance="trivial (n=0)")
    if not channel.is_hurwitz():
        raise ValueError("channel matrix A must be Hurwitz")
    if delta is None:
        delta = spr_margin(channel)
    if not (0.0 < delta <= channel.d + 1e-15):
        raise ValueError(f"delta = {delta:g} violates 0 < delta <= d = "
                         f"{channel.d:g}")

    minimal = is_minimal(channel)
    if minimal:
        a, b, c, v = channel.a, channel.b, channel.c, None
    else:
        warnings.warn(NonMinimalRealization(
            f"realization is non-minimal (controllability rank "
            f"{controllability_rank(channel)}, observability rank "
            f"{observability_rank(channel)}, n = {n}); reducing"))
        a, b, c, v = minimal_realization(channel)

    for eps in eps_grid:
        got = _solve_minimal(a, b, c, channel.d, delta, eps)
        if got is None:
            continue
        p, q = got
        if v is not None:
            gamma = EMBED_GAMMA * max(np.linalg.norm(p, 2), 1.0)
            p = v @ p @ v.T + gamma * (np.eye(n) - v @ v.T)
            q = v @ q
        cert = KypCertificate(
            p=p, q=q, eps=eps, delta=delta, d=channel.d,
            provenance="kyp_solve" + ("" if minimal else " (reduced)"))
        r1, r2 = kyp_residual(channel, cert)
        if r1 <= tol and r2 <= tol and cert.min_eig_p() > 0.0:
            return cert
    raise NoCertificateFound(
        f"no eps in {tuple(eps_grid)} produced residuals <= {tol:g}")
