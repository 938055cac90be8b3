"""Independent oracles used by the test suite.

Everything here is deliberately written against different primitives than
the package (mpmath arithmetic, sympy integration, scalar recurrences) so
that agreement is meaningful.
"""

import mpmath as mp
import numpy as np


def mp_char_det(tau, problem, dps=40):
    """Extended-precision characteristic determinant, same normalization
    as beamctl.spectral.char_det, built independently on mpmath."""
    beam = problem.beam
    ch1, ch2 = problem.channels
    with mp.workdps(dps):
        tau = mp.mpc(tau)
        h = mp.mpf(problem.h_spec)
        lam_val = 1j * tau**2 / h**2
        mu_l = mp.mpf(float(beam.mu(beam.length)))
        lam_l = mp.mpf(float(beam.lam(beam.length)))
        ratio = mu_l / lam_l

        def resolvent_term(ch):
            if ch.n == 0:
                return mp.mpc(0)
            a = mp.matrix(ch.a.tolist())
            m = a - lam_val * mp.eye(ch.n)
            x = mp.lu_solve(m, mp.matrix([mp.mpc(v) for v in ch.b]))
            return sum(mp.mpc(ci) * x[i] for i, ci in enumerate(ch.c))

        k1 = (h / lam_l) * ratio ** mp.mpf("-0.25") * (
            ch1.k - lam_val * resolvent_term(ch1) + lam_val * ch1.d
            + lam_val**2 * beam.tip_inertia)
        k2 = (h**3 / lam_l) * ratio ** mp.mpf("-0.75") * (
            ch2.k - lam_val * resolvent_term(ch2) + lam_val * ch2.d
            + lam_val**2 * beam.tip_mass)

        omegas = [mp.mpc(1), mp.mpc(0, 1), mp.mpc(-1), mp.mpc(0, -1)]
        rows = [[], [], [], []]
        for omega in omegas:
            wt = omega * tau
            e = mp.exp(wt)
            rows[0].append(mp.mpc(1))
            rows[1].append(wt)
            rows[2].append((wt**2 + k1 * wt) * e)
            rows[3].append((-wt**3 + k2) * e)
        det = mp.det(mp.matrix(rows))
        scaled = det * mp.exp(-mp.re(tau)) / mp.fabs(tau) ** 10
        return complex(scaled)


def cantilever_tau(n):
    """n-th root of 1 + cos(t) cosh(t) = 0 (clamped-free beam)."""
    f = lambda t: 1 + mp.cos(t) * mp.cosh(t)
    guess = (n - 0.5) * mp.pi
    return float(mp.findroot(f, guess))


def scalar_cn_orbit(a, k, u0, v0, dt, n_steps):
    """Closed-form Crank-Nicolson orbit for a u'' + k u = 0.

    In the scaled variables w = (sqrt(k) u, sqrt(a) v) the update is the
    Cayley transform of a skew matrix, i.e. the exact rotation by
    theta = 2 atan(dt omega / 2), omega = sqrt(k/a).  Orbit points are
    evaluated directly from the accumulated angle (no iterated rounding),
    so they sit on the ellipse a v^2 + k u^2 = const to evaluation
    precision.  Returns (u_n, v_n) arrays over n = 0..n_steps and the
    invariant along the orbit.
    """
    omega = np.sqrt(k / a)
    theta = 2.0 * np.arctan(0.5 * dt * omega)
    w0 = np.array([np.sqrt(k) * u0, np.sqrt(a) * v0])
    angles = theta * np.arange(n_steps + 1)
    cos_t, sin_t = np.cos(angles), np.sin(angles)
    w1 = cos_t * w0[0] + sin_t * w0[1]
    w2 = -sin_t * w0[0] + cos_t * w0[1]
    invariants = w1**2 + w2**2
    return (w1 / np.sqrt(k), w2 / np.sqrt(a)), invariants


def scalar_cn_recurrence_residual(u, v, a, k, dt):
    """Max residual of the scalar CN equations along an orbit."""
    r1 = (u[1:] - u[:-1]) / dt - 0.5 * (v[1:] + v[:-1])
    r2 = a * (v[1:] - v[:-1]) / dt + 0.5 * k * (u[1:] + u[:-1])
    return float(max(np.abs(r1).max(), np.abs(r2).max()))


def sympy_hermite_element(h_val=1.0):
    """Exact single-element mass and stiffness matrices by symbolic
    integration of the Hermite cubics."""
    import sympy as sp

    x, h = sp.symbols("x h", positive=True)
    xi = x / h
    shapes = [
        1 - 3 * xi**2 + 2 * xi**3,
        h * (xi - 2 * xi**2 + xi**3),
        3 * xi**2 - 2 * xi**3,
        h * (xi**3 - xi**2),
    ]
    mass = sp.zeros(4, 4)
    stiff = sp.zeros(4, 4)
    for i in range(4):
        for j in range(4):
            mass[i, j] = sp.integrate(shapes[i] * shapes[j], (x, 0, h))
            stiff[i, j] = sp.integrate(
                sp.diff(shapes[i], x, 2) * sp.diff(shapes[j], x, 2),
                (x, 0, h))
    subs = {h: h_val}
    to_np = lambda m: np.array(m.subs(subs)).astype(float)
    return to_np(mass), to_np(stiff)


def poly_stiffness_energy(coeffs, k1, k2, length=1.0):
    """Exact 1/2 int (u'')^2 + k-terms for a polynomial u (lam = 1)."""
    p = np.polynomial.Polynomial(coeffs)
    d2 = p.deriv(2)
    integral = (d2 * d2).integ()
    e = 0.5 * (integral(length) - integral(0.0))
    e += 0.5 * k1 * p.deriv(1)(length) ** 2 + 0.5 * k2 * p(length) ** 2
    return float(e)
