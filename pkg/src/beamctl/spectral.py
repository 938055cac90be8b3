"""Closed-loop eigenvalues: exact characteristic determinant, Newton roots,
and the general-coefficient asymptotic eigenvalue formula.

Eigenvalues lambda of the coupled beam/controller generator satisfy the
fourth-order boundary-value problem

    (lam u'')'' + mu lambda^2 u = 0,   u(0) = u'(0) = 0,
    lam(L) u''(L) + K1(lambda) u'(L) = 0,
    -(lam u'')'(L) + K2(lambda) u(L) = 0,

where K_j(lambda) = k_j - lambda ((A_j - lambda I)^{-1} b_j).c_j
+ lambda d_j + lambda^2 {J, M}.  With the substitution lambda = i tau^2/h^2,
h = int_0^L (mu/lam)^{1/4} dx, and the stretched coordinate y(x) in [0, 1],
constant-coefficient beams admit the exact fundamental system
e^{omega tau y}, omega in {1, i, -1, -i}, and the eigenvalues are the zeros
of a 4x4 boundary-condition determinant.  For variable coefficients only
the asymptotic formula

    lambda_n = i [ ((2n-1) pi / (2 h))^2
                   + (4 h mu(L)^{3/4} lam(L)^{1/4} / M - I) / (2 h^2) ]
               + O(1/n)

is available, with I = int_0^1 alpha2_tilde(y) dy a beam-only constant.
"""

from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import PchipInterpolator

from .errors import DuplicateRoot, EigensolverFailure, NoConvergence, \
    ResolventSingular
from .stepper import EnergyCoordinates, hat_generator

OMEGAS = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)
TOL_ROOT = 1e-9
DEDUP_RADIUS = 0.1
MAX_NEWTON_ITER = 50
_GAUSS_PTS, _GAUSS_WTS = leggauss(10)


def _composite_gauss(f, a, b, n_panels):
    """Composite 10-point Gauss integral of f over [a, b]."""
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    x = mid[:, None] + half * _GAUSS_PTS[None, :]
    return float(np.sum(f(x) @ _GAUSS_WTS) * half)


@dataclass(frozen=True)
class SpectralProblem:
    """Transform tables and channel data for the eigenvalue computations."""

    beam: object
    channels: tuple
    h_spec: float
    i_const: float
    y_of_x: object
    x_of_y: object

    @property
    def is_constant_coefficient(self):
        return self.beam.mu.is_constant and self.beam.lam.is_constant

    def density_ratio(self, x, deriv=0):
        """(mu/lam)(x) and its first two derivatives."""
        mu, lam = self.beam.mu, self.beam.lam
        m0, l0 = mu(x), lam(x)
        if deriv == 0:
            return m0 / l0
        m1, l1 = mu(x, 1), lam(x, 1)
        if deriv == 1:
            return m1 / l0 - m0 * l1 / l0**2
        m2, l2 = mu(x, 2), lam(x, 2)
        return (m2 / l0 - 2.0 * m1 * l1 / l0**2 - m0 * l2 / l0**2
                + 2.0 * m0 * l1**2 / l0**3)

    def alpha3(self, x):
        """Third-derivative coefficient of the stretched eigenvalue ODE."""
        mu, lam = self.beam.mu, self.beam.lam
        g = 1.5 * mu(x, 1) / mu(x) + 0.5 * lam(x, 1) / lam(x)
        return self.h_spec * self.density_ratio(x) ** (-0.25) * g

    def alpha2(self, x):
        """Second-derivative coefficient of the stretched eigenvalue ODE."""
        lam = self.beam.lam
        r = self.density_ratio(x)
        r1 = self.density_ratio(x, 1)
        r2 = self.density_ratio(x, 2)
        return (1.0 / self.h_spec**2) * (
            -9.0 / 16.0 * r**-1.5 * r1**2
            + r**-0.5 * r2
            + 1.5 * (lam(x, 1) / lam(x)) * r**-0.5 * r1
            + (lam(x, 2) / lam(x)) * r**0.5
        )

    def _alpha3_dx(self, x):
        mu, lam = self.beam.mu, self.beam.lam
        r = self.density_ratio(x)
        r1 = self.density_ratio(x, 1)
        g = 1.5 * mu(x, 1) / mu(x) + 0.5 * lam(x, 1) / lam(x)
        g1 = (1.5 * (mu(x, 2) * mu(x) - mu(x, 1) ** 2) / mu(x) ** 2
              + 0.5 * (lam(x, 2) * lam(x) - lam(x, 1) ** 2) / lam(x) ** 2)
        return self.h_spec * (-0.25 * r**-1.25 * r1 * g + r**-0.25 * g1)

    def alpha2_tilde(self, x):
        """alpha2 - 3/8 alpha3^2 - 3/2 d(alpha3)/dy, parametrized by x."""
        dxdy = self.h_spec * self.density_ratio(x) ** (-0.25)
        return (self.alpha2(x) - 0.375 * self.alpha3(x) ** 2
                - 1.5 * self._alpha3_dx(x) * dxdy)

    def eigenfunction_prefactor(self, x):
        """exp(-1/4 int_0^y alpha3) in the closed form
        (mu/mu(0))^{-3/8} (lam/lam(0))^{-1/8}."""
        mu, lam = self.beam.mu, self.beam.lam
        return ((mu(x) / mu(0.0)) ** (-0.375)
                * (lam(x) / lam(0.0)) ** (-0.125))


def transform_tables(system, n_panels_per_piece=256):
    """Build the stretched-coordinate tables for a control system.

    h and the constant I are integrated by composite Gauss quadrature to
    well below 1e-12 for smooth data; y(x) is tabulated on a fine grid and
    inverted by monotone (pchip) interpolation.
    """
    beam = system.beam
    channels = system.channels

    def wint(x):
        return (beam.mu(x) / beam.lam(x)) ** 0.25

    # cumulative integral of (mu/lam)^{1/4} on a per-piece grid
    xs = [0.0]
    cum = [0.0]
    bps = np.union1d(beam.mu.breakpoints, beam.lam.breakpoints)
    for a, b in zip(bps[:-1], bps[1:]):
        edges = np.linspace(a, b, n_panels_per_piece + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1] - edges[0])
        vals = wint(mids[:, None] + half * _GAUSS_PTS[None, :]) @ _GAUSS_WTS
        for e, v in zip(edges[1:], vals * half):
            xs.append(float(e))
            cum.append(cum[-1] + float(v))
    xs = np.array(xs)
    cum = np.array(cum)
    h_spec = cum[-1]
    y_tab = cum / h_spec
    y_of_x = PchipInterpolator(xs, y_tab)
    x_of_y = PchipInterpolator(y_tab, xs)

    prob = SpectralProblem(beam=beam, channels=channels, h_spec=h_spec,
                           i_const=0.0, y_of_x=y_of_x, x_of_y=x_of_y)
    if prob.is_constant_coefficient:
        i_const = 0.0
    else:
        # I = int (alpha2 - 3/8 alpha3^2) y' dx - 3/2 [alpha3]_0^L
        def f(x):
            return ((prob.alpha2(x) - 0.375 * prob.alpha3(x) ** 2)
                    * wint(x) / h_spec)

        i_const = 0.0
        for a, b in zip(bps[:-1], bps[1:]):
            i_const += _composite_gauss(f, a, b, n_panels_per_piece)
        i_const -= 1.5 * (prob.alpha3(beam.length) - prob.alpha3(0.0))

    y_end = float(y_of_x(beam.length))
    if abs(y_end - 1.0) > 1e-12:
        raise ValueError(f"stretched coordinate not normalized: y(L) = {y_end!r}")
    return replace(prob, i_const=float(i_const))


@dataclass(frozen=True)
class SpectralRoot:
    """One closed-loop eigenvalue: index, tau, lambda, residual, iterations."""

    n: int
    tau: complex
    lam: complex
    residual: float
    iterations: int
    residual_history: tuple = ()


def _kappas(problem, lam_val):
    """Boundary-condition coefficients kappa_1, kappa_2 at lambda."""
    beam = problem.beam
    h = problem.h_spec
    mu_l = float(beam.mu(beam.length))
    lam_l = float(beam.lam(beam.length))
    ratio = mu_l / lam_l
    out = []
    tips = (beam.tip_inertia, beam.tip_mass)
    scales = (h / lam_l * ratio**-0.25, h**3 / lam_l * ratio**-0.75)
    for ch, tip, scale in zip(problem.channels, tips, scales):
        if ch.n:
            eig_dist = np.min(np.abs(np.linalg.eigvals(ch.a) - lam_val))
            if eig_dist < 1e-10 * max(1.0, abs(lam_val)):
                raise ResolventSingular(
                    f"lambda = {lam_val} hits the spectrum of a channel")
            resolvent = np.linalg.solve(
                ch.a - lam_val * np.eye(ch.n), ch.b.astype(complex))
            g = ch.c @ resolvent
        else:
            g = 0.0
        out.append(scale * (ch.k - lam_val * g + lam_val * ch.d
                            + lam_val**2 * tip))
    return out


def char_det(tau, problem):
    """Scaled characteristic determinant at tau (constant-coefficient path).

    Builds the 4x4 boundary-condition determinant over the exact
    fundamental system e^{omega tau y} and returns it normalized by
    e^{-Re tau} |tau|^{-10}.  The normalization is applied through exact
    per-column scaling, so no overflow occurs for any representable tau.
    """
    if not problem.is_constant_coefficient:
        raise ValueError("exact determinant requires constant mu and lam")
    tau = complex(tau)
    if tau == 0:
        return complex(np.nan)
    h = problem.h_spec
    lam_val = 1j * tau**2 / h**2
    kap1, kap2 = _kappas(problem, lam_val)
    mat = np.empty((4, 4), dtype=complex)
    scale_exp = 0.0 + 0.0j
    for j, omega in enumerate(OMEGAS):
        wt = omega * tau
        if wt.real > 0.0:
            col_e = 1.0            # column divided by e^{wt}
            row12 = np.exp(-wt)
            scale_exp += wt
        else:
            col_e = np.exp(wt)
            row12 = 1.0
        mat[0, j] = row12
        mat[1, j] = wt * row12
        mat[2, j] = (wt**2 + kap1 * wt) * col_e
        mat[3, j] = (-wt**3 + kap2) * col_e
    det = np.linalg.det(mat)
    return det * np.exp(scale_exp - tau.real) / abs(tau) ** 10


def asymptotic_lambda(n, problem):
    """Leading-order eigenvalue i[((2n-1)pi/2h)^2 + (4h mu_L^{3/4}
    lam_L^{1/4}/M - I)/(2h^2)]; purely imaginary by construction."""
    beam = problem.beam
    h = problem.h_spec
    k = n - 0.5
    shift = (4.0 * h / beam.tip_mass
             * float(beam.mu(beam.length)) ** 0.75
             * float(beam.lam(beam.length)) ** 0.25
             - problem.i_const) / (2.0 * h**2)
    return 1j * ((k * np.pi / h) ** 2 + shift)


def initial_guess(n, problem):
    """(n - 1/2) pi plus the first-order correction, clamped to the strip."""
    beam = problem.beam
    k = n - 0.5
    corr = (4.0 * problem.h_spec / beam.tip_mass
            * float(beam.mu(beam.length)) ** 0.75
            * float(beam.lam(beam.length)) ** 0.25
            - problem.i_const) / (4.0 * k * np.pi)
    corr = float(np.clip(corr, -1.2, 1.2))
    return k * np.pi + corr + 0.02j


def _newton_iterate(f, tau0, rel_step=1e-6):
    tau = complex(tau0)
    fval = f(tau)
    history = [abs(fval)]
    for it in range(1, MAX_NEWTON_ITER + 1):
        step = rel_step * max(abs(tau), 1e-3)
        deriv = (f(tau + step) - f(tau - step)) / (2.0 * step)
        if deriv == 0:
            break
        delta = fval / deriv
        # damp when the full step does not reduce |f| (low modes)
        factor = 1.0
        for _ in range(10):
            cand = tau - factor * delta
            fcand = f(cand)
            if abs(fcand) <= abs(fval) or factor < 1e-3:
                break
            factor *= 0.5
        tau, fval = cand, fcand
        history.append(abs(fval))
        if abs(factor * delta) <= 1e-12 * abs(tau) and abs(fval) <= TOL_ROOT:
            return tau, abs(fval), it, tuple(history)
    raise NoConvergence(
        f"Newton did not converge from {tau0}: |f| = {abs(fval):.3e}")


def newton_root(n, problem, known_roots=(), tol_root=TOL_ROOT):
    """Locate the n-th eigenvalue-family root by damped Newton iteration.

    The root is confined to the strip (n-1) pi < Re tau < n pi and
    canonicalized to Re tau >= 0, Im tau > 0 (so Re lambda < 0 maps to the
    physical half-plane).  Raises DuplicateRoot when the result lands
    within 0.1 of an already-found root of a different index, NoConvergence
    when every start fails.
    """
    if n < 1:
        raise ValueError("mode index must be >= 1")
    f = lambda t: char_det(t, problem)
    lo, hi = (n - 1) * np.pi, n * np.pi
    starts = [initial_guess(n, problem)]
    base = (n - 0.5) * np.pi
    starts += [base + s + 0.05j for s in (0.3, -0.3, 0.8, -0.8)]
    # coarse scan fallback
    grid_re = np.linspace(lo + 0.05, hi - 0.05, 40)
    grid_im = np.geomspace(1e-4, 1.0, 12)
    scan = min(
        ((abs(f(re + 1j * im)), re + 1j * im)
         for re in grid_re for im in grid_im),
        key=lambda p: p[0])
    starts.append(scan[1])

    last_exc = None
    for tau0 in starts:
        try:
            tau, res, its, hist = _newton_iterate(f, tau0)
        except NoConvergence as exc:
            last_exc = exc
            continue
        if tau.real < 0:
            tau = -tau
        if tau.imag < 0:
            continue                       # mirror root; physical one has Im > 0
        if not (lo - 1e-9 < tau.real < hi + 1e-9):
            continue
        for other in known_roots:
            if other.n != n and abs(tau - other.tau) < DEDUP_RADIUS:
                raise DuplicateRoot(
                    f"root for n = {n} collides with n = {other.n} "
                    f"at tau = {tau:.6f}")
        lam_val = 1j * tau**2 / problem.h_spec**2
        return SpectralRoot(n=n, tau=tau, lam=lam_val, residual=res,
                            iterations=its, residual_history=hist)
    raise last_exc or NoConvergence(f"no admissible root found for n = {n}")


def eigenfunction_asymptotic(n, y, problem):
    """Large-n eigenfunction shape at stretched coordinate y in [0, 1]."""
    y = np.asarray(y, dtype=float)
    k = (n - 0.5) * np.pi
    shape = (np.exp(-k * y) - np.cos(k * y) + np.sin(k * y)
             + (-1.0) ** n * np.exp(k * (y - 1.0)))
    x = problem.x_of_y(y)
    return problem.eigenfunction_prefactor(x) * shape


def discrete_spectrum(sys, channels, return_vectors=False, size_limit=2000):
    """Eigenvalues of the linearized coupled FEM/controller generator.

    Computed in beam energy coordinates, where the undamped block is
    exactly skew-symmetric: dissipativity of the generator is then visible
    to the eigensolver instead of being destroyed by the O(1/h^4)
    non-normality of the raw companion form.  Sorted by |Im|.
    """
    ch1, ch2 = channels
    nz = 2 * sys.n_dofs + ch1.n + ch2.n
    if nz > size_limit:
        raise EigensolverFailure(
            f"dense eigensolve of size {nz} exceeds the limit {size_limit}")
    coords = EnergyCoordinates(sys)
    g = hat_generator(coords, channels)
    try:
        if return_vectors:
            vals, vecs = np.linalg.eig(g)
        else:
            vals = np.linalg.eigvals(g)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    order = np.argsort(np.abs(vals.imag), kind="stable")
    if return_vectors:
        return vals[order], vecs[:, order], coords
    return vals[order]
