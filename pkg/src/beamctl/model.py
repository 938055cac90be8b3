"""Physical and controller configuration data with validation.

The plant is a clamped-free beam of length ``L`` with mass density ``mu(x)``
and flexural rigidity ``lam(x)``, a rigid tip body (mass ``M``, moment of
inertia ``J``), and two dynamic feedback channels acting on the tip slope
and the tip deflection.  Each channel is a strictly-positive-real (SPR)
finite-dimensional system (A, b, c, d) with a positive spring gain k; its
dissipativity certificate is the matrix/vector pair (P, q) together with
scalars (eps, delta) satisfying

    P A + Aᵀ P = -q qᵀ - eps P,
    P b = c - q sqrt(2 (d - delta)).

All container types are immutable after construction and safe to share
across threads.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PPoly

from .errors import NotSpr

TOL_KYP = 1e-10
HURWITZ_MARGIN = 1e-12
POSITIVITY_SAMPLES = 1024


class CoefficientField:
    """Piecewise-polynomial coefficient function on [0, L].

    Parameters
    ----------
    breakpoints : array_like, shape (m+1,)
        Strictly increasing interval endpoints; first must be 0.
    coefficients : sequence of m coefficient lists
        Ascending-power polynomial coefficients per interval, in the local
        variable (x - left endpoint).

    Derivatives up to order 4 are exact per piece.  Cross-breakpoint
    smoothness is the caller's responsibility; value and first-derivative
    continuity are checked at construction and a warning is emitted on
    mismatch.
    """

    MAX_DERIVATIVE = 4

    def __init__(self, breakpoints, coefficients):
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("breakpoints must be a 1-d array of length >= 2")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        coeff_lists = [np.asarray(c, dtype=float) for c in coefficients]
        if len(coeff_lists) != bp.size - 1:
            raise ValueError("need exactly one coefficient list per interval")
        degree = max(c.size - 1 for c in coeff_lists)
        # PPoly stores descending powers, shape (degree+1, nintervals)
        table = np.zeros((degree + 1, bp.size - 1))
        for j, c in enumerate(coeff_lists):
            table[degree + 1 - c.size:, j] = c[::-1]
        self._pp = PPoly(table, bp)
        self._derivs = [self._pp]
        for _ in range(self.MAX_DERIVATIVE):
            self._derivs.append(self._derivs[-1].derivative())
        self.breakpoints = bp
        self.coefficients = tuple(tuple(c) for c in coeff_lists)
        self.degree = degree
        self._check_breakpoint_continuity()

    def _check_breakpoint_continuity(self):
        for order in (0, 1):
            d = self._derivs[order]
            for xb in self.breakpoints[1:-1]:
                # one-sided values straight from the piece polynomials
                j = np.searchsorted(self.breakpoints, xb) - 1
                lval = np.polyval(d.c[:, j], xb - d.x[j])
                rval = np.polyval(d.c[:, j + 1], 0.0)
                scale = max(abs(lval), abs(rval), 1.0)
                if abs(lval - rval) > 1e-8 * scale:
                    warnings.warn(
                        f"coefficient field has a C^{order} mismatch at "
                        f"x={xb:g}: {lval:g} (left) vs {rval:g} (right)",
                        stacklevel=3,
                    )

    @classmethod
    def constant(cls, value, length):
        return cls([0.0, float(length)], [[float(value)]])

    @property
    def support(self):
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def is_constant(self):
        vals = [np.asarray(c) for c in self.coefficients]
        if any(np.any(v[1:] != 0.0) for v in vals):
            return False
        first = vals[0][0]
        return all(v[0] == first for v in vals)

    def __call__(self, x, deriv=0):
        """Evaluate the field or one of its derivatives (order <= 4)."""
        if not 0 <= deriv <= self.MAX_DERIVATIVE:
            raise ValueError(f"derivative order {deriv} not in 0..4")
        return self._derivs[deriv](x)

    def min_on_grid(self, samples=POSITIVITY_SAMPLES):
        a, b = self.support
        return float(np.min(self(np.linspace(a, b, samples))))

    def is_positive(self, samples=POSITIVITY_SAMPLES):
        return self.min_on_grid(samples) > 0.0


@dataclass(frozen=True)
class BeamModel:
    """Beam data: densities mu/lam on [0, L], tip mass M, tip inertia J."""

    mu: CoefficientField
    lam: CoefficientField
    length: float
    tip_mass: float
    tip_inertia: float

    def __post_init__(self):
        if not (self.length > 0 and self.tip_mass > 0 and self.tip_inertia > 0):
            raise ValueError("length, tip_mass and tip_inertia must be positive")
        for name, f in (("mu", self.mu), ("lam", self.lam)):
            lo, hi = f.support
            if lo != 0.0 or abs(hi - self.length) > 1e-12 * max(1.0, self.length):
                raise ValueError(f"{name} must be defined exactly on [0, L]")


@dataclass(frozen=True)
class KypCertificate:
    """Dissipativity certificate (P, q, eps, delta) for one channel.

    ``delta_tilde = sqrt(2 (d - delta))`` is derived at construction.
    ``eps = delta = 0`` is permitted only for the degenerate n=0 channel.
    """

    p: np.ndarray
    q: np.ndarray
    eps: float
    delta: float
    d: float
    provenance: str = "user"

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.p, dtype=float))
        if p.size == 0:
            p = p.reshape(0, 0)
        q = np.asarray(self.q, dtype=float).reshape(-1)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        n = p.shape[0]
        if p.shape != (n, n) or q.shape != (n,):
            raise ValueError("certificate dimensions are inconsistent")
        if n > 0:
            if not (0.0 < self.delta <= self.d + 1e-15):
                raise ValueError("delta must satisfy 0 < delta <= d")
            # eps > 0 for a certificate produced by kyp_solve; eps = 0 is
            # tolerated so residual diagnostics can be run on trial data.
            if self.eps < 0.0:
                raise ValueError("eps must be nonnegative")
        if 2.0 * (self.d - self.delta) < -1e-15:
            raise ValueError("delta exceeds d; delta_tilde undefined")

    @property
    def n(self):
        return self.p.shape[0]

    @property
    def delta_tilde(self):
        return float(np.sqrt(max(2.0 * (self.d - self.delta), 0.0)))

    def min_eig_p(self):
        if self.n == 0:
            return np.inf
        return float(np.linalg.eigvalsh(self.p).min())


@dataclass(frozen=True)
class SprChannel:
    """One feedback channel: state matrices (A, b, c), feedthrough d >= 0,
    spring gain k > 0, with an optional attached certificate."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float
    k: float
    certificate: KypCertificate | None = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        if a.size == 0:
            a = a.reshape(0, 0)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        n = a.shape[0]
        if a.shape != (n, n) or b.shape != (n,) or c.shape != (n,):
            raise ValueError("channel dimensions are inconsistent")
        if self.d < 0.0:
            raise ValueError("feedthrough d must be nonnegative")
        if self.k <= 0.0:
            raise ValueError("spring gain k must be positive")
        if self.certificate is not None and self.certificate.n != n:
            raise ValueError("certificate dimension does not match channel")

    @property
    def n(self):
        return self.a.shape[0]

    def hurwitz_abscissa(self):
        """max Re of the eigenvalues of A (``-inf`` for n=0)."""
        if self.n == 0:
            return -np.inf
        return float(np.linalg.eigvals(self.a).real.max())

    def is_hurwitz(self, margin=HURWITZ_MARGIN):
        return self.hurwitz_abscissa() < -margin

    def with_certificate(self, cert):
        return replace(self, certificate=cert)


@dataclass(frozen=True)
class ControlSystem:
    """Beam plus the two feedback channels.

    channel1 acts on the tip slope (measures u_xt(L)); channel2 acts on the
    tip deflection (measures u_t(L)).  The channels share no state.
    """

    beam: BeamModel
    channel1: SprChannel
    channel2: SprChannel

    @property
    def channels(self):
        return (self.channel1, self.channel2)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool | None          # None: not applicable / missing input
    detail: str
    tolerance: float | None = None


@dataclass(frozen=True)
class ValidationReport:
    """Pass/fail table for every standing assumption.

    ``physical_ok`` covers the checks required before assembly and time
    stepping; ``ok`` additionally requires valid certificates.
    """

    checks: tuple = field(default_factory=tuple)

    @property
    def physical_ok(self):
        skip = ("kyp", "spr")
        return all(c.passed for c in self.checks
                   if c.passed is not None
                   and not c.name.startswith(skip))

    @property
    def ok(self):
        return all(c.passed is True or c.passed is None for c in self.checks) \
            and all(c.passed is not None for c in self.checks
                    if c.name.startswith("kyp"))

    def __str__(self):
        rows = []
        for c in self.checks:
            status = {True: "pass", False: "FAIL", None: "n/a "}[c.passed]
            tol = "" if c.tolerance is None else f" (tol {c.tolerance:g})"
            rows.append(f"  [{status}] {c.name}: {c.detail}{tol}")
        return "validation report\n" + "\n".join(rows)


def validate(system):
    """Check every standing assumption; returns a report, never raises.

    The report lists positivity of mu and lam, positivity of L/M/J, the
    Hurwitz property of each channel matrix, k > 0, the sampled SPR margin,
    and the certificate residuals (or "certificate required" when no
    certificate is attached).  Pure: identical inputs give identical
    reports.
    """
    from . import controller  # deferred to avoid an import cycle

    checks = []
    beam = system.beam
    for name, f in (("mu positive", beam.mu), ("lam positive", beam.lam)):
        m = f.min_on_grid()
        checks.append(CheckResult(
            name, m > 0.0,
            f"min over {POSITIVITY_SAMPLES}-point grid = {m:.6g}", 0.0))
    checks.append(CheckResult(
        "geometry positive",
        beam.length > 0 and beam.tip_mass > 0 and beam.tip_inertia > 0,
        f"L={beam.length:g}, M={beam.tip_mass:g}, J={beam.tip_inertia:g}",
        0.0))

    for j, ch in enumerate(system.channels, start=1):
        if ch.n == 0:
            checks.append(CheckResult(
                f"hurwitz A{j}", None, "n=0 channel (no dynamics)"))
        else:
            absc = ch.hurwitz_abscissa()
            checks.append(CheckResult(
                f"hurwitz A{j}", absc < -HURWITZ_MARGIN,
                f"max Re eig(A) = {absc:.3e}", HURWITZ_MARGIN))
        checks.append(CheckResult(
            f"k{j} positive", ch.k > 0.0, f"k{j} = {ch.k:g}", 0.0))

        if ch.n == 0 and ch.d == 0.0:
            checks.append(CheckResult(
                f"spr margin ch{j}", None,
                "uncontrolled channel (no damping): SPR not applicable"))
        else:
            try:
                margin = controller.spr_margin(ch)
                checks.append(CheckResult(
                    f"spr margin ch{j}", margin > 0.0,
                    f"margin = {margin:.6g}", 0.0))
            except NotSpr as exc:
                checks.append(CheckResult(
                    f"spr margin ch{j}", False, str(exc), 0.0))

        if ch.certificate is None:
            applicable = ch.n > 0 or ch.d > 0.0
            checks.append(CheckResult(
                f"kyp residuals ch{j}",
                False if applicable else None,
                "certificate required" if applicable
                else "uncontrolled channel: certificate not applicable"))
        else:
            r1, r2 = controller.kyp_residual(ch, ch.certificate)
            pmin = ch.certificate.min_eig_p()
            ok = r1 <= TOL_KYP and r2 <= TOL_KYP and (ch.n == 0 or pmin > 0.0)
            checks.append(CheckResult(
                f"kyp residuals ch{j}", ok,
                f"|PA+AtP+qqt+eps P|_F = {r1:.3e}, "
                f"|Pb-c+q dtilde|_2 = {r2:.3e}, min eig P = {pmin:.3e}",
                TOL_KYP))

    return ValidationReport(tuple(checks))
