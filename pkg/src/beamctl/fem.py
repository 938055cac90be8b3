"""Hermite-cubic finite elements on a uniform mesh and system assembly.

Each node x_m = m L / P (m = 1..P; the clamped node m = 0 carries no dofs)
owns two global dofs, interleaved value/slope:

    dof 2(m-1)     value  u(x_m)
    dof 2(m-1)+1   slope  u_x(x_m)

so N = 2P, u(L) is dof N-2 and u_x(L) is dof N-1 (the 1-based N-1 / N
convention shifted to 0-based).  The assembled matrices are

    A[i,j] = int mu w_i w_j dx   + M w_i(L) w_j(L) + J w_i'(L) w_j'(L)
    B[i,j] = d1 w_i'(L) w_j'(L)  + d2 w_i(L) w_j(L)          (diagonal)
    K[i,j] = int lam w_i'' w_j'' dx + k1 w_i'(L) w_j'(L) + k2 w_i(L) w_j(L)

with per-element Gauss-Legendre quadrature, exact whenever the coefficient
polynomial degree fits the rule (see ``assemble``).  A and K are symmetric
positive definite with scalar bandwidth 3 and are stored banded.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from numpy.polynomial.legendre import leggauss

from .errors import OutOfRange, QuadratureDegreeTooLow

DEFAULT_QUAD_POINTS = 4
BANDWIDTH = 3


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh with P elements on [0, length]."""

    p: int
    length: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("element count must be >= 1")
        if self.length <= 0:
            raise ValueError("length must be positive")

    @property
    def h(self):
        return self.length / self.p

    @property
    def n_dofs(self):
        return 2 * self.p

    @property
    def nodes(self):
        return np.arange(self.p + 1) * (self.length / self.p)

    def element_of(self, x):
        """Element index containing x (right-open; x = L maps to the last)."""
        if not 0.0 <= x <= self.length * (1 + 1e-12):
            raise OutOfRange(f"x = {x:g} outside [0, {self.length:g}]")
        return min(int(x / self.h), self.p - 1)


def shape_values(xi, h, deriv=0):
    """The four Hermite shape functions on a reference element.

    xi is the local coordinate in [0, 1]; h scales the slope dofs and the
    x-derivatives.  Returns an array of shape (4,) + shape(xi) ordered
    (value-left, slope-left, value-right, slope-right).
    """
    xi = np.asarray(xi, dtype=float)
    if deriv == 0:
        return np.stack([
            1.0 - 3.0 * xi**2 + 2.0 * xi**3,
            h * (xi - 2.0 * xi**2 + xi**3),
            3.0 * xi**2 - 2.0 * xi**3,
            h * (xi**3 - xi**2),
        ])
    if deriv == 1:
        return np.stack([
            (-6.0 * xi + 6.0 * xi**2) / h,
            1.0 - 4.0 * xi + 3.0 * xi**2,
            (6.0 * xi - 6.0 * xi**2) / h,
            3.0 * xi**2 - 2.0 * xi,
        ])
    if deriv == 2:
        return np.stack([
            (-6.0 + 12.0 * xi) / h**2,
            (-4.0 + 6.0 * xi) / h,
            (6.0 - 12.0 * xi) / h**2,
            (6.0 * xi - 2.0) / h,
        ])
    raise ValueError("deriv must be 0, 1 or 2")


def basis_eval(j, x, mesh, deriv=0):
    """Value (or derivative, order <= 2) of global basis function j at x.

    Second derivatives are discontinuous at nodes; there the right-element
    value is returned (left element at x = L).
    """
    if not 0 <= j < mesh.n_dofs:
        raise OutOfRange(f"dof index {j} outside 0..{mesh.n_dofs - 1}")
    e = mesh.element_of(x)
    xi = (x - e * mesh.h) / mesh.h
    node, kind = j // 2 + 1, j % 2           # node in 1..P
    if node == e:
        local = kind                         # left node of the element
    elif node == e + 1:
        local = 2 + kind                     # right node
    else:
        return 0.0
    return float(shape_values(xi, mesh.h, deriv)[local])


def element_dof_indices(e):
    """Global dofs of element e in local order; -1 marks clamped dofs."""
    left = 2 * (e - 1)
    return np.array([left, left + 1, 2 * e, 2 * e + 1])


def gauss_rule(n_points):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    t, w = leggauss(n_points)
    return (t + 1.0) / 2.0, w / 2.0


def interpolate_dofs(mesh, f, df):
    """Nodal interpolant dof vector: values f(x_m), slopes df(x_m)."""
    xs = mesh.nodes[1:]
    dofs = np.empty(mesh.n_dofs)
    dofs[0::2] = f(xs)
    dofs[1::2] = df(xs)
    return dofs


def eval_dofs(mesh, dofs, x, deriv=0):
    """Evaluate the FEM function given by a dof vector at points x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    values = np.concatenate([[0.0], dofs[0::2]])
    slopes = np.concatenate([[0.0], dofs[1::2]])
    for i, xi_pt in enumerate(x):
        e = mesh.element_of(xi_pt)
        xi = (xi_pt - e * mesh.h) / mesh.h
        sh = shape_values(xi, mesh.h, deriv)
        out[i] = (values[e] * sh[0] + slopes[e] * sh[1]
                  + values[e + 1] * sh[2] + slopes[e + 1] * sh[3])
    return out if out.size > 1 else float(out[0])


class SymmetricBanded:
    """Symmetric banded matrix in LAPACK lower-banded storage.

    bands[i, j] = A[j+i, j] for i = 0..bandwidth; symmetry is exact by
    representation.
    """

    def __init__(self, bands):
        self.bands = np.asarray(bands, dtype=float)
        self.bandwidth = self.bands.shape[0] - 1
        self.n = self.bands.shape[1]

    @classmethod
    def from_dense(cls, a, bandwidth=BANDWIDTH, sym_rtol=1e-14):
        n = a.shape[0]
        scale = np.abs(a).max()
        asym = np.abs(a - a.T).max()
        if asym > sym_rtol * max(scale, 1.0):
            raise ValueError(f"matrix is not symmetric: |A-A^T| = {asym:g}")
        beyond = np.abs(np.triu(a, bandwidth + 1)).max() if n > bandwidth + 1 else 0.0
        if beyond > 0.0:
            raise ValueError("matrix has entries beyond the stated bandwidth")
        bw = min(bandwidth, n - 1)
        bands = np.zeros((bw + 1, n))
        for i in range(bw + 1):
            bands[i, :n - i] = np.diagonal(a, -i)
        return cls(bands)

    def to_dense(self):
        a = np.zeros((self.n, self.n))
        for i in range(self.bandwidth + 1):
            idx = np.arange(self.n - i)
            a[idx + i, idx] = self.bands[i, :self.n - i]
            a[idx, idx + i] = self.bands[i, :self.n - i]
        return a

    def matvec(self, x):
        y = self.bands[0] * x
        for i in range(1, self.bandwidth + 1):
            y[i:] += self.bands[i, :self.n - i] * x[:-i]
            y[:-i] += self.bands[i, :self.n - i] * x[i:]
        return y

    def quad_form(self, x):
        return float(x @ self.matvec(x))

    def cholesky_banded(self):
        """Lower banded Cholesky factor; raises LinAlgError if not PD."""
        return sla.cholesky_banded(self.bands, lower=True)

    def is_positive_definite(self):
        try:
            self.cholesky_banded()
            return True
        except np.linalg.LinAlgError:
            return False


@dataclass(frozen=True)
class QuadratureTable:
    """Per-element Gauss data reused by assembly and energy evaluation."""

    points: np.ndarray          # (nq,) on [0, 1]
    weights: np.ndarray         # (nq,)
    x: np.ndarray               # (P, nq) physical points
    mu: np.ndarray              # (P, nq)
    lam: np.ndarray             # (P, nq)


@dataclass(frozen=True)
class AssembledSystem:
    """Matrices of the second-order semi-discrete system A u'' + B u' + K u
    + coupling = 0, plus the shared quadrature table."""

    a_mat: SymmetricBanded
    k_mat: SymmetricBanded
    b_diag: np.ndarray
    mesh: Mesh
    quad: QuadratureTable
    n_quad: int
    tip_mass: float
    tip_inertia: float

    @property
    def n_dofs(self):
        return self.mesh.n_dofs

    @property
    def tip_value_index(self):
        """Dof index of u(L) (0-based; the spec's 1-based N-1)."""
        return self.n_dofs - 2

    @property
    def tip_slope_index(self):
        """Dof index of u_x(L) (0-based; the spec's 1-based N)."""
        return self.n_dofs - 1


def _required_points(mu_deg, lam_deg):
    # mass integrand: cubic*cubic*mu -> 6 + mu_deg; Gauss-n exact to 2n-1
    # stiffness integrand: linear*linear*lam -> 4 + lam_deg
    return max((mu_deg + 7 + 1) // 2, (lam_deg + 5 + 1) // 2, 1)


def assemble(system, mesh, n_quad=DEFAULT_QUAD_POINTS):
    """Assemble the mass, damping and stiffness matrices.

    Raises QuadratureDegreeTooLow when the coefficient degrees exceed the
    exactness budget of the rule (mass: deg mu <= 2 n_quad - 7; stiffness:
    deg lam <= 2 n_quad - 5), reporting the number of points needed.
    """
    beam = system.beam
    need = _required_points(beam.mu.degree, beam.lam.degree)
    if n_quad < need:
        raise QuadratureDegreeTooLow(
            f"coefficient degrees (mu: {beam.mu.degree}, lam: "
            f"{beam.lam.degree}) need {need} Gauss points, got {n_quad}",
            required_points=need)

    p, h = mesh.p, mesh.h
    n = mesh.n_dofs
    xi, w = gauss_rule(n_quad)
    xq = mesh.nodes[:-1, None] + h * xi[None, :]
    mu_q = beam.mu(xq)
    lam_q = beam.lam(xq)
    quad = QuadratureTable(points=xi, weights=w, x=xq, mu=mu_q, lam=lam_q)

    sh0 = shape_values(xi, h, 0)             # (4, nq)
    sh2 = shape_values(xi, h, 2)
    a = np.zeros((n, n))
    k = np.zeros((n, n))
    for e in range(p):
        # element matrices: sum_q w_q coeff(x_q) N_a N_b * h
        ae = h * np.einsum("q,aq,bq->ab", w * mu_q[e], sh0, sh0)
        ke = h * np.einsum("q,aq,bq->ab", w * lam_q[e], sh2, sh2)
        gl = element_dof_indices(e)
        keep = gl >= 0
        ix = np.ix_(gl[keep], gl[keep])
        a[ix] += ae[np.ix_(keep, keep)]
        k[ix] += ke[np.ix_(keep, keep)]

    iv, isl = n - 2, n - 1
    a[iv, iv] += system.beam.tip_mass
    a[isl, isl] += system.beam.tip_inertia
    k[iv, iv] += system.channel2.k
    k[isl, isl] += system.channel1.k
    b_diag = np.zeros(n)
    b_diag[iv] = system.channel2.d
    b_diag[isl] = system.channel1.d

    return AssembledSystem(
        a_mat=SymmetricBanded.from_dense(a),
        k_mat=SymmetricBanded.from_dense(k),
        b_diag=b_diag,
        mesh=mesh,
        quad=quad,
        n_quad=n_quad,
        tip_mass=system.beam.tip_mass,
        tip_inertia=system.beam.tip_inertia,
    )


def control_vector(zeta1, zeta2, system, mesh):
    """Coupling load vector: c2.zeta2 at the u(L) dof, c1.zeta1 at the
    u_x(L) dof, zero elsewhere."""
    zeta1 = np.asarray(zeta1, dtype=float).reshape(-1)
    zeta2 = np.asarray(zeta2, dtype=float).reshape(-1)
    if zeta1.shape != (system.channel1.n,) or zeta2.shape != (system.channel2.n,):
        raise ValueError("controller state dimensions do not match channels")
    out = np.zeros(mesh.n_dofs)
    out[mesh.n_dofs - 2] = system.channel2.c @ zeta2
    out[mesh.n_dofs - 1] = system.channel1.c @ zeta1
    return out


def element_curvatures(dofs, mesh):
    """Endpoint second derivatives (m0, m1) of the FEM function per element.

    Within an element the second derivative is linear; the cancellation-safe
    combinations (6 s - 4 t0 - 2 t1)/h with s the scaled value difference
    keep the evaluation accurate for smooth data.
    """
    h = mesh.h
    vals = np.concatenate([[0.0], dofs[0::2]])
    slps = np.concatenate([[0.0], dofs[1::2]])
    s = np.diff(vals) / h
    t0, t1 = slps[:-1], slps[1:]
    m0 = (6.0 * s - 4.0 * t0 - 2.0 * t1) / h
    m1 = (-6.0 * s + 2.0 * t0 + 4.0 * t1) / h
    return m0, m1


def stiffness_energy(dofs, sys):
    """int lam (u_h'')^2 dx by element quadrature (no boundary terms)."""
    m0, m1 = element_curvatures(dofs, sys.mesh)
    xi, w = sys.quad.points, sys.quad.weights
    uxx = np.outer(m0, 1.0 - xi) + np.outer(m1, xi)
    return float(sys.mesh.h * np.sum((sys.quad.lam * uxx**2) @ w))


def mass_energy(dofs, sys):
    """int mu (v_h)^2 dx by element quadrature (no boundary terms)."""
    mesh = sys.mesh
    vals = np.concatenate([[0.0], dofs[0::2]])
    slps = np.concatenate([[0.0], dofs[1::2]])
    loc = np.stack([vals[:-1], slps[:-1], vals[1:], slps[1:]])
    sh0 = shape_values(sys.quad.points, mesh.h, 0)
    vq = np.einsum("ae,aq->eq", loc, sh0)
    return float(mesh.h * np.sum((sys.quad.mu * vq**2) @ sys.quad.weights))


def dump_matrices(sys, directory, fmt="%.17g"):
    """Write A, B, K in coordinate text format (row col value) for
    cross-validation against external tools."""
    import os

    os.makedirs(directory, exist_ok=True)
    names = {"a": sys.a_mat.to_dense(),
             "k": sys.k_mat.to_dense(),
             "b": np.diag(sys.b_diag)}
    for name, mat in names.items():
        path = os.path.join(directory, f"{name}_mat.txt")
        with open(path, "w") as fh:
            rows, cols = np.nonzero(mat)
            for i, j in zip(rows, cols):
                fh.write(f"{i} {j} {fmt % mat[i, j]}\n")
