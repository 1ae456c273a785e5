"""Coordinate charts for three-dimensional contact manifolds.

Two families of charts are provided:

* ambient charts, whose points are vectors in R^4 = C^2 with the
  identification ``(x1, y1, x2, y2) <-> (w1, w2)``: :class:`StandardSphere`,
  :class:`Ellipsoid` and :class:`CongruenceChart`;
* tube charts, with coordinates ``(x, y, t)`` on a solid torus around a
  periodic orbit sitting at ``x = y = 0`` and contact form
  ``dt + f1(x, y) dx + f2(x, y) dy``: :class:`MartinetTube` and the
  Hopf blow-up chart :class:`BlowupChart`.

Every chart exposes the same evaluators: the contact form as a covector,
its exterior derivative, the Reeb field, the projection onto the contact
plane and a complex structure on the contact plane.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NumericError

TANGENCY_TOL = 1e-8
LOCUS_TOL = 1e-8
J0_PLANAR = np.array([[0.0, -1.0], [1.0, 0.0]])


def complex_to_real(w) -> np.ndarray:
    """``(w1, w2)`` in C^2 -> ``(x1, y1, x2, y2)`` in R^4 (broadcasts)."""
    w = np.asarray(w, dtype=complex)
    out = np.empty(w.shape[:-1] + (4,))
    out[..., 0::2] = w.real
    out[..., 1::2] = w.imag
    return out


def real_to_complex(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[..., 0::2] + 1j * v[..., 1::2]


def j0_matrix() -> np.ndarray:
    """Multiplication by i on C^2, written as a 4x4 real matrix."""
    J = np.zeros((4, 4))
    J[1, 0] = J[3, 2] = 1.0
    J[0, 1] = J[2, 3] = -1.0
    return J


J0 = j0_matrix()


class ContactChart:
    """Common machinery; subclasses supply ``contact_form`` and ``reeb``."""

    kind = "abstract"
    dim = 3
    # per-coordinate period (None for non-periodic coordinates)
    periods: tuple = (None, None, None)
    # minimal period of the distinguished orbit of the chart
    orbit_period = 2 * np.pi

    # -- locus and tangency ------------------------------------------
    def check_point(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,) or not np.all(np.isfinite(v)):
            raise DomainError(f"{self.kind}: expected a finite {self.dim}-vector, got {v!r}")
        return v

    def check_tangent(self, v, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dim,) or not np.all(np.isfinite(w)):
            raise DomainError(f"{self.kind}: tangent must be a finite {self.dim}-vector")
        return w

    def project_to_manifold(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float)

    def wrap(self, dv) -> np.ndarray:
        """Reduce a coordinate difference along periodic directions."""
        dv = np.array(dv, dtype=float)
        for i, per in enumerate(self.periods):
            if per is not None:
                dv[..., i] = (dv[..., i] + per / 2) % per - per / 2
        return dv

    # -- contact data ------------------------------------------------
    def contact_form(self, v) -> np.ndarray:
        raise NotImplementedError

    def reeb(self, v) -> np.ndarray:
        raise NotImplementedError

    def J_xi(self, v, w) -> np.ndarray:
        raise NotImplementedError

    def eval_contact_form(self, v, w) -> float:
        v = self.check_point(v)
        w = self.check_tangent(v, w)
        return float(self.contact_form(v) @ w)

    def xi_project(self, v, w) -> np.ndarray:
        v = self.check_point(v)
        w = self.check_tangent(v, w)
        return w - (self.contact_form(v) @ w) * self.reeb(v)

    def lambda_jacobian(self, v) -> np.ndarray:
        """``D[i, j] = d lambda_j / d v_i`` by central differences."""
        v = np.asarray(v, dtype=float)
        h = 1e-5 * max(1.0, float(np.linalg.norm(v)))
        if not np.isfinite(h) or h <= np.finfo(float).tiny:
            raise NumericError("finite-difference step underflow")
        D = np.empty((self.dim, self.dim))
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            D[i] = (self.contact_form(v + e) - self.contact_form(v - e)) / (2 * h)
        return D

    def d_lambda(self, v, u, w) -> float:
        v = self.check_point(v)
        u = self.check_tangent(v, u)
        w = self.check_tangent(v, w)
        D = self.lambda_jacobian(v)
        return float(u @ D @ w - w @ D @ u)

    def reeb_jacobian(self, v) -> np.ndarray:
        """``DX[i, j] = d X_i / d v_j`` by central differences (h = 1e-6)."""
        v = np.asarray(v, dtype=float)
        h = 1e-6
        DX = np.empty((self.dim, self.dim))
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = h
            DX[:, j] = (self.reeb(v + e) - self.reeb(v - e)) / (2 * h)
        return DX

    def tangent_basis(self, v) -> np.ndarray:
        """Rows form an orthonormal basis of the tangent space at v."""
        return np.eye(self.dim)

    def xi_basis(self, v) -> np.ndarray:
        """Two rows spanning ker(lambda) at v, oriented so dλ(e1, e2) > 0."""
        T = self.tangent_basis(v)
        X = self.reeb(v)
        alpha = self.contact_form(v)
        # project tangent basis into xi, then orthonormalize
        P = T - np.outer(T @ alpha, X)
        U, s, _ = np.linalg.svd(P.T, full_matrices=False)
        e1, e2 = U[:, 0], U[:, 1]
        if self.d_lambda(v, e1, e2) < 0:
            e2 = -e2
        return np.array([e1, e2])


class Ellipsoid(ContactChart):
    """``E(p, q) = {p|w1|^2 + q|w2|^2 = 1}`` with the restriction of
    ``lambda_0 = sum x dy - y dx`` and Reeb field ``A J0 v``,
    ``A = diag(p, p, q, q)``."""

    kind = "Ellipsoid"
    dim = 4

    def __init__(self, p: float = 1.0, q: float = 1.0):
        if not (p > 0 and q > 0):
            raise DomainError("ellipsoid parameters must be positive")
        self.p = float(p)
        self.q = float(q)
        self.A = np.diag([self.p, self.p, self.q, self.q])
        self.orbit_period = 2 * np.pi / self.p
        # sign guard: lambda(X) = +1 at a reference point
        ref = np.array([1.0 / np.sqrt(self.p), 0.0, 0.0, 0.0])
        self._sign = 1.0 if self.contact_form(ref) @ self._raw_reeb(ref) > 0 else -1.0

    def __repr__(self):
        return f"{self.kind}(p={self.p:g}, q={self.q:g})"

    def defining(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.A @ v - 1.0)

    def gradient(self, v) -> np.ndarray:
        return 2 * self.A @ np.asarray(v, dtype=float)

    def check_point(self, v):
        v = super().check_point(v)
        if abs(self.defining(v)) > LOCUS_TOL:
            raise DomainError(f"{self!r}: point {v} is off the manifold")
        return v

    def check_tangent(self, v, w):
        w = super().check_tangent(v, w)
        g = self.gradient(v)
        if abs(g @ w) > TANGENCY_TOL * max(1.0, np.linalg.norm(g) * np.linalg.norm(w)):
            raise DomainError(f"{self!r}: vector {w} is not tangent at {v}")
        return w

    def project_to_manifold(self, v):
        v = np.asarray(v, dtype=float)
        return v / np.sqrt(v @ self.A @ v)

    def contact_form(self, v):
        x1, y1, x2, y2 = np.asarray(v, dtype=float)
        return np.array([-y1, x1, -y2, x2])

    def _raw_reeb(self, v):
        return self.A @ (J0 @ np.asarray(v, dtype=float))

    def reeb(self, v):
        return self._sign * self._raw_reeb(v)

    def reeb_jacobian(self, v):
        return self._sign * self.A @ J0

    def lambda_jacobian(self, v):
        # lambda_j = (J0 v)_j up to sign, so D = J0^T exactly
        return J0.T.copy()

    def d_lambda(self, v, u, w):
        v = self.check_point(v)
        u = self.check_tangent(v, u)
        w = self.check_tangent(v, w)
        # 2 (dx1^dy1 + dx2^dy2)
        return float(2 * (u[0] * w[1] - u[1] * w[0] + u[2] * w[3] - u[3] * w[2]))

    def tangent_basis(self, v):
        n = self.gradient(v)
        n = n / np.linalg.norm(n)
        Q, _ = np.linalg.qr(np.column_stack([n, np.eye(4)[:, :3]]))
        basis = Q[:, 1:4].T
        return basis - np.outer(basis @ n, n)

    def J_xi(self, v, w):
        v = np.asarray(v, dtype=float)
        if self.p == self.q:
            return J0 @ np.asarray(w, dtype=float)
        # metric quarter-turn inside xi, oriented by d lambda
        e1, e2 = self.xi_basis(v)
        a, b = e1 @ w, e2 @ w
        return -b * e1 + a * e2

    def point(self, w1: complex, w2: complex) -> np.ndarray:
        """Radial projection of ``(w1, w2)`` onto the ellipsoid."""
        v = complex_to_real([w1, w2])
        if not np.any(v):
            raise DomainError("the origin has no radial projection")
        return self.project_to_manifold(v)


class StandardSphere(Ellipsoid):
    """The unit sphere in C^2 with the standard contact form."""

    kind = "StandardSphere"

    def __init__(self):
        super().__init__(1.0, 1.0)

    def __repr__(self):
        return "StandardSphere()"


class MartinetTube(ContactChart):
    """Tube coordinates ``(x, y, t)`` with ``lambda = dt + f1 dx + f2 dy``.

    ``jfield(x, y)`` gives the 2x2 matrix of J transported to the (x, y)
    plane by the projection ``mu``; defaults to the standard rotation.
    """

    kind = "MartinetTube"
    dim = 3

    def __init__(self, f1=None, f2=None, jfield=None, period: float | None = 2 * np.pi):
        self.f1 = f1 if f1 is not None else (lambda x, y: 0.0 * x)
        self.f2 = f2 if f2 is not None else (lambda x, y: 0.0 * x)
        self.jfield = jfield
        self.periods = (None, None, period)
        self.orbit_period = period if period is not None else np.inf

    @classmethod
    def darboux(cls):
        """``lambda = dx3 + x1 dx2`` on R^3 (no periodic direction)."""
        return cls(f1=lambda x, y: 0.0 * x, f2=lambda x, y: x, period=None)

    def contact_form(self, v):
        x, y, _ = np.asarray(v, dtype=float)
        return np.array([self.f1(x, y), self.f2(x, y), 1.0], dtype=float)

    def reeb(self, v):
        return np.array([0.0, 0.0, 1.0])

    def reeb_jacobian(self, v):
        return np.zeros((3, 3))

    def mu_inverse(self, v) -> np.ndarray:
        """Columns: the lifts of e1, e2 from R^2 into xi at v."""
        x, y, _ = np.asarray(v, dtype=float)
        return np.array([[1.0, 0.0], [0.0, 1.0], [-self.f1(x, y), -self.f2(x, y)]])

    def planar_j(self, x, y) -> np.ndarray:
        return J0_PLANAR.copy() if self.jfield is None else np.asarray(self.jfield(x, y), float)

    def J_xi(self, v, w):
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        return self.mu_inverse(v) @ (self.planar_j(v[0], v[1]) @ w[:2])


class BlowupChart(MartinetTube):
    """Hopf-fibre coordinates ``(x, y, theta)`` on S^3 minus ``{w1 = 0}``.

    The chart map is ``h(nu, theta) = (mu, mu nu)`` with
    ``mu = e^{i theta} / sqrt(1 + |nu|^2)``, ``nu = x + i y``.  Pulling back
    the standard form gives ``d theta + (x dy - y dx) / (1 + |nu|^2)``.
    """

    kind = "BlowupChart"

    def __init__(self):
        super().__init__(
            f1=lambda x, y: -y / (1 + x * x + y * y),
            f2=lambda x, y: x / (1 + x * x + y * y),
            period=2 * np.pi,
        )
        self._sphere = StandardSphere()

    @staticmethod
    def to_sphere(v) -> np.ndarray:
        x, y, th = np.asarray(v, dtype=float)
        nu = x + 1j * y
        mu = np.exp(1j * th) / np.sqrt(1 + abs(nu) ** 2)
        return complex_to_real([mu, mu * nu])

    @staticmethod
    def from_sphere(P) -> np.ndarray:
        w1, w2 = real_to_complex(P)
        if abs(w1) < 1e-12:
            raise DomainError("the blow-up chart excludes the circle {w1 = 0}")
        nu = w2 / w1
        return np.array([nu.real, nu.imag, np.angle(w1) % (2 * np.pi)])

    def chart_jacobian(self, v) -> np.ndarray:
        """4x3 derivative of ``h`` (analytic)."""
        x, y, th = np.asarray(v, dtype=float)
        nu = x + 1j * y
        s = 1 + abs(nu) ** 2
        mu = np.exp(1j * th) / np.sqrt(s)
        dmu_dx = -mu * x / s
        dmu_dy = -mu * y / s
        dmu_dth = 1j * mu
        cols = [
            [dmu_dx, dmu_dx * nu + mu],
            [dmu_dy, dmu_dy * nu + 1j * mu],
            [dmu_dth, dmu_dth * nu],
        ]
        return np.column_stack([complex_to_real(c) for c in cols])

    def J_xi(self, v, w):
        # push forward, apply J0 on the sphere, pull back
        H = self.chart_jacobian(v)
        if np.linalg.cond(H) > 1e8:
            raise DomainError("blow-up chart Jacobian is numerically singular")
        Jw = J0 @ (H @ np.asarray(w, dtype=float))
        sol, *_ = np.linalg.lstsq(H, Jw, rcond=None)
        return sol


class CongruenceChart(ContactChart):
    """S^3 with ``lambda(w) = -(w, [J] v)`` and ``X = -[J] v`` built from a
    congruence object exposing ``J(v) -> 4x4``."""

    kind = "Congruence"
    dim = 4

    def __init__(self, congruence):
        self.congruence = congruence

    def check_point(self, v):
        v = super().check_point(v)
        if abs(v @ v - 1.0) > LOCUS_TOL:
            raise DomainError("congruence chart: point off the unit sphere")
        return v

    def check_tangent(self, v, w):
        w = super().check_tangent(v, w)
        if abs(v @ w) > TANGENCY_TOL * max(1.0, np.linalg.norm(w)):
            raise DomainError("congruence chart: vector not tangent to S^3")
        return w

    def project_to_manifold(self, v):
        v = np.asarray(v, dtype=float)
        return v / np.linalg.norm(v)

    def contact_form(self, v):
        v = np.asarray(v, dtype=float)
        return -(self.congruence.J(v) @ v)

    def reeb(self, v):
        v = np.asarray(v, dtype=float)
        return -(self.congruence.J(v) @ v)

    def tangent_basis(self, v):
        n = np.asarray(v, dtype=float) / np.linalg.norm(v)
        Q, _ = np.linalg.qr(np.column_stack([n, np.eye(4)[:, :3]]))
        basis = Q[:, 1:4].T
        return basis - np.outer(basis @ n, n)

    def J_xi(self, v, w):
        # [J] preserves xi = P_v^perp; its negative is compatible with d lambda
        return -(self.congruence.J(np.asarray(v, float)) @ np.asarray(w, float))


# -- module-level operations -----------------------------------------

def eval_contact_form(chart: ContactChart, v, w) -> float:
    return chart.eval_contact_form(v, w)


def reeb_field(chart: ContactChart, v) -> np.ndarray:
    return chart.reeb(chart.check_point(v))


def xi_project(chart: ContactChart, v, w) -> np.ndarray:
    return chart.xi_project(v, w)


def d_lambda(chart: ContactChart, v, u, w) -> float:
    return chart.d_lambda(v, u, w)


def mu_conjugate_j(chart: ContactChart, x: float, y: float, t: float = 0.0) -> np.ndarray:
    """The 2x2 matrix ``j = mu J mu^{-1}`` of a tube chart at ``(x, y)``."""
    if not isinstance(chart, MartinetTube):
        raise DomainError("mu_conjugate_j needs tube coordinates (x, y, t)")
    v = np.array([x, y, t], dtype=float)
    L = chart.mu_inverse(v)
    if np.linalg.cond(L) > 1e8:
        raise DomainError("projection mu is numerically singular: tube too thick")
    cols = [chart.J_xi(v, L[:, i])[:2] for i in range(2)]
    return np.column_stack(cols)


def straighten(jfield, x0: float, s: float, rtol: float = 1e-11, atol: float = 1e-12):
    """Flow ``d/ds (x1, x2) = j(x1, x2) e1`` from ``(x0, 0)`` for time s."""
    sol = solve_ivp(
        lambda _s, X: np.asarray(jfield(X[0], X[1]), float)[:, 0],
        (0.0, s),
        [x0, 0.0],
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise NumericError(sol.message)
    return sol.y[:, -1]


def straightening_defect(jfield, x0: float, s: float, h: float = 1e-5) -> float:
    """``|phi_*^{-1} j phi_* - j0|`` at ``(x0, s)`` for the straightening map.

    Vanishes when the straightening ODE conjugates ``j`` to the standard
    rotation (e.g. when ``j`` depends on the second coordinate only).
    """
    cx = (straighten(jfield, x0 + h, s) - straighten(jfield, x0 - h, s)) / (2 * h)
    cs = (straighten(jfield, x0, s + h) - straighten(jfield, x0, s - h)) / (2 * h)
    D = np.column_stack([cx, cs])
    pt = straighten(jfield, x0, s)
    j = np.asarray(jfield(pt[0], pt[1]), float)
    return float(np.abs(np.linalg.solve(D, j @ D) - J0_PLANAR).max())
