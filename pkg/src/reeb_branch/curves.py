"""Explicit finite-energy curves built from algebroid germs, and the
numerical checks that go with them.

Two families are constructed.  On the round sphere a germ
``Phi(z) = (z^n, rho(z))`` gives ``psi = Phi / |Phi|`` and
``a = -log|Phi|``.  On an ellipsoid ``E(p, q)`` with ``q/p = l/k`` the
curve is built in the quotient tube chart ``(x, y, theta)`` where
``x + iy = nu`` is the invariant of the Reeb orbits and
``lambda = dtheta + gamma(|nu|^2)(x dy - y dx)``; it lifts to ``E`` through
``n`` branches that differ by the rotation ``exp(2 pi i l / k)``.

Coordinates on the punctured disc are ``z = eta + i zeta``,
``r = -log|z|`` and ``phi = arg z``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import (
    ConstructionError,
    DecompositionError,
    DomainError,
    NumericError,
)
from .geometry import ContactChart, MartinetTube, StandardSphere, complex_to_real
from .series import DEFAULT_ORDER, TruncatedSeries

TWO_PI = 2 * np.pi
ARC_BAND = 1e-3
FD_STEP = 1e-6


def _wrap_angle(a):
    return (np.asarray(a) + np.pi) % TWO_PI - np.pi


# ----------------------------------------------------------------------
# germs
# ----------------------------------------------------------------------
@dataclass
class AlgebroidGerm:
    """Plane-curve germ ``(z^n, rho(z))`` with ``ord rho >= n + 1`` or ``rho = 0``."""

    n: int
    rho: TruncatedSeries
    target: dict = field(default_factory=lambda: {"kind": "StandardSphere"})

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        self.n = int(self.n)
        if not isinstance(self.rho, TruncatedSeries):
            self.rho = TruncatedSeries(self.rho, DEFAULT_ORDER)
        v = self.rho.valuation()
        if self.target.get("kind", "StandardSphere") == "StandardSphere" and v <= self.n:
            raise DomainError(f"ord(rho) = {v} must exceed n = {self.n}")

    @classmethod
    def monomial(cls, n: int, m: int | None, coeff=1.0, order: int = DEFAULT_ORDER):
        """Germ ``(z^n, coeff z^m)``; ``m=None`` gives ``rho = 0``."""
        rho = (TruncatedSeries.constant(0.0, order) if m is None
               else TruncatedSeries.monomial(m, order, coeff))
        return cls(n, rho)

    @classmethod
    def from_dict(cls, doc: dict, order: int = DEFAULT_ORDER):
        try:
            n = doc["n"]
            pairs = doc.get("rho", [])
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed germ document: {exc}") from None
        rho = (TruncatedSeries.from_pairs(pairs, max(order, len(pairs) - 1)) if pairs
               else TruncatedSeries.constant(0.0, order))
        return cls(n, rho, dict(doc.get("target", {"kind": "StandardSphere"})))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rho": [[c.real, c.imag] for c in self.rho.coeffs],
            "target": self.target,
        }

    def convergence_radius(self) -> float:
        """Root-test estimate from the upper half of the coefficients."""
        c = np.abs(self.rho.coeffs)
        N = len(c) - 1
        ks = np.arange(max(1, N // 2), N + 1)
        tail = c[ks]
        if np.all(tail == 0):
            return np.inf
        nz = tail > 0
        return float(1.0 / np.max(tail[nz] ** (1.0 / ks[nz])))


# ----------------------------------------------------------------------
# curves
# ----------------------------------------------------------------------
class FiniteEnergyCurve:
    """A map ``z -> (psi(z), a(z))`` on a punctured disc.

    Subclasses provide ``psi``, ``a`` and ``theta``; analytic partials are
    optional, with a central-difference fallback that respects periodic
    target coordinates.
    """

    branched = False

    def __init__(self, chart: ContactChart, n: int, radius: float, theta0: float = 0.0,
                 provenance=None):
        self.chart = chart
        self.n = int(n)
        self.radius = float(radius)
        self.theta0 = float(theta0)
        self.provenance = provenance

    # evaluators to be supplied by subclasses
    def psi(self, z) -> np.ndarray:
        raise NotImplementedError

    def a(self, z) -> np.ndarray:
        raise NotImplementedError

    def theta(self, z) -> np.ndarray:
        """Angular coordinate along the asymptotic orbit, in (-pi, pi]."""
        raise NotImplementedError

    def analytic_partials(self, z):
        return None

    def _check_domain(self, z):
        z = np.asarray(z, dtype=complex)
        m = np.abs(z)
        if np.any(m == 0) or np.any(m >= self.radius):
            raise DomainError(f"evaluation point outside the punctured disc of radius {self.radius}")
        return z

    def partials(self, z, method: str = "auto", h: float = FD_STEP):
        """``(psi_eta, psi_zeta, a_eta, a_zeta)`` at the points ``z``."""
        z = self._check_domain(z)
        if method in ("auto", "analytic"):
            out = self.analytic_partials(z)
            if out is not None:
                return out
            if method == "analytic":
                raise NotImplementedError("no closed-form partials for this curve")
        pe = self.chart.wrap(self.psi(z + h) - self.psi(z - h)) / (2 * h)
        pz = self.chart.wrap(self.psi(z + 1j * h) - self.psi(z - 1j * h)) / (2 * h)
        ae = (self.a(z + h) - self.a(z - h)) / (2 * h)
        az = (self.a(z + 1j * h) - self.a(z - 1j * h)) / (2 * h)
        return pe, pz, ae, az

    def in_arc_band(self, z, band: float = ARC_BAND) -> np.ndarray:
        """True where ``arg z`` is within ``band`` of a sector arc."""
        if not self.branched:
            return np.zeros(np.shape(z), dtype=bool)
        d = _wrap_angle(self.theta(z) - self.theta0)
        return np.abs(d) < self.n * band


class SphereCurve(FiniteEnergyCurve):
    """``psi = Phi/|Phi|``, ``a = -log|Phi|`` for ``Phi = (z^n, rho(z))``."""

    def __init__(self, germ: AlgebroidGerm, radius: float | None = None, theta0: float = 0.0):
        R = germ.convergence_radius()
        if radius is None:
            radius = min(1.0, 0.9 * R)
        elif radius >= R:
            raise DomainError("evaluation radius exceeds the germ's convergence disc")
        super().__init__(StandardSphere(), germ.n, radius, theta0, germ)
        self.germ = germ
        self._drho = germ.rho.derivative()

    def _phi(self, z):
        z = self._check_domain(z)
        n = self.n
        return np.stack([z ** n, self.germ.rho(z)], axis=-1)

    def psi(self, z):
        P = self._phi(z)
        N = np.sqrt(np.sum(np.abs(P) ** 2, axis=-1))
        return complex_to_real(P / N[..., None])

    def a(self, z):
        P = self._phi(z)
        return -0.5 * np.log(np.sum(np.abs(P) ** 2, axis=-1))

    def theta(self, z):
        return _wrap_angle(self.n * np.angle(np.asarray(z, dtype=complex)))

    def analytic_partials(self, z):
        n = self.n
        P = self._phi(z)
        dP = np.stack([n * z ** (n - 1), self._drho(z)], axis=-1)
        N2 = np.sum(np.abs(P) ** 2, axis=-1)
        N = np.sqrt(N2)
        psi = P / N[..., None]
        s = np.sum(np.conj(P) * dP, axis=-1)  # Phibar . Phi'
        c = s / N2
        pe = dP / N[..., None] - c.real[..., None] * psi
        pz = 1j * dP / N[..., None] + c.imag[..., None] * psi
        return complex_to_real(pe), complex_to_real(pz), -s.real / N2, s.imag / N2

    def F(self, z):
        """The graph function ``rho / z^n`` in the chart around ``{w2 = 0}``."""
        z = np.asarray(z, dtype=complex)
        return self.germ.rho(z) / z ** self.n


def build_sphere_curve(germ: AlgebroidGerm, radius: float | None = None) -> SphereCurve:
    return SphereCurve(germ, radius)


def trivial_cylinder(n: int) -> SphereCurve:
    return SphereCurve(AlgebroidGerm.monomial(n, None))


# ----------------------------------------------------------------------
# ellipsoid ingredients
# ----------------------------------------------------------------------
def phi_radius(p: float, q: float, k: int, l: int, s) -> float | np.ndarray:
    """Positive root ``r`` of ``p r^2 + q s^(2/k) r^(2l/k) = 1``.

    Vectorised Newton from ``r = 1/sqrt(p)`` (the residual is convex and
    increasing in r for l >= k), with a bracketed fallback.
    """
    if not (p > 0 and q > 0):
        raise DomainError("p and q must be positive")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("s must be nonnegative")
    alpha = 2.0 * l / k
    c = q * s ** (2.0 / k)
    r = np.full(s.shape, 1 / np.sqrt(p))
    for _ in range(60):
        f = p * r * r + c * r ** alpha - 1
        df = 2 * p * r + alpha * c * r ** (alpha - 1)
        step = f / df
        r = r - step
        if np.all(np.abs(step) <= 1e-15 * np.abs(r)):
            break
    bad = ~(np.isfinite(r) & (r > 0))
    resid = np.abs(p * r * r + c * r ** alpha - 1)
    bad |= resid > 1e-12
    if np.any(bad):
        for idx in zip(*np.nonzero(bad)) if s.ndim else [()]:
            g = lambda x, ci=c[idx]: p * x * x + ci * x ** alpha - 1
            r[idx] = brentq(g, 0.0, 1 / np.sqrt(p), xtol=1e-15, rtol=1e-15)
    return float(r) if r.ndim == 0 else r


def gamma(p, q, k, l, S):
    """``(1 - p phi(sqrt S)^2) / (l S)``, written without cancellation."""
    S = np.asarray(S, dtype=float)
    ph = phi_radius(p, q, k, l, np.sqrt(S))
    with np.errstate(divide="ignore"):
        return (q / l) * S ** (1.0 / k - 1.0) * ph ** (2.0 * l / k)


def gamma_hat(p, q, k, l, s: float) -> float:
    """``int_0^s gamma``.

    With ``S = u^k`` the integrand becomes the smooth function
    ``(q k / l) phi(u^(k/2))^(2l/k)``, which removes the endpoint
    singularity present for k > 1.
    """
    if s < 0:
        raise DomainError("s must be nonnegative")
    if s == 0:
        return 0.0
    ub = s ** (1.0 / k)
    integrand = lambda u: phi_radius(p, q, k, l, u ** (k / 2.0)) ** (2.0 * l / k)
    val, err, *rest = quad(integrand, 0.0, ub, epsabs=1e-14, epsrel=1e-13, limit=200,
                           full_output=True)
    if len(rest) > 1 and rest[1]:
        raise NumericError(f"gamma_hat quadrature did not converge: {rest[1]}")
    return q * k / l * val


@dataclass
class EllipsoidCurveParams:
    """Data for a curve in ``E(p, q)`` asymptotic to the orbit ``{w2 = 0}``.

    ``Phi`` is the holomorphic parametrisation of the orbit invariant
    ``nu`` with ``ord Phi = b l``; ``n = c k`` is the charge.
    """

    p: float
    q: float
    k: int
    l: int
    n: int
    Phi: TruncatedSeries
    b: int = 0
    theta0: float = 0.0

    def __post_init__(self):
        ratio = Fraction(self.q).limit_denominator(10**6) / Fraction(self.p).limit_denominator(10**6)
        if ratio != Fraction(self.l, self.k):
            raise DomainError(f"q/p = {ratio} is not l/k = {self.l}/{self.k}")
        if np.gcd(self.k, self.l) != 1:
            raise DomainError("k and l must be coprime")
        if not (self.l > self.k or self.k == self.l == 1):
            raise DomainError("need l > k (or k = l = 1)")
        if self.n % self.k:
            raise DomainError("n must be a multiple of k")
        if self.b < 0:
            raise DomainError("negative b (pole of Phi at 0) is not supported")
        if not isinstance(self.Phi, TruncatedSeries):
            self.Phi = TruncatedSeries(self.Phi, DEFAULT_ORDER)
        v = self.Phi.valuation()
        if v != self.b * self.l:
            raise DomainError(f"ord(Phi) = {v} but b*l = {self.b * self.l}")

    @classmethod
    def from_germ(cls, germ: AlgebroidGerm):
        t = germ.target
        if t.get("kind") != "Ellipsoid":
            raise DomainError("germ target is not an ellipsoid")
        return cls(float(t["p"]), float(t["q"]), int(t["k"]), int(t["l"]), germ.n,
                   germ.rho, int(t.get("b", 0)), float(t.get("theta0", 0.0)))

    @property
    def alpha_hat(self) -> complex:
        # quarter-turn roots of unity are returned exactly
        if (4 * self.l) % self.k == 0:
            return complex(1j ** ((4 * self.l // self.k) % 4))
        return complex(np.exp(2j * np.pi * self.l / self.k))


def beta_project(params: EllipsoidCurveParams, w2, theta):
    """``(w2, theta) -> (chi^{-1}(w2^k e^{-i l theta}), theta)``.

    ``chi(nu) = nu phi(|nu|)^l`` preserves the argument, so its inverse is
    a 1-D solve for the modulus.
    """
    p, q, k, l = params.p, params.q, params.k, params.l
    target = complex(w2) ** k * np.exp(-1j * l * theta)
    m = abs(target)
    if m == 0:
        return 0j, theta
    g = lambda s: s * phi_radius(p, q, k, l, s) ** l - m
    hi = 1.0
    while g(hi) < 0:
        hi *= 2
        if hi > 1e8:
            raise NumericError("chi inverse failed: point lies outside the tube")
    s = brentq(g, 0.0, hi, xtol=1e-15, rtol=1e-15)
    return s * target / m, theta


def ellipsoid_point(params: EllipsoidCurveParams, nu: complex, theta: float, root: int = 0):
    """One of the k points of ``E`` over ``(nu, theta)``."""
    p, q, k, l = params.p, params.q, params.k, params.l
    s = abs(nu)
    ph = phi_radius(p, q, k, l, s)
    w1 = ph * np.exp(1j * theta)
    w2k = nu * ph ** l * np.exp(1j * l * theta)
    w2 = np.abs(w2k) ** (1 / k) * np.exp(1j * (np.angle(w2k) + TWO_PI * root) / k)
    return complex_to_real([w1, w2])


def quotient_tube(params: EllipsoidCurveParams) -> MartinetTube:
    """Tube chart on ``E / Z_k`` with ``lambda = dtheta + gamma(|nu|^2)(x dy - y dx)``.

    This form is ``p`` times the pushed-down standard form, so its Reeb
    orbits have period ``2 pi``.
    """
    p, q, k, l = params.p, params.q, params.k, params.l
    g = lambda x, y: gamma(p, q, k, l, x * x + y * y)
    chart = MartinetTube(lambda x, y: -g(x, y) * y, lambda x, y: g(x, y) * x, None, TWO_PI)
    chart.kind = "EllipsoidQuotient"
    return chart


class EllipsoidCurve(FiniteEnergyCurve):
    """Curve in the quotient tube: ``(nu, theta) = (Phi(z), n arg z)``."""

    branched = True

    def __init__(self, params: EllipsoidCurveParams, radius: float = 1.0):
        super().__init__(quotient_tube(params), params.n, radius, params.theta0, params)
        self.params = params
        self._gh_cache: dict = {}
        self._dPhi = params.Phi.derivative()

    def nu(self, z):
        return self.params.Phi(self._check_domain(z))

    def psi(self, z):
        z = self._check_domain(z)
        nu = self.params.Phi(z)
        return np.stack([nu.real, nu.imag, np.mod(self.n * np.angle(z), TWO_PI)], axis=-1)

    def _gamma_hat(self, S):
        S = np.asarray(S, dtype=float)
        P = self.params
        out = np.empty(S.shape)
        for idx, s in np.ndenumerate(S):
            key = float(s)
            if key not in self._gh_cache:
                self._gh_cache[key] = gamma_hat(P.p, P.q, P.k, P.l, key)
            out[idx] = self._gh_cache[key]
        return out

    def G_hat(self, z):
        """``-gamma_hat(|Phi|^2) / 2``, the non-holomorphic part of ``a``."""
        return -0.5 * self._gamma_hat(np.abs(self.nu(z)) ** 2)

    def a(self, z):
        z = self._check_domain(z)
        return -self.n * np.log(np.abs(z)) + self.G_hat(z)

    def theta(self, z):
        return _wrap_angle(self.n * np.angle(np.asarray(z, dtype=complex)))

    def analytic_partials(self, z):
        # only used when explicitly requested; the default route for this
        # curve is finite differences
        return None

    # -- lift to the ellipsoid -----------------------------------------
    def arg_c(self, z):
        """Continuous argument on the disc slit along the arc ``theta = theta0``."""
        lo = self.theta0 / self.n
        return lo + np.mod(np.angle(z) - lo, TWO_PI)

    def G_branch(self, z, arg=None):
        """``(z^(n+b) f0(z))^(l/k)`` continued along the slit disc."""
        P = self.params
        z = np.asarray(z, dtype=complex)
        if arg is None:
            arg = self.arg_c(z)
        U = P.Phi.shift(-P.b * P.l)
        log_z = np.log(np.abs(z)) + 1j * arg
        return np.exp((P.l / P.k) * (P.n + P.b) * log_z + np.log(U(z)) / P.k)

    def lift(self, z):
        """Point of ``E`` over ``psi(z)``, continuous off the arc ``theta = theta0``."""
        P = self.params
        z = self._check_domain(z)
        nu = P.Phi(z)
        ph = phi_radius(P.p, P.q, P.k, P.l, np.abs(nu))
        w1 = ph * np.exp(1j * self.n * np.angle(z))
        w2 = self.G_branch(z) * ph ** (P.l / P.k) / np.abs(z) ** (self.n * P.l / P.k)
        return complex_to_real(np.stack([w1, w2], axis=-1))


# ----------------------------------------------------------------------
# branch families
# ----------------------------------------------------------------------
@dataclass
class BranchFamily:
    """Per-sector data of a curve written in branched form.

    ``F(m, z, arg)`` is the branch on sector m, ``G_hat(z)`` the real
    non-holomorphic part of ``a``, and ``c`` the branch constants.
    """

    curve: FiniteEnergyCurve
    alpha_hat: complex
    F: Callable
    G_hat: Callable
    c: np.ndarray
    wrap_monodromy: complex = 1.0

    @property
    def n(self):
        return self.curve.n

    @property
    def theta0(self):
        return self.curve.theta0

    def arg_c(self, z):
        lo = self.theta0 / self.n
        return lo + np.mod(np.angle(np.asarray(z, dtype=complex)) - lo, TWO_PI)

    def H(self, z, arg=None):
        """``(1/2 pi i)(log_c z^n - G_hat) - theta0 / 2 pi`` on the slit disc."""
        z = np.asarray(z, dtype=complex)
        if arg is None:
            arg = self.arg_c(z)
        log_zn = self.n * (np.log(np.abs(z)) + 1j * arg)
        return (log_zn - self.G_hat(z)) / (2j * np.pi) - self.theta0 / TWO_PI

    def u(self, z):
        """``t + i a / 2 pi`` with ``t`` the sector-local angle fraction."""
        z = np.asarray(z, dtype=complex)
        t = np.mod((self.curve.theta(z) - self.theta0) / TWO_PI, 1.0)
        return t + 1j * self.curve.a(z) / TWO_PI

    def with_constants(self, c):
        return BranchFamily(self.curve, self.alpha_hat, self.F, self.G_hat,
                            np.asarray(c, dtype=float), self.wrap_monodromy)


def sphere_family(curve: SphereCurve) -> BranchFamily:
    F = lambda m, z, arg=None: curve.F(z)
    G_hat = lambda z: -0.5 * np.log1p(np.abs(curve.F(z)) ** 2)
    return BranchFamily(curve, 1.0 + 0j, F, G_hat, np.arange(curve.n, dtype=float))


def build_ellipsoid_curve(params: EllipsoidCurveParams, radius: float = 1.0,
                          check_tol: float = 1e-6):
    """The quotient curve and its ``n`` lifted branches.

    ``F_0`` continues ``(z^(n+b) f0)^(l/k)`` from the arc ``theta = theta0``
    and ``F_(m+1) = alpha_hat F_m``.
    """
    curve = EllipsoidCurve(params, radius)
    ah = params.alpha_hat

    def F(m, z, arg=None):
        return ah ** m * curve.G_branch(z, arg)

    fam = BranchFamily(curve, ah, F, curve.G_hat, np.arange(params.n, dtype=float))
    # consistency on a sample of interior arcs
    r = 0.5 * radius
    n = params.n
    for j in range(1, n):
        ang = (params.theta0 + TWO_PI * j) / n
        z = r * np.exp(1j * ang)
        arg = curve.arg_c(z)
        lhs, rhs = F(j, z, arg), ah * F(j - 1, z, arg)
        if abs(lhs - rhs) > check_tol * max(1.0, abs(lhs)):
            raise ConstructionError(f"branches {j - 1}, {j} disagree on their shared arc")
    lo = params.theta0 / n
    z0 = r * np.exp(1j * lo)
    g_end = curve.G_branch(z0, lo + TWO_PI)
    g_start = curve.G_branch(z0, lo)
    fam.wrap_monodromy = complex(g_end / g_start) if g_start != 0 else 1.0
    return curve, fam


# ----------------------------------------------------------------------
# residuals, charge, energy, asymptotics
# ----------------------------------------------------------------------
def polar_grid(r_min: float, r_max: float, n_r: int = 64, n_theta: int = 64) -> np.ndarray:
    r = np.linspace(r_min, r_max, n_r)
    th = TWO_PI * (np.arange(n_theta) + 0.5) / n_theta
    return (r[:, None] * np.exp(1j * th[None, :])).ravel()


@dataclass
class CRResult:
    points: np.ndarray
    field: np.ndarray        # (N, 3)
    sup: float
    skipped: int

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["z_re", "z_im", "res1", "res2", "res3"])
            for z, row in zip(self.points, self.field):
                w.writerow([repr(float(z.real)), repr(float(z.imag))] + [repr(float(v)) for v in row])


def cr_residual(curve: FiniteEnergyCurve, grid, method: str = "auto",
                band: float = ARC_BAND, h: float = FD_STEP) -> CRResult:
    """Pointwise residuals of the Cauchy-Riemann system.

    Columns are ``|pi psi_eta + J pi psi_zeta|``, ``|lambda(psi_zeta) + a_eta|``
    and ``|lambda(psi_eta) - a_zeta|``.
    """
    z = np.asarray(grid, dtype=complex).ravel()
    keep = ~curve.in_arc_band(z, band)
    z = z[keep]
    pe, pz, ae, az = curve.partials(z, method, h)
    P = curve.psi(z)
    chart = curve.chart
    out = np.empty((len(z), 3))
    for i in range(len(z)):
        v = P[i]
        xe, xz = chart.xi_project(v, pe[i]), chart.xi_project(v, pz[i])
        out[i, 0] = np.linalg.norm(xe + chart.J_xi(v, xz))
        out[i, 1] = abs(chart.eval_contact_form(v, pz[i]) + ae[i])
        out[i, 2] = abs(chart.eval_contact_form(v, pe[i]) - az[i])
    sup = float(out.max()) if len(out) else 0.0
    return CRResult(z, out, sup, int((~keep).sum()))


def _circle_lambda(curve, r, n_phi):
    phi = TWO_PI * np.arange(n_phi) / n_phi
    z = r * np.exp(1j * phi)
    pe, pz, _, _ = curve.partials(z)
    dphi = -z.imag[:, None] * pe + z.real[:, None] * pz
    P = curve.psi(z)
    vals = np.array([curve.chart.eval_contact_form(P[i], dphi[i]) for i in range(n_phi)])
    return vals.mean() * TWO_PI


def _neville(x, y, x0=0.0):
    x = np.asarray(x, dtype=float)
    p = np.array(y, dtype=float)
    if np.all(p == p[0]):
        return float(p[0])
    m = len(x)
    for k in range(1, m):
        p[: m - k] = ((x0 - x[k:]) * p[: m - k] + (x[: m - k] - x0) * p[1 : m - k + 1]) / (
            x[: m - k] - x[k:]
        )
    return p[0]


@dataclass
class ChargeResult:
    value: float
    radii: np.ndarray
    samples: np.ndarray

    @property
    def nearest_integer(self) -> int:
        return int(round(self.value))


def charge(curve: FiniteEnergyCurve, radii=None, n_phi: int = 256) -> ChargeResult:
    """``(1/tau0) lim oint psi^* lambda`` over shrinking circles.

    The circle integrals use the trapezoid rule; the limit is a polynomial
    extrapolation to ``r = 0``.  ``tau0`` is the minimal period of the
    asymptotic orbit in the chart (2 pi for the charts used here).
    """
    if radii is None:
        radii = 0.2 * 2.0 ** -np.arange(5)
    radii = np.asarray(radii, dtype=float)
    if np.any(radii >= curve.radius) or np.any(radii <= 0):
        raise DomainError("charge radii must lie inside the punctured disc")
    tau0 = curve.chart.orbit_period
    vals = np.array([_circle_lambda(curve, r, n_phi) for r in radii]) / tau0
    if not np.all(np.isfinite(vals)):
        raise NumericError("non-finite circle integral")
    T = _neville(radii, vals)
    if len(vals) > 2 and abs(T - vals[-1]) > 10 * abs(vals[-2] - vals[-1]) + 1e-9:
        raise NumericError("circle integrals do not converge as r -> 0")
    return ChargeResult(float(T), radii, vals)


@dataclass
class EnergyReport:
    dlambda: float
    lower_bound: float | None = None
    shifts: np.ndarray | None = None


def _h_family(a, s):
    t = np.tanh(a - s)
    return 0.5 * (1 + t), 0.5 * (1 - t * t)


def dlambda_energy(curve: FiniteEnergyCurve, annulus=(0.05, 0.5), n_r: int = 48,
                   n_theta: int = 96, shifts=None) -> EnergyReport:
    """``int psi^* dlambda`` over an annulus.

    The integrand ``dlambda(psi_eta, psi_zeta)`` equals the mean of
    ``dlambda(pi psi, J pi psi)`` over the two partials, so it is a sum of
    squares in the metric defined by dlambda and J.  When ``shifts`` are
    given, ``int psi~^* d(h_s(a) lambda)`` with ``h_s = (1 + tanh(a - s))/2``
    is also evaluated and its maximum reported as a lower bound of the
    full energy.
    """
    r0, r1 = annulus
    if not 0 < r0 < r1 < curve.radius:
        raise DomainError("annulus must lie inside the punctured disc")
    xg, wg = np.polynomial.legendre.leggauss(n_r)
    r = r0 + (r1 - r0) * 0.5 * (xg + 1)
    wr = 0.5 * (r1 - r0) * wg
    phi = TWO_PI * np.arange(n_theta) / n_theta
    z = (r[:, None] * np.exp(1j * phi[None, :])).ravel()
    w = (np.repeat(wr * r, n_theta)) * (TWO_PI / n_theta)
    pe, pz, ae, az = curve.partials(z)
    P = curve.psi(z)
    chart = curve.chart
    dl = np.array([chart.d_lambda(P[i], pe[i], pz[i]) for i in range(len(z))])
    E = float(np.sum(w * dl))
    if shifts is None:
        return EnergyReport(E)
    le = np.array([chart.eval_contact_form(P[i], pe[i]) for i in range(len(z))])
    lz = np.array([chart.eval_contact_form(P[i], pz[i]) for i in range(len(z))])
    a = curve.a(z)
    best = -np.inf
    for s in shifts:
        hv, dh = _h_family(a, s)
        dens = dh * (ae * lz - az * le) + hv * dl
        best = max(best, float(np.sum(w * dens)))
    return EnergyReport(E, best, np.asarray(shifts, dtype=float))


@dataclass
class AsymptoticReport:
    r: np.ndarray
    eps_sup: np.ndarray
    delta_sup: np.ndarray
    a0: float
    theta0: float

    def monotone(self, floor: float = 1e-12) -> bool:
        e_ok = np.all(np.diff(self.eps_sup) <= floor + 1e-9 * self.eps_sup[:-1])
        d_ok = np.all(np.diff(self.delta_sup) <= floor + 1e-9 * self.delta_sup[:-1])
        return bool(e_ok and d_ok)


def asymptotic_check(curve: FiniteEnergyCurve, r_list, n_phi: int = 128) -> AsymptoticReport:
    """Sup over each circle ``r = -log|z|`` of the deviations ``eps`` and ``delta``.

    ``a = n r + a0 + eps`` and ``theta = n phi + theta0 + delta``; ``a0``
    and ``theta0`` are read off on the deepest circle.
    """
    r_list = np.asarray(r_list, dtype=float)
    if np.any(np.diff(r_list) <= 0):
        raise ValueError("r_list must be increasing")
    n = curve.n
    phi = TWO_PI * np.arange(n_phi) / n_phi
    deep = np.exp(-r_list[-1]) * np.exp(1j * phi)
    a0 = float(np.mean(curve.a(deep) - n * r_list[-1]))
    th0 = float(np.angle(np.mean(np.exp(1j * (curve.theta(deep) - n * phi)))))
    eps, dels = [], []
    for r in r_list:
        z = np.exp(-r) * np.exp(1j * phi)
        eps.append(np.max(np.abs(curve.a(z) - n * r - a0)))
        dels.append(np.max(np.abs(_wrap_angle(curve.theta(z) - n * phi - th0))))
    return AsymptoticReport(r_list, np.array(eps), np.array(dels), a0, th0)


# ----------------------------------------------------------------------
# quasi-sectors
# ----------------------------------------------------------------------
@dataclass
class QuasiSectorDecomposition:
    theta0: float
    radii: np.ndarray
    arcs: np.ndarray          # (n, len(radii)) angles phi of the arc points

    @property
    def n(self):
        return self.arcs.shape[0]

    def arc_points(self, k: int) -> np.ndarray:
        return self.radii * np.exp(1j * self.arcs[k])

    def ray_deviation(self) -> np.ndarray:
        """``|z|`` times the angular distance of each arc from its ray."""
        k = np.arange(self.n)[:, None]
        rays = (self.theta0 + TWO_PI * k) / self.n
        return np.abs(_wrap_angle(self.arcs - rays)) * self.radii[None, :]

    def continuity(self) -> float:
        """Largest jump between arc points on consecutive circles."""
        if len(self.radii) < 2:
            return 0.0
        pts = self.radii[None, :] * np.exp(1j * self.arcs)
        return float(np.max(np.abs(np.diff(pts, axis=1))))

    def sector_samples(self, k: int, per_circle: int = 8, band: float = ARC_BAND):
        lo = self.arcs[k]
        hi = self.arcs[(k + 1) % self.n] + (TWO_PI if k + 1 == self.n else 0.0)
        hi = lo + np.mod(hi - lo, TWO_PI)
        frac = (np.arange(per_circle) + 0.5) / per_circle
        ang = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        pts = self.radii[:, None] * np.exp(1j * ang)
        gap = np.minimum(ang - lo[:, None], hi[:, None] - ang)
        return pts[gap > band]


def quasi_sector_decompose(curve: FiniteEnergyCurve, theta0: float | None = None,
                           radii=None, n_phi: int = 720) -> QuasiSectorDecomposition:
    """Locate the arcs ``theta(z) = theta0`` on a family of circles.

    On each circle the wrapped difference ``theta - theta0`` is sampled;
    sign changes that are not wrap-around jumps are refined with Brent's
    method.  Each circle must carry exactly ``n`` roots.
    """
    if theta0 is None:
        theta0 = curve.theta0
    if radii is None:
        radii = np.linspace(0.1, 0.01, 10)
    radii = np.asarray(radii, dtype=float)
    n = curve.n
    phi = TWO_PI * np.arange(n_phi + 1) / n_phi
    arcs = np.empty((n, len(radii)))
    for j, r in enumerate(radii):
        g = lambda t: float(_wrap_angle(curve.theta(r * np.exp(1j * t)) - theta0))
        vals = _wrap_angle(curve.theta(r * np.exp(1j * phi)) - theta0)
        roots = []
        for i in range(n_phi):
            a, b = vals[i], vals[i + 1]
            if a == 0:
                roots.append(phi[i])
            elif a < 0 < b and b - a < np.pi:
                roots.append(brentq(g, phi[i], phi[i + 1], xtol=1e-14))
        roots = np.array([x for x in roots if x < TWO_PI - 1e-14])
        if len(roots) != n:
            raise DecompositionError(f"found {len(roots)} arcs at r = {r:g}, expected {n}")
        # order so that arc k is the one nearest the ray (theta0 + 2 pi k)/n
        rays = (theta0 + TWO_PI * np.arange(n)) / n
        order = [int(np.argmin(np.abs(_wrap_angle(roots - ray)))) for ray in rays]
        if len(set(order)) != n:
            raise DecompositionError(f"arcs at r = {r:g} cannot be matched to rays")
        arcs[:, j] = np.mod(roots[order], TWO_PI)
    # keep arcs continuous across circles
    arcs = np.unwrap(arcs, axis=1)
    return QuasiSectorDecomposition(float(theta0), radii, arcs)


# ----------------------------------------------------------------------
# branch audit
# ----------------------------------------------------------------------
@dataclass
class AuditCheck:
    name: str
    value: float
    tolerance: float
    witness: complex | None = None

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value < self.tolerance)


@dataclass
class BranchAuditReport:
    checks: list
    constants: np.ndarray
    wrap_monodromy: complex

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {
            "passed": self.passed,
            "checks": {c.name: {"value": c.value, "tolerance": c.tolerance,
                                "passed": c.passed} for c in self.checks},
            "constants": self.constants.tolist(),
            "wrap_monodromy": [self.wrap_monodromy.real, self.wrap_monodromy.imag],
        }


def estimate_constants(family: BranchFamily, dec: QuasiSectorDecomposition) -> np.ndarray:
    """``c_k`` as the sector mean of ``Re H - t``."""
    c = np.empty(family.n)
    for k in range(family.n):
        z = dec.sector_samples(k)
        t = family.u(z).real
        c[k] = np.mean(family.H(z).real - t)
    return c


def branch_audit(family: BranchFamily, dec: QuasiSectorDecomposition,
                 tol_match: float = 1e-6, tol_const: float = 1e-6,
                 tol_u: float = 1e-4, tol_h: float = 1e-6) -> BranchAuditReport:
    """Check the branched representation of a constructed curve sector by sector."""
    n = family.n
    checks = []
    # (a) branch matching on the interior arcs
    worst, wit = 0.0, None
    for j in range(1, n):
        z = dec.arc_points(j)
        arg = family.arg_c(z)
        lhs = family.F(j, z, arg)
        rhs = family.alpha_hat * family.F(j - 1, z, arg)
        err = np.abs(lhs - rhs)
        i = int(np.argmax(err))
        if err[i] > worst:
            worst, wit = float(err[i]), complex(z[i])
    checks.append(AuditCheck("arc_matching", worst, tol_match, wit))
    # (b) unit increments of the branch constants
    c = np.asarray(family.c, dtype=float)
    incr = np.diff(c) - 1.0 if n > 1 else np.zeros(1)
    checks.append(AuditCheck("constant_increments", float(np.max(np.abs(incr))), tol_const))
    # (c) u = H_k - c_k on every sector
    worst, wit = 0.0, None
    for k in range(n):
        z = dec.sector_samples(k)
        err = np.abs(family.u(z) - (family.H(z) - c[k]))
        i = int(np.argmax(err))
        if err[i] > worst:
            worst, wit = float(err[i]), complex(z[i])
    checks.append(AuditCheck("u_representation", worst, tol_u, wit))
    # (d) Im H is a single function across the arcs
    worst, wit = 0.0, None
    for j in range(1, n):
        z = dec.arc_points(j)
        arg = family.arg_c(z)
        below = family.H(z, arg - 1e-9).imag
        above = family.H(z, arg + 1e-9).imag
        err = np.abs(below - above)
        i = int(np.argmax(err))
        if err[i] > worst:
            worst, wit = float(err[i]), complex(z[i])
    checks.append(AuditCheck("harmonic_continuity", worst, tol_h, wit))
    return BranchAuditReport(checks, c - c[0], complex(family.wrap_monodromy))


# ----------------------------------------------------------------------
# normal form
# ----------------------------------------------------------------------
@dataclass
class NormalForm:
    w_prime: TruncatedSeries   # w' as a series in xi
    n: int                     # v' = xi^n
    f: TruncatedSeries         # xi = f(z)
    f_inverse: TruncatedSeries


def normal_form(rho: TruncatedSeries, n: int, F: TruncatedSeries | None = None,
                H_hat: TruncatedSeries | None = None) -> NormalForm:
    """Reduce ``(rho, F)`` to ``(xi^n, w'(xi))``.

    ``f = (rho e^{-H_hat})^(1/n)`` is computed as ``z`` times the n-th root
    of a unit series, inverted by reversion, and ``w' = F o f^{-1}``.
    ``F`` defaults to the identity.
    """
    if not isinstance(rho, TruncatedSeries):
        rho = TruncatedSeries(rho, DEFAULT_ORDER)
    order = rho.order
    if rho.valuation() != n:
        raise DomainError(f"ord(rho) = {rho.valuation()} differs from n = {n}")
    if order < 2 * n:
        raise DomainError("series truncation must be at least 2n")
    if H_hat is None:
        H_hat = TruncatedSeries.constant(0.0, order)
    if F is None:
        F = TruncatedSeries.monomial(1, order)
    unit = rho.shift(-n) * (-H_hat).exp()
    f = unit.nth_root(n).shift(1)
    finv = f.reversion()
    w = F.compose(finv)
    return NormalForm(w, n, f, finv)
