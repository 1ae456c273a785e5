"""Elliptic line congruences in R^4 and the contact forms they induce.

Oriented 2-planes of R^4 are identified with pairs ``(sigma_plus,
sigma_minus)`` of self-dual and anti-self-dual 2-forms of norm
``1/sqrt(2)``.  A congruence is the graph of a distance-decreasing map
``f: S_- -> S_+``; through each nonzero ``v`` passes one of its planes,
and the complex structure ``[J]_v`` determined by ``f(sigma_minus(v))``
gives ``lambda(w) = -(w, [J]_v v)`` with Reeb field ``X = -[J]_v v``.

Two-forms are stored by their six coefficients in the order
``01, 02, 03, 12, 13, 23``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SolverError

PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
# Hodge star for the orientation e0^e1^e2^e3: *e01 = e23, *e02 = -e13, *e03 = e12
_STAR = np.zeros((6, 6))
for _i, _j, _s in [(0, 5, 1), (5, 0, 1), (1, 4, -1), (4, 1, -1), (2, 3, 1), (3, 2, 1)]:
    _STAR[_j, _i] = _s
S = 1 / np.sqrt(2)
# orthonormal bases of the self-dual and anti-self-dual subspaces
SD_BASIS = S * np.array([[1, 0, 0, 0, 0, 1], [0, 1, 0, 0, -1, 0], [0, 0, 1, 1, 0, 0]], float)
ASD_BASIS = S * np.array([[1, 0, 0, 0, 0, -1], [0, 1, 0, 0, 1, 0], [0, 0, 1, -1, 0, 0]], float)
RADIUS = S


@dataclass(frozen=True)
class TwoForm4:
    """Real 2-form on R^4 with coefficients ``B_{mu nu}``, ``mu < nu``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).reshape(6)
        if not np.all(np.isfinite(c)):
            raise ValueError("2-form coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_matrix(cls, M):
        M = np.asarray(M, dtype=float)
        return cls([M[i, j] for i, j in PAIRS])

    @classmethod
    def wedge(cls, a, b):
        a, b = np.asarray(a, float), np.asarray(b, float)
        return cls([a[i] * b[j] - a[j] * b[i] for i, j in PAIRS])

    @classmethod
    def basis(cls, i: int, j: int):
        c = np.zeros(6)
        c[PAIRS.index((i, j))] = 1.0
        return cls(c)

    def matrix(self) -> np.ndarray:
        M = np.zeros((4, 4))
        for c, (i, j) in zip(self.coeffs, PAIRS):
            M[i, j], M[j, i] = c, -c
        return M

    def star(self) -> "TwoForm4":
        return TwoForm4(_STAR @ self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other):
        return TwoForm4(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return TwoForm4(self.coeffs - other.coeffs)

    def __mul__(self, s):
        return TwoForm4(self.coeffs * float(s))

    __rmul__ = __mul__

    def sd3(self) -> np.ndarray:
        """Coordinates of the self-dual part in ``SD_BASIS``."""
        return SD_BASIS @ self.coeffs

    def asd3(self) -> np.ndarray:
        return ASD_BASIS @ self.coeffs

    @classmethod
    def from_sd3(cls, x):
        return cls(SD_BASIS.T @ np.asarray(x, float))

    @classmethod
    def from_asd3(cls, x):
        return cls(ASD_BASIS.T @ np.asarray(x, float))


def sd_decompose(B: TwoForm4):
    """``(sigma_plus, sigma_minus) = ((B + *B)/2, (B - *B)/2)``."""
    sB = B.star()
    return TwoForm4(0.5 * (B.coeffs + sB.coeffs)), TwoForm4(0.5 * (B.coeffs - sB.coeffs))


def osculating_J(sigma_plus) -> np.ndarray:
    """Complex structure determined by a self-dual form of norm ``1/sqrt(2)``.

    ``J = -M`` where ``M`` is the antisymmetric matrix of
    ``2 sigma_plus``; for ``sigma_plus = (e01 + e23)/2`` this is the
    standard structure with ``J e0 = e1``, ``J e2 = e3``.
    """
    sp = sigma_plus if isinstance(sigma_plus, TwoForm4) else TwoForm4.from_sd3(sigma_plus)
    if abs(sp.norm() - RADIUS) > 1e-10:
        raise DomainError(f"|sigma_plus| = {sp.norm():.3g}, expected 1/sqrt(2)")
    return -2.0 * sp.matrix()


def _J_from_sd3(x) -> np.ndarray:
    return -2.0 * TwoForm4.from_sd3(x).matrix()


def _J_from_asd3(x) -> np.ndarray:
    return -2.0 * TwoForm4.from_asd3(x).matrix()


def plane_form(a, b) -> TwoForm4:
    """Unit 2-form of the oriented plane spanned by ``a, b``."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    a = a / np.linalg.norm(a)
    b = b - (b @ a) * a
    nb = np.linalg.norm(b)
    if nb < 1e-14:
        raise DomainError("vectors do not span a plane")
    return TwoForm4.wedge(a, b / nb)


def plane_projector(sigma_plus3, sigma_minus3) -> np.ndarray:
    """Orthogonal projector onto the plane with components ``(sigma_plus, sigma_minus)``."""
    M = TwoForm4.from_sd3(sigma_plus3).matrix() + TwoForm4.from_asd3(sigma_minus3).matrix()
    return -M @ M


def _normalize(x):
    return RADIUS * x / np.linalg.norm(x)


# ----------------------------------------------------------------------
# congruence maps
# ----------------------------------------------------------------------
_MONOMIALS = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


class CongruenceMap:
    """``f(x) = normalize(c + s P(x))`` from ``S_-`` to ``S_+``.

    ``x`` and ``f(x)`` are 3-vectors in the orthonormal bases of the
    anti-self-dual and self-dual forms.  ``P`` is a linear plus quadratic
    polynomial; the scale ``s`` is tuned so that the sampled Lipschitz
    constant equals the requested ``L``.
    """

    def __init__(self, center, coeffs=None, L: float | None = None, seed: int = 0):
        center = np.asarray(center, float)
        if center.shape == (6,):
            center = TwoForm4(center).sd3()
        if center.shape != (3,) or np.linalg.norm(center) == 0:
            raise DomainError("center must be a nonzero 2-form (6 coefficients)")
        self.center = _normalize(center)
        c = np.zeros(27) if coeffs is None else np.asarray(coeffs, float)
        if c.size not in (9, 27) and c.size != 0:
            raise DomainError("perturbation coeffs must have 9 (linear) or 27 entries")
        full = np.zeros(27)
        full[: c.size] = c
        self.A = full[:9].reshape(3, 3)
        self.Q = full[9:].reshape(3, 6)
        self.seed = seed
        self.scale = 1.0
        self.declared_L = L
        if L is not None:
            if not 0 <= L < 1:
                raise DomainError("the congruence map must be distance-decreasing (L < 1)")
            self._tune_scale(L)
        self.L = self.lipschitz() if self.is_perturbed else 0.0

    @property
    def is_perturbed(self) -> bool:
        return bool(np.any(self.A) or np.any(self.Q))

    @classmethod
    def constant(cls, sigma_plus):
        return cls(sigma_plus)

    @classmethod
    def standard(cls):
        """Constant map whose structure is ``[J] = -J0``, giving the standard form."""
        return cls(-0.5 * (TwoForm4.basis(0, 1) + TwoForm4.basis(2, 3)).coeffs)

    @classmethod
    def from_dict(cls, doc: dict, seed: int = 0):
        try:
            center = doc["center"]
        except (KeyError, TypeError):
            raise DomainError("congruence document needs a 'center'") from None
        pert = doc.get("perturbation") or {}
        coeffs = pert.get("coeffs")
        L = pert.get("L")
        return cls(center, coeffs, L, seed)

    @classmethod
    def from_json(cls, path, seed: int = 0):
        with open(path) as fh:
            return cls.from_dict(json.load(fh), seed)

    def perturbation(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        quad = np.array([x[..., i] * x[..., j] for i, j in _MONOMIALS])
        quad = np.moveaxis(quad, 0, -1)
        return x @ self.A.T + quad @ self.Q.T

    def __call__(self, x) -> np.ndarray:
        y = self.center + self.scale * self.perturbation(x)
        return RADIUS * y / np.linalg.norm(y, axis=-1, keepdims=True)

    def _pairs(self, m: int):
        rng = np.random.default_rng(self.seed)
        x = rng.normal(size=(m, 3))
        x = RADIUS * x / np.linalg.norm(x, axis=1, keepdims=True)
        # half far pairs, half infinitesimally close pairs
        y = rng.normal(size=(m, 3))
        y = RADIUS * y / np.linalg.norm(y, axis=1, keepdims=True)
        half = m // 2
        t = rng.normal(size=(m - half, 3)) * 1e-4
        y[half:] = x[half:] + t
        y[half:] = RADIUS * y[half:] / np.linalg.norm(y[half:], axis=1, keepdims=True)
        return x, y

    def lipschitz(self, m: int = 10_000) -> float:
        x, y = self._pairs(m)
        d = np.linalg.norm(x - y, axis=1)
        ok = d > 1e-12
        return float(np.max(np.linalg.norm(self(x[ok]) - self(y[ok]), axis=1) / d[ok]))

    def _tune_scale(self, L: float):
        if L == 0 or not self.is_perturbed:
            self.scale = 0.0 if L == 0 else 1.0
            return
        from scipy.optimize import brentq

        def excess(s):
            self.scale = s
            return self.lipschitz() - L

        hi = 1.0
        while excess(hi) < 0:
            hi *= 2
            if hi > 1e6:
                raise DomainError("perturbation too weak to reach the requested L")
        self.scale = brentq(excess, 0.0, hi, xtol=1e-12)

    # -- the osculating field -------------------------------------------
    def sigma_minus(self, v, **kw) -> np.ndarray:
        return fiber_solve(self, v, **kw).sigma_minus

    def J(self, v) -> np.ndarray:
        res = fiber_solve(self, v)
        return _J_from_sd3(self(res.sigma_minus))


@dataclass
class FiberSolution:
    sigma_minus: np.ndarray
    sigma_plus: np.ndarray
    iterations: int
    residual: float
    restarts: int = 0


def _fiber_iterate(f, v, x, damping, tol, max_iter):
    step = np.inf
    for it in range(1, max_iter + 1):
        Jv = _J_from_sd3(f(x)) @ v
        x_new = _normalize(TwoForm4.wedge(v, Jv).asd3())
        x_next = _normalize((1 - damping) * x + damping * x_new) if damping < 1 else x_new
        step = np.linalg.norm(x_next - x)
        x = x_next
        if step < tol:
            return x, it, step
    return x, max_iter, step


def fiber_solve(f: CongruenceMap, v, tol: float = 1e-14, max_iter: int = 200) -> FiberSolution:
    """``sigma_minus(v)`` such that ``v`` lies on the plane ``(f(sigma_minus), sigma_minus)``.

    Plain fixed-point iteration first; on a stall the iteration is rerun
    with damping 0.5 from the last iterate and from up to three random
    starts.
    """
    v = np.asarray(v, float)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise DomainError("v must be nonzero")
    v = v / nv
    x0 = _normalize(TwoForm4.wedge(v, _J_from_sd3(f.center) @ v).asd3())
    x, it, step = _fiber_iterate(f, v, x0, 1.0, tol, max_iter)
    restarts = 0
    if step >= tol:
        rng = np.random.default_rng(abs(hash(v.tobytes())) % 2**32)
        starts = [x] + [_normalize(rng.normal(size=3)) for _ in range(3)]
        for restarts, s in enumerate(starts, 1):
            x, it2, step = _fiber_iterate(f, v, s, 0.5, tol, max_iter)
            it += it2
            if step < tol:
                break
    sp = f(x)
    P = plane_projector(sp, x)
    resid = float(np.linalg.norm(v - P @ v))
    if step >= tol and resid > 1e-10:
        raise SolverError(f"fiber solver did not converge (step {step:.2e}, residual {resid:.2e})")
    return FiberSolution(x, sp, it, resid, restarts)


# ----------------------------------------------------------------------
# induced contact data
# ----------------------------------------------------------------------
@dataclass
class ContactData:
    lam: np.ndarray       # covector lambda(w) = lam @ w
    X: np.ndarray
    omega: np.ndarray     # 4x4, omega(w, u) = w @ omega @ u
    J: np.ndarray


def contact_from_congruence(f, v) -> ContactData:
    v = np.asarray(v, float)
    if abs(np.linalg.norm(v) - 1) > 1e-10:
        raise DomainError("v must lie on the unit sphere")
    J = f.J(v)
    Jv = J @ v
    return ContactData(-Jv, -Jv, J, J)


def random_sphere_points(m: int, seed: int = 0) -> np.ndarray:
    x = np.random.default_rng(seed).normal(size=(m, 4))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _lam_field(f, x):
    """``lambda_Sigma = i_x omega`` extended 0-homogeneously in J."""
    return -(f.J(x) @ x)


@dataclass
class CongruenceAudit:
    defects: dict
    primitive_residual: float
    primitive_samples: int
    n_samples: int
    witness: dict = field(default_factory=dict)

    def as_dict(self):
        return {"defects": self.defects, "primitive_residual": self.primitive_residual,
                "primitive_samples": self.primitive_samples, "n_samples": self.n_samples}


def _dJ(f, x, e, h):
    return (f.J(x + h * e) - f.J(x - h * e)) / (2 * h)


def congruence_audit(f, n_samples: int = 200, seed: int = 0, h: float = 1e-5,
                     closed_tol: float = 1e-6) -> CongruenceAudit:
    """Sup over random points of ``S^3`` of the structural defects.

    (a) ``|d omega|``, (b) ``|lambda(X) - 1|``, (c) ``|i_X dlambda|`` on
    the contact plane, (d) ``|omega(w, Jw) + |w|^2|`` on the contact plane,
    (e) ``|L_X J|`` and (f) the radial derivative of ``J``.  The identity
    ``omega = d(i_{x/2} omega)`` is checked at the samples where (a) is
    below ``closed_tol``.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    pts = random_sphere_points(n_samples, seed)
    rng = np.random.default_rng(seed + 1)
    E = np.eye(4)
    sup = dict.fromkeys("abcdef", 0.0)
    witness = {}
    prim_worst, prim_count = 0.0, 0
    for x in pts:
        J = f.J(x)
        X = -J @ x
        dJ = [_dJ(f, x, E[i], h) for i in range(4)]
        # (a) exterior derivative of Omega_{ab} = J[a, b]
        da = 0.0
        for a, b, c in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]:
            val = dJ[a][b, c] + dJ[b][c, a] + dJ[c][a, b]
            da = max(da, abs(val))
        # lambda_b(y) = sum_a y_a J(y)[a, b]; dlambda_{bc} = d_b lam_c - d_c lam_b
        Dlam = np.array([E[i] @ J + x @ dJ[i] for i in range(4)])  # row i: d_i lam
        dlam = Dlam - Dlam.T
        # basis of the contact plane at x
        Q, _ = np.linalg.qr(np.column_stack([x, X, rng.normal(size=4), rng.normal(size=4)]))
        xi = Q[:, 2:]
        db = abs(-(X @ J @ x) - 1)     # lambda(X) = -(X, J x)
        dc = float(np.max(np.abs(X @ dlam @ xi)))
        w = xi @ rng.normal(size=2)
        dd = abs(w @ J @ (J @ w) + w @ w)
        # L_X J = DJ[X] - [DX, J] with DX e = -J e - (DJ[e]) x
        DJX = sum(X[i] * dJ[i] for i in range(4))
        DX = -J - np.column_stack([dJ[i] @ x for i in range(4)])
        de = float(np.max(np.abs(DJX - (DX @ J - J @ DX))))
        delta = 1e-3
        df = float(np.max(np.abs(f.J(x * (1 + delta)) - J))) / delta
        for key, val in zip("abcdef", (da, db, dc, dd, de, df)):
            if val > sup[key]:
                sup[key], witness[key] = float(val), x.tolist()
        if da < closed_tol:
            prim_count += 1
            prim_worst = max(prim_worst, float(np.max(np.abs(J - 0.5 * dlam))))
    return CongruenceAudit(sup, prim_worst, prim_count, n_samples, witness)


# ----------------------------------------------------------------------
# transport by linear maps
# ----------------------------------------------------------------------
class TransportedCongruence:
    """Image of a congruence under an invertible linear map ``delta``."""

    def __init__(self, base, delta):
        delta = np.asarray(delta, float)
        if delta.shape != (4, 4) or abs(np.linalg.det(delta)) < 1e-12:
            raise DomainError("delta must be an invertible 4x4 matrix")
        self.base = base
        self.delta = delta
        self._inv = np.linalg.inv(delta)

    def plane(self, x):
        y = self._inv @ np.asarray(x, float)
        y = y / np.linalg.norm(y)
        Jy = self.base.J(y) @ y
        return self.delta @ y, self.delta @ Jy

    def J(self, x) -> np.ndarray:
        a, b = self.plane(x)
        sp, _ = sd_decompose(plane_form(a, b))
        return osculating_J(sp)


def o4_transport(f, delta, n_samples: int = 200, seed: int = 0):
    """Transport ``f`` by ``delta`` and measure ``|delta^* lambda' - lambda|``.

    The pull-back is taken through the radial projection
    ``v -> delta v / |delta v|``; the residual is a sup over random points
    and unit tangent vectors.
    """
    g = TransportedCongruence(f, delta)
    D = g.delta
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for v in random_sphere_points(n_samples, seed):
        w = rng.normal(size=4)
        w -= (w @ v) * v
        w /= np.linalg.norm(w)
        dv = D @ v
        u = dv / np.linalg.norm(dv)
        pulled = -(D @ w) @ (g.J(u) @ u) / np.linalg.norm(dv)
        orig = -w @ (f.J(v) @ v)
        worst = max(worst, abs(pulled - orig))
    return g, float(worst)
