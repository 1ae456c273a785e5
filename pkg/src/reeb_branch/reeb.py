"""Reeb flow integration, first-return maps and holonomy.

The integrator drives scipy's embedded Runge-Kutta 4(5) stepper one
accepted step at a time.  After each step the state is pulled back onto
the constraint surface, and the sign of a section functional is monitored
so that section crossings can be bracketed and refined on the dense
output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45, DOP853, solve_ivp
from scipy.optimize import brentq

from .errors import DegeneracyError, DomainError, IntegrationError, SectionTimeoutError
from .geometry import ContactChart, Ellipsoid, MartinetTube

IDENTITY_TOL = 1e-4
RADIAL_TOL = 1e-3
CROSSING_TOL = 1e-12


@dataclass(frozen=True)
class FlowConfig:
    """Settings for the embedded RK 4(5) integrator."""

    method: str = "RK45"
    abs_tol: float = 1e-12
    rel_tol: float = 1e-11
    max_step: float = 0.25

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.max_step > 0):
            raise ValueError("tolerances and max_step must be positive")


_STEPPERS = {"RK45": RK45, "DOP853": DOP853}


def _stepper(chart, p, t0, t_bound, cfg: FlowConfig):
    cls = _STEPPERS.get(cfg.method)
    if cls is None:
        raise ValueError(f"unknown integration method {cfg.method!r}")
    return cls(
        lambda _t, y: chart.reeb(y),
        t0,
        np.array(p, dtype=float),
        t_bound,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
    )


def _advance(solver, chart):
    """One accepted step followed by projection back onto the manifold."""
    msg = solver.step()
    if solver.status == "failed":
        raise IntegrationError(f"Reeb flow integration failed: {msg}")
    y = chart.project_to_manifold(solver.y)
    if not np.allclose(y, solver.y, rtol=0, atol=1e-15):
        solver.y = y
        solver.f = solver.fun(solver.t, y)


def flow(chart: ContactChart, p, t: float, cfg: FlowConfig | None = None) -> np.ndarray:
    """Point reached from p after Reeb-flowing for time t."""
    cfg = cfg or FlowConfig()
    p = chart.check_point(p)
    if not np.isfinite(t):
        raise DomainError("flow time must be finite")
    if t == 0:
        return p.copy()
    solver = _stepper(chart, p, 0.0, float(t), cfg)
    while solver.status == "running":
        _advance(solver, chart)
    return np.array(solver.y)


@dataclass
class Section:
    """Transverse disc through ``p0`` on a periodic orbit.

    For ambient charts the disc is the slice of the manifold by the
    hyperplane through ``p0`` normal to ``X(p0)``; its coordinates are the
    components along an oriented orthonormal frame of the contact plane at
    ``p0``.  For tube charts the disc is ``{t = p0[2]}`` with coordinates
    ``(x, y)``.
    """

    chart: ContactChart
    p0: np.ndarray
    radius: float = 0.2
    frame: np.ndarray = field(init=False)
    normal: np.ndarray = field(init=False)
    filler: np.ndarray = field(init=False)

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float)
        X = self.chart.reeb(self.p0)
        if np.linalg.norm(X) < 1e-12:
            raise DegeneracyError("Reeb field vanishes at the section base point")
        if self.is_tube:
            self.frame = np.eye(3)[:2]
            self.normal = np.array([0.0, 0.0, 1.0])
            self.filler = np.zeros(3)
            return
        self.normal = X / np.linalg.norm(X)
        self.frame = self.chart.xi_basis(self.p0)
        # unit vector completing (normal, e1, e2) to a basis of R^4
        M = np.vstack([self.normal, self.frame])
        _, _, Vt = np.linalg.svd(M)
        self.filler = Vt[-1]

    @property
    def is_tube(self) -> bool:
        return isinstance(self.chart, MartinetTube)

    def functional(self, P) -> float:
        P = np.asarray(P, dtype=float)
        if self.is_tube:
            return float(self.chart.wrap(P - self.p0)[2])
        return float((P - self.p0) @ self.normal)

    def coords(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        d = self.chart.wrap(P - self.p0) if self.is_tube else P - self.p0
        return self.frame @ d

    def point(self, xy) -> np.ndarray:
        """Section point with coordinates ``xy``."""
        x, y = xy
        if np.hypot(x, y) > self.radius:
            raise DomainError("point lies outside the section disc")
        if self.is_tube:
            return self.p0 + np.array([x, y, 0.0])
        base = self.p0 + x * self.frame[0] + y * self.frame[1]
        g = lambda s: self.chart.defining(base + s * self.filler)
        # the filler direction is transverse to the manifold near p0
        lo, hi = -0.5, 0.5
        if g(lo) * g(hi) > 0:
            raise DomainError("cannot place point on the section (disc too large)")
        s = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15)
        return self.chart.project_to_manifold(base + s * self.filler)

    def transversality(self, P) -> float:
        X = self.chart.reeb(P)
        return float(X @ self.normal / np.linalg.norm(X))


def first_return(chart, section: Section, p, cfg: FlowConfig | None = None,
                 t_max: float | None = None):
    """First positive time at which the flow from p meets the section again.

    Returns ``(point, time)``.  A crossing is a sign change of the section
    functional from negative to nonnegative between accepted steps; it is
    refined with Brent's method on the step's dense output.
    """
    cfg = cfg or FlowConfig()
    p = chart.check_point(p)
    if t_max is None:
        per = chart.orbit_period if np.isfinite(chart.orbit_period) else 2 * np.pi
        t_max = 20.0 * per
    solver = _stepper(chart, p, 0.0, t_max, cfg)
    prev = section.functional(p)
    while solver.status == "running":
        t_old = solver.t
        _advance(solver, chart)
        cur = section.functional(solver.y)
        if prev < 0 <= cur and solver.t > 1e-9:
            dense = solver.dense_output()
            fs = lambda t: section.functional(dense(t))
            a, b = t_old, solver.t
            if fs(a) < 0 <= fs(b):
                tc = brentq(fs, a, b, xtol=CROSSING_TOL, rtol=4 * np.finfo(float).eps)
            else:
                tc = b
            # polish on the exact flow rather than the interpolant
            P = flow(chart, p, tc, cfg)
            for _ in range(3):
                rate = section.normal @ chart.reeb(P)
                if abs(rate) < 1e-14:
                    break
                dt = -section.functional(P) / rate
                if abs(dt) < CROSSING_TOL:
                    break
                tc += dt
                P = flow(chart, P, dt, cfg)
            if abs(section.transversality(P)) < 1e-6:
                raise DegeneracyError("flow is tangent to the section at the crossing")
            return P, tc
        prev = cur
    raise SectionTimeoutError(f"no return to the section within t_max = {t_max:g}")


@dataclass
class ReturnMapReport:
    classification: str
    angle: float
    residuals: np.ndarray
    fixed_point: np.ndarray
    radial_distortion: float
    return_times: np.ndarray

    def as_dict(self):
        return {
            "classification": self.classification,
            "angle": self.angle,
            "max_residual": float(np.max(self.residuals)) if len(self.residuals) else 0.0,
            "fixed_point": self.fixed_point.tolist(),
            "radial_distortion": self.radial_distortion,
        }


def return_map(chart, section: Section, xy, cfg: FlowConfig | None = None):
    """Apply the first-return map ``alpha`` in section coordinates."""
    P, t = first_return(chart, section, section.point(xy), cfg)
    return section.coords(P), t


def classify_return_map(chart, section: Section, n_samples: int = 16,
                        cfg: FlowConfig | None = None, ring_radius: float | None = None,
                        ) -> ReturnMapReport:
    """Estimate the rotation angle of ``alpha`` on a ring of sample points."""
    if n_samples < 8:
        raise ValueError("n_samples must be at least 8")
    r = ring_radius if ring_radius is not None else 0.25 * section.radius
    phis = 2 * np.pi * np.arange(n_samples) / n_samples
    pts = r * np.column_stack([np.cos(phis), np.sin(phis)])
    images, times = [], []
    for xy in pts:
        img, t = return_map(chart, section, xy, cfg)
        images.append(img)
        times.append(t)
    images = np.array(images)
    z_in = pts[:, 0] + 1j * pts[:, 1]
    z_out = images[:, 0] + 1j * images[:, 1]
    ratio = z_out / z_in
    mean = np.mean(ratio / np.abs(ratio))
    angle = float(np.angle(mean) % (2 * np.pi))
    radial = float(np.max(np.abs(np.abs(z_out) / np.abs(z_in) - 1)))
    residuals = np.abs(z_out - np.exp(1j * angle) * z_in)
    fixed, _ = return_map(chart, section, (0.0, 0.0), cfg)
    if radial > RADIAL_TOL:
        label = "Other"
    elif min(angle, 2 * np.pi - angle) < IDENTITY_TOL:
        label = "Identity"
    else:
        label = "Rotation"
    return ReturnMapReport(label, angle, residuals, fixed, radial, np.array(times))


@dataclass
class OrbitData:
    chart: ContactChart
    p0: np.ndarray
    period: float

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float)
        if not self.period > 0:
            raise ValueError("orbit period must be positive")

    def closure_error(self, cfg: FlowConfig | None = None) -> float:
        end = flow(self.chart, self.p0, self.period, cfg)
        return float(np.linalg.norm(self.chart.wrap(end - self.p0)))

    def samples(self, m: int = 64, cfg: FlowConfig | None = None) -> np.ndarray:
        ts = np.linspace(0, self.period, m + 1)
        out = [self.p0]
        for a, b in zip(ts[:-1], ts[1:]):
            out.append(flow(self.chart, out[-1], b - a, cfg))
        return np.array(out)


def ellipsoid_orbit(chart: Ellipsoid, axis: str = "w2=0") -> OrbitData:
    """One of the two distinguished orbits of an ellipsoid."""
    if axis == "w2=0":
        return OrbitData(chart, [1 / np.sqrt(chart.p), 0, 0, 0], 2 * np.pi / chart.p)
    if axis == "w1=0":
        return OrbitData(chart, [0, 0, 1 / np.sqrt(chart.q), 0], 2 * np.pi / chart.q)
    raise ValueError("axis must be 'w2=0' or 'w1=0'")


def orbit_section(orbit: OrbitData, radius: float = 0.2) -> Section:
    return Section(orbit.chart, orbit.p0, radius)


@dataclass
class HolonomyResult:
    matrix: np.ndarray          # full ambient period map
    frame_matrix: np.ndarray    # 3x3 in the basis (X, e1, e2)
    transverse: np.ndarray      # 2x2 block
    multipliers: np.ndarray
    det: float
    flow_multiplier: float

    def as_dict(self):
        return {
            "transverse": self.transverse.tolist(),
            "multipliers": [[m.real, m.imag] for m in self.multipliers],
            "det": self.det,
            "flow_multiplier": self.flow_multiplier,
        }


def holonomy(chart, orbit: OrbitData, cfg: FlowConfig | None = None) -> HolonomyResult:
    """Integrate the linear variational equation once around the orbit."""
    cfg = cfg or FlowConfig()
    d = chart.dim
    p0 = chart.check_point(orbit.p0)

    def rhs(_t, y):
        x = y[:d]
        Phi = y[d:].reshape(d, d)
        return np.concatenate([chart.reeb(x), (chart.reeb_jacobian(x) @ Phi).ravel()])

    y0 = np.concatenate([p0, np.eye(d).ravel()])
    sol = solve_ivp(rhs, (0.0, orbit.period), y0, method=cfg.method,
                    rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step)
    if not sol.success:
        raise IntegrationError(sol.message)
    Phi = sol.y[d:, -1].reshape(d, d)
    X = chart.reeb(p0)
    sec = Section(chart, p0)
    B = np.column_stack([X, sec.frame[0], sec.frame[1]])
    images = Phi @ B
    C, *_ = np.linalg.lstsq(B, images, rcond=None)
    T = C[1:, 1:]
    mult = np.linalg.eigvals(T)
    return HolonomyResult(Phi, C, T, mult, float(np.linalg.det(T)), float(C[0, 0]))


@dataclass
class RecurrenceReport:
    max_excursion: float
    all_inside: bool
    radii: np.ndarray            # (n_points, N+1) radius of each iterate
    closure_histogram: dict      # minimal return count -> number of points

    def as_dict(self):
        return {
            "max_excursion": self.max_excursion,
            "all_inside": self.all_inside,
            "closure_histogram": {str(k): v for k, v in self.closure_histogram.items()},
        }


def recurrence_probe(chart, section: Section, N: int, grid, cfg: FlowConfig | None = None,
                     closure_tol: float = 1e-6) -> RecurrenceReport:
    """Iterate ``alpha`` up to N times from each grid point.

    The histogram maps the first iterate count at which a point returns to
    within ``closure_tol`` of its start (0 = never within N).
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    radii = np.zeros((len(grid), N + 1))
    hist: dict = {}
    inside = True
    for i, xy in enumerate(grid):
        cur = xy.copy()
        radii[i, 0] = np.hypot(*cur)
        closed = 0
        for k in range(1, N + 1):
            if np.hypot(*cur) > section.radius:
                inside = False
                radii[i, k:] = np.nan
                break
            cur, _ = return_map(chart, section, cur, cfg)
            radii[i, k] = np.hypot(*cur)
            if not closed and np.hypot(*(cur - xy)) < closure_tol:
                closed = k
        hist[closed] = hist.get(closed, 0) + 1
    exc = float(np.nanmax(radii)) if radii.size else 0.0
    inside = inside and exc <= section.radius
    return RecurrenceReport(exc, inside, radii, hist)
