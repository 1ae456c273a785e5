"""Cauchy-Green transform on a disc and verification of dbar equations.

The transform

    G_hat(z) = int_D G(mu) / (mu - z) dmu ^ dmubar,   dmu ^ dmubar = -2i dA,

is evaluated in polar coordinates recentred at ``z``.  With
``mu = z + rho e^{i theta}`` the Jacobian ``rho`` cancels the kernel, so

    G_hat(z) = -2i int_0^{2pi} e^{-i theta} int_0^{rho_max(theta)} G dr dtheta

with a bounded, smooth integrand.  The outer integral is periodic and uses
the trapezoid rule; the inner uses Gauss-Legendre.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError


@dataclass(frozen=True)
class QuadratureConfig:
    n_r: int = 128
    n_theta: int = 128
    singular_mode: str = "recenter"
    threads: int = 1

    def __post_init__(self):
        if self.n_r < 16 or self.n_theta < 16:
            raise ValueError("n_r and n_theta must be at least 16")
        if self.singular_mode != "recenter":
            raise ValueError("only the recentred polar rule is implemented")

    @classmethod
    def from_env(cls, **kw):
        threads = int(os.environ.get("REEB_BRANCH_THREADS", "1") or 1)
        return cls(threads=max(1, threads), **kw)


class DiscGridFunction:
    """Complex function on the disc ``|mu| < radius``.

    Values live on a polar tensor grid (cell-centred radii, uniform
    angles).  When a closed-form ``evaluator`` is given it is used for
    off-grid evaluation; otherwise values are interpolated cubically in
    ``(r, theta)``.
    """

    def __init__(self, radius: float = 1.0, n_r: int = 128, n_theta: int = 128,
                 values=None, evaluator: Callable | None = None):
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.n_r, self.n_theta = int(n_r), int(n_theta)
        self.evaluator = evaluator
        r, th = self.node_axes()
        if values is None:
            if evaluator is None:
                raise ValueError("need grid values or an evaluator")
            values = evaluator(r[:, None] * np.exp(1j * th[None, :]))
        values = np.asarray(values, dtype=complex)
        if values.shape != (self.n_r, self.n_theta):
            values = np.broadcast_to(values, (self.n_r, self.n_theta)).copy()
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        self.values = values
        self._interp = None

    @classmethod
    def from_callable(cls, fn: Callable, radius: float = 1.0, n_r: int = 128,
                      n_theta: int = 128):
        return cls(radius, n_r, n_theta, evaluator=fn)

    @classmethod
    def constant(cls, c, radius: float = 1.0, **kw):
        return cls.from_callable(lambda mu: np.full(np.shape(mu), c, dtype=complex),
                                 radius, **kw)

    def node_axes(self):
        r = self.radius * (np.arange(self.n_r) + 0.5) / self.n_r
        th = 2 * np.pi * np.arange(self.n_theta) / self.n_theta
        return r, th

    def nodes(self) -> np.ndarray:
        r, th = self.node_axes()
        return r[:, None] * np.exp(1j * th[None, :])

    def __call__(self, mu):
        mu = np.asarray(mu, dtype=complex)
        if self.evaluator is not None:
            return np.asarray(self.evaluator(mu), dtype=complex) * np.ones(mu.shape)
        if self._interp is None:
            r, th = self.node_axes()
            # pad: reflect through the origin at r=0 side, wrap in theta
            half = self.n_theta // 2
            r_ext = np.concatenate([-r[::-1], r])
            inner = np.roll(self.values, -half, axis=1)[::-1]
            vals = np.concatenate([inner, self.values], axis=0)
            th_ext = np.concatenate([th, [2 * np.pi]])
            vals = np.concatenate([vals, vals[:, :1]], axis=1)
            # extend radially to the boundary by constant continuation
            r_ext = np.concatenate([r_ext, [self.radius]])
            vals = np.concatenate([vals, vals[-1:]], axis=0)
            self._interp = (
                RegularGridInterpolator((r_ext, th_ext), vals.real, method="cubic"),
                RegularGridInterpolator((r_ext, th_ext), vals.imag, method="cubic"),
            )
        rr = np.clip(np.abs(mu), 0, self.radius)
        tt = np.mod(np.angle(mu), 2 * np.pi)
        pts = np.stack([rr.ravel(), tt.ravel()], axis=-1)
        re, im = self._interp
        return (re(pts) + 1j * im(pts)).reshape(mu.shape)

    def sup_abs(self) -> float:
        """Sup of ``|G|`` over the nodes, and over the rim when a formula is known."""
        s = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        if self.evaluator is not None:
            rim = self.radius * np.exp(2j * np.pi * np.arange(4 * self.n_theta) / (4 * self.n_theta))
            s = max(s, float(np.max(np.abs(self(rim)))))
        return s

    def to_csv(self, path):
        r, th = self.node_axes()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "theta", "re", "im"])
            for i, ri in enumerate(r):
                for j, tj in enumerate(th):
                    v = self.values[i, j]
                    w.writerow([repr(float(x)) for x in (ri, tj, v.real, v.imag)])

    @classmethod
    def from_csv(cls, path, radius: float | None = None):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        r = np.unique(data[:, 0])
        th = np.unique(data[:, 1])
        vals = (data[:, 2] + 1j * data[:, 3]).reshape(len(r), len(th))
        if radius is None:
            radius = r[0] + r[-1]  # cell-centred layout
        return cls(radius, len(r), len(th), values=vals)


def _as_function(f):
    if isinstance(f, DiscGridFunction):
        return f, f.radius
    return f, np.inf


def cauchy_green(G: DiscGridFunction, z, cfg: QuadratureConfig | None = None):
    """Evaluate ``G_hat`` at one point or an array of points."""
    cfg = cfg or QuadratureConfig()
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    zf = z.ravel()
    R = G.radius
    if np.any(np.abs(zf) >= R):
        raise DomainError("evaluation point lies outside the disc")

    th = 2 * np.pi * np.arange(cfg.n_theta) / cfg.n_theta
    e = np.exp(1j * th)
    xg, wg = np.polynomial.legendre.leggauss(cfg.n_r)
    xg = 0.5 * (xg + 1)
    wg = 0.5 * wg
    chunk = max(1, 2_000_000 // (cfg.n_r * cfg.n_theta))

    def block(zs):
        b = np.real(np.conj(zs)[:, None] * e[None, :])
        rho_max = -b + np.sqrt(np.maximum(R * R - np.abs(zs)[:, None] ** 2 + b * b, 0))
        rho = rho_max[..., None] * xg
        mu = zs[:, None, None] + rho * e[None, :, None]
        inner = (G(mu) * wg).sum(axis=-1) * rho_max
        return -2j * (inner * np.conj(e)).sum(axis=-1) * (2 * np.pi / cfg.n_theta)

    pieces = [zf[i : i + chunk] for i in range(0, len(zf), chunk)]
    if cfg.threads > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            out = list(ex.map(block, pieces))
    else:
        out = [block(p) for p in pieces]
    res = np.concatenate(out) if out else np.zeros(0, dtype=complex)
    return complex(res[0]) if scalar else res.reshape(z.shape)


def cauchy_green_solution(G: DiscGridFunction, cfg: QuadratureConfig | None = None):
    """The evaluator ``z -> G_hat(z) / 2 pi i``, a solution of dbar u = G."""
    return lambda z: cauchy_green(G, z, cfg) / (2j * np.pi)


def ring_nodes(ring, n_r: int = 16, n_theta: int = 32) -> np.ndarray:
    r0, r1 = ring
    if not 0 <= r0 < r1:
        raise DomainError("ring is empty")
    r = r0 + (r1 - r0) * (np.arange(n_r) + 0.5) / n_r
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    return (r[:, None] * np.exp(1j * th[None, :])).ravel()


def dbar(u, z, h: float = 1e-5):
    """Central-difference ``du/dzbar = (u_x + i u_y) / 2``."""
    z = np.asarray(z, dtype=complex)
    stencil = np.concatenate([z + h, z - h, z + 1j * h, z - 1j * h])
    v = np.asarray(u(stencil), dtype=complex).reshape(4, *z.shape)
    ux = (v[0] - v[1]) / (2 * h)
    uy = (v[2] - v[3]) / (2 * h)
    return 0.5 * (ux + 1j * uy)


def dbar_residual(u, f, ring=(0.1, 0.8), h: float = 1e-5, n_r: int = 16,
                  n_theta: int = 32) -> float:
    """Sup over ring nodes of ``|du/dzbar - f|``."""
    z = ring_nodes(ring, n_r, n_theta)
    _, R = _as_function(f)
    if ring[1] + h >= R:
        raise DomainError("ring reaches the disc boundary")
    return float(np.max(np.abs(dbar(u, z, h) - np.asarray(f(z)))))


def g_potential(f1f2: DiscGridFunction, w, cfg: QuadratureConfig | None = None):
    """Potential g with ``dbar g = (f1 + i f2) / 2``.

    ``f1f2`` holds the complex combination ``f1 + i f2`` of the coefficients
    of ``lambda - dt = f1 dx + f2 dy``; the factor one half makes ``dbar g``
    equal to the (0,1)-coefficient of that 1-form.
    """
    half = DiscGridFunction(f1f2.radius, f1f2.n_r, f1f2.n_theta, values=0.5 * f1f2.values,
                            evaluator=None if f1f2.evaluator is None
                            else (lambda mu: 0.5 * f1f2.evaluator(mu)))
    return cauchy_green(half, w, cfg) / (2j * np.pi)


@dataclass
class BoundCertificate:
    K: float
    sup_ratio: float
    r_min: float
    near_origin_ratio: float
    near_origin_flag: bool

    def __iter__(self):
        yield self.K
        yield self.sup_ratio

    @property
    def holds(self) -> bool:
        return self.sup_ratio <= self.K * (1 + 1e-3) + 1e-12


def bound_certificate(G: DiscGridFunction, cfg: QuadratureConfig | None = None,
                      r_min: float = 0.1, n_probe_r: int = 24,
                      n_probe_theta: int = 48) -> BoundCertificate:
    """Compare ``|G_hat(z)| / 2 pi |z|`` with ``K = sup |G|``.

    The ratio is certified on ``r_min <= |z| <= 0.95 R``; the largest ratio
    seen inside ``|z| < r_min`` is reported separately and flagged when it
    exceeds K.
    """
    K = G.sup_abs()
    if K == 0:
        return BoundCertificate(0.0, 0.0, r_min, 0.0, False)
    R = G.radius
    z_out = ring_nodes((r_min, 0.95 * R), n_probe_r, n_probe_theta)
    ratio = np.abs(cauchy_green(G, z_out, cfg)) / (2 * np.pi * np.abs(z_out))
    z_in = ring_nodes((0.0, r_min), 4, n_probe_theta // 2)
    ratio_in = np.abs(cauchy_green(G, z_in, cfg)) / (2 * np.pi * np.abs(z_in))
    near = float(np.max(ratio_in))
    return BoundCertificate(K, float(np.max(ratio)), r_min, near, near > K * (1 + 1e-3))
