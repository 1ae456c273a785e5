"""Closed loops on S^3, their linking numbers and winding profiles."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .curves import AlgebroidGerm
from .errors import DegeneracyError, DomainError, ProximityError, ResolutionError
from .geometry import complex_to_real

ACCEPT_RESIDUAL = 0.05
MAX_RESIDUAL = 0.1
MAX_SAMPLES = 8192


@dataclass
class SpaceLoop:
    """Closed polyline on ``S^3``; ``points[0] == points[-1]``.

    ``sampler(m)`` regenerates the loop with ``m`` segments, which lets the
    linking integral refine its discretisation.
    """

    points: np.ndarray
    tag: str = ""
    sampler: Callable | None = None

    def __post_init__(self):
        P = np.asarray(self.points, float)
        if P.ndim != 2 or P.shape[1] != 4 or len(P) < 4:
            raise DomainError("a loop needs at least 3 segments of points in R^4")
        if np.linalg.norm(P[0] - P[-1]) > 1e-9:
            raise DomainError("loop is not closed")
        gaps = np.linalg.norm(np.diff(P, axis=0), axis=1)
        if gaps.max() >= 0.1:
            raise DomainError(f"consecutive samples {gaps.max():.3g} apart (need < 0.1)")
        self.points = P

    @property
    def m(self) -> int:
        return len(self.points) - 1

    def reversed(self) -> "SpaceLoop":
        s = self.sampler
        return SpaceLoop(self.points[::-1].copy(), self.tag + "^-1",
                         None if s is None else (lambda m: s(m)[::-1].copy()))

    def refined(self, m: int) -> "SpaceLoop":
        if self.sampler is None:
            raise ResolutionError("loop cannot be resampled")
        return SpaceLoop(self.sampler(m), self.tag, self.sampler)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "y1", "x2", "y2"])
            for p in self.points:
                w.writerow([repr(float(c)) for c in p])


def _loop_from(fn, m, tag):
    def sampler(k):
        t = 2 * np.pi * np.arange(k + 1) / k
        P = fn(t)
        P[-1] = P[0]
        return P

    return SpaceLoop(sampler(m), tag, sampler)


def great_circle(axis: str = "w2=0", m: int = 512) -> SpaceLoop:
    """``{w2 = 0}`` or ``{w1 = 0}`` on the unit sphere, traversed by ``e^{it}``."""
    if axis == "w2=0":
        fn = lambda t: complex_to_real(np.stack([np.exp(1j * t), 0 * t], axis=-1))
    elif axis == "w1=0":
        fn = lambda t: complex_to_real(np.stack([0 * t, np.exp(1j * t)], axis=-1))
    else:
        raise ValueError("axis must be 'w2=0' or 'w1=0'")
    return _loop_from(fn, m, axis)


def boundary_knot(germ: AlgebroidGerm, eps: float = 0.1, m: int = 512) -> SpaceLoop:
    """``Phi(eps e^{i phi}) / |Phi|`` for ``Phi = (z^n, rho(z))``."""
    if m < 64 * germ.n:
        raise DomainError(f"need at least {64 * germ.n} samples for n = {germ.n}")
    if not 0 < eps < germ.convergence_radius():
        raise DomainError("eps must lie inside the germ's convergence disc")

    def fn(t):
        z = eps * np.exp(1j * t)
        P = np.stack([z ** germ.n, germ.rho(z)], axis=-1)
        N = np.linalg.norm(P, axis=-1)
        if np.any(N < 1e-300):
            raise DomainError("Phi vanishes on the sampling circle")
        return complex_to_real(P / N[:, None])

    return _loop_from(fn, m, f"K(n={germ.n})")


def _projection_basis(pole):
    """Orthonormal basis of ``pole^perp`` with a fixed orientation."""
    M = np.column_stack([pole, np.eye(4)])
    Q, _ = np.linalg.qr(M)
    B = Q[:, 1:4].copy()
    # orientation fixed so that the Hopf circles link positively
    if np.linalg.det(np.column_stack([pole, B])) > 0:
        B[:, 0] = -B[:, 0]
    return B


def stereographic(points, pole) -> np.ndarray:
    pole = np.asarray(pole, float)
    pole = pole / np.linalg.norm(pole)
    P = np.asarray(points, float)
    denom = 1.0 - P @ pole
    if np.any(denom < 1e-12):
        raise ProximityError("a loop passes through the projection pole")
    B = _projection_basis(pole)
    return (P @ B) / denom[:, None]


def auto_pole(*loops, n_candidates: int = 2000, seed: int = 7) -> np.ndarray:
    """Point of ``S^3`` farthest from every loop among a fixed candidate set."""
    rng = np.random.default_rng(seed)
    C = rng.normal(size=(n_candidates, 4))
    C = np.vstack([C / np.linalg.norm(C, axis=1, keepdims=True), np.eye(4), -np.eye(4)])
    d = np.full(len(C), np.inf)
    for L in loops:
        pts = L.points[:: max(1, L.m // 128)]
        dist = np.linalg.norm(C[:, None, :] - pts[None, :, :], axis=-1).min(axis=1)
        d = np.minimum(d, dist)
    return C[int(np.argmax(d))]


def _gauss_sum(A, B) -> float:
    ma = 0.5 * (A[1:] + A[:-1])
    mb = 0.5 * (B[1:] + B[:-1])
    da = np.diff(A, axis=0)
    db = np.diff(B, axis=0)
    r = ma[:, None, :] - mb[None, :, :]
    cross = np.cross(da[:, None, :], db[None, :, :])
    dist3 = np.linalg.norm(r, axis=-1) ** 3
    return float(np.sum(np.einsum("ijk,ijk->ij", r, cross) / dist3) / (4 * np.pi))


@dataclass
class LinkingResult:
    value: int
    raw: float
    samples: int
    pole: np.ndarray

    def __int__(self):
        return self.value


def gauss_linking(K1: SpaceLoop, K2: SpaceLoop, pole=None, return_details: bool = False):
    """Linking number by the midpoint Gauss double sum after projection to R^3.

    The discretisation doubles while the distance of the raw value to the
    nearest integer is at least 0.05; a final distance of 0.1 or more is a
    resolution error.
    """
    sep = np.min(np.linalg.norm(K1.points[:, None, :] - K2.points[None, :, :], axis=-1))
    if sep <= 1e-3:
        raise ProximityError(f"loops come within {sep:.2e} of each other")
    if pole is None:
        pole = auto_pole(K1, K2)
    pole = np.asarray(pole, float)
    pole = pole / np.linalg.norm(pole)
    for L in (K1, K2):
        if np.min(np.linalg.norm(L.points - pole, axis=1)) <= 0.2:
            raise ProximityError("projection pole lies within 0.2 of a loop")
    A, B = K1, K2
    while True:
        raw = _gauss_sum(stereographic(A.points, pole), stereographic(B.points, pole))
        resid = abs(raw - round(raw))
        if resid < ACCEPT_RESIDUAL:
            break
        m = 2 * max(A.m, B.m)
        if m > MAX_SAMPLES or A.sampler is None or B.sampler is None:
            break
        A, B = A.refined(m), B.refined(m)
    if resid >= MAX_RESIDUAL:
        raise ResolutionError(f"raw linking {raw:.4f} is not near an integer; increase m")
    res = LinkingResult(int(round(raw)), raw, max(A.m, B.m), pole)
    return res if return_details else res.value


def winding_profile(K: SpaceLoop) -> tuple[int, int]:
    """Winding numbers of ``w1`` and ``w2`` around 0 along the loop."""
    P = K.points
    w1 = P[:, 0] + 1j * P[:, 1]
    w2 = P[:, 2] + 1j * P[:, 3]
    if np.min(np.abs(w1)) < 1e-3 or np.min(np.abs(w2)) < 1e-3:
        raise DegeneracyError("loop touches an axis circle")
    out = []
    for w in (w1, w2):
        inc = np.angle(w[1:] / w[:-1])
        out.append(int(round(inc.sum() / (2 * np.pi))))
    return out[0], out[1]
