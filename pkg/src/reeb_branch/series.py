"""Truncated power series with complex coefficients.

A :class:`TruncatedSeries` stores the coefficients ``c[0..N]`` of
``sum c[k] z**k + O(z**(N+1))``.  Binary operations truncate to the smaller
of the two orders, so the order attached to a result is always honest.
"""

from __future__ import annotations

import numpy as np

DEFAULT_ORDER = 16


class TruncatedSeries:
    """Power series ``sum_k c_k z^k`` known modulo ``z^(order+1)``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, order: int | None = None):
        c = np.asarray(coeffs, dtype=complex).ravel()
        if order is None:
            order = max(len(c) - 1, 0)
        if order < 0:
            raise ValueError("order must be nonnegative")
        out = np.zeros(order + 1, dtype=complex)
        m = min(len(c), order + 1)
        out[:m] = c[:m]
        if not np.all(np.isfinite(out)):
            raise ValueError("series coefficients must be finite")
        self.coeffs = out

    # -- constructors -------------------------------------------------
    @classmethod
    def monomial(cls, k: int, order: int = DEFAULT_ORDER, coeff=1.0):
        c = np.zeros(order + 1, dtype=complex)
        if k <= order:
            c[k] = coeff
        return cls(c, order)

    @classmethod
    def constant(cls, value, order: int = DEFAULT_ORDER):
        return cls.monomial(0, order, value)

    @classmethod
    def from_pairs(cls, pairs, order: int = DEFAULT_ORDER):
        """Build from ``[[re, im], ...]`` as used in germ JSON files."""
        c = [complex(re, im) for re, im in pairs]
        return cls(c, order)

    # -- basic properties ---------------------------------------------
    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def valuation(self, tol: float = 0.0) -> float:
        """Index of the first coefficient with modulus > tol (inf if none)."""
        nz = np.nonzero(np.abs(self.coeffs) > tol)[0]
        return int(nz[0]) if len(nz) else np.inf

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self.coeffs, min(order, self.order))

    def __getitem__(self, k):
        return self.coeffs[k]

    def __repr__(self):
        terms = [f"({c:.6g})z^{k}" for k, c in enumerate(self.coeffs) if c != 0]
        body = " + ".join(terms) if terms else "0"
        return f"TruncatedSeries({body} + O(z^{self.order + 1}))"

    # -- arithmetic -------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            return other
        return TruncatedSeries.constant(other, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        n = min(self.order, other.order)
        return TruncatedSeries(self.coeffs[: n + 1] + other.coeffs[: n + 1], n)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs, self.order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs * complex(other), self.order)
        n = min(self.order, other.order)
        prod = np.convolve(self.coeffs[: n + 1], other.coeffs[: n + 1])[: n + 1]
        return TruncatedSeries(prod, n)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs / complex(other), self.order)
        return self * other.reciprocal()

    def __pow__(self, k: int):
        if k < 0:
            return self.reciprocal() ** (-k)
        out = TruncatedSeries.constant(1.0, self.order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def shift(self, k: int) -> "TruncatedSeries":
        """Multiply by ``z**k`` (k >= 0) or divide by ``z**-k``.

        Division requires the low coefficients to vanish; the order drops
        accordingly so no unknown terms are invented.
        """
        if k >= 0:
            c = np.concatenate([np.zeros(k, dtype=complex), self.coeffs])
            return TruncatedSeries(c, self.order)
        k = -k
        if np.any(self.coeffs[:k] != 0):
            raise ValueError("series is not divisible by z^%d" % k)
        return TruncatedSeries(self.coeffs[k:], self.order - k)

    def derivative(self) -> "TruncatedSeries":
        if self.order == 0:
            return TruncatedSeries([0.0], 0)
        k = np.arange(1, self.order + 1)
        return TruncatedSeries(self.coeffs[1:] * k, self.order - 1)

    def reciprocal(self) -> "TruncatedSeries":
        """Multiplicative inverse of a unit series (c_0 != 0)."""
        c = self.coeffs
        if c[0] == 0:
            raise ZeroDivisionError("series with zero constant term is not a unit")
        n = self.order
        out = np.zeros(n + 1, dtype=complex)
        out[0] = 1.0 / c[0]
        for k in range(1, n + 1):
            out[k] = -np.dot(c[1 : k + 1], out[k - 1 :: -1][:k]) / c[0]
        return TruncatedSeries(out, n)

    def exp(self) -> "TruncatedSeries":
        """``exp`` via the recurrence ``E' = f' E``."""
        n = self.order
        f = self.coeffs
        out = np.zeros(n + 1, dtype=complex)
        out[0] = np.exp(f[0])
        kf = f * np.arange(n + 1)
        for k in range(1, n + 1):
            out[k] = np.dot(kf[1 : k + 1], out[k - 1 :: -1][:k]) / k
        return TruncatedSeries(out, n)

    def log(self) -> "TruncatedSeries":
        """Principal ``log`` of a unit series."""
        c = self.coeffs
        if c[0] == 0:
            raise ValueError("log needs a nonzero constant term")
        ratio = self.derivative() / self.truncate(self.order - 1) if self.order else None
        out = np.zeros(self.order + 1, dtype=complex)
        out[0] = np.log(c[0])
        if ratio is not None:
            out[1:] = ratio.coeffs / np.arange(1, self.order + 1)
        return TruncatedSeries(out, self.order)

    def power(self, alpha) -> "TruncatedSeries":
        """``self**alpha`` for a unit series, principal branch at z = 0.

        Uses the J.C.P. Miller recurrence, valid for any complex exponent.
        """
        c = self.coeffs
        if c[0] == 0:
            raise ValueError("real/complex powers need a nonzero constant term")
        n = self.order
        out = np.zeros(n + 1, dtype=complex)
        out[0] = np.exp(alpha * np.log(c[0]))
        for k in range(1, n + 1):
            j = np.arange(1, k + 1)
            out[k] = np.dot((alpha * j - (k - j)) * c[j], out[k - j]) / (k * c[0])
        return TruncatedSeries(out, n)

    def nth_root(self, n: int) -> "TruncatedSeries":
        return self.power(1.0 / n)

    def compose(self, inner: "TruncatedSeries") -> "TruncatedSeries":
        """``self(inner(z))``; requires ``inner(0) == 0``."""
        if inner.coeffs[0] != 0:
            raise ValueError("inner series must vanish at 0")
        n = min(self.order, inner.order)
        inner = inner.truncate(n)
        out = TruncatedSeries.constant(self.coeffs[n], n)
        for k in range(n - 1, -1, -1):
            out = out * inner + self.coeffs[k]
        return out

    def reversion(self) -> "TruncatedSeries":
        """Compositional inverse by Lagrange inversion.

        For ``f = c1 z + ...`` with ``c1 != 0`` the inverse ``g`` has
        ``[w^k] g = (1/k) [z^(k-1)] (z / f)^k``.
        """
        c = self.coeffs
        if c[0] != 0 or self.order < 1 or c[1] == 0:
            raise ValueError("reversion needs f(0) = 0 and f'(0) != 0")
        n = self.order
        z_over_f = self.shift(-1).reciprocal()
        out = np.zeros(n + 1, dtype=complex)
        power = TruncatedSeries.constant(1.0, z_over_f.order)
        for k in range(1, n + 1):
            power = power * z_over_f
            out[k] = power.coeffs[k - 1] / k
        return TruncatedSeries(out, n)

    # -- evaluation -----------------------------------------------------
    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z) + self.coeffs[-1]
        for c in self.coeffs[-2::-1]:
            acc = acc * z + c
        return acc

    def eval_derivative(self, z):
        return self.derivative()(z)

    def allclose(self, other: "TruncatedSeries", atol: float = 1e-12) -> bool:
        n = min(self.order, other.order)
        return bool(np.all(np.abs(self.coeffs[: n + 1] - other.coeffs[: n + 1]) <= atol))
