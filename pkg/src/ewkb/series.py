"""Truncated power series in hbar with an optional overall hbar**nu."""

from __future__ import annotations

from fractions import Fraction
from math import factorial

import numpy as np


class HbarSeries:
    """sum_k c_k hbar**(nu + k) for k = 0..M.

    Arithmetic is closed at the truncation order: a result never claims
    more orders than its operands can justify.
    """

    __slots__ = ("nu", "coeffs")

    def __init__(self, coeffs, nu=0):
        self.coeffs = np.array(coeffs, dtype=complex).ravel()
        if self.coeffs.size == 0:
            raise ValueError("empty series")
        self.nu = Fraction(nu)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def top(self) -> Fraction:
        """Exponent of the last retained term."""
        return self.nu + self.order

    def __repr__(self):
        return f"HbarSeries(nu={self.nu}, coeffs={self.coeffs.tolist()})"

    def copy(self):
        return HbarSeries(self.coeffs.copy(), self.nu)

    def coefficient(self, power) -> complex:
        k = Fraction(power) - self.nu
        if k.denominator != 1 or k < 0 or k > self.order:
            return 0j
        return complex(self.coeffs[int(k)])

    def __call__(self, hbar):
        h = np.asarray(hbar, dtype=complex)
        # Horner in hbar, then the prefactor
        acc = np.zeros_like(h)
        for c in self.coeffs[::-1]:
            acc = acc * h + c
        return acc * h ** float(self.nu)

    def truncate(self, top) -> "HbarSeries":
        k = int(Fraction(top) - self.nu)
        if k < 0:
            raise ValueError("truncation below the leading power")
        return HbarSeries(self.coeffs[: k + 1], self.nu)

    def _align(self, other: "HbarSeries"):
        d = other.nu - self.nu
        if d.denominator != 1:
            raise ValueError("incompatible fractional offsets")
        nu = min(self.nu, other.nu)
        top = min(self.top, other.top)
        n = int(top - nu) + 1
        a = np.zeros(n, complex)
        b = np.zeros(n, complex)
        sa = int(self.nu - nu)
        sb = int(other.nu - nu)
        ka = max(0, min(self.coeffs.size, n - sa))
        kb = max(0, min(other.coeffs.size, n - sb))
        a[sa:sa + ka] = self.coeffs[:ka]
        b[sb:sb + kb] = other.coeffs[:kb]
        return a, b, nu

    def __add__(self, other):
        if not isinstance(other, HbarSeries):
            if self.top < 0 or self.nu.denominator != 1:
                if self.nu.denominator != 1:
                    raise ValueError("cannot add a constant to a fractional series")
                return self.copy()
            c = np.zeros(int(self.top) + 1, complex)
            c[0] = complex(other)
            other = HbarSeries(c, 0)
        a, b, nu = self._align(other)
        return HbarSeries(a + b, nu)

    __radd__ = __add__

    def __neg__(self):
        return HbarSeries(-self.coeffs, self.nu)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, HbarSeries):
            return HbarSeries(self.coeffs * complex(other), self.nu)
        nu = self.nu + other.nu
        # relative orders are limited by the shorter operand
        n = min(self.coeffs.size, other.coeffs.size)
        c = np.convolve(self.coeffs[:n], other.coeffs[:n])[:n]
        return HbarSeries(c, nu)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, HbarSeries):
            return HbarSeries(self.coeffs / complex(other), self.nu)
        return self * other.inverse()

    def shift(self, power) -> "HbarSeries":
        """Multiply by hbar**power."""
        return HbarSeries(self.coeffs, self.nu + Fraction(power))

    def inverse(self) -> "HbarSeries":
        c = self.coeffs
        if c[0] == 0:
            raise ZeroDivisionError("leading coefficient vanishes")
        n = c.size
        r = np.zeros(n, complex)
        r[0] = 1.0 / c[0]
        for k in range(1, n):
            r[k] = -np.dot(c[1:k + 1], r[k - 1::-1][:k]) / c[0]
        return HbarSeries(r, -self.nu)

    def exp(self) -> "HbarSeries":
        """exp of a series with nu >= 0 and integer offset."""
        if self.nu < 0 or self.nu.denominator != 1:
            raise ValueError("exp needs a non-negative integer offset")
        full = np.zeros(int(self.top) + 1, complex)
        full[int(self.nu):] = self.coeffs
        n = full.size
        # e' = a' e, solved coefficientwise
        e = np.zeros(n, complex)
        e[0] = np.exp(full[0])
        for k in range(1, n):
            e[k] = sum(j * full[j] * e[k - j] for j in range(1, k + 1)) / k
        return HbarSeries(e, 0)

    def log(self) -> "HbarSeries":
        """log of a series with nu == 0 and c_0 != 0."""
        if self.nu != 0:
            raise ValueError("log needs nu == 0")
        a = self.coeffs
        n = a.size
        out = np.zeros(n, complex)
        out[0] = np.log(a[0])
        for k in range(1, n):
            s = k * a[k] - sum(j * out[j] * a[k - j] for j in range(1, k))
            out[k] = s / (k * a[0])
        return HbarSeries(out, 0)

    def real_if_close(self, tol=1e-10) -> "HbarSeries":
        c = self.coeffs
        scale = max(1.0, float(np.max(np.abs(c))))
        if np.all(np.abs(c.imag) < tol * scale):
            return HbarSeries(c.real.astype(complex), self.nu)
        return self

    def allclose(self, other: "HbarSeries", rtol=1e-9, atol=0.0) -> bool:
        a, b, _ = self._align(other)
        return bool(np.allclose(a, b, rtol=rtol, atol=atol))

    def borel_coefficients(self) -> np.ndarray:
        """b_k = c_k / k!, indexed from the leading power."""
        return np.array([c / factorial(k) for k, c in enumerate(self.coeffs)], complex)

    @classmethod
    def from_borel(cls, b, nu=0) -> "HbarSeries":
        return cls([bk * factorial(k) for k, bk in enumerate(b)], nu)
