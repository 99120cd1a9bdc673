"""First-order jets of matrix-valued maps along a batch of tangent vectors.

A ``Jet`` carries a value V (r x c) and derivatives D (N x r x c), one slice per
tangent vector.  Products and inverses follow the chain rule, so evaluating a
component map on jets yields its exact differential.
"""

from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("val", "der")
    __array_ufunc__ = None  # make ndarray @ Jet defer to Jet.__rmatmul__

    def __init__(self, val, der):
        self.val = np.asarray(val, dtype=complex)
        self.der = np.asarray(der, dtype=complex)

    @classmethod
    def const(cls, val, batch: int) -> "Jet":
        val = np.asarray(val, dtype=complex)
        return cls(val, np.zeros((batch,) + val.shape, dtype=complex))

    @property
    def batch(self) -> int:
        return self.der.shape[0]

    def __matmul__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val @ other.val, self.der @ other.val + self.val @ other.der)
        other = np.asarray(other)
        return Jet(self.val @ other, self.der @ other)

    def __rmatmul__(self, other):
        other = np.asarray(other)
        return Jet(other @ self.val, other @ self.der)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.der + other.der)
        return Jet(self.val + other, self.der)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val - other.val, self.der - other.der)
        return Jet(self.val - other, self.der)

    def __rsub__(self, other):
        return Jet(other - self.val, -self.der)

    def __neg__(self):
        return Jet(-self.val, -self.der)

    def __mul__(self, c):
        return Jet(c * self.val, c * self.der)

    __rmul__ = __mul__


def inv(x):
    """Matrix inverse of an array or a Jet (d(X^-1) = -X^-1 dX X^-1)."""
    if isinstance(x, Jet):
        vi = np.linalg.inv(x.val)
        return Jet(vi, -vi @ x.der @ vi)
    return np.linalg.inv(x)


def value(x) -> np.ndarray:
    return x.val if isinstance(x, Jet) else np.asarray(x)


def theta(x: Jet) -> np.ndarray:
    """Left Maurer-Cartan form X^-1 dX on each tangent of the batch."""
    return np.linalg.inv(x.val) @ x.der


def theta_bar(x: Jet) -> np.ndarray:
    """Right Maurer-Cartan form dX X^-1."""
    return x.der @ np.linalg.inv(x.val)


def mat_product(mats):
    """Ordered product M_1 M_2 ... of arrays or jets."""
    out = mats[0]
    for m in mats[1:]:
        out = out @ m
    return out
