"""Vectorised forward-mode dual numbers.

A :class:`Dual` carries a value ``val`` (scalar or array) and a gradient
``grad`` whose leading axis indexes the seeded input directions, so
``grad.shape == (k,) + np.shape(val)``.  All arithmetic broadcasts like
numpy.
"""

import numpy as np

from ..errors import DomainError


class Dual:
    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = val
        self.grad = grad

    @property
    def nvars(self):
        return self.grad.shape[0]

    def __repr__(self):
        return f"Dual({self.val!r}, {self.grad!r})"

    def __neg__(self):
        return Dual(-self.val, -self.grad)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.grad + other.grad)
        return Dual(self.val + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.grad - other.grad)
        return Dual(self.val - other, self.grad)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.grad)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.grad * other.val + other.grad * self.val)
        return Dual(self.val * other, self.grad * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            _check_nonzero(other.val)
            q = self.val / other.val
            return Dual(q, (self.grad - other.grad * q) / other.val)
        _check_nonzero(other)
        return Dual(self.val / other, self.grad / other)

    def __rtruediv__(self, other):
        _check_nonzero(self.val)
        q = other / self.val
        return Dual(q, -self.grad * q / self.val)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("dual powers need an integer exponent")
        if n == 0:
            return Dual(np.ones_like(self.val, dtype=float), np.zeros_like(self.grad))
        if n < 0:
            return 1.0 / self ** (-n)
        return Dual(self.val ** n, self.grad * (n * self.val ** (n - 1)))


def _check_nonzero(x):
    if np.any(np.asarray(x) == 0):
        raise DomainError("division by zero")


def seed(values):
    """Dual variables for a point (or batch of points).

    ``values`` is a sequence of k scalars or equally shaped arrays; the
    i-th returned dual has unit gradient along direction i.
    """
    vals = [np.asarray(v, dtype=float) for v in values]
    shape = np.broadcast_shapes(*(v.shape for v in vals))
    k = len(vals)
    out = []
    for i, v in enumerate(vals):
        g = np.zeros((k,) + shape)
        g[i] = 1.0
        out.append(Dual(np.broadcast_to(v, shape).copy(), g))
    return out


def value_of(x):
    return x.val if isinstance(x, Dual) else x


def sin(x):
    if isinstance(x, Dual):
        return Dual(np.sin(x.val), x.grad * np.cos(x.val))
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(np.cos(x.val), -x.grad * np.sin(x.val))
    return np.cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = np.exp(x.val)
        return Dual(e, x.grad * e)
    return np.exp(x)


def sqrt(x):
    v = value_of(x)
    if np.any(np.asarray(v) < 0):
        raise DomainError("sqrt of a negative number")
    if isinstance(x, Dual):
        r = np.sqrt(x.val)
        if np.any(r == 0):
            raise DomainError("sqrt is not differentiable at 0")
        return Dual(r, x.grad / (2.0 * r))
    return np.sqrt(x)


def where(cond, a, b):
    """Elementwise select that keeps gradients of the chosen branch."""
    if isinstance(a, Dual) or isinstance(b, Dual):
        like = a if isinstance(a, Dual) else b
        da = a if isinstance(a, Dual) else Dual(a, np.zeros_like(like.grad))
        db = b if isinstance(b, Dual) else Dual(b, np.zeros_like(like.grad))
        return Dual(np.where(cond, da.val, db.val), np.where(cond, da.grad, db.grad))
    return np.where(cond, a, b)
