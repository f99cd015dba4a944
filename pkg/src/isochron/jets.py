"""Truncated Taylor series ("jets") with numpy coefficient arrays.

A jet of order K at a point t0 stores c[k] = f^(k)(t0) / k! for k = 0..K.
Coefficients are arrays, so one jet carries many expansion points at once.
"""

import numpy as np


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def variable(cls, t0, order):
        t0 = np.asarray(t0, dtype=float)
        c = np.zeros((order + 1,) + t0.shape)
        c[0] = t0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order, shape=()):
        c = np.zeros((order + 1,) + np.shape(value) + tuple(shape))
        c[0] = value
        return cls(c)

    @property
    def order(self):
        return self.c.shape[0] - 1

    @property
    def value(self):
        return self.c[0]

    def derivative_values(self):
        """f^(k)(t0) for k = 0..K."""
        fact = np.cumprod([1.0] + list(range(1, self.order + 1)))
        return self.c * fact.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                k = min(self.order, other.order)
                return Jet(self.c[: k + 1]), Jet(other.c[: k + 1])
            return self, other
        c = np.zeros_like(self.c)
        c[0] = other
        return self, Jet(c)

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a.c + b.c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.c - b.c)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(b.c - a.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self._coerce(other)
        out = np.zeros(np.broadcast_shapes(a.c.shape, b.c.shape))
        for k in range(a.order + 1):
            for i in range(k + 1):
                out[k] += a.c[i] * b.c[k - i]
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self):
        a = self.c
        r = np.zeros_like(a)
        r[0] = 1.0 / a[0]
        for k in range(1, self.order + 1):
            acc = np.zeros_like(a[0])
            for i in range(1, k + 1):
                acc = acc + a[i] * r[k - i]
            r[k] = -acc * r[0]
        return Jet(r)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = Jet.constant(1.0, self.order, self.c.shape[1:])
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def deriv(self):
        """Jet of f' (order drops by one)."""
        k = np.arange(1, self.order + 1).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[1:] * k)

    def compose_into(self, inner):
        """Return self(inner(t)) where self is expanded at inner.value.

        ``self.c`` are the Taylor coefficients of the outer function about
        ``inner.value``; the result is a jet in the inner variable.
        """
        order = min(self.order, inner.order)
        d = Jet(inner.c[: order + 1].copy())
        d.c[0] = 0.0
        out = Jet.constant(0.0, order, np.broadcast_shapes(self.c.shape[1:], d.c.shape[1:])) + self.c[order]
        for k in range(order - 1, -1, -1):
            out = out * d + self.c[k]
        return out


def sqrt_variable_jet(v0, scale, order):
    """Jet in v of scale * sqrt(v) about v0 > 0."""
    v0 = np.asarray(v0, dtype=float)
    c = np.empty((order + 1,) + v0.shape)
    x0 = scale * np.sqrt(v0)
    binom = 1.0
    for k in range(order + 1):
        c[k] = x0 * binom * v0 ** (-k)
        binom *= (0.5 - k) / (k + 1)
    return Jet(c)


def stirling2(m):
    """Row m of the Stirling numbers of the second kind, S(m, j) for j = 0..m."""
    row = [1]
    for n in range(1, m + 1):
        new = [0] * (n + 1)
        for j in range(1, n + 1):
            new[j] = j * (row[j] if j < len(row) else 0) + row[j - 1]
        row = new
    return row


def euler_operator(poly, jet, t0):
    """Value at t0 of P(D) f, D = t d/dt, given the jet of f about t0.

    ``poly`` lists the coefficients of P in increasing powers of D; the jet
    order must be at least deg P. Uses D^m = sum_j S(m, j) t^j d^j/dt^j.
    """
    t0 = np.asarray(t0, dtype=float)
    deriv = jet.derivative_values()
    # weights w[j] multiplying t^j f^(j)
    w = np.zeros(len(poly))
    for m, a in enumerate(poly):
        if a:
            for j, s in enumerate(stirling2(m)):
                w[j] += a * s
    out = w[0] * deriv[0]
    tj = np.ones_like(t0)
    for j in range(1, len(w)):
        tj = tj * t0
        if w[j]:
            out = out + w[j] * tj * deriv[j]
    return out
