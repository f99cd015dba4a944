"""Shear functions S(X) = d xbar / dX generating isochronous potentials.

A shear is odd with |S| < 1. Every analytic family carries a sympy
expression from which derivatives up to order 5 are lambdified once; the
value, the complement 1 + S and the integrated shear xbar(X) are supplied as
separate numerically stable numpy functions because the eigensolver and the
potential inversion evaluate them far out where naive formulas cancel or
overflow.
"""

import functools
import math

import numpy as np
import sympy as sp
from scipy import integrate

from .errors import NotApplicableError, ParameterError
from .jets import Jet

MAX_DERIV = 5
_X = sp.Symbol("X", real=True)


_T = sp.Symbol("t", positive=True)


@functools.lru_cache(maxsize=64)
def _lambdified_derivatives(expr_src):
    """Factored derivatives of an odd shear, valid for X >= 0.

    Sources prefixed with ``t:`` are written in t = exp(-X); they are
    differentiated with -t d/dt, which keeps every derivative a rational
    function of t and free of overflow.
    """
    in_t = expr_src.startswith("t:")
    var = _T if in_t else _X
    expr = sp.sympify(expr_src[2:] if in_t else expr_src, locals={"X": _X, "t": _T}, rational=True)
    funcs = []
    d = expr
    for _ in range(MAX_DERIV + 1):
        funcs.append(sp.lambdify(var, sp.factor(d), "numpy"))
        d = -_T * sp.diff(d, _T) if in_t else sp.diff(d, _X)
    return in_t, tuple(funcs)


def _fd_weights(order, npts):
    """Central finite-difference weights on offsets -m..m (Vandermonde solve)."""
    m = npts // 2
    offsets = np.arange(-m, m + 1, dtype=float)
    A = np.vander(offsets, increasing=True).T
    b = np.zeros(len(offsets))
    b[order] = math.factorial(order)
    return offsets, np.linalg.solve(A, b)


class ShearFunction:
    """Odd shear function with derivatives to order 5.

    Parameters
    ----------
    name : str
        Family label used in reports.
    value : callable
        Vectorised S(X).
    expr : str, optional
        sympy source for S(X) in the symbol ``X``; enables exact derivatives.
        Without it, derivatives fall back to finite differences.
    complement : callable, optional
        Stable 1 + S(X); defaults to ``1 + value``.
    xbar : callable, optional
        Integrated shear, int_0^X S. Defaults to adaptive quadrature.
    s0_plus, s_mean : float
        Right limit at 0 and Cesaro mean <S>. ``s_mean=None`` triggers a
        numerical estimate (flagged approximate).
    validity : (float, float)
        X-interval on which |S| < 1.
    beta : float
        Internal scale: the represented function is S_base(beta X).
    """

    def __init__(self, name, value, *, expr=None, complement=None, xbar=None,
                 s0_plus=0.0, s_mean=None, validity=(-math.inf, math.inf),
                 beta=1.0, analytic=True, params=None, xmap=None, wall=None):
        self.name = name
        self._value = value
        self.expr = expr
        self._complement = complement
        self._xbar = xbar
        self.s0_plus = s0_plus
        self._s_mean = s_mean
        self.base_validity = validity
        self.beta = float(beta)
        self.analytic = analytic
        self.params = dict(params or {})
        self._xmap = xmap
        self._wall = wall
        self._checkpoints = {}

    # -- construction helpers -------------------------------------------------
    def scaled(self, beta):
        """Shear of V(beta x)/beta^2: X -> S(beta X)."""
        if beta == 0:
            raise ParameterError("scaling parameter beta must be non-zero")
        new = ShearFunction(self.name, self._value, expr=self.expr,
                            complement=self._complement, xbar=self._xbar,
                            s0_plus=self.s0_plus, s_mean=self._s_mean,
                            validity=self.base_validity, beta=self.beta * beta,
                            analytic=self.analytic, params=self.params,
                            xmap=self._xmap, wall=self._wall)
        if beta < 0:
            # S(-|b|X) = -S(|b|X): mirror image, mean and right limit flip sign
            new.s0_plus = -self.s0_plus
            new._s_mean = None if self._s_mean is None else -self._s_mean
        return new

    @property
    def validity(self):
        a, b = self.base_validity
        lo, hi = sorted((a / self.beta, b / self.beta))
        return lo, hi

    @property
    def is_zero(self):
        return self.name == "harmonic"

    # -- evaluation -------------------------------------------------------------
    def eval(self, X):
        X = np.asarray(X, dtype=float)
        return np.asarray(self._value(self.beta * X), dtype=float) * np.ones_like(X)

    __call__ = eval

    def one_plus(self, X):
        """1 + S(X), accurate where S is close to -1."""
        X = np.asarray(X, dtype=float)
        if self._complement is None:
            return 1.0 + self.eval(X)
        return np.asarray(self._complement(self.beta * X), dtype=float) * np.ones_like(X)

    def deriv(self, k, X):
        """k-th derivative of S at X, k = 0..5."""
        if not 0 <= k <= MAX_DERIV:
            raise ValueError("derivative order must be in 0..5")
        X = np.asarray(X, dtype=float)
        if k == 0:
            return self.eval(X)
        if self.expr is not None:
            in_t, funcs = _lambdified_derivatives(self.expr)
            Y = self.beta * X
            arg = np.abs(Y)
            if in_t:
                arg = np.exp(-arg)
            # odd S: the k-th derivative has parity (-1)^(k+1)
            parity = np.where(Y < 0, (-1.0) ** (k + 1), 1.0)
            return self.beta**k * parity * np.asarray(funcs[k](arg), dtype=float) * np.ones_like(X)
        return self._fd_deriv(k, X)

    def _fd_deriv(self, k, X):
        npts = 2 * ((k + 5) // 2) + 1
        offsets, w = _fd_weights(k, npts)
        h = 1e-2 * 2.0 ** (-1.0 / (k + 1)) * np.maximum(1.0, np.abs(X))
        out = np.zeros_like(X)
        for o, wi in zip(offsets, w):
            out = out + wi * self.eval(X + o * h)
        return out / h**k

    def jet(self, X, order):
        """Taylor jet of S about X (coefficients S^(k)/k!)."""
        X = np.asarray(X, dtype=float)
        c = np.empty((order + 1,) + X.shape)
        fact = 1.0
        for k in range(order + 1):
            if k:
                fact *= k
            c[k] = self.deriv(k, X) / fact
        return Jet(c)

    def xbar(self, X):
        """int_0^X S(u) du (even in X)."""
        X = np.asarray(X, dtype=float)
        if self._xbar is not None:
            return np.asarray(self._xbar(self.beta * X), dtype=float) / self.beta * np.ones_like(X)
        return np.vectorize(self._xbar_quad)(np.abs(X))

    def _xbar_quad(self, X):
        # cumulative integral with cached checkpoints on a geometric grid
        if X == 0.0:
            return 0.0
        k = math.floor(math.log2(X)) if X >= 1.0 else None
        base_x, base_val = 0.0, 0.0
        if k is not None:
            for j in range(0, k + 1):
                node = 2.0**j
                if node not in self._checkpoints:
                    prev = 0.0 if j == 0 else 2.0 ** (j - 1)
                    prev_val = 0.0 if j == 0 else self._checkpoints[prev]
                    val, _ = integrate.quad(lambda u: float(self.eval(u)), prev, node,
                                            epsabs=1e-14, epsrel=1e-13, limit=200)
                    self._checkpoints[node] = prev_val + val
            base_x = 2.0**k
            base_val = self._checkpoints[base_x]
        val, _ = integrate.quad(lambda u: float(self.eval(u)), base_x, X,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        return base_val + val

    def x_of_X(self, X):
        """x(X) = X + xbar(X)."""
        X = np.asarray(X, dtype=float)
        if self._xmap is not None:
            return np.asarray(self._xmap(self.beta * X), dtype=float) / self.beta * np.ones_like(X)
        return X + self.xbar(X)

    @property
    def wall(self):
        """x-position of the singular endpoint, or None."""
        if self._wall is None:
            return None
        return self._wall / self.beta

    # -- asymptotics --------------------------------------------------------
    @property
    def mean_is_exact(self):
        return self._s_mean is not None

    @property
    def s_mean(self):
        """Cesaro mean <S>; estimated by Richardson extrapolation if not closed."""
        if self._s_mean is not None:
            return self._s_mean
        return self.estimate_mean()

    def estimate_mean(self, t0=32.0, levels=6):
        lo, hi = self.validity
        if math.isfinite(hi):
            raise NotApplicableError("Cesaro mean needs a shear defined on the whole line")
        ts = t0 * 2.0 ** np.arange(levels)
        a = np.array([float(self.xbar(t)) / t for t in ts])
        # A(T) = <S> + c/T + d/T^2 + ...
        table = [a]
        for m in range(1, levels):
            prev = table[-1]
            table.append((2.0**m * prev[1:] - prev[:-1]) / (2.0**m - 1.0))
        est = table[-1][0]
        if abs(table[-2][-1] - est) > 1e-6:
            raise NotApplicableError("Cesaro mean of S does not converge")
        return float(est)

    def _mean_or_none(self):
        lo, hi = self.validity
        if not (math.isinf(lo) and math.isinf(hi)):
            return None
        try:
            return self.s_mean
        except NotApplicableError:
            return None

    @property
    def singular_left(self):
        """True when 1 + S -> 0 as X -> -inf (<S> = +1, wall on the left)."""
        m = self._mean_or_none()
        return m is not None and abs(m - 1.0) < 1e-9

    @property
    def singular_right(self):
        """True when 1 + S -> 0 as X -> +inf (<S> = -1)."""
        m = self._mean_or_none()
        return m is not None and abs(m + 1.0) < 1e-9

    def __repr__(self):
        p = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"ShearFunction({self.name}{', ' + p if p else ''}, beta={self.beta:g})"


# -- families -------------------------------------------------------------------

def harmonic_shear():
    return ShearFunction("harmonic", lambda X: np.zeros_like(np.asarray(X, dtype=float)),
                         expr="0", complement=lambda X: np.ones_like(np.asarray(X, dtype=float)),
                         xbar=lambda X: np.zeros_like(np.asarray(X, dtype=float)),
                         s_mean=0.0)


def family_i_shear(alpha):
    """S(X) = alpha X / sqrt(1 + alpha X^2), alpha in [0, 1]."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"Family I requires 0 <= alpha <= 1, got alpha={alpha}")
    if alpha == 0.0:
        return harmonic_shear()

    def value(X):
        # written in 1/|X| so huge |X| cannot overflow
        X = np.asarray(X, dtype=float)
        inv = 1.0 / np.maximum(np.abs(X), 1.0)
        scaled = np.sqrt(inv * inv + alpha)
        Xc = np.clip(X, -1.0, 1.0)
        return np.where(np.abs(X) > 1.0, np.sign(X) * alpha / scaled, alpha * Xc / np.sqrt(1.0 + alpha * Xc * Xc))

    def complement(X):
        # 1 + S = (1/X^2 + alpha(1-alpha)) / (q (q + alpha)) for X < 0, q = sqrt(1/X^2 + alpha)
        X = np.asarray(X, dtype=float)
        inv = 1.0 / np.maximum(np.abs(X), 1.0)
        q = np.sqrt(inv * inv + alpha)
        far = (inv * inv + alpha * (1.0 - alpha)) / (q * (q + alpha))
        Xc = np.clip(X, -1.0, 1.0)
        r = np.sqrt(1.0 + alpha * Xc * Xc)
        near = (1.0 + alpha * (1.0 - alpha) * Xc * Xc) / (r * (r - alpha * Xc))
        return np.where(X < -1.0, far, np.where(X < 0, near, 1.0 + value(X)))

    def xbar(X):
        X = np.asarray(X, dtype=float)
        # sqrt(1 + a X^2) - 1 without cancellation
        return alpha * X * X / (np.sqrt(1.0 + alpha * X * X) + 1.0)

    def xmap(X):
        X = np.asarray(X, dtype=float)
        ax = np.maximum(np.abs(X), 1.0)
        # for X < -1: X + sqrt(1 + a X^2) = (1/|X| - (1-a)|X|) / (sqrt(1/X^2 + a) + 1)
        far = (1.0 / ax - (1.0 - alpha) * ax) / (np.sqrt(1.0 / (ax * ax) + alpha) + 1.0) - 1.0
        return np.where(X < -1.0, far, X + xbar(X))

    name = "isotonic" if alpha == 1.0 else "family_i"
    return ShearFunction(name, value, expr=f"{alpha!r}*X/sqrt(1 + {alpha!r}*X**2)",
                         complement=complement, xbar=xbar, s_mean=math.sqrt(alpha),
                         params={"alpha": alpha}, xmap=xmap,
                         wall=-1.0 if alpha == 1.0 else None)


def isotonic_shear():
    return family_i_shear(1.0)


def check_family_ii(xi, alpha):
    if alpha <= 0 or xi <= 0:
        raise ParameterError(f"Family II requires alpha > 0 and xi > 0 (alpha={alpha}, xi={xi})")
    if alpha < 1.0:
        bound = (alpha * (2.0 - alpha)) ** -0.5
        if not xi > bound:
            raise ParameterError(
                f"Family II with 0 < alpha < 1 requires xi > [alpha(2-alpha)]^(-1/2) = {bound:.6g}; "
                f"got xi={xi}, alpha={alpha}")
    elif xi < 1.0:
        raise ParameterError(f"Family II with alpha >= 1 requires xi >= 1; got xi={xi}")


def family_ii_shear(xi, alpha=1.0):
    """S(X) = (1/xi) sinh X / (cosh X - 1 + alpha)."""
    xi, alpha = float(xi), float(alpha)
    check_family_ii(xi, alpha)
    am1 = alpha - 1.0

    def value(X):
        X = np.asarray(X, dtype=float)
        e = np.exp(-np.abs(X))
        e2 = e * e
        # multiply numerator and denominator by 2 e^{-|X|}
        return np.sign(X) * (1.0 - e2) / (1.0 + e2 + 2.0 * am1 * e) / xi

    def complement(X):
        X = np.asarray(X, dtype=float)
        e = np.exp(-np.abs(X))
        e2 = e * e
        den = 1.0 + e2 + 2.0 * am1 * e
        s = np.sign(X)
        # den - (1 - e2)/xi regrouped so that xi = 1, X -> -inf does not cancel
        num_neg = (1.0 - 1.0 / xi) + e2 * (1.0 + 1.0 / xi) + 2.0 * am1 * e
        num = np.where(s < 0, num_neg, den + s * (1.0 - e2) / xi)
        return num / den

    def xbar(X):
        # ln((cosh X - 1 + alpha)/alpha)/xi, stable for large |X|
        a = np.abs(np.asarray(X, dtype=float))
        e = np.exp(-a)
        return (a + np.log((1.0 + e * e + 2.0 * am1 * e) / (2.0 * alpha))) / xi

    def xmap(X):
        # ((xi - 1) X + (X + |X|) + log(...)) / xi, exact cancellation of X + |X| for X < 0
        X = np.asarray(X, dtype=float)
        e = np.exp(-np.abs(X))
        tail = np.log((1.0 + e * e + 2.0 * am1 * e) / (2.0 * alpha))
        return ((xi - 1.0) * X + (X + np.abs(X)) + tail) / xi

    return ShearFunction("family_ii", value,
                         expr=f"t:(1 - t**2)/({xi!r}*(1 + t**2 + 2*({alpha!r} - 1)*t))",
                         complement=complement, xbar=xbar, s_mean=1.0 / xi,
                         params={"xi": xi, "alpha": alpha}, xmap=xmap,
                         wall=-math.log(2.0 * alpha) if xi == 1.0 else None)


def urabe_shear(zeta):
    """S(X) = zeta X on |X| < 1/|zeta|."""
    zeta = float(zeta)
    if zeta == 0:
        raise ParameterError("Urabe potential requires zeta != 0")
    lim = 1.0 / abs(zeta)
    return ShearFunction("urabe", lambda X: zeta * np.asarray(X, dtype=float),
                         expr=f"{zeta!r}*X",
                         complement=lambda X: 1.0 + zeta * np.asarray(X, dtype=float),
                         xbar=lambda X: 0.5 * zeta * np.asarray(X, dtype=float) ** 2,
                         s_mean=None, validity=(-lim, lim), params={"zeta": zeta})


def split_harmonic_shear(rho):
    """Piecewise-constant shear of the split-harmonic well, rho = omega_l / omega_r."""
    rho = float(rho)
    if not 0.0 <= rho <= 1.0:
        raise ParameterError(f"split-harmonic ratio must lie in [0, 1], got {rho}")
    s = (rho - 1.0) / (rho + 1.0)
    return ShearFunction("split_harmonic", lambda X: s * np.sign(np.asarray(X, dtype=float)),
                         expr=None,
                         complement=lambda X: 1.0 + s * np.sign(np.asarray(X, dtype=float)),
                         xbar=lambda X: s * np.abs(np.asarray(X, dtype=float)),
                         s0_plus=s, s_mean=s, analytic=False, params={"rho": rho})


ALGEBRAIC_I2_EXPR = "2*X*sqrt(35 + 42*X**2 + 15*X**4)/sqrt(105 + 455*X**2 + 483*X**4 + 165*X**6)"


def expression_shear(expr, *, s_mean=None, name="custom"):
    """Shear from a sympy expression string in ``X``."""
    f0 = sp.lambdify(_X, sp.sympify(expr, locals={"X": _X}), "numpy")

    def value(X):
        X = np.asarray(X, dtype=float)
        return np.asarray(f0(X), dtype=float) * np.ones_like(X)

    return ShearFunction(name, value, expr=expr, s_mean=s_mean, params={})


def algebraic_i2_shear():
    """Shear recovered from I2(E) = -(1/6) w^8 / (w^2 + 2E)^(9/2)."""
    return expression_shear(ALGEBRAIC_I2_EXPR, s_mean=2.0 / math.sqrt(11.0), name="algebraic_i2")


def callable_shear(func, *, s_mean=None, validity=(-math.inf, math.inf), name="custom"):
    """Shear from a plain vectorised callable; derivatives by finite differences."""
    return ShearFunction(name, lambda X: np.asarray(func(np.asarray(X, dtype=float)), dtype=float),
                         expr=None, s_mean=s_mean, validity=validity)
