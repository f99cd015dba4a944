"""Exact spectra of isochronous potentials by shooting in the X variable.

The Schrodinger equation, rewritten in X, is the Sturm-Liouville problem

    (1/2) d/dX [ (1+S)^-1 dphi/dX ] + (1+S) (E - omega^2 X^2 / 2) phi = 0,

which needs only the shear. With the flux psi = phi' / (1+S) and the scaled
Prufer angle tan(theta) = k phi / psi, k = sqrt(2E), the phase obeys

    theta' = k w cos^2(theta) + (q / k) sin^2(theta),  q = 2 w (E - omega^2 X^2 / 2),  w = 1 + S,

which advances almost uniformly through the classically allowed region.

Phases are integrated inward from both ends and matched at X = 0. At an
eigenvalue E_n the left and right phases differ by exactly n*pi, and the
difference increases monotonically with E, so no node counting is needed
beyond that identity.
"""

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ParameterError, SolverError
from .potentials import IsochronousPotential

LIMIT_POINT_THRESHOLD = 3.0 / 8.0


@dataclass(frozen=True)
class ShootingConfig:
    """Truncation and tolerance settings for :func:`solve_spectrum`.

    ``x_max`` fixes the truncation |X| bound at non-singular infinite ends;
    when None it is chosen per run so that the WKB decay integral from the
    outermost turning point reaches ``decay_margin``.
    """

    x_max: Optional[float] = None
    rtol: float = 1e-12
    atol: float = 1e-12
    match_point: float = 0.0
    bracket_expansion: float = 2.0
    decay_margin: float = 30.0
    singular_cutoff: float = 1e-14
    energy_tol: float = 1e-11
    refine: bool = True
    max_iter: int = 200


class EndpointClass(NamedTuple):
    endpoint: float
    lp_lc: str  # "limit-point" | "limit-circle" | "indeterminate"
    osc: str  # "oscillatory" | "nonoscillatory"
    limit: Optional[float] = None


class SpectrumRecord(NamedTuple):
    n: int
    energy: float
    method: str
    error_estimate: Optional[float] = None


# -- endpoint classification ----------------------------------------------------------


def classify_endpoint(p: IsochronousPotential, which="left", tol=1e-6):
    """Weyl limit-point/limit-circle class of one end of the x domain.

    Finite ends use L = lim (x - x0)^2 V(x): L > 3/8 is limit-point, L < 3/8
    limit-circle. The limit is estimated on x0 + delta, delta = 10^-k, and
    flagged indeterminate when the sequence does not settle or L sits within
    ``tol`` of the threshold. Isochronous branches are monotone so every end
    is nonoscillatory.
    """
    if which not in ("left", "right"):
        raise ParameterError("which must be 'left' or 'right'")
    lo, hi = p.domain
    x0 = lo if which == "left" else hi
    if not math.isfinite(x0):
        return EndpointClass(x0, "limit-point", "nonoscillatory", None)
    side = 1.0 if which == "left" else -1.0
    width = hi - lo if math.isfinite(hi - lo) else 1.0 / abs(p.shear.beta)
    deltas = width * 10.0 ** -np.arange(3.0, 10.0)
    vals = []
    for d in deltas:
        x = x0 + side * d
        vals.append(float(d * d * p.V(x)))
    vals = np.array(vals)
    diffs = np.abs(np.diff(vals))
    settled = diffs[-1] <= max(1e-9, 1e-6 * abs(vals[-1])) and diffs[-1] <= diffs[0] + 1e-15
    L = float(vals[-1])
    if not settled or abs(L - LIMIT_POINT_THRESHOLD) < tol:
        return EndpointClass(x0, "indeterminate", "nonoscillatory", L)
    return EndpointClass(x0, "limit-point" if L > LIMIT_POINT_THRESHOLD else "limit-circle",
                         "nonoscillatory", L)


# -- shooting ---------------------------------------------------------------------------


def _decay_cutoff(shear, omega, E, side, margin, step):
    """|X| where int w sqrt(omega^2 X^2 - 2E) dX from the turning point reaches margin."""
    Xt = math.sqrt(2.0 * E) / omega
    X = Xt
    acc = 0.0
    f_prev = 0.0
    while acc < margin:
        X_next = X + step
        w = float(shear.one_plus(side * X_next))
        f = w * math.sqrt(max(omega**2 * X_next**2 - 2.0 * E, 0.0))
        acc += 0.5 * (f + f_prev) * step
        f_prev, X = f, X_next
        if X > 1e6 * (1.0 + Xt):
            break
    return X


def _singular_cutoff(shear, side, cutoff):
    # distance to the wall ~ |X| (1 + side*S); push out until it is negligible
    X = 1.0 / abs(shear.beta)
    while X < 1e300:
        w = float(shear.one_plus(side * X))
        if w * X < cutoff:
            return X
        X *= 2.0
    raise SolverError("could not place the singular-end cutoff")


class _Ends(NamedTuple):
    left: float
    right: float
    left_dirichlet: bool
    right_dirichlet: bool


def _ends(p, E_top, cfg):
    sh = p.shear
    lo, hi = sh.validity
    omega = p.omega
    step = 0.02 / max(1.0, abs(sh.beta))
    if cfg.x_max is not None:
        if 0.5 * omega**2 * cfg.x_max**2 <= E_top + 10.0 * omega:
            raise ParameterError(f"x_max={cfg.x_max} leaves no forbidden margin above E={E_top:.6g}")
    ends = []
    for side, edge, singular in ((-1.0, lo, sh.singular_left), (1.0, hi, sh.singular_right)):
        if math.isfinite(edge):
            ends.append((abs(edge) * (1.0 - 1e-12), True))
        elif singular:
            ends.append((_singular_cutoff(sh, side, cfg.singular_cutoff), True))
        elif cfg.x_max is not None:
            ends.append((cfg.x_max, False))
        else:
            ends.append((_decay_cutoff(sh, omega, E_top, side, cfg.decay_margin, step), False))
    return _Ends(-ends[0][0], ends[1][0], ends[0][1], ends[1][1])


def _phases(p, energies, ends, cfg):
    """Prufer phases and their energy derivatives at the match point.

    Returns (theta_left, theta_right, dtheta_left/dE, dtheta_right/dE).
    """
    sh = p.shear
    omega2 = p.omega**2
    E = np.asarray(energies, dtype=float)
    k = np.sqrt(2.0 * E)
    dk = 1.0 / k
    m = len(E)
    xm = cfg.match_point

    def rhs_factory(sign):
        # one-sided evaluation keeps a jump of S at the match point out of each half
        edge = xm + sign * 1e-300

        def rhs(X, y):
            Xs = X if sign * (X - xm) > 0 else edge
            w = float(sh.one_plus(Xs))
            theta, eta = y[:m], y[m:]
            c, s = np.cos(theta), np.sin(theta)
            q = 2.0 * w * (E - 0.5 * omega2 * Xs * Xs)
            dtheta = k * w * c * c + (q / k) * s * s
            # d/dE at fixed X, including the energy dependence of k
            forcing = dk * w * c * c + (2.0 * w / k - q * dk / (k * k)) * s * s
            return np.concatenate([dtheta, 2.0 * s * c * (q / k - k * w) * eta + forcing])

        return rhs

    def start(X_end, dirichlet, sign):
        if dirichlet:
            theta = np.zeros_like(E) if sign < 0 else np.full_like(E, math.pi)
            return np.concatenate([theta, np.zeros_like(E)])
        # decaying WKB branch: tan(theta) = k / (-+ sqrt(omega^2 X^2 - 2E))
        root = np.sqrt(np.maximum(omega2 * X_end * X_end - 2.0 * E, 1e-300))
        return np.concatenate([np.arctan2(k, -sign * root), -sign / (k * root)])

    out = []
    for sign, X_end, dirichlet in ((-1.0, ends.left, ends.left_dirichlet), (1.0, ends.right, ends.right_dirichlet)):
        sol = solve_ivp(rhs_factory(sign), (X_end, xm), start(X_end, dirichlet, sign), method="DOP853",
                        rtol=cfg.rtol, atol=cfg.atol)
        if not sol.success:
            raise SolverError(f"phase integration failed: {sol.message}")
        out.append(sol.y[:, -1])
    return out[0][:m], out[1][:m], out[0][m:], out[1][m:]


def _mismatch(p, energies, levels, cfg):
    """F(E) - n pi, F'(E) and the node count implied by the phases."""
    energies = np.asarray(energies, dtype=float)
    ends = _ends(p, float(energies.max()), cfg)
    theta_l, theta_r, d_l, d_r = _phases(p, energies, ends, cfg)
    # zeros of sin(theta - pi/4) on each half; the shift keeps a node at the match point from being split
    nodes = np.floor(theta_l / math.pi + 0.25) - np.floor(theta_r / math.pi + 0.25)
    return theta_l - theta_r - math.pi * levels, d_l - d_r, nodes


def _solve_levels(p, levels, E0, cfg):
    """Safeguarded Newton on F(E) = n pi, all levels in lockstep.

    F is strictly increasing in E, so every evaluation tightens a bracket;
    steps that leave the bracket fall back to bisection or expansion.
    """
    levels = np.asarray(levels, dtype=float)
    E = np.array(E0, dtype=float)
    lo = np.zeros_like(E)
    hi = np.full_like(E, np.inf)
    done = np.zeros(len(E), dtype=bool)
    omega = p.omega
    for _ in range(cfg.max_iter):
        active = np.flatnonzero(~done)
        f, fp, _ = _mismatch(p, E[active], levels[active], cfg)
        for j, i in enumerate(active):
            if f[j] < 0:
                lo[i] = max(lo[i], E[i])
            elif f[j] > 0:
                hi[i] = min(hi[i], E[i])
            step = -f[j] / fp[j] if fp[j] > 0 else math.nan
            target = E[i] + step
            if not (lo[i] < target < hi[i]) or not math.isfinite(target):
                if math.isfinite(hi[i]) and lo[i] > 0:
                    target = 0.5 * (lo[i] + hi[i])
                elif f[j] < 0:
                    target = E[i] + cfg.bracket_expansion * omega
                else:
                    target = 0.5 * (lo[i] + E[i])
            tol = cfg.energy_tol * max(omega, abs(E[i]))
            if abs(target - E[i]) < tol or hi[i] - lo[i] < tol:
                done[i] = True
            E[i] = target
        if done.all():
            return E
    i = int(np.flatnonzero(~done)[0])
    raise SolverError(f"eigenvalue iteration did not converge for n={int(levels[i])}", level=int(levels[i]))


def solve_spectrum(p: IsochronousPotential, n_max, cfg: Optional[ShootingConfig] = None, levels=None):
    """Eigenvalues E_0..E_n_max (or the given ``levels``) by Prufer shooting.

    With ``cfg.refine`` each root is re-checked with tighter tolerances and a
    wider truncation; the resulting Newton correction is reported as
    ``error_estimate`` and the node count is verified there.
    """
    cfg = cfg or ShootingConfig()
    if levels is None:
        levels = np.arange(int(n_max) + 1)
    levels = np.asarray(levels, dtype=int)
    if levels.size == 0:
        return []
    E = _solve_levels(p, levels, (levels + 0.5) * p.omega, cfg)
    error = np.full(len(levels), np.nan)
    check = cfg
    if cfg.refine:
        check = replace(cfg, rtol=cfg.rtol * 0.1, atol=cfg.atol * 0.1, decay_margin=cfg.decay_margin + 8.0,
                        singular_cutoff=cfg.singular_cutoff * 0.01,
                        x_max=None if cfg.x_max is None else cfg.x_max * 1.25, refine=False)
    f, fp, nodes = _mismatch(p, E, levels, check)
    bad = np.flatnonzero(nodes != levels)
    if bad.size:
        n = int(levels[bad[0]])
        raise SolverError(f"node count mismatch for level n={n}", level=n)
    if cfg.refine:
        correction = -f / fp
        E = E + correction
        error = np.abs(correction)
        if np.any(error > 1e-9 * np.maximum(1.0, np.abs(E))):
            warnings.warn("eigenvalues changed by more than 1e-9 under refinement", RuntimeWarning, stacklevel=2)
    return [SpectrumRecord(int(n), float(e), "exact", None if np.isnan(err) else float(err))
            for n, e, err in zip(levels, E, error)]


class Correction(NamedTuple):
    n: int
    epsilon: float
    scaled_5_2: float
    scaled_2: float


def epsilon_exact(records, omega=1.0):
    """Corrections eps_n = E_n - (n + 1/2) omega with E^(5/2) and E^2 scaled columns."""
    out = []
    for r in records:
        eps = r.energy - (r.n + 0.5) * omega
        out.append(Correction(r.n, eps, r.energy**2.5 * eps, r.energy**2 * eps))
    return out
