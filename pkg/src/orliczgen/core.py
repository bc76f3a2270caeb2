"""Orlicz functions with a kink, their calculus, and Orlicz / Musielak norms."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .bodies import PowerBody, PowerLogBody, SmoothedBody

# default relative tolerance for norm root-finding
NORM_TOL = 1e-10
# M'(0) is read off along these arguments; slowly vanishing powers like t^0.2
# need far more than a single 1e-8 probe
ZERO_PROBES = 10.0 ** -np.arange(8, 72, 8)
VALIDATION_POINTS = 512


class NotNormalizableError(ValueError):
    """No kink position makes ``T M'(T) - M(T)`` reach 1."""


@dataclass(frozen=True)
class OrliczFunction:
    """``scale * body`` on ``[0, t_lin]``, affine with slope ``tail_slope`` after.

    ``t_lin = inf`` means the body is used on the whole half-line.
    """

    body: object
    t_lin: float = math.inf
    scale: float = 1.0
    tail_slope: float = math.nan

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not self.t_lin > 0:
            raise ValueError("kink abscissa must be positive")
        if self.t_lin > self.body.domain_end * (1 + 1e-12):
            raise ValueError(
                f"kink {self.t_lin} lies beyond the body's domain end {self.body.domain_end}"
            )
        if math.isfinite(self.t_lin) and math.isnan(self.tail_slope):
            slope = self.scale * float(self.body.derivs(self.t_lin, 1))
            object.__setattr__(self, "tail_slope", slope)

    @property
    def kinked(self):
        return math.isfinite(self.t_lin)

    def __call__(self, t, order=0):
        return evaluate(self, t, order)

    def value_at_kink(self):
        return self.scale * float(self.body.derivs(self.t_lin, 0))

    def inverse_at_one(self):
        """Generalized inverse ``M^{-1}(1) = sup{t : M(t) <= 1}``."""
        if self.kinked:
            mt = self.value_at_kink()
            if mt <= 1.0:
                return self.t_lin + (1.0 - mt) / self.tail_slope
            hi = self.t_lin
        else:
            hi = 1.0
            while evaluate(self, hi) <= 1.0:
                hi *= 2.0
        lo = hi / 2.0
        while lo > 0 and evaluate(self, lo) > 1.0:
            lo /= 2.0
        return brentq(lambda t: evaluate(self, t) - 1.0, lo, hi, xtol=1e-15, rtol=1e-15)

    def breakpoints(self):
        pts = [b * 1.0 for b in self.body.breakpoints() if b < self.t_lin]
        if self.kinked:
            pts.append(self.t_lin)
        return sorted(set(pts))


@dataclass(frozen=True)
class MusielakFamily:
    functions: tuple

    def __post_init__(self):
        if len(self.functions) == 0:
            raise ValueError("a Musielak-Orlicz family needs at least one function")
        object.__setattr__(self, "functions", tuple(self.functions))

    def __len__(self):
        return len(self.functions)


def power(q, t_lin=math.inf):
    return OrliczFunction(PowerBody(q), t_lin)


def powerlog(q, r, t_lin=math.inf):
    return OrliczFunction(PowerLogBody(q, r), t_lin)


def evaluate(M: OrliczFunction, t, order=0):
    """Value of the ``order``-th derivative of M at ``t`` (scalar or array).

    Past the kink the function is affine, so orders 2 and 3 vanish there.
    At the kink itself the body's (left) value is returned.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError(f"unsupported derivative order {order}")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("Orlicz functions are evaluated at nonnegative arguments only")
    T = M.t_lin
    inside = np.minimum(arr, T) if M.kinked else arr
    out = M.scale * np.asarray(M.body.derivs(inside, order), dtype=float)
    if M.kinked:
        past = arr > T
        if order == 0:
            tail = M.value_at_kink() + M.tail_slope * (arr - T)
        elif order == 1:
            tail = np.full_like(arr, M.tail_slope)
        else:
            tail = np.zeros_like(arr)
        out = np.where(past, tail, out)
    if out.ndim == 0:
        return float(out)
    return out


def _abs_vector(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("weight vector must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(x)):
        raise ValueError("weight vector entries must be finite")
    return np.abs(x)


def _luxemburg(modular, ax, inv_one, tol):
    """Bisection for the rho with ``modular(ax / rho) = 1``."""
    if not np.any(ax > 0):
        return 0.0
    base = ax.max() / inv_one
    lo, hi = base / 2.0, base * 2.0
    while modular(ax / lo) <= 1.0:
        lo /= 2.0
    while modular(ax / hi) > 1.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = modular(ax / mid)
        if val > 1.0:
            lo = mid
        else:
            hi = mid
        if abs(val - 1.0) <= 0.5 * tol or (hi - lo) <= 1e-16 * hi:
            return mid
    return 0.5 * (lo + hi)


def orlicz_norm(M: OrliczFunction, x, tol=NORM_TOL):
    """Luxemburg norm ``inf{rho > 0 : sum M(|x_i|/rho) <= 1}``."""
    ax = _abs_vector(x)
    return _luxemburg(lambda v: float(np.sum(evaluate(M, v))), ax, M.inverse_at_one(), tol)


def musielak_norm(F: MusielakFamily, x, tol=NORM_TOL):
    ax = _abs_vector(x)
    if len(ax) != len(F):
        raise ValueError(f"family has {len(F)} functions but the vector has {len(ax)} entries")

    def modular(v):
        return float(sum(evaluate(Mi, vi) for Mi, vi in zip(F.functions, v)))

    inv_one = min(Mi.inverse_at_one() for Mi, a in zip(F.functions, ax) if a > 0) if np.any(ax > 0) else 1.0
    return _luxemburg(modular, ax, inv_one, tol)


def _moment_gap(M, T):
    """``T M'(T) - M(T)`` for the body (ignoring any kink of M)."""
    body, s = M.body, M.scale
    return s * (T * float(body.derivs(T, 1)) - float(body.derivs(T, 0)))


def normalization_integral(M: OrliczFunction):
    """``int_0^inf x dM'(x)``, which equals ``T M'(T) - M(T)`` for an affine tail."""
    if not M.kinked:
        return math.inf
    return M.t_lin * M.tail_slope - M.value_at_kink()


def normalization_quadrature(M: OrliczFunction):
    """Independent check: ``int_0^T x M''(x) dx`` plus the slope jumps at kinks.

    Jumps of M' at tabulated atoms contribute ``location * jump``.
    """
    T = M.t_lin
    pts = [p for p in M.breakpoints() if 0 < p < T]
    val, _ = quad(lambda x: x * evaluate(M, x, 2), 0.0, T, points=pts or None, limit=500,
                  epsabs=1e-13, epsrel=1e-12)
    for s, h in getattr(M.body, "jumps", ()):
        if s <= T:
            val += M.scale * s * h
    # slope mismatch at the kink itself
    left = M.scale * float(M.body.derivs(T, 1))
    val += T * (M.tail_slope - left)
    return val


def normalize(M: OrliczFunction, tol=1e-12):
    """Move the kink to the T* solving ``T M'(T) - M(T) = 1``."""
    if abs(normalization_integral(M) - 1.0) <= tol:
        return M
    end = M.body.domain_end
    g = lambda T: _moment_gap(M, T) - 1.0
    hi = 1.0 if math.isinf(end) else end
    if math.isinf(end):
        for _ in range(200):
            if g(hi) >= 0:
                break
            hi *= 2.0
    if g(hi) < 0:
        raise NotNormalizableError(
            f"T M'(T) - M(T) stays below 1 up to T = {hi:g}; cannot normalize"
        )
    lo = hi / 2.0
    while g(lo) > 0:
        lo /= 2.0
        if lo < 1e-300:
            raise NotNormalizableError("normalization root not bracketed")
    T = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return OrliczFunction(M.body, T, M.scale)


def linear_extension(M: OrliczFunction, T: float):
    """Truncate the body at ``T`` and continue affinely with slope M'(T)."""
    if not T > 0:
        raise ValueError("extension point must be positive")
    if T > M.body.domain_end:
        raise ValueError(f"extension point {T} lies outside the body's domain")
    return OrliczFunction(M.body, float(T), M.scale)


def validation_grid(M: OrliczFunction, n=VALIDATION_POINTS, upper=None):
    upper = M.t_lin if upper is None else upper
    if math.isinf(upper):
        upper = M.inverse_at_one()
    return np.geomspace(1e-6 * upper, upper, n)


def check_two_concave(M: OrliczFunction, grid=None, tol_neg=1e-12):
    """``M''' <= 0`` on the grid (2-concavity of ``t M'(t) - M(t)``)."""
    grid = validation_grid(M) if grid is None else np.asarray(grid, dtype=float)
    d3 = evaluate(M, grid, 3)
    scale = np.maximum(np.abs(evaluate(M, grid, 2)) / grid, 1.0)
    return bool(np.all(d3 <= tol_neg * scale))


def check_second_derivative_decreasing(M: OrliczFunction, grid=None, rtol=1e-12):
    grid = np.sort(validation_grid(M) if grid is None else np.asarray(grid, dtype=float))
    d2 = evaluate(M, grid, 2)
    return bool(np.all(np.diff(d2) <= rtol * np.maximum(np.abs(d2[:-1]), 1e-300)))


def check_m_two_concave(M: OrliczFunction, grid=None, rtol=1e-10):
    """``t M''(t) <= M'(t)`` on the grid, i.e. M itself is 2-concave."""
    grid = validation_grid(M) if grid is None else np.asarray(grid, dtype=float)
    lhs = grid * evaluate(M, grid, 2)
    rhs = evaluate(M, grid, 1)
    return bool(np.all(lhs <= rhs * (1 + rtol) + 1e-300))


def check_equivalent(M, N, a=1.0, b=1.0, grid=None, rtol=1e-12):
    """``M(t/b)/a <= N(t) <= a M(b t)`` at every grid point."""
    grid = validation_grid(M) if grid is None else np.asarray(grid, dtype=float)
    n = evaluate(N, grid)
    lower = evaluate(M, grid / b) / a
    upper = a * evaluate(M, b * grid)
    slack = rtol * np.maximum(np.abs(n), 1e-300)
    return bool(np.all(lower <= n + slack) and np.all(n <= upper + slack))


def derivative_at_zero(M: OrliczFunction):
    """Smallest |M'| along a shrinking probe sequence (the limit at 0)."""
    return float(np.min(np.abs(evaluate(M, ZERO_PROBES, 1))))


def check_function(M: OrliczFunction, grid=None, zero_tol=1e-6):
    """Validate the type invariants; returns a list of violation messages."""
    problems = []
    if abs(evaluate(M, 0.0)) > zero_tol:
        problems.append("M(0) != 0")
    if abs(derivative_at_zero(M)) > zero_tol:
        problems.append("M'(0) != 0")
    grid = validation_grid(M) if grid is None else grid
    if np.any(evaluate(M, grid, 2) < -1e-12):
        problems.append("M'' < 0 somewhere (not convex)")
    if M.kinked:
        T = M.t_lin
        left = M.scale * float(M.body.derivs(T, 1))
        if M.tail_slope < left * (1 - 1e-12):
            problems.append("affine slope below M'(T-) (not convex at the kink)")
        past = np.array([T * 1.5, T * 3.0])
        if np.any(evaluate(M, past, 2) != 0) or np.any(evaluate(M, past, 3) != 0):
            problems.append("nonzero curvature past the kink")
    return problems


def _ramp_pieces(M, a, T, K, n_scan=257):
    """Split ``[a, T]`` into runs where ``min(M'', ramp)`` picks one branch."""
    body = M.body
    ramp = lambda t: K * (T - t)
    diff = lambda t: float(body.derivs(t, 2)) - ramp(t)
    ts = np.linspace(a, T, n_scan)
    d = body.derivs(ts, 2) - K * (T - ts)
    cuts = [a]
    for i in range(n_scan - 1):
        if d[i] == 0 or np.sign(d[i]) == np.sign(d[i + 1]):
            continue
        cuts.append(brentq(diff, ts[i], ts[i + 1], xtol=1e-15))
    cuts.append(T)
    cuts = sorted(set(cuts))
    kinds = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        kinds.append("ramp" if ramp(mid) < float(body.derivs(mid, 2)) else "base")
    # merge neighbours of the same kind
    merged = []
    for (lo, hi), kind in zip(zip(cuts[:-1], cuts[1:]), kinds):
        if merged and merged[-1][2] == kind:
            merged[-1][1] = hi
        else:
            merged.append([lo, hi, kind])
    pieces = []
    n1 = float(body.derivs(a, 1))
    n0 = float(body.derivs(a, 0))
    for lo, hi, kind in merged:
        pieces.append((lo, hi, kind, n1, n0))
        if kind == "ramp":
            n0 = n0 + n1 * (hi - lo) + 0.5 * K * (T - lo) ** 2 * (hi - lo) - K * ((T - lo) ** 3 - (T - hi) ** 3) / 6.0
            n1 = n1 + 0.5 * K * ((T - lo) ** 2 - (T - hi) ** 2)
        else:
            m1lo, m1hi = float(body.derivs(lo, 1)), float(body.derivs(hi, 1))
            m0lo, m0hi = float(body.derivs(lo, 0)), float(body.derivs(hi, 0))
            n0 = n0 + n1 * (hi - lo) + (m0hi - m0lo - m1lo * (hi - lo))
            n1 = n1 + m1hi - m1lo
    return tuple(pieces)


def _smoothed(M, delta):
    T = M.t_lin
    a = T * (1.0 - delta)
    K = float(M.body.derivs(a, 2)) / (T * delta)
    body = SmoothedBody(M.body, a, T, K, _ramp_pieces(M, a, T, K))
    return OrliczFunction(body, T, M.scale)


def _max_curvature(M, lo, hi, n=65):
    ts = np.linspace(lo, hi, n)
    return float(np.max(evaluate(M, ts, 2)))


def approx_smooth_kink(M: OrliczFunction, c: float, flat_tol=1e-14):
    """Equivalent function whose M'' drops linearly to 0 at the kink.

    Returns ``(N, delta)``. N agrees with M on ``[0, T(1 - delta)]``; delta is
    the largest value (found by bisection) for which both
    ``T delta^2 max M'' <= (c - 1) M(T(1 - delta))`` and
    ``M'(T) <= c N'(T)`` hold, the latter keeping ``M <= c N`` past the kink.
    """
    if not c > 1:
        raise ValueError("smoothing constant c must exceed 1")
    if not M.kinked:
        raise ValueError("smoothing needs a function with an affine tail")
    T = M.t_lin
    if float(evaluate(M, T, 2)) <= flat_tol * max(M.tail_slope / T, 1e-300):
        return M, 0.0

    def admissible(delta):
        a = T * (1 - delta)
        if T * delta**2 * _max_curvature(M, a, T) > (c - 1) * float(evaluate(M, a)):
            return False
        N = _smoothed(M, delta)
        return M.tail_slope <= c * N.tail_slope

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise ValueError("no admissible smoothing width found")
    return _smoothed(M, lo), lo


def rescale(M: OrliczFunction, factor: float):
    return replace(M, scale=M.scale * factor, tail_slope=M.tail_slope * factor)


def smooth_normalized(M: OrliczFunction, c: float):
    """Smooth the kink, then rescale so the result is normalized again."""
    N, delta = approx_smooth_kink(M, c)
    if delta == 0.0:
        return N
    return rescale(N, 1.0 / normalization_integral(N))
