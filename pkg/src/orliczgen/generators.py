"""Distributions generating a given Orlicz function, and the converse.

Max-norm direction: for a normalized M with affine tail past T,
``P(X > t) = M'(1/t)/t - M(1/t)`` with density ``t^-3 M''(1/t)``.
l_p direction: ``P(X > x) = M'(1/x)/x - M(1/x) - M''(1/x)/(p x^2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bodies import TabulatedBody
from .core import (
    MusielakFamily,
    OrliczFunction,
    derivative_at_zero,
    evaluate,
    normalization_integral,
)
from .quadrature import _GL_W, _GL_X, integrate_to_infinity, segment_integrals
from .tails import PDF_NEG_TOL, DensityModel, TailFunction

NORMALIZATION_TOL = 1e-6
GRID_POINTS = 2048
GRID_DECADES = 6


class NegativeDensity(ValueError):
    """The candidate density is negative somewhere, so it is not a law."""

    def __init__(self, point, value, p=None):
        self.point = float(point)
        self.value = float(value)
        self.p = p
        super().__init__(
            f"density {self.value:.6g} < 0 at x = {self.point:.6g}"
            + (f" for p = {p:g}" if p is not None else "")
        )


class UnnormalizedError(ValueError):
    pass


def _require_normalized(M: OrliczFunction):
    if not M.kinked:
        raise UnnormalizedError("function has no affine tail, so it cannot be normalized")
    gap = normalization_integral(M)
    if abs(gap - 1.0) > NORMALIZATION_TOL:
        raise UnnormalizedError(f"int x dM'(x) = {gap:.9g}, expected 1")


def _slope_atoms(M: OrliczFunction):
    """Atoms of the max-generated law caused by jumps of M' (incl. at the kink)."""
    T = M.t_lin
    atoms = []
    for s, h in getattr(M.body, "jumps", ()):
        if 0 < s < T:
            atoms.append((1.0 / s, M.scale * h * s))
    left = M.scale * float(M.body.derivs(T, 1))
    # a jump sitting exactly at T is part of the body's right-continuous M'
    kink_jump = M.tail_slope - left
    for s, h in getattr(M.body, "jumps", ()):
        if s == T:
            kink_jump += M.scale * h
    if kink_jump > 1e-14 * max(M.tail_slope, 1.0):
        atoms.append((1.0 / T, T * kink_jump))
    return tuple(sorted(atoms))


def _inverse_breakpoints(M):
    return tuple(sorted(1.0 / b for b in M.breakpoints() if b > 0))


def tail_from_orlicz_max(M: OrliczFunction) -> TailFunction:
    """Law of X with ``E max |x_i X_i|`` equivalent to the M-norm."""
    _require_normalized(M)
    if derivative_at_zero(M) > 1e-6:
        raise ValueError("M'(0) must vanish")
    T = M.t_lin
    floor = 1.0 / T
    atoms = _slope_atoms(M)

    def tail(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            u = np.where(t > floor, 1.0 / np.maximum(t, floor), T)
        val = u * evaluate(M, u, 1) - evaluate(M, u)
        for s, h in getattr(M.body, "jumps", ()):
            # P(X > t) excludes the atom sitting at t itself
            val = val - M.scale * h * s * (u == s)
        return np.clip(np.where(t < floor, 1.0, val), 0.0, 1.0)

    def pdf(t):
        t = np.asarray(t, dtype=float)
        u = 1.0 / np.maximum(t, floor)
        return np.where(t >= floor, u**3 * evaluate(M, u, 2), 0.0)

    return TailFunction(tail, atoms, floor, pdf, _inverse_breakpoints(M), "max-generated")


def density_from_orlicz_max(M: OrliczFunction) -> DensityModel:
    D = tail_from_orlicz_max(M)
    return DensityModel(D.pdf, D.atoms, D.support_floor, D.breakpoints)


def _require_c1(M):
    if getattr(M.body, "jumps", ()):
        raise ValueError("l_p generation needs M' continuous (tabulated jumps present)")
    left = M.scale * float(M.body.derivs(M.t_lin, 1))
    if abs(M.tail_slope - left) > 1e-12 * max(abs(left), 1.0):
        raise ValueError("l_p generation needs M' continuous at the kink")


def _pdf_p(M, p):
    T = M.t_lin
    floor = 1.0 / T
    lead = 0.0 if math.isinf(p) else 1.0 - 2.0 / p
    inv_p = 0.0 if math.isinf(p) else 1.0 / p

    def pdf(x):
        x = np.asarray(x, dtype=float)
        u = 1.0 / np.maximum(x, floor)
        val = lead * u**3 * evaluate(M, u, 2) - inv_p * u**4 * evaluate(M, u, 3)
        return np.where(x >= floor, val, 0.0)

    return pdf


def _check_nonnegative(pdf, M, p, n=1024):
    u = np.geomspace(1e-6 * M.t_lin, M.t_lin, n)
    pts = [b for b in M.breakpoints() if b < M.t_lin]
    u = np.unique(np.concatenate([u, np.array(pts) * (1 - 1e-9), np.array(pts) * (1 + 1e-9)]))
    u = u[(u > 0) & (u <= M.t_lin)]
    x = 1.0 / u
    vals = pdf(x)
    worst = int(np.argmin(vals))
    if vals[worst] < -PDF_NEG_TOL:
        raise NegativeDensity(x[worst], vals[worst], p)


def _atom_p(M, p):
    T = M.t_lin
    mass = T**2 * float(evaluate(M, T, 2)) / p
    return ((1.0 / T, mass),) if mass > 0 else ()


def tail_from_orlicz_p(M: OrliczFunction, p: float, allow_negative=False) -> TailFunction:
    """Law of X with ``E ||(x_i X_i)||_p`` equivalent to the M-norm.

    If ``M''(T-) > 0`` the tail jumps at ``1/T``; the jump is kept as an atom.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    _require_normalized(M)
    _require_c1(M)
    pdf = _pdf_p(M, p)
    if not allow_negative:
        _check_nonnegative(pdf, M, p)
    T = M.t_lin
    floor = 1.0 / T
    inv_p = 0.0 if math.isinf(p) else 1.0 / p

    def tail(x):
        x = np.asarray(x, dtype=float)
        u = np.minimum(1.0 / np.maximum(x, floor), T)
        val = u * evaluate(M, u, 1) - evaluate(M, u) - inv_p * u**2 * evaluate(M, u, 2)
        return np.clip(np.where(x < floor, 1.0, val), 0.0, 1.0)

    atoms = _atom_p(M, p) if not math.isinf(p) else ()
    clamped = lambda x: np.maximum(pdf(x), 0.0)
    return TailFunction(tail, atoms, floor, clamped, _inverse_breakpoints(M), f"lp-generated(p={p:g})")


def density_from_orlicz_p(M: OrliczFunction, p: float) -> DensityModel:
    """``(1 - 2/p) x^-3 M''(1/x) - x^-4 M'''(1/x) / p`` on ``x >= 1/T``.

    Raises :class:`NegativeDensity` if the formula dips below zero.
    """
    D = tail_from_orlicz_p(M, p)
    return DensityModel(D.pdf, D.atoms, D.support_floor, D.breakpoints)


def density_from_orlicz_2(M: OrliczFunction) -> DensityModel:
    """p = 2 case: ``-M'''(1/x) / (2 x^4)``."""
    _require_normalized(M)
    _require_c1(M)
    T = M.t_lin
    floor = 1.0 / T

    def pdf(x):
        x = np.asarray(x, dtype=float)
        u = 1.0 / np.maximum(x, floor)
        return np.where(x >= floor, -0.5 * u**4 * evaluate(M, u, 3), 0.0)

    _check_nonnegative(pdf, M, 2.0)
    atoms = _atom_p(M, 2.0)
    if atoms:
        warnings.warn(
            f"M''(T) > 0: the law has an atom of mass {atoms[0][1]:.6g} at {atoms[0][0]:.6g}; "
            "smooth the kink first",
            stacklevel=2,
        )
    clamped = lambda x: np.maximum(pdf(x), 0.0)
    return DensityModel(clamped, atoms, floor, _inverse_breakpoints(M))


# --- distribution -> Orlicz function -------------------------------------------------


def _s_grid(T, D, n=GRID_POINTS, decades=GRID_DECADES):
    t0 = T * 10.0**-decades
    if D.atoms:
        t0 = min(t0, 0.5 / max(a for a, _ in D.atoms))
    extra = [1.0 / b for b in D.kinks() if b > 0 and t0 < 1.0 / b < T]
    s = np.unique(np.concatenate([np.geomspace(t0, T, n), extra]))
    return s


def _cutoff_without_floor(D, target=4.0):
    """Kink for a law with no positive support floor: where M reaches ``target``."""
    s = 1.0
    M = lambda s: s * integrate_to_infinity(D, 1.0 / s, D.kinks())
    while M(s) < target:
        s *= 2.0
    while M(s / 2) >= target:
        s /= 2.0
    return s


def _pdf_one_sided(D, x, side):
    shifted = x * (1 - 1e-12) if side < 0 else x * (1 + 1e-12)
    return np.asarray(D.density(shifted), dtype=float)


def _upper_integrals(D, s):
    """``I(s_k) = int_{1/s_k}^inf P_c(X > u) du`` on the ascending grid ``s``."""
    u = 1.0 / s
    head = integrate_to_infinity(D.continuous_tail, u[0], [k for k in D.kinks() if k > u[0]])
    # segments [u_{k+1}, u_k] are short; accumulate from the far end
    pieces = segment_integrals(D.continuous_tail, u[::-1])[::-1]
    return head + np.concatenate([[0.0], np.cumsum(pieces)])


def orlicz_from_distribution_max(D: TailFunction, n_grid=GRID_POINTS) -> OrliczFunction:
    """``M(s) = E (s|X| - 1)_+``, i.e. ``M'(s) = E[|X|; |X| >= 1/s]``."""
    T = 1.0 / D.support_floor if D.support_floor > 0 else _cutoff_without_floor(D)
    s = _s_grid(T, D, n_grid)
    I = _upper_integrals(D, s)
    u = 1.0 / s
    ct = np.asarray(D.continuous_tail(u), dtype=float)
    m_c = s * I
    d1 = I + ct * u
    d2_right = s**-3 * _pdf_one_sided(D, u, -1)
    d2_left = s**-3 * _pdf_one_sided(D, u, +1)
    jumps = tuple(sorted((1.0 / a, m * a) for a, m in D.atoms if 1.0 / a <= T))
    body = TabulatedBody.from_hermite(s, d1, d2_right, d2_left, m_c[0], jumps)
    return OrliczFunction(body, T)


def orlicz_from_distribution_p(D: TailFunction, p: float, n_grid=GRID_POINTS) -> OrliczFunction:
    """Function whose norm is generated by ``E ||(x_i X_i)||_p``.

    ``M'(s) = p/(p-1) (s^(p-1) E[X^p; X <= 1/s] + E[X; X > 1/s])`` and
    ``M''(s) = p s^(p-2) E[X^p; X <= 1/s]``.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not D.support_floor > 0:
        raise ValueError("l_p inversion needs a law bounded away from 0")
    T = 1.0 / D.support_floor
    s = _s_grid(T, D, n_grid)
    u = 1.0 / s
    # G(u) = E[X^p; X <= u] for the continuous part, ascending in u
    f = lambda x: x**p * D.density(x)
    u_asc = u[::-1]
    G_c = np.concatenate([[0.0], np.cumsum(segment_integrals(f, u_asc))])[::-1]
    I = _upper_integrals(D, s)
    ct = np.asarray(D.continuous_tail(u), dtype=float)
    B_c = I + ct * u
    G_right = G_c.copy()   # excludes an atom at exactly u (s slightly larger)
    G_left = G_c.copy()    # includes it
    B = B_c.copy()
    for a, m in D.atoms:
        G_right += m * a**p * (a < u)
        G_left += m * a**p * (a <= u)
        B += m * a * (a > u)
    G = G_left
    d1 = p / (p - 1) * (s ** (p - 1) * G + B)
    d2_right = p * s ** (p - 2) * G_right
    d2_left = p * s ** (p - 2) * G_left
    # M(s) = p/(p-1) (E(sX - 1)_+ + E min(sX, 1)^p / p)
    full_I = I[0] + sum(m * max(a - u[0], 0.0) for a, m in D.atoms)
    tail0 = float(D(u[0]))
    m0 = p / (p - 1) * (s[0] * full_I + (s[0] ** p * G[0] + tail0) / p)
    body = TabulatedBody.from_hermite(s, d1, d2_right, d2_left, m0)
    return OrliczFunction(body, T)


def musielak_from_distributions(Ds) -> MusielakFamily:
    Ds = list(Ds)
    if not Ds:
        raise ValueError("need at least one distribution")
    return MusielakFamily(tuple(orlicz_from_distribution_max(D) for D in Ds))


# --- products ---------------------------------------------------------------------------


def _product_kinks(mu, Y):
    return sorted({x * y for x in mu.kinks() for y in Y.kinks()})


def _exact_atomic_product(mu, Y):
    atoms_mu = mu.atoms

    def tail(z):
        z = np.asarray(z, dtype=float)
        return sum(m * np.asarray(Y(z / a)) for a, m in atoms_mu)

    def pdf(z):
        z = np.asarray(z, dtype=float)
        return sum(m * np.asarray(Y.density(z / a)) / a for a, m in atoms_mu)

    atoms = tuple(sorted((a * b, m * n) for a, m in atoms_mu for b, n in Y.atoms))
    bps = tuple(sorted({a * b for a, _ in atoms_mu for b in Y.kinks()}))
    return TailFunction(tail, atoms, mu.support_floor * Y.support_floor, pdf, bps,
                        f"product({mu.label}, {Y.label})")


def _panel_edges(cuts, per_decade=16, min_panels=8):
    """Geometric panels between consecutive cut points."""
    out = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        k = max(min_panels, int(np.ceil(per_decade * np.log10(hi / lo))))
        e = np.geomspace(lo, hi, k + 1)
        out.append(np.column_stack([e[:-1], e[1:]]))
    return np.concatenate(out) if out else np.empty((0, 2))


def _product_table(mu, Y, z):
    """``P(XY > z)`` and the product density at every node of ``z``.

    The continuous part of ``mu`` is integrated with Gauss-Legendre panels cut
    at the kinks of ``mu`` and at ``z / k`` for the kinks ``k`` of Y; all panels
    of all nodes are evaluated in one batch.
    """
    z = np.asarray(z, dtype=float)
    tails = np.zeros_like(z)
    pdfs = np.zeros_like(z)
    for a, m in mu.atoms:
        tails += m * np.asarray(Y(z / a))
        pdfs += m * np.asarray(Y.density(z / a)) / a
    for b, n in Y.atoms:
        pdfs += n * np.asarray(mu.density(z / b)) / b
    if mu.atom_mass >= 1.0 - 1e-15:
        return tails, pdfs
    lo = mu.support_floor
    fy = Y.support_floor
    if not (lo > 0 and fy > 0):
        raise ValueError("product laws need both factors bounded away from 0")
    mu_k = [k for k in mu.kinks() if k > lo]
    y_k = [k for k in Y.kinks() if k > 0]
    panels, owner = [], []
    for idx, zi in enumerate(z):
        hi = zi / fy
        # for x > z / floor_Y the factor P(Y > z/x) is 1
        tails[idx] += float(mu.continuous_tail(max(hi, lo)))
        if hi <= lo:
            continue
        cuts = sorted({lo, hi} | {k for k in mu_k if lo < k < hi} | {zi / k for k in y_k if lo < zi / k < hi})
        e = _panel_edges(cuts)
        panels.append(e)
        owner.append(np.full(len(e), idx))
    if panels:
        e = np.concatenate(panels)
        own = np.concatenate(owner)
        half = 0.5 * (e[:, 1] - e[:, 0])
        x = 0.5 * (e[:, 0] + e[:, 1])[:, None] + half[:, None] * _GL_X[None, :]
        zz = z[own][:, None]
        fmu = np.asarray(mu.density(x))
        t_int = (np.asarray(Y(zz / x)) * fmu) @ _GL_W * half
        p_int = (np.asarray(Y.density(zz / x)) * fmu / x) @ _GL_W * half
        tails += np.bincount(own, t_int, minlength=len(z))
        pdfs += np.bincount(own, p_int, minlength=len(z))
    return tails, pdfs


class _LogInterp:
    """Monotone interpolation of a positive table in log-log coordinates with
    power-law extrapolation past the last node."""

    def __init__(self, z, v):
        self.z0, self.z1 = z[0], z[-1]
        pos = v > 0
        self.log = bool(np.all(pos))
        y = np.log(v) if self.log else v
        self.f = PchipInterpolator(np.log(z), y, extrapolate=False)
        if self.log:
            self.slope = (y[-1] - y[-2]) / (np.log(z[-1]) - np.log(z[-2]))
            self.y_end = y[-1]

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        lz = np.log(np.clip(z, self.z0, None))
        out = self.f(np.minimum(lz, np.log(self.z1)))
        if self.log:
            far = self.y_end + self.slope * (lz - np.log(self.z1))
            out = np.where(z > self.z1, far, out)
            return np.exp(out)
        return np.where(z > self.z1, 0.0, out)


def product_tail(mu: TailFunction, Y: TailFunction, z_grid=None) -> TailFunction:
    """Law of ``X Y`` for independent ``X ~ mu`` and ``Y``.

    Purely atomic ``mu`` gives an exact closed form. Otherwise the tail and the
    density are computed by quadrature at the ``z_grid`` nodes and interpolated
    monotonically in log-log coordinates between them.
    """
    if mu.atom_mass >= 1.0 - 1e-15:
        return _exact_atomic_product(mu, Y)
    floor = mu.support_floor * Y.support_floor
    if z_grid is None:
        lo = floor if floor > 0 else 1e-6
        z_grid = np.geomspace(lo, lo * 1e9, 1024)
    kinks = [k for k in _product_kinks(mu, Y) if z_grid[0] <= k <= z_grid[-1]]
    z = np.unique(np.concatenate([np.asarray(z_grid, dtype=float), kinks]))
    if floor > 0:
        z = z[z >= floor]
        if z[0] > floor:
            z = np.concatenate([[floor], z])
    tails, pdfs = _product_table(mu, Y, z)
    tails = np.clip(tails, 0.0, 1.0)
    pdfs = np.maximum(pdfs, 0.0)
    tail_i = _LogInterp(z, tails)
    pdf_i = _LogInterp(z, np.maximum(pdfs, 1e-300))
    z_lo = z[0]
    atoms = tuple(sorted((a * b, m * n) for a, m in mu.atoms for b, n in Y.atoms))

    def tail(t):
        t = np.asarray(t, dtype=float)
        return np.clip(np.where(t < z_lo, 1.0 if floor > 0 else tails[0], tail_i(t)), 0.0, 1.0)

    def pdf(t):
        t = np.asarray(t, dtype=float)
        return np.where(t < z_lo, 0.0, pdf_i(t))

    return TailFunction(tail, atoms, floor, pdf, tuple(kinks), f"product({mu.label}, {Y.label})")


@dataclass(frozen=True)
class ConvolutionReport:
    residual: float
    worst_point: float
    n_points: int

    def to_dict(self):
        return {"residual": self.residual, "worst_point": self.worst_point, "n_points": self.n_points}


def check_mult_convolution(M, N, mu, grid=None) -> ConvolutionReport:
    """Sup residual of ``F_M(t) = int F_N(t/x) dmu(x)`` over ``grid``."""
    FM = tail_from_orlicz_max(M)
    FN = tail_from_orlicz_max(N)
    if grid is None:
        lo = min(FM.support_floor, mu.support_floor * FN.support_floor) or 1e-3
        grid = np.geomspace(lo * 0.5, lo * 1e4, 512)
    grid = np.asarray(grid, dtype=float)
    prod = product_tail(mu, FN, grid)
    diff = np.abs(np.asarray(FM(grid)) - np.asarray(prod(grid)))
    k = int(np.argmax(diff))
    return ConvolutionReport(float(diff[k]), float(grid[k]), len(grid))


def induced_orlicz(mu: TailFunction, N: OrliczFunction, z_grid=None) -> OrliczFunction:
    """Orlicz function generated (max-norm) by ``X Y`` with ``Y`` from N."""
    return orlicz_from_distribution_max(product_tail(mu, tail_from_orlicz_max(N), z_grid))
