"""Body families for Orlicz functions.

A body is the part of an Orlicz function to the left of its kink. Every body
evaluates its value and first three derivatives on arrays of nonnegative
arguments; the affine extension past the kink lives in :mod:`orliczgen.core`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.interpolate import PchipInterpolator, PPoly


class PowerBody:
    """``t**q`` with ``q > 1``."""

    def __init__(self, q: float):
        if not q > 1:
            raise ValueError(f"power exponent must exceed 1, got {q}")
        self.q = float(q)
        self.domain_end = np.inf

    def __repr__(self):
        return f"PowerBody(q={self.q})"

    def derivs(self, t, order):
        t = np.asarray(t, dtype=float)
        q = self.q
        coef = 1.0
        for j in range(order):
            coef *= q - j
        with np.errstate(divide="ignore", invalid="ignore"):
            out = coef * np.power(t, q - order)
        if coef == 0.0:
            return np.zeros_like(out)
        return out

    def breakpoints(self):
        return ()


class PowerLogBody:
    """``t**q * (1 + log(1 + t))**r``.

    Derivatives are assembled with the Leibniz rule from the power factor and
    the log factor (the latter by Faa di Bruno on ``u**r``, ``u = 1 + log(1+t)``).
    """

    def __init__(self, q: float, r: float):
        if not q > 1:
            raise ValueError(f"power exponent must exceed 1, got {q}")
        self.q = float(q)
        self.r = float(r)
        self.domain_end = np.inf

    def __repr__(self):
        return f"PowerLogBody(q={self.q}, r={self.r})"

    def _power(self, t, j):
        coef = 1.0
        for i in range(j):
            coef *= self.q - i
        if coef == 0.0:
            return np.zeros_like(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return coef * np.power(t, self.q - j)

    def _log_factor(self, t, j):
        r = self.r
        u = 1.0 + np.log1p(t)
        d1 = 1.0 / (1.0 + t)
        d2 = -d1**2
        d3 = 2.0 * d1**3
        if j == 0:
            return u**r
        if j == 1:
            return r * u ** (r - 1) * d1
        if j == 2:
            return r * (r - 1) * u ** (r - 2) * d1**2 + r * u ** (r - 1) * d2
        return (
            r * (r - 1) * (r - 2) * u ** (r - 3) * d1**3
            + 3 * r * (r - 1) * u ** (r - 2) * d1 * d2
            + r * u ** (r - 1) * d3
        )

    def derivs(self, t, order):
        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        for j in range(order + 1):
            g = self._power(t, j)
            h = self._log_factor(t, order - j)
            with np.errstate(invalid="ignore"):
                term = comb(order, j) * g * h
            # 0 * inf at t = 0 belongs to a vanishing power factor
            total = total + np.where(np.isnan(term), 0.0, term)
        return total

    def breakpoints(self):
        return ()


@dataclass(frozen=True)
class TabulatedBody:
    """Piecewise-polynomial body on ``[t0, t_end]`` with a power-law head.

    ``dm`` is a :class:`scipy.interpolate.PPoly` for the continuous part of
    M'. ``m0`` is M(t0). Below ``t0`` the body is ``head_coef * t**head_exp``,
    matched to M and M' at ``t0``. ``jumps`` lists ``(location, size)`` steps of
    M' (right-continuous), arising from atoms of a generating distribution.
    """

    dm: PPoly
    m0: float
    head_exp: float
    head_coef: float
    jumps: tuple = ()
    _anti: PPoly = field(init=False, repr=False, compare=False)
    _d2: PPoly = field(init=False, repr=False, compare=False)
    _d3: PPoly = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_anti", self.dm.antiderivative())
        object.__setattr__(self, "_d2", self.dm.derivative())
        object.__setattr__(self, "_d3", self.dm.derivative(2))

    @property
    def t0(self):
        return float(self.dm.x[0])

    @property
    def domain_end(self):
        return float(self.dm.x[-1])

    def breakpoints(self):
        return tuple(float(s) for s, _ in self.jumps)

    def _head(self, t, order):
        a, c = self.head_exp, self.head_coef
        if c == 0.0:
            return np.zeros_like(t)
        coef = c
        for j in range(order):
            coef *= a - j
        with np.errstate(divide="ignore", invalid="ignore"):
            return coef * np.power(t, a - order)

    def derivs(self, t, order):
        t = np.asarray(t, dtype=float)
        t0 = self.t0
        inner = np.clip(t, t0, self.domain_end)
        if order == 0:
            val = self.m0 + self._anti(inner)
            for s, h in self.jumps:
                val = val + h * np.maximum(inner - s, 0.0)
        elif order == 1:
            val = self.dm(inner)
            for s, h in self.jumps:
                val = val + h * (inner >= s)
        elif order == 2:
            val = self._d2(inner)
        else:
            val = self._d3(inner)
        return np.where(t < t0, self._head(t, order), val)

    @classmethod
    def from_hermite(cls, s, d1, d2_right, d2_left, m0, jumps=()):
        """Cubic Hermite M' through ``(s, d1)`` with one-sided M'' slopes.

        ``d2_right[k]`` is M'' just right of ``s[k]`` and ``d2_left[k]`` just
        left of it, so kinks of M'' at nodes are reproduced.
        """
        s = np.asarray(s, dtype=float)
        h = np.diff(s)
        y0, y1 = d1[:-1], d1[1:]
        m_a, m_b = d2_right[:-1], d2_left[1:]
        delta = (y1 - y0) / h
        c = np.empty((4, len(h)))
        c[0] = (m_a + m_b - 2 * delta) / h**2
        c[1] = (3 * delta - 2 * m_a - m_b) / h
        c[2] = m_a
        c[3] = y0
        dm = PPoly(c, s, extrapolate=True)
        return cls(dm, float(m0), *_head_params(s[0], m0, d1[0]), tuple(jumps))

    @classmethod
    def from_second_derivative(cls, t, m2):
        """Monotone piecewise-cubic M'' through ``(t, m2)``, integrated twice.

        If the table does not start at 0, M'' is held constant at ``m2[0]``
        on ``[0, t[0]]``.
        """
        t = np.asarray(t, dtype=float)
        m2 = np.asarray(m2, dtype=float)
        if t.ndim != 1 or len(t) < 3 or np.any(np.diff(t) <= 0):
            raise ValueError("tabulated M'' needs at least 3 strictly increasing abscissae")
        if t[0] < 0 or np.any(m2 < 0):
            raise ValueError("tabulated M'' needs t >= 0 and M'' >= 0")
        if t[0] > 0:
            t = np.concatenate([[0.0], t])
            m2 = np.concatenate([[m2[0]], m2])
        dm = PchipInterpolator(t, m2).antiderivative()
        return cls(PPoly(dm.c, dm.x), 0.0, 2.0, 0.0)


def _head_params(t0, m0, d0):
    """Power-law head ``c t**a`` matching M(t0) = m0 and M'(t0) = d0."""
    if m0 <= 0.0 or d0 <= 0.0:
        return 2.0, 0.0
    a = t0 * d0 / m0
    return a, m0 / t0**a


@dataclass(frozen=True)
class SmoothedBody:
    """Base body whose M'' is ramped down to zero on ``[start, end]``.

    On the ramp interval ``N'' = min(M'', slope * (end - t))``. ``pieces`` is a
    tuple of ``(lo, hi, kind, n1_lo, n0_lo)`` with ``kind`` in ``{"base",
    "ramp"}`` and the values of N' and N at ``lo``.
    """

    base: object
    start: float
    end: float
    slope: float
    pieces: tuple

    @property
    def domain_end(self):
        return self.end

    def breakpoints(self):
        return tuple(p[0] for p in self.pieces) + (self.end,)

    def derivs(self, t, order):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t)
        out = np.array(self.base.derivs(flat, order), dtype=float)
        for lo, hi, kind, n1, n0 in self.pieces:
            mask = (flat > lo) & (flat <= hi)
            if not mask.any():
                continue
            piece = self._ramp if kind == "ramp" else self._base_piece
            out[mask] = piece(flat[mask], lo, n1, n0, order)
        return out.reshape(t.shape)

    def _ramp(self, x, lo, n1, n0, order):
        k, T = self.slope, self.end
        if order == 3:
            return np.full_like(x, -k, dtype=float)
        if order == 2:
            return k * (T - x)
        if order == 1:
            return n1 + 0.5 * k * ((T - lo) ** 2 - (T - x) ** 2)
        return (
            n0
            + n1 * (x - lo)
            + 0.5 * k * (T - lo) ** 2 * (x - lo)
            - k * ((T - lo) ** 3 - (T - x) ** 3) / 6.0
        )

    def _base_piece(self, x, lo, n1, n0, order):
        b = self.base
        if order >= 2:
            return b.derivs(x, order)
        m1_lo = float(b.derivs(lo, 1))
        if order == 1:
            return n1 + b.derivs(x, 1) - m1_lo
        m0_lo = float(b.derivs(lo, 0))
        return n0 + n1 * (x - lo) + (b.derivs(x, 0) - m0_lo - m1_lo * (x - lo))
