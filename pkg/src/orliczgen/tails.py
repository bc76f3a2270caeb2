"""Distributions of nonnegative random variables, carried by their tails."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .quadrature import integrate_to_infinity, split_quad

PDF_NEG_TOL = 1e-9
MASS_TOL = 1e-6


@dataclass(frozen=True)
class TailFunction:
    """Law of ``X >= 0`` given by ``t -> P(X > t)``.

    ``tail`` is right-continuous and includes the jumps of ``atoms``
    (``(location, mass)`` pairs). ``pdf`` is the density of the continuous
    part, when known; ``breakpoints`` are abscissae where that density may
    jump. ``support_floor`` is the largest t0 with ``P(X > t) = 1`` below it.
    """

    tail: Callable
    atoms: tuple = ()
    support_floor: float = 0.0
    pdf: Optional[Callable] = None
    breakpoints: tuple = ()
    label: str = ""

    def __call__(self, t):
        return _as_output(self.tail(np.asarray(t, dtype=float)))

    @property
    def atom_mass(self):
        return float(sum(m for _, m in self.atoms))

    def tail_left(self, t):
        """``P(X >= t)``."""
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.tail(t), dtype=float)
        for a, m in self.atoms:
            out = out + m * (t == a)
        return _as_output(out)

    def continuous_tail(self, t):
        """Tail of the continuous part alone (atoms removed)."""
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.tail(t), dtype=float)
        for a, m in self.atoms:
            out = out - m * (t < a)
        return _as_output(np.maximum(out, 0.0))

    def density(self, t):
        t = np.asarray(t, dtype=float)
        if self.atom_mass >= 1.0 - 1e-15:
            return _as_output(np.zeros_like(t))
        if self.pdf is not None:
            return _as_output(self.pdf(t))
        h = 1e-6 * np.maximum(t, 1e-12)
        return _as_output(
            np.maximum((self.continuous_tail(t - h) - self.continuous_tail(t + h)) / (2 * h), 0.0)
        )

    def kinks(self):
        pts = set(self.breakpoints) | {a for a, _ in self.atoms}
        if self.support_floor > 0:
            pts.add(self.support_floor)
        return sorted(p for p in pts if p > 0)

    def mean(self):
        """``E X = int_0^inf P(X > t) dt``, continuous part by quadrature."""
        lo = self.support_floor
        cont = integrate_to_infinity(self.continuous_tail, lo, self.kinks()) + lo * (1 - self.atom_mass)
        return cont + sum(a * m for a, m in self.atoms)

    def moment(self, p):
        """``E X^p`` by quadrature of ``p t^(p-1) P(X > t)``."""
        lo = self.support_floor
        f = lambda t: p * t ** (p - 1) * self.continuous_tail(t)
        cont = integrate_to_infinity(f, lo, self.kinks()) + lo**p * (1 - self.atom_mass)
        return cont + sum(a**p * m for a, m in self.atoms)


@dataclass(frozen=True)
class DensityModel:
    pdf: Callable
    atoms: tuple = ()
    support_floor: float = 0.0
    breakpoints: tuple = ()

    def __call__(self, t):
        return _as_output(self.pdf(np.asarray(t, dtype=float)))

    def total_mass(self):
        pts = sorted(set(self.breakpoints) | ({self.support_floor} if self.support_floor > 0 else set()))
        cont = integrate_to_infinity(self.pdf, self.support_floor, pts)
        return cont + sum(m for _, m in self.atoms)


def _as_output(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


def log_gamma_tail(p: float) -> TailFunction:
    """Pareto law ``P(xi > x) = min(1, x^-p)`` with density ``p x^(-p-1)`` on ``[1, inf)``."""
    if not p > 1:
        raise ValueError(f"log-gamma(1, p) needs p > 1, got {p}")
    p = float(p)

    def tail(x):
        with np.errstate(divide="ignore"):
            return np.minimum(1.0, np.power(np.maximum(x, 1e-300), -p))

    def pdf(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x >= 1.0, p * np.power(np.maximum(x, 1.0), -p - 1), 0.0)

    return TailFunction(tail, (), 1.0, pdf, (), f"loggamma(p={p:g})")


def point_mass(a: float) -> TailFunction:
    if not a > 0:
        raise ValueError("point mass location must be positive")
    a = float(a)
    return TailFunction(lambda t: (np.asarray(t) < a).astype(float), ((a, 1.0),), a,
                        lambda t: np.zeros_like(np.asarray(t, dtype=float)), (), f"point({a:g})")


def default_grid(D: TailFunction, n=1024, decades=9):
    lo = D.support_floor if D.support_floor > 0 else 1e-6
    return np.geomspace(lo * (1 + 1e-12), lo * 10.0**decades, n)


def check_tail(D: TailFunction, grid=None):
    """Type invariants of a tail function; returns a list of violation messages."""
    problems = []
    grid = default_grid(D) if grid is None else np.asarray(grid, dtype=float)
    vals = np.asarray(D(grid))
    if np.any(vals < -1e-12) or np.any(vals > 1 + 1e-12):
        problems.append("tail leaves [0, 1]")
    if np.any(np.diff(vals) > 1e-12):
        problems.append("tail is not nonincreasing")
    if vals[-1] > MASS_TOL:
        problems.append(f"tail at the grid's right end is {vals[-1]:.3g} > {MASS_TOL}")
    if D.support_floor > 0 and abs(float(D(D.support_floor * (1 - 1e-9))) - 1.0) > 1e-12:
        problems.append("tail below the support floor is not 1")
    for a, m in D.atoms:
        jump = float(D.tail_left(a)) - float(D(a))
        below = float(D(a * (1 - 1e-12)))
        if abs(jump - m) > 1e-8 or abs(below - float(D(a)) - m) > 1e-6:
            problems.append(f"atom at {a:g} has mass {m:g} but the tail jumps by {below - float(D(a)):g}")
    if D.atom_mass < 1.0:
        cont = integrate_to_infinity(D.density, D.support_floor, D.kinks())
        if abs(cont + D.atom_mass - 1.0) > MASS_TOL:
            problems.append(f"total mass {cont + D.atom_mass:.9f} != 1")
    return problems


def check_density(f: DensityModel, grid=None):
    problems = []
    grid = default_grid(TailFunction(lambda t: t, support_floor=f.support_floor)) if grid is None else grid
    vals = np.asarray(f(grid))
    if np.any(vals < -PDF_NEG_TOL):
        problems.append(f"density negative (min {vals.min():.3g})")
    mass = f.total_mass()
    if abs(mass - 1.0) > MASS_TOL:
        problems.append(f"total mass {mass:.9f} != 1")
    return problems


__all__ = [
    "TailFunction", "DensityModel", "log_gamma_tail", "point_mass", "check_tail",
    "check_density", "default_grid", "split_quad",
]
