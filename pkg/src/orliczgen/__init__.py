"""Orlicz norms, the distributions that generate them, and Monte Carlo checks."""

from .core import (
    MusielakFamily,
    NotNormalizableError,
    OrliczFunction,
    approx_smooth_kink,
    evaluate,
    linear_extension,
    musielak_norm,
    normalize,
    orlicz_norm,
    power,
    powerlog,
    smooth_normalized,
)
from .generators import (
    NegativeDensity,
    density_from_orlicz_max,
    density_from_orlicz_p,
    orlicz_from_distribution_max,
    orlicz_from_distribution_p,
    product_tail,
    tail_from_orlicz_max,
    tail_from_orlicz_p,
)
from .grammar import parse_function
from .tails import TailFunction, log_gamma_tail, point_mass

__all__ = [
    "MusielakFamily", "NotNormalizableError", "OrliczFunction", "approx_smooth_kink",
    "evaluate", "linear_extension", "musielak_norm", "normalize", "orlicz_norm", "power",
    "powerlog", "smooth_normalized", "NegativeDensity", "density_from_orlicz_max",
    "density_from_orlicz_p", "orlicz_from_distribution_max", "orlicz_from_distribution_p",
    "product_tail", "tail_from_orlicz_max", "tail_from_orlicz_p", "parse_function",
    "TailFunction", "log_gamma_tail", "point_mass",
]
