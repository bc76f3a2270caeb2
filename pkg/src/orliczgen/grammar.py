"""Text specs for Orlicz functions and mixing laws.

Functions::

    power:q=1.5
    powerlog:q=2,r=1
    spline:table.csv            (columns t,M2)

followed by any number of ``|normalize``, ``|extend:T=<float>`` or
``|smooth:c=<float>`` modifiers. Mixing laws::

    point:<a>        point mass at a
    loggamma:p=<p>   tail min(1, t^-p)
    lp:p=<p>         the law generated by the accompanying function for l_p
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .bodies import TabulatedBody
from .core import OrliczFunction, linear_extension, normalize, power, powerlog, smooth_normalized
from .generators import tail_from_orlicz_p
from .tails import log_gamma_tail, point_mass


class SpecError(ValueError):
    """Malformed spec; ``position`` is the 0-based character offset."""

    def __init__(self, message, spec, position):
        self.message = message
        self.spec = spec
        self.position = position
        super().__init__(f"{message} at position {position}: {spec!r}")


def _segments(spec, sep):
    pos = 0
    for part in spec.split(sep):
        yield part, pos
        pos += len(part) + len(sep)


def _split_head(part, offset, spec):
    name, colon, rest = part.partition(":")
    name = name.strip()
    if not name:
        raise SpecError("missing name", spec, offset)
    return name, rest, offset + len(name) + len(colon)


def _keywords(text, offset, spec, required, allowed=None):
    allowed = set(required if allowed is None else allowed)
    values = {}
    for item, pos in _segments(text, ","):
        at = offset + pos
        key, eq, raw = item.partition("=")
        key = key.strip()
        if not eq:
            raise SpecError(f"expected key=value, got {item!r}", spec, at)
        if key not in allowed:
            raise SpecError(f"unknown parameter {key!r}", spec, at)
        if key in values:
            raise SpecError(f"duplicate parameter {key!r}", spec, at)
        values[key] = _number(raw, spec, at + len(item.partition("=")[0]) + 1)
    missing = [k for k in required if k not in values]
    if missing:
        raise SpecError(f"missing parameter {missing[0]!r}", spec, offset)
    return values


def _number(raw, spec, at):
    try:
        v = float(raw)
    except ValueError:
        raise SpecError(f"not a number: {raw.strip()!r}", spec, at) from None
    if not math.isfinite(v):
        raise SpecError(f"not a finite number: {raw.strip()!r}", spec, at)
    return v


def load_spline(path):
    """Tabulated function from a CSV with header ``t,M2``, affine past the last row."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"t", "M2"} <= set(rows[0]):
        raise ValueError(f"{path}: expected columns t,M2")
    t = np.array([float(r["t"]) for r in rows])
    m2 = np.array([float(r["M2"]) for r in rows])
    body = TabulatedBody.from_second_derivative(t, m2)
    return OrliczFunction(body, body.domain_end)


def _base(part, offset, spec, base_dir):
    name, rest, at = _split_head(part, offset, spec)
    try:
        if name == "power":
            return power(_keywords(rest, at, spec, ["q"])["q"])
        if name == "powerlog":
            kw = _keywords(rest, at, spec, ["q", "r"])
            return powerlog(kw["q"], kw["r"])
        if name == "spline":
            if not rest.strip():
                raise SpecError("spline needs a CSV path", spec, at)
            path = Path(rest.strip())
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            try:
                return load_spline(path)
            except OSError as exc:
                raise SpecError(f"cannot read {str(path)!r} ({exc.strerror})", spec, at) from None
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(str(exc), spec, at) from None
    raise SpecError(f"unknown function family {name!r}", spec, offset)


def parse_function(spec: str, base_dir=None) -> OrliczFunction:
    """Build an OrliczFunction from a function spec.

    Mathematical failures of modifiers (e.g. a function that cannot be
    normalized) propagate as their own exception types.
    """
    parts = list(_segments(spec, "|"))
    M = _base(*parts[0], spec, base_dir)
    for part, offset in parts[1:]:
        name, rest, at = _split_head(part, offset, spec)
        if name == "normalize":
            if rest.strip():
                raise SpecError("normalize takes no parameters", spec, at)
            M = normalize(M)
        elif name == "extend":
            M = linear_extension(M, _keywords(rest, at, spec, ["T"])["T"])
        elif name == "smooth":
            c = _keywords(rest, at, spec, ["c"])["c"]
            if not c > 1:
                raise SpecError("smoothing constant c must exceed 1", spec, at)
            M = smooth_normalized(M, c)
        else:
            raise SpecError(f"unknown modifier {name!r}", spec, offset)
    return M


def parse_family(spec: str, base_dir=None):
    """Semicolon-separated function specs, one per coordinate."""
    out = []
    for part, offset in _segments(spec, ";"):
        try:
            out.append(parse_function(part, base_dir))
        except SpecError as exc:
            raise SpecError(exc.message, spec, offset + exc.position) from None
    return out


def parse_mu(spec: str, M: OrliczFunction | None = None):
    """Mixing law from a spec; ``lp`` needs the accompanying function ``M``."""
    name, rest, at = _split_head(spec, 0, spec)
    if name == "point":
        a = _number(rest, spec, at)
        if not a > 0:
            raise SpecError("point mass location must be positive", spec, at)
        return point_mass(a)
    if name == "loggamma":
        p = _keywords(rest, at, spec, ["p"])["p"]
        if not p > 1:
            raise SpecError("p must exceed 1", spec, at)
        return log_gamma_tail(p)
    if name == "lp":
        p = _keywords(rest, at, spec, ["p"])["p"]
        if not p > 1:
            raise SpecError("p must exceed 1", spec, at)
        if M is None:
            raise SpecError("lp law needs an accompanying function", spec, 0)
        return tail_from_orlicz_p(M, p)
    raise SpecError(f"unknown law {name!r}", spec, 0)
