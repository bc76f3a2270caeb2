"""Command-line front end.

Exit codes: 0 success, 1 verification threshold breached, 2 invalid
configuration, 3 mathematical hypothesis failure (e.g. negative density,
function not normalizable, 2-concavity violated).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import experiments as ex
from .core import approx_smooth_kink, musielak_norm, MusielakFamily, orlicz_norm
from .generators import (
    check_mult_convolution,
    density_from_orlicz_2,
    density_from_orlicz_max,
    density_from_orlicz_p,
    tail_from_orlicz_max,
    tail_from_orlicz_p,
)
from .grammar import SpecError, parse_family, parse_function, parse_mu

EXIT_OK, EXIT_BREACH, EXIT_CONFIG, EXIT_MATH = 0, 1, 2, 3
DIGITS = 12

DEFAULTS = {
    "p": None,
    "n": 64,
    "n_mc": ex.DEFAULT_N_MC,
    "seed": None,
    "threshold": None,
    "c": 1.1,
    "points": 200,
    "suite": "default",
}
THRESHOLDS = {
    "roundtrip-max": 1e-6,
    "roundtrip-p": 1e-4,
    "convolution": 1e-4,
    "max": 8.0,
    "lp": 8.0,
    "pareto": 8.0,
    "embedding": 8.0,
}
VERIFY_KINDS = tuple(THRESHOLDS) + ("khintchine",)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    fn: str | None = None
    p: float | None = None
    n: int = 64
    n_mc: int = ex.DEFAULT_N_MC
    seed: int = 0
    suite: str = "default"
    threshold: float | None = None
    out: str | None = None

    def __post_init__(self):
        if self.p is not None and not self.p > 1:
            raise ConfigError(f"p must exceed 1, got {self.p}")
        if self.n < 1:
            raise ConfigError(f"n must be at least 1, got {self.n}")
        if self.n_mc < 100:
            raise ConfigError(f"n_mc must be at least 100, got {self.n_mc}")


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment line."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def fmt(v):
    return f"{float(v):.{DIGITS}g}"


def _round(obj):
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(fmt(v)) if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _vector(text, name="x"):
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise ConfigError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
    if not np.all(np.isfinite(v)):
        raise ConfigError(f"--{name}: entries must be finite")
    return v


def _suite(spec):
    if spec in (None, "", "default"):
        return None
    suite = []
    for k, item in enumerate(spec.split(";")):
        label, eq, vals = item.rpartition("=")
        suite.append((label.strip() if eq else f"v{k}", _vector(vals, "suite")))
    return suite


# -- option plumbing -------------------------------------------------------

def _common(parser):
    parser.add_argument("--config", help="key=value file; flags override it")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--seed", type=int, help="RNG seed (default: $ORLICZ_SEED or 0)")


def build_parser():
    parser = argparse.ArgumentParser(prog="orliczgen", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="Orlicz or Musielak-Orlicz norm of a vector")
    _common(p)
    p.add_argument("--fn")
    p.add_argument("--x")
    p.add_argument("--musielak", help="semicolon-separated specs, one per coordinate")
    p.add_argument("--tol", type=float)

    g = sub.add_parser("generate", help="tail and density of the generating law (CSV)")
    _common(g)
    g.add_argument("kind", choices=("max", "lp", "p2"))
    g.add_argument("--fn")
    g.add_argument("--p", type=float)
    g.add_argument("--points", type=int)

    v = sub.add_parser("verify", help="run a verification and emit a JSON report")
    _common(v)
    v.add_argument("kind", choices=VERIFY_KINDS)
    for name in ("fn", "fnM", "fnN", "mu", "x", "suite", "csv"):
        v.add_argument(f"--{name}")
    v.add_argument("--p", type=float)
    v.add_argument("--n", type=int)
    v.add_argument("--n-mc", dest="n_mc", type=int)
    v.add_argument("--threshold", type=float)

    s = sub.add_parser("smooth", help="kink smoothing table (CSV)")
    _common(s)
    s.add_argument("--fn")
    s.add_argument("--c", type=float)
    s.add_argument("--points", type=int)
    return parser


def _merge(args):
    file_values = read_config(args.config) if args.config else {}
    merged = dict(DEFAULTS)
    merged.update(file_values)
    merged.update({k: v for k, v in vars(args).items() if v is not None})
    if merged.get("seed") is None:
        merged["seed"] = os.environ.get("ORLICZ_SEED", 0)
    casts = {"p": float, "n": int, "n_mc": int, "seed": int, "threshold": float,
             "c": float, "points": int, "tol": float}
    for key, cast in casts.items():
        if merged.get(key) is not None:
            try:
                merged[key] = cast(merged[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: cannot interpret {merged[key]!r}") from None
    base_dir = Path(args.config).parent if args.config else None
    merged["base_dir"] = base_dir
    return merged


def _require(cfg, key):
    if cfg.get(key) in (None, ""):
        raise ConfigError(f"missing required option --{key.replace('_', '-')}")
    return cfg[key]


def _fn(cfg, key="fn"):
    return parse_function(_require(cfg, key), cfg["base_dir"])


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows, comments=()):
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# -- commands --------------------------------------------------------------

def cmd_norm(cfg):
    x = _vector(_require(cfg, "x"))
    tol = cfg.get("tol") or 1e-10
    if cfg.get("musielak"):
        fns = parse_family(cfg["musielak"], cfg["base_dir"])
        if len(fns) != len(x):
            raise ConfigError(f"{len(fns)} functions for a vector of length {len(x)}")
        value = musielak_norm(MusielakFamily(fns), x, tol)
    else:
        value = orlicz_norm(_fn(cfg), x, tol)
    _emit(fmt(value) + "\n", cfg.get("out"))
    return EXIT_OK


def _law_grid(D, n):
    lo = D.support_floor if D.support_floor > 0 else 1e-3
    return np.geomspace(0.5 * lo, 1e4 * lo, n)


def cmd_generate(cfg):
    M = _fn(cfg)
    kind = cfg["kind"]
    if kind == "max":
        D, f = tail_from_orlicz_max(M), density_from_orlicz_max(M)
    elif kind == "p2":
        f = density_from_orlicz_2(M)
        D = tail_from_orlicz_p(M, 2.0)
    else:
        p = _require(cfg, "p")
        f = density_from_orlicz_p(M, p)
        D = tail_from_orlicz_p(M, p)
    t = _law_grid(D, cfg["points"])
    text = _csv(["t", "tail", "pdf"], zip(t, np.asarray(D(t)), np.asarray(f(t))))
    text += "\n" + _csv(["location", "mass"], f.atoms)
    _emit(text, cfg.get("out"))
    return EXIT_OK


def _verify_report(cfg):
    kind = cfg["kind"]
    seed, n, n_mc, p = cfg["seed"], cfg["n"], cfg["n_mc"], cfg.get("p")
    if kind in ("lp", "roundtrip-p", "pareto") and p is None:
        raise ConfigError(f"verify {kind} needs --p")
    if kind == "khintchine":
        vectors = [("x", _vector(cfg["x"]))] if cfg.get("x") else (_suite(cfg["suite"]) or ex.default_suite(n))
        ratios = {label: ex.khintchine_ratio(a) for label, a in vectors}
        ok = all(1 / math.sqrt(2) - 1e-12 <= r <= 1 + 1e-12 for r in ratios.values())
        return {"kind": kind, "ratios": ratios, "bounds": [1 / math.sqrt(2), 1.0]}, ok
    threshold = cfg["threshold"] if cfg.get("threshold") is not None else THRESHOLDS[kind]
    if kind in ("roundtrip-max", "roundtrip-p"):
        M = _fn(cfg)
        err = ex.roundtrip_error(M, p if kind == "roundtrip-p" else None)
        report = {"kind": kind, "sup_error": err, "T": M.t_lin, "p": p}
        return report | {"threshold": threshold}, err <= threshold
    if kind == "convolution":
        M, N = _fn(cfg, "fnM"), _fn(cfg, "fnN")
        mu_spec = cfg.get("mu") or (f"lp:p={p}" if p else None)
        if mu_spec is None:
            raise ConfigError("verify convolution needs --mu or --p")
        res = check_mult_convolution(M, N, parse_mu(mu_spec, M))
        report = {"kind": kind, "mu": mu_spec} | res.to_dict() | {"threshold": threshold}
        return report, res.residual <= threshold
    suite = _suite(cfg["suite"])
    if suite is not None:
        n = len(suite[0][1])
    if kind == "pareto":
        rep = ex.pareto_generates_lp(p, n, suite, n_mc, seed)
    elif kind == "max":
        rep = ex.max_equivalence_experiment(_fn(cfg), n, suite, n_mc, seed)
    elif kind == "lp":
        rep = ex.p_equivalence_experiment(_fn(cfg), p, n, suite, n_mc, seed)
    else:
        rep = ex.embedding_experiment(_fn(cfg), n, suite, n_mc, seed)
    if cfg.get("csv"):
        Path(cfg["csv"]).write_text(rep.to_csv())
    report = {"kind": kind} | rep.to_dict() | {"threshold": threshold}
    return report, rep.spread <= threshold


def cmd_verify(cfg):
    report, ok = _verify_report(cfg)
    report["pass"] = bool(ok)
    _emit(json.dumps(_round(report), indent=2) + "\n", cfg.get("out"))
    return EXIT_OK if ok else EXIT_BREACH


def cmd_smooth(cfg):
    M = _fn(cfg)
    c = cfg["c"]
    if not c > 1:
        raise ConfigError("c must exceed 1")
    if not M.kinked:
        raise ConfigError("smoothing needs a function with a kink (add |normalize or |extend)")
    N, delta = approx_smooth_kink(M, c)
    T = M.t_lin
    t = np.linspace(0.0, T, cfg["points"])
    cols = [t, M(t), N(t), M(t, 2), N(t, 2)]
    comments = [f"delta={fmt(delta)}", f"T={fmt(T)}", f"c={fmt(c)}"]
    _emit(_csv(["t", "M", "N", "M2", "N2"], zip(*cols), comments), cfg.get("out"))
    return EXIT_OK


COMMANDS = {"norm": cmd_norm, "generate": cmd_generate, "verify": cmd_verify, "smooth": cmd_smooth}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge(args)
        RunConfig(fn=cfg.get("fn"), p=cfg.get("p"), n=cfg["n"], n_mc=cfg["n_mc"], seed=cfg["seed"],
                  suite=cfg["suite"], threshold=cfg.get("threshold"), out=cfg.get("out"))
        return COMMANDS[args.command](cfg)
    except (SpecError, ConfigError) as exc:
        print(f"orliczgen: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError) as exc:
        print(f"orliczgen: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
