"""Command-line entry point: ``latticeheat <command> [options]``.

Options come from three layers, highest first: command-line flags, a JSON
file given by ``--json-config``, and built-in defaults. The only
environment variable read is ``LATTICEHEAT_OUTDIR``, which relocates
relative output paths.

Exit status: 0 success, 1 usage error, 2 verification failure, 3 a
numerical tolerance that could not be met.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import __version__
from . import io as lio
from .exceptions import ExtractionFailedError, ToleranceNotMetError, UnsupportedCaseError
from .expansion import Profile, expansion_for
from .kernel_exact import QuadSpec, first_green, green_field, second_green
from .stencil import check_ellipticity, min_symbol_derivative, parse_stencil

__all__ = ["RunConfig", "build_parser", "load_config", "dispatch", "main",
           "parse_points", "parse_ladder"]

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_TOLERANCE = 0, 1, 2, 3

COMMON = {"stencil": "laplacian1d:1", "eps": 1.0, "out": "-", "format": None, "tol": 1e-8}

DEFAULTS = {
    "eval-first": {"t": 1.0, "J": 0, "x": "0"},
    "eval-second": {"t": 1.0, "x": "0"},
    "field": {"t": 1.0, "J": 0, "window": 16, "kind": "first"},
    "expand": {"J": 0, "K": None, "emit": "polys", "y": "-4:4:17"},
    "profiles": {"profile": "H", "J": 0, "k": 0, "y": "-4:4:17"},
    "omega": {"x": "0", "route": "auto"},
    "verify-remainder": {"kind": "first", "J": 0, "K": 2, "ladder": "16,2,7", "window": 64,
                         "x_min": None, "slack": 0.1},
    "ellipticity": {"grid": 4096},
    "oned": {"N": 1, "emit": "constants", "n_max": None, "J_max": 2, "x": "0..10",
             "y": "0:4:9"},
    "oned-verify": {"N": 1},
    "walk-sim": {"stencil": "simple-walk:2", "scale": 0.25, "t": 5.0, "paths": 100000,
                 "seed": 0},
    "walk-compare": {"hist": None, "order": "exact", "stencil": None, "scale": None,
                     "max_tv": None},
}

_UNUSED_COMMON = {
    "expand": {"eps"}, "profiles": {"eps"}, "omega": {"eps"}, "ellipticity": {"eps", "tol"},
    "oned": {"stencil", "eps", "tol"}, "oned-verify": {"stencil", "eps", "tol"},
    "walk-sim": {"eps", "tol"}, "walk-compare": {"eps", "tol"},
}

_JSON_FIRST = {"expand", "verify-remainder", "ellipticity", "oned-verify", "walk-compare"}


class UsageError(Exception):
    """Bad command line or configuration."""


class VerificationFailed(Exception):
    """A requested check ran and did not pass; ``report`` is still written."""

    def __init__(self, msg, report):
        super().__init__(msg)
        self.report = report


@dataclass
class RunConfig:
    """Fully resolved options of one run."""

    command: str
    params: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.params[name]
        except KeyError:
            raise AttributeError(name) from None

    def echo(self) -> dict:
        """Options that determine the artifact's content (the output path does not)."""
        return {"command": self.command, **{k: v for k, v in self.params.items() if k != "out"}}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- parsing helpers ----------------------------------------------------------

def _expand_token(tok: str, integer: bool) -> list:
    m = re.fullmatch(r"\s*(-?\d+)\.\.(-?\d+)\s*", tok)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        step = 1 if b >= a else -1
        return list(range(a, b + step, step))
    m = re.fullmatch(r"\s*([^:]+):([^:]+):(\d+)\s*", tok)
    if m:
        return list(np.linspace(float(m.group(1)), float(m.group(2)), int(m.group(3))))
    v = float(tok)
    if integer and v != int(v):
        raise UsageError(f"lattice coordinate {tok!r} is not an integer")
    return [int(v) if integer else v]


def parse_points(text: str, dim: int, integer: bool = True) -> np.ndarray:
    """Points from ``"0..20"``, ``"1,2,5"``, ``"-4:4:17"`` (1D) or ``"0,0;1,0;0..2,1"`` (d > 1).

    In ``d > 1`` points are separated by ``;`` and coordinates by ``,``; a
    range in a coordinate expands to the Cartesian product.
    """
    try:
        if dim == 1:
            vals = [v for tok in re.split(r"[;,\s]+", text.strip()) if tok
                    for v in _expand_token(tok, integer)]
            return np.array(vals, dtype=np.int64 if integer else float).reshape(-1, 1)
        pts = []
        for chunk in text.split(";"):
            if not chunk.strip():
                continue
            coords = [_expand_token(c, integer) for c in chunk.split(",")]
            if len(coords) != dim:
                raise UsageError(f"point {chunk!r} does not have {dim} coordinates")
            pts.extend(product(*coords))
        return np.array(pts, dtype=np.int64 if integer else float).reshape(-1, dim)
    except ValueError as exc:
        raise UsageError(f"cannot parse points {text!r}: {exc}") from None


def parse_ladder(text) -> list[float]:
    """``"t0,r,n"`` gives ``t0 * r**i`` for ``i < n``; a longer list is taken literally."""
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        try:
            vals = [float(v) for v in str(text).split(",")]
        except ValueError:
            raise UsageError(f"bad ladder {text!r}") from None
    if len(vals) == 3 and vals[2] == int(vals[2]) and vals[1] > 1 and vals[2] >= 3:
        t0, r, n = vals
        return [t0 * r ** i for i in range(int(n))]
    return vals


# -- parser --------------------------------------------------------------------

def _add_common(p, stencil=True, eps=True, tol=True):
    if stencil:
        p.add_argument("--stencil", help="builder name or stencil JSON path")
    if eps:
        p.add_argument("--eps", type=float, help="mesh size")
    if tol:
        p.add_argument("--tol", type=float, help="relative quadrature tolerance")
    p.add_argument("--out", help="output path, '-' for stdout")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--json-config", dest="json_config", help="JSON file with options")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="latticeheat", description="Lattice heat kernels and their asymptotics.")
    parser.add_argument("--version", action="version", version=f"latticeheat {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    S = argparse.SUPPRESS

    for name, kind in (("eval-first", "first"), ("eval-second", "second")):
        p = sub.add_parser(name, argument_default=S, help=f"exact {kind} kernel at points")
        _add_common(p)
        p.add_argument("--t", type=float)
        if kind == "first":
            p.add_argument("--J", type=int)
        p.add_argument("--x", help="lattice points (in units of eps)")

    p = sub.add_parser("field", argument_default=S, help="exact kernel on a window")
    _add_common(p)
    p.add_argument("--t", type=float)
    p.add_argument("--J", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--kind", choices=["first", "second"])

    p = sub.add_parser("expand", argument_default=S, help="expansion polynomials or profile tables")
    _add_common(p, eps=False)
    p.add_argument("--J", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--emit", choices=["polys", "profiles"])
    p.add_argument("--y", help="profile points")

    p = sub.add_parser("profiles", argument_default=S, help="one profile function on a grid")
    _add_common(p, eps=False)
    p.add_argument("--profile", choices=["H", "H_Jk", "F_k", "Fhat_k", "G_k", "Omega_k", "Fhat", "S"])
    p.add_argument("--J", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--y")

    p = sub.add_parser("omega", argument_default=S, help="lattice constant of the second kernel")
    _add_common(p, eps=False)
    p.add_argument("--x")
    p.add_argument("--route", choices=["auto", "integral", "closed", "s", "extract"])

    p = sub.add_parser("verify-remainder", argument_default=S, help="remainder decay along a t-ladder")
    _add_common(p)
    p.add_argument("--kind", choices=["first", "second"])
    p.add_argument("--J", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--ladder", help="t0,ratio,count or an explicit list")
    p.add_argument("--window", type=int)
    p.add_argument("--x-min", dest="x_min", type=int)
    p.add_argument("--slack", type=float, help="allowed excess of the slope over -exponent")

    p = sub.add_parser("ellipticity", argument_default=S, help="sampled ellipticity constants")
    _add_common(p, eps=False, tol=False)
    p.add_argument("--grid", type=int)

    p = sub.add_parser("oned", argument_default=S, help="explicit one-dimensional family")
    _add_common(p, stencil=False, eps=False, tol=False)
    p.add_argument("--N", type=int)
    p.add_argument("--emit", choices=["constants", "polys", "profiles", "omega"])
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--J-max", dest="J_max", type=int)
    p.add_argument("--x")
    p.add_argument("--y")

    p = sub.add_parser("oned-verify", argument_default=S, help="exact and numerical identity checks")
    _add_common(p, stencil=False, eps=False, tol=False)
    p.add_argument("--N", type=int)

    p = sub.add_parser("walk-sim", argument_default=S, help="simulate the random walk of a stencil")
    _add_common(p, eps=False, tol=False)
    p.add_argument("--scale", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("walk-compare", argument_default=S, help="histogram vs transition law")
    _add_common(p, eps=False, tol=False)
    p.add_argument("--hist", help="histogram CSV from walk-sim")
    p.add_argument("--order", help="'exact' or an expansion grade K")
    p.add_argument("--scale", type=float)
    p.add_argument("--max-tv", dest="max_tv", type=float, help="fail when TV exceeds this")
    return parser


def load_config(argv) -> RunConfig:
    """Parse ``argv`` and merge flags over the config file over defaults."""
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command", None)
    if command is None:
        raise UsageError("no command given")
    cfg_path = args.pop("json_config", None)
    from_file = {}
    if cfg_path:
        try:
            with open(cfg_path) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {cfg_path}: {exc}") from None
        if not isinstance(from_file, dict):
            raise UsageError("config file must hold a JSON object")
        file_cmd = from_file.pop("command", command)
        if file_cmd != command:
            raise UsageError(f"config is for {file_cmd!r}, not {command!r}")
    common = {k: v for k, v in COMMON.items() if k not in _UNUSED_COMMON.get(command, ())}
    allowed = {**common, **DEFAULTS[command]}
    unknown = set(from_file) - set(allowed)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    params = {**allowed, **from_file, **args}
    if params["format"] is None:
        params["format"] = "json" if command in _JSON_FIRST or (
            command == "oned" and params["emit"] in ("constants", "polys")) else "csv"
    return RunConfig(command, params)


# -- output ------------------------------------------------------------------------

def _write(cfg: RunConfig, text: str):
    out = cfg.out
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    base = os.environ.get("LATTICEHEAT_OUTDIR")
    if base and not os.path.isabs(out):
        out = os.path.join(base, out)
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(out, "w", newline="") as fh:
        fh.write(text)


def _header(cfg: RunConfig, **extra) -> dict:
    return lio.provenance(cfg.echo(), **extra)


def _emit_points(cfg, columns_x, pts, vals, extra_cols=(), extra_vals=(), **meta) -> str:
    head = _header(cfg, **meta)
    if cfg.format == "json":
        rows = [{"x": p, "re": float(v.real), "im": float(v.imag),
                 **{c: ev[i] for c, ev in zip(extra_cols, extra_vals)}}
                for i, (p, v) in enumerate(zip(pts.tolist(), vals))]
        return lio.dumps_json({"provenance": head, "rows": rows})
    cols = list(columns_x) + ["re", "im"] + list(extra_cols)
    rows = ([*p, v.real, v.imag, *(ev[i] for ev in extra_vals)]
            for i, (p, v) in enumerate(zip(pts.tolist(), vals)))
    return lio.write_table(cols, rows, head)


def _stencil(cfg):
    try:
        return parse_stencil(cfg.stencil)
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from None


def _positive(name, v):
    if v is None or v <= 0:
        raise UsageError(f"--{name} must be positive")


# -- commands ------------------------------------------------------------------------

def _cmd_eval(cfg: RunConfig) -> str:
    st = _stencil(cfg)
    _positive("t", cfg.t)
    _positive("eps", cfg.eps)
    pts = parse_points(cfg.x, st.dim)
    quad = QuadSpec(target_rel_tol=cfg.tol)
    x = pts * cfg.eps
    if cfg.command == "eval-first":
        vals = np.atleast_1d(first_green(st, cfg.eps, x, cfg.t, cfg.J, quad))
    else:
        vals = np.atleast_1d(second_green(st, cfg.eps, x, cfg.t, quad))
    cols = [f"x{i + 1}" for i in range(st.dim)]
    return _emit_points(cfg, cols, pts, vals, quad=repr(quad))


def _cmd_field(cfg: RunConfig) -> str:
    st = _stencil(cfg)
    _positive("t", cfg.t)
    _positive("eps", cfg.eps)
    if cfg.window < 1:
        raise UsageError("--window must be at least 1")
    quad = QuadSpec(target_rel_tol=cfg.tol)
    fld = green_field(st, cfg.eps, cfg.t, cfg.J, cfg.window, quad, cfg.kind)
    head = _header(cfg, quad=repr(quad), alias_tail=fld.meta.get("tail"))
    if cfg.format == "json":
        return lio.dumps_json({"provenance": head, "n_fft": fld.n_fft,
                               "x": fld.coordinates(), "values": fld.values.ravel()})
    return lio.write_field(fld, head)


def _profile_points(cfg, dim):
    return parse_points(cfg.y, dim, integer=False)


def _cmd_expand(cfg: RunConfig) -> str:
    st = _stencil(cfg)
    exp = expansion_for(st)
    K = exp.M if cfg.K is None else cfg.K
    if K < 0 or cfg.J < 0:
        raise UsageError("J and K must be non-negative")
    if cfg.emit == "polys":
        series = exp.polynomials(cfg.J, K)
        return lio.dumps_json({"provenance": _header(cfg), "series": series.to_json()})
    y = _profile_points(cfg, st.dim)
    head = _header(cfg)
    cols = [f"y{i + 1}" for i in range(st.dim)] + ["k", "re", "im"]
    rows = []
    for k in range(K + 1):
        vals = exp.h_profile(cfg.J, k, y)
        rows.extend([*p, k, v.real, v.imag] for p, v in zip(y.tolist(), vals))
    if cfg.format == "json":
        return lio.dumps_json({"provenance": head, "columns": cols, "rows": rows})
    return lio.write_table(cols, rows, head)


def _cmd_profiles(cfg: RunConfig) -> str:
    st = _stencil(cfg)
    prof = Profile(expansion_for(st), cfg.profile, cfg.J, cfg.k)
    y = _profile_points(cfg, st.dim)
    vals = np.atleast_1d(prof(y if st.dim > 1 else y[:, 0]))
    cols = [f"y{i + 1}" for i in range(st.dim)]
    return _emit_points(cfg, cols, y, vals)


def _cmd_omega(cfg: RunConfig) -> str:
    st = _stencil(cfg)
    pts = parse_points(cfg.x, st.dim)
    vals = np.atleast_1d(expansion_for(st).omega(pts.astype(float), cfg.route, cfg.tol))
    cols = [f"x{i + 1}" for i in range(st.dim)]
    return _emit_points(cfg, cols, pts, vals.astype(complex))


def _cmd_verify_remainder(cfg: RunConfig) -> str:
    st = _stencil(cfg)
    ts = parse_ladder(cfg.ladder)
    probe = expansion_for(st).remainder_probe(cfg.eps, cfg.J, cfg.K, cfg.kind, ts, cfg.window,
                                              cfg.x_min)
    ok = bool(probe.slope <= -probe.expected_exponent + cfg.slack)
    report = {"provenance": _header(cfg), "probe": probe.to_json(), "passed": ok,
              "criterion": f"slope <= {-probe.expected_exponent + cfg.slack:.6g}"}
    text = lio.dumps_json(report)
    if not ok:
        raise VerificationFailed(f"slope {probe.slope:.4g} above the bound", text)
    return text


def _cmd_ellipticity(cfg: RunConfig) -> str:
    st = _stencil(cfg)
    if cfg.grid < 64:
        raise UsageError("--grid must be at least 64")
    rep = check_ellipticity(st, cfg.grid)
    body = {"provenance": _header(cfg), "report": rep.to_json(), "verified": rep.verified}
    if st.dim == 1:
        dmin = min_symbol_derivative(st, cfg.grid)
        body["min_symbol_derivative"] = dmin
        body["verified"] = bool(rep.verified and dmin > 0)
    text = lio.dumps_json(body)
    if not body["verified"]:
        raise VerificationFailed("ellipticity not verified", text)
    return text


def _cmd_oned(cfg: RunConfig) -> str:
    from . import oned

    N = cfg.N
    if N is None or N < 1:
        raise UsageError("--N must be at least 1")
    n_max = cfg.n_max if cfg.n_max is not None else N + 2
    if n_max < N:
        raise UsageError("--n-max must be at least N")
    head = _header(cfg)
    if cfg.emit == "constants":
        return lio.dumps_json({"provenance": head,
                               "constants": oned.constants(N, n_max, cfg.J_max).to_json()})
    if cfg.emit == "polys":
        const = oned.constants(N, n_max, cfg.J_max)
        entries = []
        for J in range(cfg.J_max + 1):
            for n in range(N, n_max + 1):
                p = oned.polys(const, n, J)
                entries.append({"n": n, "J": J, "P": p.P.to_json(), "Q": p.Q.to_json(),
                                "R": p.R.to_json()})
        return lio.dumps_json({"provenance": head, "polys": entries})
    if cfg.emit == "omega":
        x = parse_points(cfg.x, 1)[:, 0]
        if np.any(x < 0):
            raise UsageError("--x must be non-negative for the closed lattice constant")
        vals = np.atleast_1d(oned.omega_1d(N, x))
        cols, rows = ["x", "omega"], [[int(a), v] for a, v in zip(x, vals)]
    else:
        y = parse_points(cfg.y, 1, integer=False)[:, 0]
        prof = oned.profiles(N)
        cols = ["y", "h", "f0", "g"]
        series = [prof.h(y), prof.f0(y), prof.g(y)]
        for n in range(N, n_max + 1):
            cols.append(f"h0{n}")
            series.append(prof.h_jn(0, n, y))
            cols.append(f"f{n}")
            series.append(prof.f_n(n, y))
        for n in range(2, n_max + 1):
            cols.append(f"g{n}")
            series.append(prof.g_n(n, y))
        rows = [[yv, *(s[i] for s in series)] for i, yv in enumerate(y)]
    if cfg.format == "json":
        return lio.dumps_json({"provenance": head, "columns": cols, "rows": rows})
    return lio.write_table(cols, rows, head)


def oned_identity_suite(N: int) -> list[dict]:
    """Exact and numerical identities of the one-dimensional family."""
    from . import oned

    checks = []

    def record(name, value, bound):
        checks.append({"check": name, "value": float(value), "bound": bound,
                       "passed": bool(value <= bound)})

    for J in range(3):
        for K1 in range(N, N + 3):
            rep = oned.cross_check(N, K1, J)
            checks.append({"check": f"cross_check J={J} K1={K1}", "passed": rep.ok,
                           "mismatches": rep.mismatches[:3]})
    prof = oned.profiles(N)
    y = np.array([0.5, 1.0, 2.0])
    h = 1e-3
    fdd = (prof.f0(y + h) - 2 * prof.f0(y) + prof.f0(y - h)) / h ** 2
    record("f0'' = h (central difference)", np.max(np.abs(fdd - prof.h(y))), 1e-6)
    record("f0(0) = 1/sqrt(pi)", abs(prof.f0(np.array([0.0]))[0] - 1 / math.sqrt(math.pi)), 1e-12)
    ys = np.linspace(0.1, 3.0, 7)
    for n in range(N, N + 3):
        record(f"h_0{n} even", np.max(np.abs(prof.h_jn(0, n, ys) - prof.h_jn(0, n, -ys))), 1e-14)
    for x in range(6):
        record(f"step integral I({x}) = 1/2", abs(oned.step_integral(x) - 0.5), 1e-12)
    if N == 1:
        om = oned.omega_1d(1, np.arange(21))
        record("lattice constant vanishes on 0..20", np.max(np.abs(om)), 1e-8)
        sigma = 1e-4
        I1, I2 = oned.origin_limit_terms(sigma)
        record("origin limit I1 + I2 - 1/pi -> 0", abs(I1 + I2 - 1 / math.pi), 1e-3)
    return checks


def _cmd_oned_verify(cfg: RunConfig) -> str:
    if cfg.N is None or cfg.N < 1:
        raise UsageError("--N must be at least 1")
    checks = oned_identity_suite(cfg.N)
    ok = all(c["passed"] for c in checks)
    text = lio.dumps_json({"provenance": _header(cfg), "checks": checks, "passed": ok})
    if not ok:
        raise VerificationFailed("identity suite failed", text)
    return text


def _cmd_walk_sim(cfg: RunConfig) -> str:
    from .walk import generator_from_stencil, simulate

    st = _stencil(cfg)
    _positive("scale", cfg.scale)
    if cfg.t < 0:
        raise UsageError("--t must be non-negative")
    if cfg.paths < 1:
        raise UsageError("--paths must be at least 1")
    spec = generator_from_stencil(st, cfg.scale)
    hist = simulate(spec, cfg.t, cfg.paths, cfg.seed)
    head = _header(cfg, rate=spec.rate, bit_generator="Philox")
    head.update({"stencil": cfg.stencil, "scale": cfg.scale})
    if cfg.format == "json":
        return lio.dumps_json({"provenance": head, "t": hist.t, "n_paths": hist.n_paths,
                               "seed": hist.seed, "points": hist.points, "counts": hist.counts})
    return lio.write_histogram(hist, head)


def _cmd_walk_compare(cfg: RunConfig) -> str:
    from .walk import compare, generator_from_stencil

    if not cfg.hist:
        raise UsageError("--hist is required")
    try:
        with open(cfg.hist) as fh:
            hist, head = lio.read_histogram(fh)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read histogram {cfg.hist}: {exc}") from None
    stencil = cfg.stencil or head.get("stencil")
    scale = cfg.scale if cfg.scale is not None else float(head.get("scale", 1.0))
    if stencil is None:
        raise UsageError("histogram has no stencil header; pass --stencil")
    cfg.params["stencil"] = stencil
    spec = generator_from_stencil(_stencil(cfg), scale)
    order = cfg.order
    if order != "exact":
        try:
            order = int(order)
        except ValueError:
            raise UsageError("--order must be 'exact' or an integer") from None
    rep = compare(hist, spec, order)
    body = {"provenance": _header(cfg), "report": rep.to_json()}
    ok = cfg.max_tv is None or rep.tv <= cfg.max_tv
    body["passed"] = bool(ok)
    text = lio.dumps_json(body)
    if not ok:
        raise VerificationFailed(f"TV {rep.tv:.4g} exceeds {cfg.max_tv}", text)
    return text


COMMANDS = {
    "eval-first": _cmd_eval,
    "eval-second": _cmd_eval,
    "field": _cmd_field,
    "expand": _cmd_expand,
    "profiles": _cmd_profiles,
    "omega": _cmd_omega,
    "verify-remainder": _cmd_verify_remainder,
    "ellipticity": _cmd_ellipticity,
    "oned": _cmd_oned,
    "oned-verify": _cmd_oned_verify,
    "walk-sim": _cmd_walk_sim,
    "walk-compare": _cmd_walk_compare,
}


def dispatch(cfg: RunConfig) -> int:
    """Run one resolved configuration and return the exit status."""
    try:
        _write(cfg, COMMANDS[cfg.command](cfg))
    except VerificationFailed as exc:
        _write(cfg, exc.report)
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ToleranceNotMetError, ExtractionFailedError) as exc:
        diag = getattr(exc, "diagnostics", None) or {
            k: getattr(exc, k) for k in ("previous", "last") if hasattr(exc, k)}
        print(f"tolerance not met: {exc}", file=sys.stderr)
        if diag:
            print(lio.dumps_json(diag), file=sys.stderr, end="")
        return EXIT_TOLERANCE
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UnsupportedCaseError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = load_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
