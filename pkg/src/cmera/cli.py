"""
Command-line driver.

Every computation is a deterministic batch job::

    cmera [global flags] COMMAND [command flags]

    commands: profile | kernel | correlators | conformal-data | generators | flow
    global:   --lambda L --precision-digits N --config PATH --output DIR --format {csv,json}

Settings come from built-in defaults, then an INI file (``--config``), then
flags.  The file uses one section per command plus ``[general]``::

    [general]
    lambda = 1.0
    precision_digits = 16
    output = output
    format = csv

    [kernel]
    kind = phi
    x_min = 0.05
    x_max = 12
    x_count = 120

Data files carry no timestamps; ``manifest_<command>.json`` records the resolved
configuration, file digests and status.  Results are cached under
``DIR/.cache`` keyed by command and configuration.

Exit codes: 0 success, 2 configuration error, 3 numerical tolerance not
met, 4 internal error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (AccuracyError, CmeraError, ConfigError, ConvergenceError, ExtrapolationError,
                     FitError, ResolutionError, WindowError)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_INTERNAL = 0, 2, 3, 4
TOLERANCE_ERRORS = (AccuracyError, ConvergenceError, ExtrapolationError, FitError, ResolutionError, WindowError)
COMMANDS = ("profile", "kernel", "correlators", "conformal-data", "generators", "flow")


# ---------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    """Resolved settings for one run; every field has a default."""

    # general
    lam: float = 1.0
    precision_digits: int = 16
    output: str = "output"
    format: str = "csv"
    # profile
    variant: str = "smooth"
    k_min: float = 1e-3
    k_max: float = 10.0
    k_count: int = 200
    ode_check: bool = False
    # kernel
    kind: str = "phi"
    x_min: float = 0.05
    x_max: float = 12.0
    x_count: int = 120
    k_max_mult: float = 40.0
    panels: int = 800
    rel_tol: float = 1e-8
    decay_window: tuple = (5.0, 12.0)
    # correlators
    ir_cutoff: float = 0.0
    corr_x_min: float = 0.1
    corr_x_max: float = 100.0
    corr_x_count: int = 31
    # conformal data
    fit_window: tuple = (20.0, 100.0)
    delta_window: tuple = (10.0, 100.0)
    nu2: tuple = (2 * math.pi, 4 * math.pi)
    k_irs: tuple = (1e-4, 1e-5)
    tol_ope: float = 0.01
    tol_c: float = 0.02
    tol_delta: float = 0.02
    tol_vertex: float = 0.02
    tol_vertex_shift: float = 0.005
    # generators
    gen_k_max: float = 1.0
    n_levels: int = 5
    tol_algebra: float = 1e-8
    # flow
    s_ir: float = -1.0
    h: float = 1e-3
    stride: int = 100

    def validate(self) -> "RunConfig":
        """Raise :class:`ConfigError` listing every violation."""
        v = []

        def pos(name):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                label = "lambda" if name == "lam" else name
                v.append(f"{label} must be a positive finite number (got {val!r})")

        for name in ("lam", "k_min", "k_max", "x_min", "x_max", "k_max_mult", "rel_tol", "corr_x_min",
                     "corr_x_max", "tol_ope", "tol_c", "tol_delta", "tol_vertex", "tol_vertex_shift",
                     "gen_k_max", "tol_algebra", "h"):
            pos(name)
        for name in ("k_count", "x_count", "corr_x_count", "panels", "n_levels", "stride"):
            if not (isinstance(getattr(self, name), int) and getattr(self, name) >= 1):
                v.append(f"{name} must be a positive integer")
        if not (isinstance(self.precision_digits, int) and self.precision_digits >= 16):
            v.append("precision_digits must be an integer >= 16")
        if self.format not in ("csv", "json"):
            v.append("format must be 'csv' or 'json'")
        if self.variant not in ("smooth", "sharp"):
            v.append("variant must be 'smooth' or 'sharp'")
        if self.kind not in ("phi", "pi", "both"):
            v.append("kind must be 'phi', 'pi' or 'both'")
        for lo, hi, label in ((self.k_min, self.k_max, "k"), (self.x_min, self.x_max, "x"),
                              (self.corr_x_min, self.corr_x_max, "corr_x")):
            if isinstance(lo, (int, float)) and isinstance(hi, (int, float)) and not lo < hi:
                v.append(f"{label}_min must be below {label}_max")
        for name in ("decay_window", "fit_window", "delta_window"):
            w = getattr(self, name)
            if len(w) != 2 or not 0 < w[0] < w[1]:
                v.append(f"{name} must be two increasing positive numbers")
        if not self.nu2 or any(n <= 0 for n in self.nu2):
            v.append("nu2 must be a nonempty list of positive numbers")
        if not self.k_irs or any(k <= 0 for k in self.k_irs):
            v.append("k_irs must be a nonempty list of positive numbers")
        if self.ir_cutoff < 0:
            v.append("ir_cutoff must be nonnegative")
        if self.s_ir > 0:
            v.append("s_ir must be nonpositive")
        elif self.h > 0 and abs(self.s_ir / self.h - round(self.s_ir / self.h)) > 1e-9 * max(1, abs(self.s_ir / self.h)):
            v.append("s_ir must be an integer multiple of h")
        if self.k_max_mult <= 1:
            v.append("k_max_mult must exceed 1")
        if v:
            raise ConfigError(v)
        return self

    def as_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


# INI section/key -> RunConfig field
_INI_KEYS = {
    "general": {"lambda": "lam", "precision_digits": "precision_digits", "output": "output", "format": "format"},
    "profile": {"variant": "variant", "k_min": "k_min", "k_max": "k_max", "k_count": "k_count",
                "ode_check": "ode_check"},
    "kernel": {"kind": "kind", "x_min": "x_min", "x_max": "x_max", "x_count": "x_count",
               "k_max_mult": "k_max_mult", "panels": "panels", "rel_tol": "rel_tol",
               "decay_window": "decay_window"},
    "correlators": {"ir_cutoff": "ir_cutoff", "x_min": "corr_x_min", "x_max": "corr_x_max",
                    "x_count": "corr_x_count"},
    "conformal-data": {"fit_window": "fit_window", "delta_window": "delta_window", "nu2": "nu2",
                       "k_irs": "k_irs", "tol_ope": "tol_ope", "tol_c": "tol_c", "tol_delta": "tol_delta",
                       "tol_vertex": "tol_vertex", "tol_vertex_shift": "tol_vertex_shift"},
    "generators": {"k_max": "gen_k_max", "n_levels": "n_levels", "tol_algebra": "tol_algebra"},
    "flow": {"s_ir": "s_ir", "h": "h", "stride": "stride"},
}

_FIELD_TYPES = {f.name: f.default for f in fields(RunConfig)}


def _coerce(name: str, raw, violations: list):
    default = _FIELD_TYPES[name]
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            s = str(raw).strip().lower()
            if s in ("1", "true", "yes", "on"):
                return True
            if s in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            items = raw if isinstance(raw, (list, tuple)) else str(raw).replace(",", " ").split()
            return tuple(float(_expr(x)) for x in items)
        return str(raw)
    except (TypeError, ValueError):
        violations.append(f"{name}: cannot parse {raw!r} as {type(default).__name__}")
        return default


def _expr(token):
    # allow 'pi' multiples in lists such as nu2 = 2pi 4pi
    if isinstance(token, (int, float)):
        return token
    t = str(token).strip().lower()
    if t.endswith("pi"):
        coef = t[:-2].rstrip("*") or "1"
        return float(coef) * math.pi
    return float(t)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Defaults, then the INI file, then non-None ``overrides``."""
    cfg = RunConfig()
    violations: list[str] = []
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError([f"cannot read config file: {exc}"]) from exc
        except configparser.Error as exc:
            raise ConfigError([f"malformed config file: {exc}"]) from exc
        for section in parser.sections():
            keys = _INI_KEYS.get(section)
            if keys is None:
                violations.append(f"unknown section [{section}]")
                continue
            for key, raw in parser.items(section):
                if key not in keys:
                    violations.append(f"unknown key '{key}' in [{section}]")
                    continue
                setattr(cfg, keys[key], _coerce(keys[key], raw, violations))
    for name, raw in overrides.items():
        if raw is not None:
            setattr(cfg, name, _coerce(name, raw, violations))
    try:
        cfg.validate()
    except ConfigError as exc:
        violations.extend(exc.violations)
    if violations:
        raise ConfigError(violations)
    return cfg


# ---------------------------------------------------------------------------
# output

def atomic_write(path: Path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(v) -> str:
    return repr(float(v))


def table_text(columns, rows, format: str) -> str:
    if format == "json":
        return json.dumps({"columns": list(columns), "rows": [[_jsonable(x) for x in r] for r in rows]},
                          indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([x if isinstance(x, str) else (str(x) if isinstance(x, (bool, int, np.integer)) else fmt(x))
                    for x in r])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    return x


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class Outputs:
    """Files produced by a command, keyed by name, plus a pass/fail flag."""

    def __init__(self, format: str):
        self.format = format
        self.files: dict[str, str] = {}
        self.failed_checks: list[str] = []

    def table(self, stem: str, columns, rows):
        ext = "json" if self.format == "json" else "csv"
        self.files[f"{stem}.{ext}"] = table_text(columns, rows, self.format)

    def json(self, name: str, obj):
        self.files[name] = json_text(obj)


# ---------------------------------------------------------------------------
# commands

def _precision(cfg: RunConfig):
    from .specfun import Precision
    return Precision(working_digits=cfg.precision_digits)


def cmd_profile(cfg: RunConfig, out: Outputs):
    from .profiles import (EntanglerProfile, Variant, alpha_ode_solve, sharp_profile, smooth_profile)

    k = np.geomspace(cfg.k_min, cfg.k_max, cfg.k_count) * cfg.lam
    if cfg.variant == "smooth":
        prof = smooth_profile(EntanglerProfile(lam=cfg.lam))
        alpha = prof.alpha(k)
        out.table("alpha", ("k", "alpha", "local_error"), [(a, b, 0.0) for a, b in zip(k, alpha)])
        report = {"variant": "smooth_gaussian", "provenance": prof.provenance.value, "lambda": cfg.lam,
                  "monotone": bool(np.all(np.diff(alpha) >= 0))}
        if cfg.ode_check:
            ode = alpha_ode_solve(EntanglerProfile(lam=cfg.lam), k, (k[0], float(alpha[0])))
            dev = np.abs(ode.samples[:, 1] / alpha - 1.0)
            report["ode_check"] = {"max_relative_deviation": float(dev.max()), "tolerance": 1e-8,
                                   "pass": bool(dev.max() <= 1e-8)}
            out.table("alpha_ode", ("k", "alpha", "local_error"), [tuple(r) for r in ode.samples])
            if dev.max() > 1e-8:
                out.failed_checks.append("ode_check")
    else:
        prof = sharp_profile(cfg.lam)
        alpha = prof.alpha(k)
        regime = np.where(k < cfg.lam, "conformal", np.where(k == cfg.lam, "cutoff", "product"))
        out.table("alpha", ("k", "alpha", "local_error", "regime"),
                  [(a, b, 0.0, r) for a, b, r in zip(k, alpha, regime)])
        report = {"variant": "sharp", "provenance": prof.provenance.value, "lambda": cfg.lam,
                  "regimes": [{"range": "|k| < lambda", "alpha": "|k|"},
                              {"range": "|k| = lambda", "alpha": "lambda"},
                              {"range": "|k| > lambda", "alpha": "lambda"}],
                  "monotone": bool(np.all(np.diff(alpha) >= 0))}
        if cfg.ode_check:
            ode = alpha_ode_solve(EntanglerProfile(lam=cfg.lam, variant=Variant.SHARP), k, (k[0], float(alpha[0])))
            dev = np.abs(ode.samples[:, 1] / alpha - 1.0)
            report["ode_check"] = {"max_relative_deviation": float(dev.max()), "tolerance": 1e-8,
                                   "pass": bool(dev.max() <= 1e-8)}
            if dev.max() > 1e-8:
                out.failed_checks.append("ode_check")
    out.json("profile_report.json", report)


def cmd_kernel(cfg: RunConfig, out: Outputs):
    from .kernels import KERNEL_COLUMNS, decay_law_fit, total_kernel
    from .profiles import EntanglerProfile, smooth_profile
    from .quadrature import QuadConfig

    prof = smooth_profile(EntanglerProfile(lam=cfg.lam))
    qc = QuadConfig(k_max_mult=cfg.k_max_mult, panels=cfg.panels, rel_tol=cfg.rel_tol)
    x = np.linspace(cfg.x_min, cfg.x_max, cfg.x_count) / cfg.lam
    summary = {"quad_cfg": qc.as_dict(), "precision_digits": cfg.precision_digits}
    for kind in (("phi", "pi") if cfg.kind == "both" else (cfg.kind,)):
        ker = total_kernel(f"mu_{kind}", x, prof, _precision(cfg), qc)
        out.table(f"kernel_mu_{kind}", KERNEL_COLUMNS, list(ker.rows()))
        entry = {"sign_changes": ker.sign_changes}
        lx = x * cfg.lam
        in_window = (lx >= cfg.decay_window[0]) & (lx <= cfg.decay_window[1])
        if np.count_nonzero(in_window) >= 3:
            try:
                entry["decay_fit"] = decay_law_fit(ker, cfg.decay_window).as_dict()
            except ConvergenceError as exc:
                entry["decay_fit"] = {"error": str(exc)}
                out.failed_checks.append(f"decay_fit_{kind}")
        summary[f"mu_{kind}"] = entry
    out.json("kernel_summary.json", summary)


def cmd_correlators(cfg: RunConfig, out: Outputs):
    from .gaussian import GaussianState, correlator_table
    from .profiles import EntanglerProfile, smooth_profile

    st = GaussianState(smooth_profile(EntanglerProfile(lam=cfg.lam)), cfg.ir_cutoff * cfg.lam)
    x = np.geomspace(cfg.corr_x_min, cfg.corr_x_max, cfg.corr_x_count) / cfg.lam
    for kind in ("dphi_dphi", "mixed_dphi_dbar", "TT", "phi_phi_subtracted"):
        tab = correlator_table(kind, st, x)
        out.table(f"correlator_{kind}", ("separation", "value", "error"),
                  list(zip(tab.separations, tab.values, tab.errors)))


def cmd_conformal_data(cfg: RunConfig, out: Outputs):
    from .gaussian import (GaussianState, central_charge_fit, correlator_table, dimension_fit, ope_amplitude,
                           vertex_dimension_sweep)
    from .generators import scaling_covariance_check
    from .profiles import EntanglerProfile, smooth_profile

    prof = smooth_profile(EntanglerProfile(lam=cfg.lam))
    st = GaussianState(prof)
    lo, hi = cfg.fit_window
    x = np.geomspace(lo, hi, 9) / cfg.lam
    dlo, dhi = cfg.delta_window
    xd = np.geomspace(dlo, dhi, 11) / cfg.lam

    fit = dimension_fit(correlator_table("dphi_dphi", st, xd))
    amp = ope_amplitude(correlator_table("dphi_dphi", st, x), cfg.fit_window)
    c, cs = central_charge_fit(correlator_table("TT", st, x), cfg.fit_window)
    spin, spin_res = scaling_covariance_check("dphi", "B", prof)
    spin_bar, _ = scaling_covariance_check("dbar_phi", "B", prof)
    dim, dim_res = scaling_covariance_check("dphi", "D", prof)
    ope = float(np.mean(amp))
    xv = np.geomspace(20, 200, 8) / cfg.lam
    vertex = {}
    for n2 in cfg.nu2:
        sw = vertex_dimension_sweep(st, math.sqrt(n2), xv, cfg.k_irs)
        ds = np.array(list(sw["delta"].values()))
        dev = float(np.max(np.abs(ds / sw["expected"] - 1)))
        vertex[repr(float(n2))] = {
            "expected": sw["expected"], "delta": sw["delta"], "relative_shift": sw["relative_shift"],
            "pass": bool(dev <= cfg.tol_vertex and sw["relative_shift"] <= cfg.tol_vertex_shift)}
    summary = {
        "delta_dphi": {"value": fit.delta, "amplitude": fit.amplitude, "window": list(cfg.delta_window),
                       "symbol_level": dim, "symbol_residual": dim_res,
                       "pass": bool(abs(fit.delta - 1) <= cfg.tol_delta)},
        "spin_check": {"dphi": spin, "dbar_phi": spin_bar, "residual": spin_res,
                       "pass": bool(abs(spin - 1) < 1e-8 and abs(spin_bar + 1) < 1e-8 and spin_res < 1e-8)},
        "central_charge": {"value": c, "samples": cs.tolist(), "window": list(cfg.fit_window),
                           "pass": bool(abs(c - 1) <= cfg.tol_c)},
        "ope_coefficient": {"value": -ope / (4 * math.pi), "normalised": ope, "samples": amp.tolist(),
                            "expected": -1 / (4 * math.pi),
                            "pass": bool(np.all(np.abs(amp - 1) <= cfg.tol_ope))},
        "delta_vertex": vertex,
    }
    for key in ("delta_dphi", "spin_check", "central_charge", "ope_coefficient"):
        if not summary[key]["pass"]:
            out.failed_checks.append(key)
    for key, v in vertex.items():
        if not v["pass"]:
            out.failed_checks.append(f"delta_vertex[{key}]")
    out.json("conformal_data.json", summary)


def cmd_generators(cfg: RunConfig, out: Outputs):
    from .generators import algebra_report, default_test_functions, ns_spectrum, scaling_covariance_check
    from .profiles import EntanglerProfile, smooth_profile

    rep = algebra_report(default_test_functions(cfg.gen_k_max))
    for r in rep:
        r["pass"] = bool(r["residual"] < cfg.tol_algebra)
        if not r["pass"]:
            out.failed_checks.append(r["relation"])
    out.json("algebra.json", rep)
    prof = smooth_profile(EntanglerProfile(lam=cfg.lam))
    cov = []
    for op in ("dphi", "dbar_phi"):
        for which in ("D", "B"):
            ev, res = scaling_covariance_check(op, which, prof)
            cov.append({"operator": op, "generator": which, "eigenvalue": ev, "residual": res})
    out.json("covariance.json", cov)
    spec = ns_spectrum(prof, cfg.n_levels)
    out.table("ns_spectrum", ("level", "eigenvalue"),
              [(i, e) for i, e in enumerate(spec.eigenvalues)])


def cmd_flow(cfg: RunConfig, out: Outputs):
    from .scaleflow import flow_profile, trajectory

    st = flow_profile(cfg.s_ir, cfg.lam, method="iterate", h=cfg.h)
    k, b = st.k[::cfg.stride], st.beta[::cfg.stride]
    out.table("flow_profile", ("k", "beta"), list(zip(k, b)))
    n = 4
    s_values = [cfg.s_ir * i / n for i in range(n + 1)]
    s_values = [round(s / cfg.h) * cfg.h for s in s_values]
    rows = []
    for state in trajectory(s_values, cfg.lam, cfg.h):
        rows.extend((state.s, kk, bb) for kk, bb in zip(state.k[::cfg.stride], state.beta[::cfg.stride]))
    out.table("flow_trajectory", ("s", "k", "beta"), rows)


HANDLERS = {
    "profile": cmd_profile,
    "kernel": cmd_kernel,
    "correlators": cmd_correlators,
    "conformal-data": cmd_conformal_data,
    "generators": cmd_generators,
    "flow": cmd_flow,
}


# ---------------------------------------------------------------------------
# driver

def cache_key(command: str, cfg: RunConfig) -> str:
    d = cfg.as_dict()
    d.pop("output")
    blob = json.dumps({"command": command, "config": d, "schema_version": SCHEMA_VERSION,
                       "version": __version__}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def run(command: str, cfg: RunConfig, use_cache: bool = True) -> int:
    outdir = Path(cfg.output)
    key = cache_key(command, cfg)
    cache_file = outdir / ".cache" / f"{key}.json"
    manifest = {"schema_version": SCHEMA_VERSION, "version": __version__, "command": command,
                "config": cfg.as_dict(), "cache_key": key}
    out = Outputs(cfg.format)
    status, code, message = "ok", EXIT_OK, ""
    cached = None
    if use_cache and cache_file.exists():
        try:
            cached = json.loads(cache_file.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            cached = None
    try:
        if cached is not None:
            out.files = cached["files"]
            out.failed_checks = cached["failed_checks"]
            manifest["cache"] = "hit"
        else:
            HANDLERS[command](cfg, out)
            manifest["cache"] = "miss"
            atomic_write(cache_file, json.dumps({"files": out.files, "failed_checks": out.failed_checks},
                                                sort_keys=True))
        if out.failed_checks:
            status, code = "tolerance_failure", EXIT_TOLERANCE
            message = "checks failed: " + ", ".join(out.failed_checks)
    except ConfigError as exc:
        status, code, message = "config_error", EXIT_CONFIG, str(exc)
    except TOLERANCE_ERRORS as exc:
        status, code, message = "tolerance_failure", EXIT_TOLERANCE, f"{type(exc).__name__}: {exc}"
    except (CmeraError, ValueError, ArithmeticError) as exc:
        status, code, message = "internal_error", EXIT_INTERNAL, f"{type(exc).__name__}: {exc}"
    for name, text in out.files.items():
        atomic_write(outdir / name, text)
    # a run that aborted leaves partial outputs; flag them
    stale = status in ("config_error", "internal_error") or (code == EXIT_TOLERANCE and not out.failed_checks)
    manifest["status"] = status
    manifest["message"] = message
    manifest["files"] = [{"name": n, "sha256": _sha(t), "stale": stale} for n, t in sorted(out.files.items())]
    atomic_write(outdir / f"manifest_{command}.json", json_text(manifest))
    if message:
        print(message, file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmera", description="Numerical cMERA for the free boson in 1+1 dimensions.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--lambda", dest="lam", type=str, default=None, help="cutoff scale (default 1)")
    p.add_argument("--precision-digits", dest="precision_digits", type=str, default=None,
                   help="working decimal digits; above 16 switches kernels to mpmath")
    p.add_argument("--config", default=None, help="INI configuration file")
    p.add_argument("--output", default=None, help="output directory (default ./output)")
    p.add_argument("--format", default=None, choices=("csv", "json"), help="table format")
    p.add_argument("--no-cache", action="store_true", help="ignore cached results")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("profile", help="constraint profile alpha(k)")
    sp.add_argument("--variant", choices=("smooth", "sharp"), default=None)
    sp.add_argument("--ode-check", dest="ode_check", action="store_const", const=True, default=None)
    sp.add_argument("--k-min", dest="k_min", default=None)
    sp.add_argument("--k-max", dest="k_max", default=None)
    sp.add_argument("--k-count", dest="k_count", default=None)

    sk = sub.add_parser("kernel", help="smearing kernels mu_phi, mu_pi")
    sk.add_argument("--kind", choices=("phi", "pi", "both"), default=None)
    sk.add_argument("--x-min", dest="x_min", default=None)
    sk.add_argument("--x-max", dest="x_max", default=None)
    sk.add_argument("--x-count", dest="x_count", default=None)
    sk.add_argument("--k-max-mult", dest="k_max_mult", default=None)

    sc = sub.add_parser("correlators", help="two-point functions")
    sc.add_argument("--ir-cutoff", dest="ir_cutoff", default=None)
    sc.add_argument("--x-min", dest="corr_x_min", default=None)
    sc.add_argument("--x-max", dest="corr_x_max", default=None)
    sc.add_argument("--x-count", dest="corr_x_count", default=None)

    sd = sub.add_parser("conformal-data", help="dimensions, spin, central charge, OPE coefficient")
    sd.add_argument("--nu2", nargs="+", default=None, help="values of nu^2 (e.g. 2pi 4pi)")

    sg = sub.add_parser("generators", help="generator algebra, covariance, NS spectrum")
    sg.add_argument("--n-levels", dest="n_levels", default=None)

    sf = sub.add_parser("flow", help="sharp-cutoff constraint flow")
    sf.add_argument("--s-ir", dest="s_ir", default=None)
    sf.add_argument("--h", dest="h", default=None)
    return p


_NON_CONFIG = {"command", "config", "no_cache"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print("invalid configuration:\n  " + "\n  ".join(exc.violations), file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(args.command, cfg, use_cache=not args.no_cache)
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the documented exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
