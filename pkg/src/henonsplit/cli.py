"""Command-line interface.

Every subcommand writes its tables as CSV into --out, each with a .hex
sidecar holding exact binary values, and appends a line per event to
run.log in the same directory. Exit status: 0 success, 1 computational
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import re
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import mpmath

from . import __version__
from .errors import ComputationError, ConfigError, HenonSplitError, UsageError

log = logging.getLogger("henonsplit")

SUBCOMMANDS = ("fixedpoint", "manifold", "theta", "sweep", "fit", "inner", "wkb-check", "verify")
SWEEP_COLUMNS = (
    "h",
    "eps",
    "theta_sign",
    "log_abs_theta",
    "sin_alpha_log",
    "precision_bits",
    "residual_manifold",
    "residual_orbit_theta",
)
MAX_DIGITS = 50


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Flat run parameters; sections of the config file only group keys.

    [run]    h, eps, bits, out, verbose
    [sweep]  grid, jobs, scan_samples
    [inner]  a2, depth, nodes
    """

    subcommand: str = ""
    h: str | None = None
    eps: str | None = None
    bits: int | None = None
    out: str = "."
    verbose: bool = False
    grid: list = field(default_factory=list)
    jobs: int = 1
    scan_samples: int = 2048
    a2: str = "0"
    depth: float = 4.0
    nodes: int = 32

    SECTIONS = {
        "run": ("h", "eps", "bits", "out", "verbose"),
        "sweep": ("grid", "jobs", "scan_samples"),
        "inner": ("a2", "depth", "nodes"),
    }

    def validate(self, need_parameter: bool = False):
        if self.h is not None and self.eps is not None:
            raise ConfigError("give exactly one of h and eps")
        if need_parameter and self.h is None and self.eps is None:
            raise ConfigError("one of h or eps is required")
        if self.bits is not None and self.bits < 64:
            raise ConfigError("bits must be at least 64")
        if self.jobs < 1:
            raise ConfigError("jobs must be positive")
        for v in [self.h, self.eps] + list(self.grid):
            if v is not None:
                try:
                    if not float(v) > 0:
                        raise ValueError
                except ValueError:
                    raise ConfigError(f"not a positive number: {v!r}") from None

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        for sec, keys in self.SECTIONS.items():
            cp[sec] = {}
            for k in keys:
                v = getattr(self, k)
                if v is None:
                    continue
                cp[sec][k] = ",".join(v) if k == "grid" else str(v)
        from io import StringIO

        buf = StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"unreadable config: {exc}") from None
        cfg = base or cls()
        types = {f.name: f.type for f in fields(cls)}
        for sec in cp.sections():
            if sec not in cls.SECTIONS:
                raise ConfigError(f"unknown section [{sec}]")
            for k, v in cp[sec].items():
                if k not in cls.SECTIONS[sec]:
                    raise ConfigError(f"unknown key {k!r} in [{sec}]")
                setattr(cfg, k, _coerce(k, v, types[k]))
        return cfg


def _coerce(key, value, typ):
    try:
        if key == "grid":
            return [s.strip() for s in value.split(",") if s.strip()]
        if key == "verbose":
            return value.strip().lower() in ("1", "true", "yes", "on")
        if key in ("bits", "jobs", "scan_samples", "nodes"):
            return int(value)
        if key == "depth":
            return float(value)
        return value.strip()
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def digits_for(bits: int) -> int:
    return min(math.ceil(0.3 * bits), MAX_DIGITS)


def _raw(x):
    return getattr(x, "_mpf_", None)


def format_decimal(x, digits: int) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int) or isinstance(x, str):
        return str(x)
    raw = _raw(x)
    if raw is None:
        raw = mpmath.mpf(x)._mpf_
    return mpmath.libmp.to_str(raw, digits)


def format_hex(x) -> str:
    """Exact value as [-]0x<mantissa>p<exponent> (integer mantissa)."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int) or isinstance(x, str):
        return str(x)
    if isinstance(x, float):
        x = mpmath.mpf(x)
    sign, man, exp, _ = x._mpf_
    if man == 0:
        if x._mpf_ != mpmath.libmp.fzero:
            return mpmath.libmp.to_str(x._mpf_, 5)
        return "0x0p+0"
    return f"{'-' if sign else ''}0x{man:x}p{exp:+d}"


_HEX = re.compile(r"^(-?)0x([0-9a-f]+)p([+-]\d+)$")


def parse_hex(text: str, ctx=None):
    """Inverse of format_hex; returns an mpf with the identical binary value."""
    from .sweep import STORE

    ctx = ctx or STORE
    m = _HEX.match(text.strip())
    if not m:
        raise ValueError(f"not a hex value: {text!r}")
    man = int(m.group(2), 16)
    if man == 0:
        return ctx.zero
    exp = int(m.group(3))
    tz = (man & -man).bit_length() - 1
    man >>= tz
    return ctx.make_mpf((1 if m.group(1) else 0, man, exp + tz, man.bit_length()))


def emit_csv(records, schema, path, bits: int | None = None):
    """Write records (dicts) as CSV plus a .hex sidecar with exact values.

    Decimal digits per row follow that row's precision_bits when present,
    otherwise ``bits``.
    """
    path = Path(path)
    schema = list(schema)
    try:
        with open(path, "w", newline="") as fd, open(path.with_suffix(".hex"), "w", newline="") as fh:
            wd = csv.writer(fd, lineterminator="\r\n")
            wh = csv.writer(fh, lineterminator="\r\n")
            wd.writerow(schema)
            wh.writerow(schema)
            for rec in records:
                if set(rec) - set(schema) or set(schema) - set(rec):
                    raise UsageError("record does not match the schema", keys=sorted(rec))
                b = int(rec.get("precision_bits", bits or 128))
                d = digits_for(b)
                wd.writerow([format_decimal(rec[k], d) for k in schema])
                wh.writerow([format_hex(rec[k]) for k in schema])
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def read_hex_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _family(cfg: RunConfig):
    from .maps import MapFamily, h_from_eps
    from .numerics import PrecisionContext, policy_bits

    if cfg.h is not None:
        bits = cfg.bits or policy_bits(float(cfg.h))
        pc = PrecisionContext(bits)
        return MapFamily.from_h(pc, cfg.h)
    probe = PrecisionContext(128)
    h = float(h_from_eps(probe, cfg.eps))
    bits = cfg.bits or policy_bits(h)
    return MapFamily.from_eps(PrecisionContext(bits), cfg.eps)


def cmd_fixedpoint(cfg: RunConfig, out: Path):
    cfg.validate(need_parameter=True)
    fam = _family(cfg)
    w = fam.w_fixed
    rec = {
        "eps": fam.eps,
        "h": fam.h,
        "lambda_plus": fam.lambda_plus,
        "lambda_minus": fam.lambda_minus,
        "p_x": fam.p_fixed.x,
        "w_x": w.x,
        "w_y": w.y,
        "precision_bits": fam.pc.bits,
    }
    emit_csv([rec], list(rec), out / "fixedpoint.csv")
    return [f"h = {mpmath.nstr(fam.h, 20)}", f"lambda_+ = {mpmath.nstr(fam.lambda_plus, 20)}"]


def cmd_manifold(cfg: RunConfig, out: Path):
    from .manifolds import compute_unstable_series

    cfg.validate(need_parameter=True)
    fam = _family(cfg)
    ms = compute_unstable_series(fam)
    rows = [{"k": k, "a_x": ax, "a_y": ay, "precision_bits": fam.pc.bits} for k, (ax, ay) in enumerate(ms.coeffs, start=1)]
    emit_csv(rows, ["k", "a_x", "a_y", "precision_bits"], out / "manifold.csv")
    return [f"order {ms.N}, scale {mpmath.nstr(ms.scale, 10)}, residual {mpmath.nstr(ms.residual, 5)}"]


def _sample_record(s):
    return {
        "h": s.h,
        "eps": s.eps,
        "theta_sign": s.theta_sign,
        "log_abs_theta": s.log_abs_theta,
        "sin_alpha_log": s.sin_alpha_log,
        "precision_bits": s.precision_bits,
        "residual_manifold": s.residual_report["residual_manifold"],
        "residual_orbit_theta": s.residual_report["residual_orbit_theta"],
    }


def cmd_theta(cfg: RunConfig, out: Path):
    from .maps import h_from_eps
    from .numerics import PrecisionContext
    from .sweep import compute_sample

    cfg.validate(need_parameter=True)
    h = cfg.h if cfg.h is not None else mpmath.nstr(h_from_eps(PrecisionContext(256), cfg.eps), 60)
    s = compute_sample(h, cfg.bits, cfg.scan_samples)
    emit_csv([_sample_record(s)], SWEEP_COLUMNS, out / "theta.csv")
    return [f"theta = {mpmath.nstr(s.theta, 20)}"]


def cmd_sweep(cfg: RunConfig, out: Path):
    from .sweep import DEFAULT_H_GRID, run_sweep, sweep_trend_checks

    cfg.validate()
    grid = cfg.grid or list(DEFAULT_H_GRID)
    res = run_sweep(grid, jobs=cfg.jobs, bits=cfg.bits, scan_samples=cfg.scan_samples)
    for f in res.failures:
        log.warning("sample failed h=%s reason=%s %s", f.h, f.reason, f.message)
    emit_csv([_sample_record(s) for s in res.samples], SWEEP_COLUMNS, out / "sweep.csv")
    trend = sweep_trend_checks(res.samples)
    return [f"{len(res.samples)} samples, {len(res.failures)} failures, trend {trend}"]


def cmd_fit(cfg: RunConfig, out: Path):
    from .sweep import MODELS, error_term_diagnostic, fit_log_data

    src = out / "sweep.hex"
    if not src.exists():
        raise UsageError(f"{src} not found; run the sweep subcommand first")
    header, rows = read_hex_table(src)
    hs = [parse_hex(r[header.index("h")]) for r in rows]
    ys = [parse_hex(r[header.index("log_abs_theta")]) for r in rows]
    recs, lines = [], []
    for model in MODELS:
        f = fit_log_data(hs, ys, model)
        recs.append(
            {
                "model": model,
                "slope": mpmath.mpf(f.slope),
                "log_prefactor": mpmath.mpf(f.log_prefactor),
                "h_power": mpmath.mpf(f.h_power),
                "rms_residual": mpmath.mpf(f.rms_residual),
                "slope_spread": mpmath.mpf(f.slope_spread),
            }
        )
        lines.append(f"{model}: slope {f.slope:.8f} log A {f.log_prefactor:.6f} nu {f.h_power:.4f}")
    emit_csv(recs, list(recs[0]), out / "fit.csv", bits=64)
    diag = error_term_diagnostic(None, hs=hs, log_abs=ys)
    drecs = [{"h": mpmath.mpf(h), "delta": mpmath.mpf(d)} for h, d in zip(diag["h"], diag["deltas"])]
    emit_csv(drecs, ["h", "delta"], out / "error_term.csv", bits=64)
    lines.append(f"delta exponent {diag['exponent']} monotone {diag['monotone']} {diag['note']}")
    return lines


def cmd_inner(cfg: RunConfig, out: Path):
    from .inner import default_grid, inner_trace, theta1_fourier
    from .numerics import PrecisionContext

    cfg.validate()
    pc = PrecisionContext(cfg.bits or 256, guard_bits=64)
    a2 = complex(cfg.a2.replace(" ", ""))
    tr = inner_trace(pc, a2, default_grid(pc))
    ctx = pc.mp
    rows = []
    for t, (u, v), th in zip(tr.tau_grid, tr.u_v, tr.theta_hat):
        rows.append(
            {
                "tau_re": ctx.re(t),
                "tau_im": ctx.im(t),
                "abs_u": abs(u),
                "abs_v": abs(v),
                "abs_theta_hat": abs(th),
                "scaled_theta_hat": abs(th) * ctx.exp(-2 * ctx.pi * ctx.im(t)),
                "precision_bits": pc.bits,
            }
        )
    emit_csv(rows, list(rows[0]), out / "inner.csv")
    est = theta1_fourier(cfg.depth, a2, pc, cfg.nodes)
    rec = {
        "depth": mpmath.mpf(cfg.depth),
        "theta1_re": ctx.re(est.value),
        "theta1_im": ctx.im(est.value),
        "abs_theta1": abs(est.value),
        "relative_change": mpmath.mpf(est.relative_change),
        "precision_bits": pc.bits,
    }
    emit_csv([rec], list(rec), out / "theta1.csv")
    return [f"|Theta1| = {mpmath.nstr(abs(est.value), 15)} (Y vs Y+1: {est.relative_change:.2e})"]


def cmd_wkb_check(cfg: RunConfig, out: Path):
    from .diffeq import model_equation, residual_decay_exponent, wkb_solution
    from .numerics import PrecisionContext

    cfg.validate()
    pc = PrecisionContext(cfg.bits or 256)
    de = model_equation()
    rows = []
    for b1 in ("stated", "derived"):
        for sign in (1, -1):
            for order in (0, 1):
                if order == 0 and b1 == "derived":
                    continue
                phi = wkb_solution(de.leading_coeffs, sign, order, b1, pc.mp)
                e = residual_decay_exponent(de, phi, [20, 40, 80, 120, 200])
                rows.append({"b1": b1 if order else "none", "sign": sign, "order": order, "exponent": pc.mp.mpf(e), "precision_bits": 64})
    emit_csv(rows, ["b1", "sign", "order", "exponent", "precision_bits"], out / "wkb.csv")
    return [f"{r['b1']} {r['sign']:+d} order {r['order']}: {float(r['exponent']):.3f}" for r in rows]


def cmd_verify(cfg: RunConfig, out: Path):
    from .verify import run_invariant_suite

    checks = run_invariant_suite(cfg.bits or 256)
    rows = [{"check": c.name, "value": mpmath.mpf(c.value), "threshold": mpmath.mpf(c.threshold), "passed": int(c.passed)} for c in checks]
    emit_csv(rows, ["check", "value", "threshold", "passed"], out / "verify.csv", bits=64)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        raise VerificationFailed("invariant checks failed: " + ", ".join(failed))
    return [f"{len(checks)} checks passed"]


class VerificationFailed(ComputationError):
    reason = "verification_failed"


COMMANDS = {
    "fixedpoint": (cmd_fixedpoint, "saddle fixed point, eigenvalues and h; writes fixedpoint.csv"),
    "manifold": (cmd_manifold, "unstable-manifold series coefficients; writes manifold.csv"),
    "theta": (cmd_theta, "splitting invariant at one parameter; writes theta.csv (sweep columns)"),
    "sweep": (cmd_sweep, "theta over an h-grid; writes sweep.csv"),
    "fit": (cmd_fit, "exponential-law fits of sweep.csv; writes fit.csv and error_term.csv"),
    "inner": (cmd_inner, "inner separatrices, Theta-hat trace and Theta1; writes inner.csv and theta1.csv"),
    "wkb-check": (cmd_wkb_check, "WKB residual exponents on the model equation; writes wkb.csv"),
    "verify": (cmd_verify, "invariant suite; writes verify.csv, exit 0 iff all pass"),
}

CONFIG_HELP = """config file keys (ini sections):
  [run]    h, eps, bits, out, verbose
  [sweep]  grid (comma separated), jobs, scan_samples
  [inner]  a2, depth, nodes
command-line flags override the file."""


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--h", help="h = log lambda_+ (exclusive with --eps)")
    common.add_argument("--eps", help="map parameter (exclusive with --h)")
    common.add_argument("--bits", type=int, help="working precision override")
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--grid", help="comma-separated h values for sweep")
    common.add_argument("--config", help="ini config file")
    common.add_argument("--jobs", type=int, help="worker processes for sweep")
    common.add_argument("--verbose", action="store_true", default=None, help="log to stderr as well")
    p = argparse.ArgumentParser(
        prog="henonsplit",
        description="Exponentially small separatrix splitting for the area-preserving Henon map.",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name, (_, text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=text, description=text, epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    return p


def make_config(ns) -> RunConfig:
    cfg = RunConfig(subcommand=ns.subcommand)
    if ns.config:
        try:
            text = Path(ns.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = RunConfig.from_ini(text, cfg)
    if ns.h is not None or ns.eps is not None:
        cfg.h, cfg.eps = ns.h, ns.eps
    for key in ("bits", "out", "jobs", "verbose"):
        v = getattr(ns, key)
        if v is not None:
            setattr(cfg, key, v)
    if ns.grid is not None:
        cfg.grid = _coerce("grid", ns.grid, list)
    cfg.validate()
    return cfg


def _setup_logging(out: Path, verbose: bool):
    log.handlers.clear()
    log.setLevel(logging.INFO)
    log.propagate = False
    fh = logging.FileHandler(out / "run.log", mode="a")
    fh.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(fh)
    if verbose:
        sh = logging.StreamHandler(sys.stderr)
        sh.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        log.addHandler(sh)


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(ns)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
    except UsageError as exc:
        print(f"henonsplit: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"henonsplit: error: {exc}", file=sys.stderr)
        return 2
    _setup_logging(out, cfg.verbose)
    log.info("start %s args=%s", cfg.subcommand, " ".join(argv if argv is not None else sys.argv[1:]))
    t0 = time.monotonic()
    try:
        for line in COMMANDS[cfg.subcommand][0](cfg, out):
            log.info("%s: %s", cfg.subcommand, line)
            print(line)
    except UsageError as exc:
        log.error("reason=%s %s %s", exc.reason, exc, exc.detail)
        print(f"henonsplit: error: {exc}", file=sys.stderr)
        return 2
    except HenonSplitError as exc:
        log.error("reason=%s %s %s", exc.reason, exc, exc.detail)
        print(f"henonsplit: {exc.reason}: {exc}", file=sys.stderr)
        return 1
    log.info("done %s in %.1fs", cfg.subcommand, time.monotonic() - t0)
    return 0


def main():
    sys.exit(dispatch())
