"""h-sweeps of the splitting invariant and exponential-law fits.

Samples are computed independently (optionally in worker processes) and
merged by sorting on h, so the output does not depend on scheduling.
Values cross process boundaries as raw mpf tuples and are rebuilt exactly
in a wide storage context.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import mpmath

from .errors import (
    DegenerateDesignMatrix,
    DomainError,
    HenonSplitError,
    InsufficientSamples,
    SweepFailure,
)
from .homoclinic import SCAN_SAMPLES, find_primary_homoclinic, theta_spread
from .manifolds import compute_unstable_series
from .maps import MapFamily
from .numerics import PrecisionContext, policy_bits

DEFAULT_H_GRID = ("0.20", "0.17", "0.15", "0.13", "0.11", "0.095", "0.08", "0.07", "0.06")
MAX_FAILURE_FRACTION = 0.2
MODELS = ("fixed-slope", "free-slope", "free-slope-with-h-power")

STORE = mpmath.MPContext()
STORE.prec = 8192
FIT = mpmath.MPContext()
FIT.prec = 256


def to_raw(x):
    return tuple(x._mpf_)


def from_raw(raw):
    return STORE.make_mpf(tuple(raw))


@dataclass
class SplittingSample:
    eps: object
    h: object
    theta: object
    sin_alpha: object
    precision_bits: int
    residual_report: dict = field(default_factory=dict)

    @property
    def theta_sign(self) -> int:
        return 1 if self.theta > 0 else -1

    @property
    def log_abs_theta(self):
        return STORE.log(abs(self.theta))

    @property
    def sin_alpha_log(self):
        return STORE.log(abs(self.sin_alpha))


@dataclass
class SampleFailure:
    h: object
    reason: str
    message: str


def _compute_raw(h: str, bits: int | None, scan_samples: int):
    """Worker body; returns plain picklable data."""
    try:
        bits = bits or policy_bits(float(h))
        pc = PrecisionContext(bits)
        fam = MapFamily.from_h(pc, h)
        ms = compute_unstable_series(fam)
        data = find_primary_homoclinic(ms, scan_samples)
        ctx = pc.mp
        return {
            "ok": True,
            "h": h,
            "h_value": to_raw(fam.h),
            "eps": to_raw(fam.eps),
            "theta": to_raw(data.theta),
            "sin_alpha": to_raw(data.angle),
            "bits": bits,
            "residual_manifold": to_raw(ms.residual),
            "residual_orbit_theta": to_raw(ctx.mpf(theta_spread(data))),
            "fix_s_defect": to_raw(ctx.mpf(abs(fam.S(data.q0)[1] - data.q0[1]))),
        }
    except HenonSplitError as exc:
        return {"ok": False, "h": h, "reason": exc.reason, "message": str(exc)}


def _sample_from_raw(d) -> SplittingSample:
    return SplittingSample(
        from_raw(d["eps"]),
        from_raw(d["h_value"]),
        from_raw(d["theta"]),
        from_raw(d["sin_alpha"]),
        d["bits"],
        {k: from_raw(d[k]) for k in ("residual_manifold", "residual_orbit_theta", "fix_s_defect")},
    )


def compute_sample(h, bits: int | None = None, scan_samples: int = SCAN_SAMPLES) -> SplittingSample:
    d = _compute_raw(str(h), bits, scan_samples)
    if not d["ok"]:
        raise SweepFailure(d["message"], h=str(h), reason=d["reason"])
    return _sample_from_raw(d)


@dataclass
class SweepResult:
    samples: list
    failures: list


def run_sweep(h_grid=DEFAULT_H_GRID, jobs: int = 1, bits: int | None = None, scan_samples: int = SCAN_SAMPLES) -> SweepResult:
    """Evaluate every h; samples come back sorted by increasing h."""
    grid = [str(h) for h in h_grid]
    for h in grid:
        if not 0.04 < float(h) < 0.35:
            raise DomainError("h outside (0.04, 0.35)", h=h)
    args = [(h, bits, scan_samples) for h in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raw = list(pool.map(_compute_raw, *zip(*args)))
    else:
        raw = [_compute_raw(*a) for a in args]
    samples = sorted((_sample_from_raw(d) for d in raw if d["ok"]), key=lambda s: s.h)
    failures = sorted((SampleFailure(STORE.mpf(d["h"]), d["reason"], d["message"]) for d in raw if not d["ok"]), key=lambda f: f.h)
    if grid and len(failures) > MAX_FAILURE_FRACTION * len(grid):
        raise SweepFailure("too many failed samples", failed=len(failures), total=len(grid))
    return SweepResult(samples, failures)


def sweep_trend_checks(samples) -> dict:
    """|theta| strictly increasing with h and a single sign of theta."""
    ordered = sorted(samples, key=lambda s: s.h)
    mags = [abs(s.theta) for s in ordered]
    return {
        "strictly_monotone": all(a < b for a, b in zip(mags, mags[1:])),
        "constant_sign": len({s.theta_sign for s in ordered}) <= 1,
    }


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------


@dataclass
class FitResult:
    model: str
    slope: float
    log_prefactor: float
    h_power: float
    rms_residual: float
    residuals: list
    loo_slopes: list = field(default_factory=list)

    @property
    def slope_spread(self) -> float:
        if not self.loo_slopes:
            return 0.0
        return max(self.loo_slopes) - min(self.loo_slopes)

    @property
    def prefactor(self) -> float:
        return math.exp(self.log_prefactor)


def _lstsq(rows, rhs):
    A = FIT.matrix(rows)
    b = FIT.matrix(rhs)
    sv = FIT.svd_r(A, compute_uv=False)
    if min(sv) <= FIT.mpf(10) ** -30 * max(sv):
        raise DegenerateDesignMatrix("design matrix is rank deficient")
    x, _ = FIT.qr_solve(A, b)
    return [x[i] for i in range(A.cols)]


def _fit_points(hs, ys, model):
    pi2 = FIT.pi ** 2
    if model == "fixed-slope":
        coef = _lstsq([[1] for _ in hs], [y + pi2 / h for h, y in zip(hs, ys)])
        return coef[0], -pi2, FIT.zero
    if model == "free-slope":
        c, s = _lstsq([[1, 1 / h] for h in hs], ys)
        return c, s, FIT.zero
    if model == "free-slope-with-h-power":
        c, nu, s = _lstsq([[1, FIT.log(h), 1 / h] for h in hs], ys)
        return c, s, nu
    raise DomainError(f"unknown model {model!r}; expected one of {MODELS}")


def fit_log_data(hs, log_abs, model: str = "free-slope", leave_one_out: bool = True) -> FitResult:
    """Least squares on log|theta| = log A + nu log h + slope / h."""
    hs = [FIT.mpf(h) for h in hs]
    ys = [FIT.mpf(y) for y in log_abs]
    if len(hs) < 5:
        raise InsufficientSamples("need at least 5 samples", n=len(hs))
    c, s, nu = _fit_points(hs, ys, model)
    res = [y - (c + nu * FIT.log(h) + s / h) for h, y in zip(hs, ys)]
    rms = FIT.sqrt(FIT.fsum(r * r for r in res) / len(res))
    loo = []
    if leave_one_out and len(hs) > 5 and model != "fixed-slope":
        for i in range(len(hs)):
            loo.append(float(_fit_points(hs[:i] + hs[i + 1:], ys[:i] + ys[i + 1:], model)[1]))
    return FitResult(model, float(s), float(c), float(nu), float(rms), [float(r) for r in res], loo)


def fit_exponential(samples, model: str = "free-slope", quantity: str = "theta") -> FitResult:
    """Fit over SplittingSamples. ``quantity="theta_tau"`` fits h^2 theta instead."""
    hs = [s.h for s in samples]
    ys = [s.log_abs_theta for s in samples]
    if quantity == "theta_tau":
        ys = [y + 2 * STORE.log(h) for y, h in zip(ys, hs)]
    elif quantity != "theta":
        raise DomainError("quantity must be 'theta' or 'theta_tau'", quantity=quantity)
    return fit_log_data(hs, ys, model)


# ---------------------------------------------------------------------------
# Second-order diagnostic
# ---------------------------------------------------------------------------


def _line_fit(xs, ys):
    n = len(xs)
    mx, my = FIT.fsum(xs) / n, FIT.fsum(ys) / n
    sxx = FIT.fsum((x - mx) ** 2 for x in xs)
    slope = FIT.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    icpt = my - slope * mx
    return slope, icpt, FIT.fsum((y - icpt - slope * x) ** 2 for x, y in zip(xs, ys))


def _two_term_prefactor(hs, ls):
    """Fit L(h) = c0 + c1 exp(-mu / h) in log form.

    For a trial c0, log|L - c0| is linear in 1/h; c0 is searched on a log
    scale on both sides of the data range and refined by golden section.
    Returns (c0, mu).
    """
    xs = [1 / h for h in hs]

    def cost(c0):
        # unexplained fraction of the variance (1 - R^2), so that a far-away
        # c0 with nearly constant logs does not look like a perfect fit
        try:
            ys = [FIT.log(abs(l - c0)) for l in ls]
        except ValueError:
            return FIT.inf
        my = FIT.fsum(ys) / len(ys)
        var = FIT.fsum((y - my) ** 2 for y in ys)
        return _line_fit(xs, ys)[2] / var if var else FIT.inf

    lo_l, hi_l = min(ls), max(ls)
    best = None
    for side in (-1, 1):
        edge = lo_l if side < 0 else hi_l
        at = lambda lt: edge + side * FIT.exp(lt)
        grid = [FIT.mpf(-j) / 2 for j in range(0, 400)]
        k = min(range(len(grid)), key=lambda i: cost(at(grid[i])))
        a, b = grid[min(k + 1, len(grid) - 1)], grid[max(k - 1, 0)]
        g = (FIT.sqrt(5) - 1) / 2
        for _ in range(300):
            m1, m2 = b - g * (b - a), a + g * (b - a)
            if cost(at(m1)) < cost(at(m2)):
                b = m2
            else:
                a = m1
        c0 = at((a + b) / 2)
        c = cost(c0)
        if best is None or c < best[0]:
            best = (c, c0)
    c0 = best[1]
    slope = _line_fit(xs, [FIT.log(abs(l - c0)) for l in ls])[0]
    return c0, -slope


def _resolution(y):
    """Rounding scale of an input value: 64 ulps of its own precision."""
    ctx = getattr(y, "context", None)
    prec = ctx.prec if ctx is not None else 53
    return 64 * max(1.0, abs(float(y))) * 2.0 ** -prec


def error_term_diagnostic(samples, fit: FitResult | None = None, hs=None, log_abs=None) -> dict:
    """Relative deviation delta(h) = |theta| e^{pi^2/h} / A - 1 and its decay rate.

    A is the h -> 0 prefactor from a fixed-slope fit with a single
    exponential correction; the plain fixed-slope prefactor (``fit``) is
    reported alongside. The delta exponent is the slope of log|delta| vs 1/h.
    """
    if hs is None:
        hs = [s.h for s in samples]
        log_abs = [s.log_abs_theta for s in samples]
    resolution = max(_resolution(y) for y in log_abs)
    hs = [FIT.mpf(h) for h in hs]
    pi2 = FIT.pi ** 2
    ls = [FIT.mpf(y) + pi2 / h for h, y in zip(hs, log_abs)]
    spread = max(ls) - min(ls)
    report = {"h": [float(h) for h in hs]}
    if spread <= resolution:
        report.update(deltas=[0.0] * len(hs), exponent=None, monotone=True, note="no measurable second order")
        return report
    c0, _ = _two_term_prefactor(hs, ls)
    deltas = [FIT.exp(l - c0) - 1 for l in ls]
    ordered = sorted(zip(hs, deltas), key=lambda p: -1 / p[0])
    usable = [(h, d) for h, d in ordered if d != 0]
    xs = [1 / h for h, _ in usable]
    ys = [FIT.log(abs(d)) for _, d in usable]
    mx, my = FIT.fsum(xs) / len(xs), FIT.fsum(ys) / len(ys)
    slope = FIT.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / FIT.fsum((x - mx) ** 2 for x in xs)
    mags = [abs(d) for _, d in sorted(zip(hs, deltas), key=lambda p: p[0], reverse=True)]
    report.update(
        deltas=[float(d) for d in deltas],
        exponent=float(slope),
        log_prefactor=float(c0),
        monotone=all(b < a for a, b in zip(mags, mags[1:])),
        note="",
    )
    if fit is not None:
        report["fit_deltas"] = [float(FIT.exp(l - fit.log_prefactor) - 1) for l in ls]
    return report
