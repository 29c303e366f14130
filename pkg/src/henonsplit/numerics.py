"""Extended-precision substrate.

All arithmetic runs on a private ``mpmath.MPContext`` owned by a
:class:`PrecisionContext`; nothing touches the global ``mpmath.mp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import mpmath

from .errors import DomainError, IllConditioned, NonConvergence, SingularJacobian

MIN_BITS = 64


def policy_bits(h: float) -> int:
    """Working precision for a target h: resolves e^{-2 pi^2/h} plus 128 guard bits."""
    if h <= 0:
        raise DomainError("h must be positive", h=h)
    return math.ceil(2.2 * math.pi ** 2 / (h * math.log(2))) + 128


@dataclass(frozen=True)
class PrecisionContext:
    bits: int
    guard_bits: int = 0

    def __post_init__(self):
        if not isinstance(self.bits, int) or self.bits < MIN_BITS:
            raise DomainError(f"bits must be an integer >= {MIN_BITS}", bits=self.bits)
        if not isinstance(self.guard_bits, int) or self.guard_bits < 0:
            raise DomainError("guard_bits must be a non-negative integer", guard_bits=self.guard_bits)

    @classmethod
    def for_h(cls, h: float, guard_bits: int = 0) -> "PrecisionContext":
        return cls(policy_bits(h), guard_bits)

    @cached_property
    def mp(self) -> mpmath.MPContext:
        ctx = mpmath.MPContext()
        ctx.prec = self.bits + self.guard_bits
        return ctx

    def mpf(self, x=0):
        return self.mp.mpf(x)

    def mpc(self, re=0, im=0):
        return self.mp.mpc(re, im)

    def tol(self, scale: float = 1.0, offset: int = 0):
        """2^(-scale*bits + offset) as an mpf of this context."""
        return self.mp.ldexp(self.mp.mpf(1), -math.floor(scale * self.bits) + offset)

    # The cached MPContext is rebuilt after unpickling (process pools).
    def __getstate__(self):
        return {"bits": self.bits, "guard_bits": self.guard_bits}

    def __setstate__(self, state):
        object.__setattr__(self, "bits", state["bits"])
        object.__setattr__(self, "guard_bits", state["guard_bits"])


def complex_scalar(pc: PrecisionContext, re, im=0):
    """Complex number of the context; mpc already satisfies the field axioms to 1 ulp."""
    return pc.mp.mpc(re, im)


def context_of(x):
    """The mpmath context an mpf/mpc belongs to, or None for plain numbers."""
    return getattr(x, "context", None)


# ---------------------------------------------------------------------------
# Power series
# ---------------------------------------------------------------------------


class PowerSeries1D:
    """Dense truncated power series sum_k c_k s^k, k = 0..order.

    Coefficients may be any ring elements supporting + and * (mpf, mpc,
    Fraction, int). Every operation truncates at the smaller order of the
    operands.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence, order: int | None = None):
        c = list(coeffs)
        if not c:
            raise DomainError("a series needs at least one coefficient")
        if order is not None:
            zero = c[0] * 0
            c = (c + [zero] * (order + 1 - len(c)))[: order + 1]
        self.coeffs = tuple(c)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __repr__(self):
        return f"PowerSeries1D({list(self.coeffs)!r})"

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def __eq__(self, other):
        return isinstance(other, PowerSeries1D) and self.coeffs == other.coeffs

    __hash__ = None

    @classmethod
    def variable(cls, t0, order: int) -> "PowerSeries1D":
        """The series of t = t0 + s."""
        one = t0 * 0 + 1
        return cls([t0, one], order)

    def _coerce(self, other) -> "PowerSeries1D":
        if isinstance(other, PowerSeries1D):
            return other
        zero = self.coeffs[0] * 0
        return PowerSeries1D([zero + other], self.order)

    def __add__(self, other):
        if not isinstance(other, PowerSeries1D):
            return PowerSeries1D((self.coeffs[0] + other,) + self.coeffs[1:])
        n = min(self.order, other.order)
        return PowerSeries1D([a + b for a, b in zip(self.coeffs[: n + 1], other.coeffs[: n + 1])])

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries1D([-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PowerSeries1D):
            return PowerSeries1D([a * other for a in self.coeffs])
        n = min(self.order, other.order)
        a, b = self.coeffs, other.coeffs
        return PowerSeries1D([sum((a[i] * b[k - i] for i in range(1, k + 1)), a[0] * b[k]) for k in range(n + 1)])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, PowerSeries1D):
            return PowerSeries1D([a / other for a in self.coeffs])
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise DomainError("only non-negative integer powers", n=n)
        result = self._coerce(self.coeffs[0] * 0 + 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __call__(self, s):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * s + c
        return acc

    def derivative(self) -> "PowerSeries1D":
        if self.order == 0:
            return PowerSeries1D([self.coeffs[0] * 0])
        return PowerSeries1D([k * self.coeffs[k] for k in range(1, self.order + 1)])

    def reciprocal(self) -> "PowerSeries1D":
        a = self.coeffs
        if a[0] == 0:
            raise DomainError("reciprocal of a series with zero constant term")
        b = [1 / a[0]]
        for k in range(1, len(a)):
            b.append(-sum((a[i] * b[k - i] for i in range(2, k + 1)), a[1] * b[k - 1]) * b[0])
        return PowerSeries1D(b)

    def exp(self) -> "PowerSeries1D":
        """exp of the series, via (e^f)' = f' e^f."""
        a = self.coeffs
        ctx = context_of(a[0])
        e0 = ctx.exp(a[0]) if ctx is not None else mpmath.exp(a[0])
        e = [e0]
        for k in range(1, len(a)):
            e.append(sum(j * a[j] * e[k - j] for j in range(1, k + 1)) / k)
        return PowerSeries1D(e)

    def compose(self, q: "PowerSeries1D") -> "PowerSeries1D":
        """self(q(s)) truncated at min order; q must have zero constant term."""
        if q.coeffs[0] != 0:
            raise DomainError("compose requires an inner series with zero constant term; shift first")
        n = min(self.order, q.order)
        q = PowerSeries1D(q.coeffs[: n + 1])
        acc = PowerSeries1D([self.coeffs[n]], n)
        for c in reversed(self.coeffs[:n]):
            acc = acc * q + c
        return acc

    def shift(self, c) -> "PowerSeries1D":
        """Re-expansion about c: the series of s -> self(c + s)."""
        a = list(self.coeffs)
        n = len(a)
        # repeated synthetic division (Taylor shift), exact in any ring
        for i in range(n - 1):
            for k in range(n - 2, i - 1, -1):
                a[k] = a[k] + c * a[k + 1]
        return PowerSeries1D(a)


def sech(x):
    if isinstance(x, PowerSeries1D):
        e = x.exp()
        return 2 / (e + e.reciprocal())
    return context_of(x).sech(x) if context_of(x) is not None else mpmath.sech(x)


def tanh(x):
    if isinstance(x, PowerSeries1D):
        e2 = (x * 2).exp()
        return (e2 - 1) / (e2 + 1)
    return context_of(x).tanh(x) if context_of(x) is not None else mpmath.tanh(x)


# ---------------------------------------------------------------------------
# 1-jets
# ---------------------------------------------------------------------------


def matvec(m, v):
    return tuple(sum((row[j] * v[j] for j in range(1, len(v))), row[0] * v[0]) for row in m)


def matmul(a, b):
    cols = list(zip(*b))
    return tuple(tuple(sum((r[k] * c[k] for k in range(1, len(c))), r[0] * c[0]) for c in cols) for r in a)


def det2(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


@dataclass(frozen=True)
class Jet1:
    value: tuple
    derivative: tuple

    def push(self, f: Callable, jacobian: Callable) -> "Jet1":
        return Jet1(tuple(f(self.value)), matvec(jacobian(self.value), self.derivative))


# ---------------------------------------------------------------------------
# Newton
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NewtonResult:
    x: tuple
    iterations: int
    residual: object


def _sup(ctx, v):
    return max(abs(c) for c in v) if v else ctx.zero


def newton_solve(f, jacobian, x0, tol, pc: PrecisionContext, max_iter: int = 60) -> NewtonResult:
    """Newton's method for f: R^n -> R^n. Scalars are accepted for n = 1."""
    ctx = pc.mp
    scalar = not isinstance(x0, (tuple, list))
    wrap = (lambda v: (v,)) if scalar else tuple
    fx_ = (lambda x: wrap(f(x[0]))) if scalar else (lambda x: tuple(f(x)))
    jac_ = (lambda x: ((jacobian(x[0]),),)) if scalar else (lambda x: jacobian(x))
    x = tuple(ctx.convert(c) for c in wrap(x0))
    if tol <= 0:
        raise DomainError("tol must be positive", tol=tol)
    cond_limit = ctx.ldexp(ctx.mpf(1), pc.bits - 8)
    for it in range(max_iter + 1):
        fx = fx_(x)
        res = _sup(ctx, fx)
        if res <= tol:
            return NewtonResult(x[0] if scalar else x, it, res)
        if it == max_iter:
            break
        J = ctx.matrix([list(r) for r in jac_(x)])
        try:
            Jinv = ctx.inverse(J)
        except ZeroDivisionError:
            raise SingularJacobian("Jacobian is exactly singular", iteration=it)
        if ctx.mnorm(J, 1) * ctx.mnorm(Jinv, 1) > cond_limit:
            raise SingularJacobian("Jacobian condition number exceeds 2^(bits-8)", iteration=it)
        step = Jinv * ctx.matrix(list(fx))
        x = tuple(x[i] - step[i] for i in range(len(x)))
    raise NonConvergence("Newton did not reach tolerance", residual=float(res), iterations=max_iter)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _gl_raw(n: int, prec: int):
    """Gauss-Legendre nodes/weights on [-1, 1] as raw mpf tuples."""
    ctx = mpmath.MPContext()
    ctx.prec = prec + 20
    out = []
    for i in range(1, n // 2 + 1):
        x = ctx.cos(ctx.pi * (i - ctx.mpf(1) / 4) / (n + ctx.mpf(1) / 2))
        for _ in range(100):
            p0, p1 = ctx.one, x
            for k in range(2, n + 1):
                p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
            dp = n * (x * p1 - p0) / (x * x - 1)
            dx = p1 / dp
            x -= dx
            if abs(dx) < ctx.ldexp(1, -prec - 10):
                break
        w = 2 / ((1 - x * x) * dp * dp)
        out.append((x._mpf_, w._mpf_))
        out.append(((-x)._mpf_, w._mpf_))
    if n % 2:
        p0, p1 = ctx.one, ctx.zero
        for k in range(2, n + 1):
            p0, p1 = p1, (-(k - 1) * p0) / k
        dp = n * (-p0) / (-1)
        out.append((ctx.zero._mpf_, (2 / (dp * dp))._mpf_))
    return tuple(out)


def gauss_legendre(n: int, pc: PrecisionContext):
    ctx = pc.mp
    return [(ctx.make_mpf(x), ctx.make_mpf(w)) for x, w in _gl_raw(n, ctx.prec)]


def _gl_apply(g, a, b, n, pc):
    ctx = pc.mp
    mid, half = (a + b) / 2, (b - a) / 2
    return half * ctx.fsum(w * g(mid + half * x) for x, w in gauss_legendre(n, pc))


def integrate_segment(g, a, b, pc: PrecisionContext, nodes: int = 32, max_doublings: int = 3):
    """Gauss-Legendre integral of g along the straight segment [a, b].

    The rule is accepted when doubling the node count changes the value by
    less than 2^(-bits/2) (relative to max(1, |value|)); the finer value is
    returned.
    """
    if nodes < 8:
        raise DomainError("nodes must be >= 8", nodes=nodes)
    ctx = pc.mp
    a, b = ctx.convert(a), ctx.convert(b)
    tol = pc.tol(0.5)
    coarse = _gl_apply(g, a, b, nodes, pc)
    for _ in range(max_doublings):
        nodes *= 2
        fine = _gl_apply(g, a, b, nodes, pc)
        if abs(fine - coarse) < tol * max(1, abs(fine)):
            return fine
        coarse = fine
    raise NonConvergence("quadrature self-check failed", nodes=nodes)


# ---------------------------------------------------------------------------
# Linear ODEs by Taylor stepping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearField:
    """z' = A(t) z + b(t). A and b must accept scalars and PowerSeries1D."""

    matrix: Callable
    forcing: Callable
    dim: int = 2


@dataclass
class GridFunction:
    """Grid samples plus piecewise Taylor polynomials for dense evaluation."""

    t: list
    z: list
    pieces: list  # (t_left, t_right, [series per component])

    def _piece(self, t):
        lo, hi = 0, len(self.pieces) - 1
        if t < self.pieces[0][0] or t > self.pieces[-1][1]:
            raise DomainError("t outside the solution interval", t=float(t))
        while lo < hi:
            mid = (lo + hi) // 2
            if t > self.pieces[mid][1]:
                lo = mid + 1
            else:
                hi = mid
        return self.pieces[lo]

    def __call__(self, t, deriv: int = 0):
        t0, _, comps = self._piece(t)
        out = []
        for ser in comps:
            for _ in range(deriv):
                ser = ser.derivative()
            out.append(ser(t - t0))
        return tuple(out)


def _taylor_step(field: LinearField, t0, z0, order: int, ctx):
    """Taylor coefficients of the solution through (t0, z0) to the given order."""
    tser = PowerSeries1D.variable(t0, order)
    Araw = field.matrix(tser)
    A = [[_as_series(Araw[i][j], t0, order) for j in range(field.dim)] for i in range(field.dim)]
    braw = field.forcing(tser)
    b = [_as_series(braw[i], t0, order) for i in range(field.dim)]
    z = [[z0[i]] for i in range(field.dim)]
    for k in range(order):
        for i in range(field.dim):
            acc = b[i].coeffs[k]
            for j in range(field.dim):
                aij = A[i][j].coeffs
                zj = z[j]
                acc += ctx.fsum(aij[m] * zj[k - m] for m in range(k + 1))
            z[i].append(acc / (k + 1))
    return [PowerSeries1D(c) for c in z]


def _as_series(v, t0, order):
    if isinstance(v, PowerSeries1D):
        return PowerSeries1D(v.coeffs, order)
    return PowerSeries1D([t0 * 0 + v], order)


def _step_order(pc, step, radius=1.5):
    ratio = max(step / radius, 1e-3)
    return min(120, max(8, math.ceil((pc.bits + 20) * math.log(2) / -math.log(ratio)) + 2))


def _integrate(field, t_from, z_from, t_to, nsteps, pc, order):
    ctx = pc.mp
    pieces = []
    t, z = ctx.convert(t_from), tuple(ctx.convert(c) for c in z_from)
    dt = (ctx.convert(t_to) - t) / nsteps
    for _ in range(nsteps):
        comps = _taylor_step(field, t, z, order, ctx)
        t_next = t + dt
        pieces.append((t, t_next, comps))
        z = tuple(c(dt) for c in comps)
        t = t_next
    return z, pieces


def ode_solve_ivp(field: LinearField, z0, t0, t1, pc: PrecisionContext, steps: int = 64, order: int | None = None):
    """Solve the linear initial value problem; returns the state at t1 and a dense GridFunction."""
    ctx = pc.mp
    step = abs(ctx.convert(t1) - t0) / steps
    order = order or _step_order(pc, float(step))
    z1, pieces = _integrate(field, t0, z0, t1, steps, pc, order)
    if t1 < t0:
        pieces = _reorient(pieces)[::-1]
    gf = GridFunction([p[0] for p in pieces] + [pieces[-1][1]], [], pieces)
    gf.z = [gf(tt) for tt in gf.t]
    return z1, gf


def _reorient(pieces):
    # pieces integrated right-to-left are based at their right end; rebase
    # them at the left end so that lookups see increasing intervals
    return [(end, base, [s.shift(end - base) for s in comps]) for base, end, comps in pieces]


def _eigvec(ctx, m, lam):
    a, b = m[0]
    c, d = m[1]
    v = (b, lam - a) if abs(b) >= abs(c) else (lam - d, c)
    n = ctx.sqrt(abs(v[0]) ** 2 + abs(v[1]) ** 2)
    return (v[0] / n, v[1] / n)


def ode_solve_bvp(field: LinearField, boundary, T, grid: int, pc: PrecisionContext, substep_max: float = 0.25) -> GridFunction:
    """Bounded solution of a planar linear system on [-T, T].

    ``boundary`` holds the asymptotic states at -inf and +inf. The left
    family starts at -T from the asymptotic state plus a multiple of the
    forward-growing eigenvector of A(-T); the right family mirrors it from
    +T. The two are matched at t = 0. When the two families share a bounded
    homogeneous mode (translation freedom), the free multiple is fixed by
    minimizing |z(0)|; a matching defect orthogonal to that mode means no
    bounded solution exists and raises IllConditioned.
    """
    ctx = pc.mp
    if grid % 2:
        raise DomainError("grid must be even so that t = 0 is a node", grid=grid)
    T = ctx.convert(T)
    zm, zp = [tuple(ctx.convert(c) for c in b) for b in boundary]
    half = grid // 2
    nsteps = max(math.ceil(float(T) / substep_max), half)
    order = _step_order(pc, float(T) / nsteps)

    def eig(t):
        m = field.matrix(t)
        tr, dt = m[0][0] + m[1][1], det2(m)
        disc = ctx.sqrt(tr * tr / 4 - dt)
        return m, tr / 2 + disc, tr / 2 - disc

    homog = LinearField(field.matrix, lambda t: (t * 0, t * 0), 2)
    mL, lpL, _ = eig(-T)
    mR, _, lmR = eig(T)
    vL = _eigvec(ctx, mL, lpL)
    vR = _eigvec(ctx, mR, lmR)
    pL0, piecesL = _integrate(field, -T, zm, 0, nsteps, pc, order)
    hL0, hpiecesL = _integrate(homog, -T, vL, 0, nsteps, pc, order)
    pR0, piecesR = _integrate(field, T, zp, 0, nsteps, pc, order)
    hR0, hpiecesR = _integrate(homog, T, vR, 0, nsteps, pc, order)

    rhs = (pR0[0] - pL0[0], pR0[1] - pL0[1])
    M = ((hL0[0], -hR0[0]), (hL0[1], -hR0[1]))
    nL = ctx.sqrt(hL0[0] ** 2 + hL0[1] ** 2)
    nR = ctx.sqrt(hR0[0] ** 2 + hR0[1] ** 2)
    scale = max(1, abs(pL0[0]), abs(pL0[1]), abs(pR0[0]), abs(pR0[1]))
    if abs(det2(M)) > ctx.exp(-T) * nL * nR:
        c = (rhs[0] * M[1][1] - M[0][1] * rhs[1]) / det2(M)
        d = (M[0][0] * rhs[1] - M[1][0] * rhs[0]) / det2(M)
    else:
        v = (hL0[0] / nL, hL0[1] / nL)
        along = rhs[0] * v[0] + rhs[1] * v[1]
        defect = abs(rhs[0] * v[1] - rhs[1] * v[0])
        if defect > 10 * ctx.exp(-T) * scale:
            raise IllConditioned(
                "no bounded solution: matching defect orthogonal to the shared mode",
                defect=float(defect),
            )
        cp = -(pL0[0] * v[0] + pL0[1] * v[1])
        c = cp / nL
        d = (cp - along) / (hR0[0] * v[0] + hR0[1] * v[1])

    def combine(pieces, hpieces, coef):
        return [(a, b, [s + hs * coef for s, hs in zip(cs, hcs)]) for (a, b, cs), (_, _, hcs) in zip(pieces, hpieces)]

    left = combine(piecesL, hpiecesL, c)
    right = _reorient(combine(piecesR, hpiecesR, d))[::-1]
    pieces = left + right
    ts = [(-T + 2 * T * k / grid) for k in range(grid + 1)]
    gf = GridFunction(ts, [], pieces)
    gf.z = [gf(t) for t in ts]
    return gf
