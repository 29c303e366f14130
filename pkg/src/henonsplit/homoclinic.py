"""Primary symmetric homoclinic point and the splitting invariant.

The stable branch is the S-image of the unstable one, so a homoclinic
point is a solution of P(s1) = S(P(s2)). Symmetric points have s1 = s2 and
lie on Fix(S). The primary point is the first crossing of Fix(S) along the
unstable branch, counted from w.

Tangents are taken per unit of the continuous time t in which one
iterate of F advances t by h, i.e. dgamma/dt = s P'(s). The invariant is
theta = Omega(tangent_u, tangent_s) with Omega(a, b) = a_x b_y - a_y b_x.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath

from .errors import DegenerateTangent, IllConditioned, NewtonFailure, NoIntersection, NonConvergence, SingularJacobian
from .manifolds import ManifoldSeries, evaluate_manifold
from .maps import fix_S_distance, reversor_S, reversor_S_jacobian
from .numerics import context_of, matvec, newton_solve

SCAN_SAMPLES = 2048


def omega(a, b):
    return a[0] * b[1] - a[1] * b[0]


@dataclass
class HomoclinicData:
    eps: object
    h: object
    q0: tuple
    s_u: object
    s_s: object
    tangent_u: tuple
    tangent_s: tuple
    theta: object
    angle: object = None  # sin of the splitting angle
    orbit_thetas: list = field(default_factory=list)
    candidates: list = field(default_factory=list)  # other Fix(S) crossings seen by the scan

    @property
    def theta_tau(self):
        """theta with tangents per iterate-of-G time (tau = t / h units): h^2 theta."""
        return self.h ** 2 * self.theta


def _fix_distance(ms: ManifoldSeries, s):
    _, jet = evaluate_manifold(ms, s)
    (x, y), (dx, dy) = jet.value, jet.derivative
    return fix_S_distance(ms.fam.eps, (x, y)), dy + 4 * x * dx


def scan_fix_crossings(ms: ManifoldSeries, samples: int = SCAN_SAMPLES, start=None, max_domains: int = 400):
    """Bracket the crossings of Fix(S) in the first fundamental domain that has one.

    Steps geometrically by sqrt(lambda) from ``start`` until the signed
    distance changes sign, then samples ``samples`` points of the
    fundamental domain [s_b / lambda, s_b] and returns every sign change
    as a bracket (s_lo, s_hi).
    """
    ctx = ms.fam.ctx
    lam = ms.eigenvalue
    s = ctx.convert(start if start is not None else ctx.mpf(1) / 8)
    g0 = _fix_distance(ms, s)[0]
    step = ctx.sqrt(lam)
    for _ in range(max_domains):
        s2 = s * step
        g2 = _fix_distance(ms, s2)[0]
        if g0 * g2 <= 0:
            break
        s, g0 = s2, g2
    else:
        raise NoIntersection("no crossing of Fix(S) along the unstable branch", scanned_to=float(s))
    hi = s2
    lo = hi / lam
    ratio = lam ** (ctx.one / samples)
    brackets = []
    a, ga = lo, _fix_distance(ms, lo)[0]
    for _ in range(samples):
        b = a * ratio
        gb = _fix_distance(ms, b)[0]
        if ga * gb <= 0:
            brackets.append((a, b, ga, gb))
        a, ga = b, gb
    if not brackets:
        raise NoIntersection("sign change lost in fine scan", domain=(float(lo), float(hi)))
    return brackets


def _refine_symmetric(ms: ManifoldSeries, bracket):
    ctx = ms.fam.ctx
    a, b, ga, gb = bracket
    guess = a - ga * (b - a) / (gb - ga)
    try:
        return newton_solve(lambda s: _fix_distance(ms, s)[0], lambda s: _fix_distance(ms, s)[1], guess, ms.fam.pc.tol(0.9), ms.fam.pc).x
    except (NonConvergence, SingularJacobian) as exc:
        raise NewtonFailure("symmetric refinement failed", bracket=(float(a), float(b))) from exc


def _intersection_newton(ms: ManifoldSeries, s1, s2):
    """2-D Newton on P(s1) - S(P(s2)) = 0."""
    pc = ms.fam.pc
    e = ms.fam.eps

    def parts(v):
        _, j1 = evaluate_manifold(ms, v[0])
        _, j2 = evaluate_manifold(ms, v[1])
        return j1, j2

    def f(v):
        j1, j2 = parts(v)
        q = reversor_S(e, j2.value)
        return (j1.value[0] - q[0], j1.value[1] - q[1])

    def jac(v):
        j1, j2 = parts(v)
        d2 = matvec(reversor_S_jacobian(e, j2.value), j2.derivative)
        return ((j1.derivative[0], -d2[0]), (j1.derivative[1], -d2[1]))

    try:
        return newton_solve(f, jac, (s1, s2), pc.tol(0.9), pc).x
    except (NonConvergence, SingularJacobian) as exc:
        raise NewtonFailure("intersection Newton failed", s=(float(s1), float(s2))) from exc


def _tangents(ms: ManifoldSeries, s_u, s_s):
    """Unstable tangent at P(s_u) and stable tangent at S(P(s_s)), both d/dt."""
    e = ms.fam.eps
    _, ju = evaluate_manifold(ms, s_u)
    _, js = evaluate_manifold(ms, s_s)
    tu = (s_u * ju.derivative[0], s_u * ju.derivative[1])
    # gamma^+(t) = S(gamma^-(-t)), hence d/dt gamma^+ = -DS d/dt gamma^-
    ds = matvec(reversor_S_jacobian(e, js.value), (s_s * js.derivative[0], s_s * js.derivative[1]))
    return ju.value, tu, (-ds[0], -ds[1])


def find_primary_homoclinic(ms: ManifoldSeries, samples: int = SCAN_SAMPLES, orbit_range: int = 2) -> HomoclinicData:
    brackets = scan_fix_crossings(ms, samples)
    roots = [_refine_symmetric(ms, br) for br in brackets]
    s_sym = roots[0]
    s_u, s_s = _intersection_newton(ms, s_sym, s_sym)
    q0, tu, ts = _tangents(ms, s_u, s_s)
    data = HomoclinicData(ms.fam.eps, ms.fam.h, q0, s_u, s_s, tu, ts, omega(tu, ts), candidates=roots[1:])
    data.angle = splitting_angle(data)
    if abs(data.angle) <= ms.fam.pc.tol(0.75):
        # the branches are parallel to working precision; theta is rounding noise
        raise IllConditioned("splitting angle below working precision", sin_alpha=float(data.angle), bits=ms.fam.pc.bits)
    lam = ms.eigenvalue
    for k in range(-orbit_range, orbit_range + 1):
        # F^k(q0) = P(lambda^k s_u) = S(P(lambda^-k s_s))
        _, a, b = _tangents(ms, s_u * lam ** k, s_s / lam ** k)
        data.orbit_thetas.append(omega(a, b))
    return data


def splitting_angle(data: HomoclinicData):
    """sin of the angle between the branches: theta / (|t_u| |t_s|)."""
    tu, ts = data.tangent_u, data.tangent_s
    ctx = context_of(data.theta) or mpmath
    n_u = ctx.sqrt(tu[0] ** 2 + tu[1] ** 2)
    n_s = ctx.sqrt(ts[0] ** 2 + ts[1] ** 2)
    if n_u == 0 or n_s == 0:
        raise DegenerateTangent("zero tangent at the homoclinic point")
    return data.theta / (n_u * n_s)


def theta_spread(data: HomoclinicData):
    """max |theta_k - theta_0| / |theta_0| over the sampled orbit."""
    t0 = data.theta
    return max(abs(t - t0) for t in data.orbit_thetas) / abs(t0)
