"""Invariant suite behind the ``verify`` subcommand.

Each check reports the worst observed defect and the threshold it is held
to. Random points come from a fixed seed so runs are reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .diffeq import (
    delta,
    delta2,
    delta_bar,
    delta_inverse,
    lattice_function,
    lattice_solution,
    model_equation,
    shift_back,
    shift_forward,
    wronskian,
)
from .maps import F0, F1, F2, F_by_conjugation, F_jacobian, G, reversor_P, reversor_S
from .numerics import PrecisionContext, det2
from .outer import x0y0_ode_residual, x1_closed_form

SEED = 20240611
EPS_VALUES = ("0.01", "0.1")


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.value < self.threshold


def random_points(pc: PrecisionContext, n: int = 100, radius: float = 0.5, seed: int = SEED):
    rng = random.Random(seed)
    ctx = pc.mp
    return [(ctx.mpf(rng.uniform(-radius, radius)), ctx.mpf(rng.uniform(-radius, radius))) for _ in range(n)]


def _dist(a, b):
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def map_checks(pc: PrecisionContext, n: int = 100):
    ctx = pc.mp
    lim = float(pc.tol(1.0, 16))
    pts = random_points(pc, n)
    worst = dict.fromkeys(("symplecticity", "S_involution", "P_involution", "SF_involution", "PG_involution", "F_series"), ctx.zero)
    for es in EPS_VALUES:
        e = ctx.mpf(es)
        S = lambda z: reversor_S(e, z)
        F = lambda z: F_by_conjugation(e, z)
        for z in pts:
            scale = 1 + abs(z[0]) + abs(z[1])
            worst["symplecticity"] = max(worst["symplecticity"], abs(det2(F_jacobian(e, z)) - 1))
            worst["S_involution"] = max(worst["S_involution"], _dist(S(S(z)), z) / scale)
            worst["P_involution"] = max(worst["P_involution"], _dist(reversor_P(reversor_P(z)), z) / scale)
            worst["SF_involution"] = max(worst["SF_involution"], _dist(S(F(S(F(z)))), z) / scale)
            pg = lambda q: reversor_P(G(e, q))
            worst["PG_involution"] = max(worst["PG_involution"], _dist(pg(pg(z)), z) / scale)
            series = tuple(a + e * b + e * e * c for a, b, c in zip(F0(z), F1(z), F2(z)))
            worst["F_series"] = max(worst["F_series"], _dist(F(z), series) / scale)
    return [Check(k, float(v), lim) for k, v in worst.items()]


def outer_checks(pc: PrecisionContext, n: int = 200):
    ctx = pc.mp
    ts = [ctx.mpf(-20) + 40 * ctx.mpf(j) / (n - 1) for j in range(n)]
    res = max(max(abs(r) for r in x0y0_ode_residual(t, pc)) for t in ts)
    # X1'' = (1 - 6 sech^2) X1 - 1/16 for the closed form
    x1 = lambda t: x1_closed_form(t, pc)
    res1 = max(
        abs(ctx.diff(x1, t, 2) - (1 - 6 * ctx.sech(t) ** 2) * x1(t) + ctx.mpf(1) / 16)
        for t in ts[:: n // 20]
    )
    return [Check("outer_X0Y0_ode", float(res), 1e-30), Check("outer_X1_ode", float(res1), 1e-30)]


def operator_checks(pc: PrecisionContext):
    ctx = pc.mp
    f = lambda t: 1 / (t + ctx.mpc(0.3, 0.7)) ** 2
    g = lambda t: ctx.exp(ctx.mpf("0.1") * t) * ctx.cos(t / 3)
    lim = float(pc.tol(1.0, 16))
    taus = [ctx.mpc(1.5, -2), ctx.mpc(-4, -7), ctx.mpc(10, -0.5)]
    fg = lambda t: f(t) * g(t)
    ids = {
        "delta2_factorizations": lambda t: max(
            abs(delta2(f)(t) - delta(delta_bar(f))(t)), abs(delta2(f)(t) - delta_bar(delta(f))(t))
        ),
        "delta_bar_forward_shift": lambda t: max(
            abs(delta_bar(shift_forward(f))(t) - delta(f)(t)), abs(shift_forward(delta_bar(f))(t) - delta(f)(t))
        ),
        "delta_back_shift": lambda t: max(
            abs(delta(shift_back(f))(t) - delta_bar(f)(t)), abs(shift_back(delta(f))(t) - delta_bar(f)(t))
        ),
        "product_rule_forward": lambda t: abs(delta(fg)(t) - (delta(f)(t) * g(t + 1) + f(t) * delta(g)(t))),
        "product_rule_backward": lambda t: abs(delta_bar(fg)(t) - (delta_bar(f)(t) * g(t - 1) + f(t) * delta_bar(g)(t))),
    }
    out = [Check(name, float(max(fn(t) for t in taus)), lim) for name, fn in ids.items()]
    out.append(Check("wronskian_one_tau", float(max(abs(wronskian(lambda t: 1, lambda t: t, t) - 1) for t in taus)), lim))
    return out


def wronskian_flow_check(pc: PrecisionContext, steps: int = 40):
    """Delta-bar W = -w W along two lattice solutions of the model equation."""
    ctx = pc.mp
    de = model_equation()
    tau0 = ctx.mpc(0.25, -20)
    u = lattice_function(tau0, lattice_solution(de, tau0, ctx.mpc(1), ctx.mpc(0.5, 0.2), steps))
    v = lattice_function(tau0, lattice_solution(de, tau0, ctx.mpc(0), ctx.mpc(1), steps))
    worst = ctx.zero
    for k in range(2, steps - 1):
        t = tau0 + k
        W = wronskian(u, v, t)
        Wb = wronskian(u, v, t - 1)
        worst = max(worst, abs((W - Wb) + de.w(t) * W) / abs(W))
    return Check("wronskian_flow", float(worst), float(pc.tol(1.0, 24)))


def delta_inverse_check(pc: PrecisionContext):
    ctx = pc.mp
    g = lambda t: 1 / t ** 4
    worst = ctx.zero
    for t in (ctx.mpc(0.5, -3), ctx.mpc(-2, -6)):
        u0 = delta_inverse(g, t, pc)
        u1 = delta_inverse(g, t + 1, pc)
        worst = max(worst, abs(u1 - u0 - g(t)) / abs(g(t)))
    return Check("delta_inverse", float(worst), float(pc.tol(1.0, 16)))


def run_invariant_suite(bits: int = 256):
    pc = PrecisionContext(bits)
    return map_checks(pc) + outer_checks(pc) + operator_checks(pc) + [wronskian_flow_check(pc), delta_inverse_check(pc)]
