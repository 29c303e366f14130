import pytest

from henonsplit.errors import DepthInsufficient, DomainError, SeedInsufficient, TrajectoryOverflow
from henonsplit.inner import (
    MATCHED_A2,
    compute_alpha_minus,
    compute_alpha_plus,
    decay_slope,
    difference_equation_residual,
    functional_equation_residual,
    inner_difference,
    inner_seed,
    inner_series,
    reexpansion_fit,
    seed_parameters,
    stable_by_reflection,
    theta1_fourier,
    theta_hat,
)
from henonsplit.maps import F0
from henonsplit.numerics import PrecisionContext

PC = PrecisionContext(256)
CTX = PC.mp


def test_seed_parameters_scale_with_precision():
    R, K = seed_parameters(PC)
    assert K >= 256 * 0.69
    assert R >= K / 6.3
    R2, K2 = seed_parameters(PrecisionContext(512))
    assert K2 > K and R2 > R


def test_leading_coefficients():
    ser = inner_series(PC, 0, 12)
    assert ser.a[1] == CTX.mpc(0, 0.5)
    assert ser.b[2] == CTX.mpc(0.5, -0.5)
    assert ser.a[2] == 0


def test_coefficient_growth_is_factorial():
    ser = inner_series(PC, 0, 60)
    # a_k ~ (k-1)! / (2 pi)^k up to a power of k; two-step ratios remove the parity wobble
    ratios = [CTX.sqrt(abs(ser.a[k + 2] / ser.a[k]) / (k * (k + 1))) for k in range(40, 58)]
    assert all(0.14 < r < 0.19 for r in ratios)
    assert ratios[-1] < ratios[0]


def test_seed_domain():
    with pytest.raises(DomainError):
        inner_seed(CTX.mpc(-5, -1), 0, PC)
    v, jet = inner_seed(CTX.mpc(-40, -1), 0, PC)
    assert abs(v[0] - CTX.mpc(0, 0.5) / CTX.mpc(-40, -1)) < 1e-3


@pytest.mark.parametrize("tau", [(-3, -4), (0.5, -2), (2, -6)])
def test_functional_equation(tau):
    t = CTX.mpc(*tau)
    assert functional_equation_residual(t, 0, PC) < PC.tol(0.8)
    assert functional_equation_residual(t, 0, PC, plus=True) < PC.tol(0.8)


def test_alpha_plus_reflection():
    t = CTX.mpc(0.3, -3)
    p, _ = compute_alpha_plus(t, 0, PC)
    m, _ = compute_alpha_minus(-CTX.conj(t), 0, PC)
    assert abs(p[0] - CTX.conj(m[0])) < PC.tol(0.9)
    assert abs(p[1] - (-CTX.conj(m[1]) - 4 * CTX.conj(m[0]) ** 2)) < PC.tol(0.9)


def test_stable_by_reflection_solves_the_map():
    t = CTX.mpc(0.2, -3)
    a = stable_by_reflection(t, 0, PC)
    b = stable_by_reflection(t + 1, 0, PC)
    f = F0(a)
    assert max(abs(f[0] - b[0]), abs(f[1] - b[1])) < PC.tol(0.7)


@pytest.mark.parametrize("c", [0.1j, MATCHED_A2])
def test_a2_is_a_translation(c):
    """alpha^-_{a2 = c}(tau) = alpha^-_{a2 = 0}(tau + 2 i c)."""
    t = CTX.mpc(-3, -4)
    a, _ = compute_alpha_minus(t, c, PC)
    b, _ = compute_alpha_minus(t + 2j * CTX.mpc(c), 0, PC)
    assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) < PC.tol(0.9)


def test_theta_hat_covariance_under_a2():
    t = CTX.mpc(0.2, -4)
    # real shifts of a2 move tau vertically and rescale by e^{4 pi Re a2}
    ratio = abs(theta_hat(t, MATCHED_A2, PC)) / abs(theta_hat(t + 2j * MATCHED_A2, 0, PC))
    assert abs(ratio - 1) < 1e-50


def test_difference_equation():
    assert difference_equation_residual(CTX.mpc(0.1, -4), 0, PC) < PC.tol(0.7)


def test_seed_check_detects_shallow_seed():
    with pytest.raises(SeedInsufficient):
        compute_alpha_minus(CTX.mpc(0, -3), 0, PC, R_seed=16)


def test_overflow_on_divergent_seed():
    with pytest.raises(TrajectoryOverflow):
        compute_alpha_minus(CTX.mpc(0, -3), 0, PC, R_seed=8)


def test_difference_decays():
    us = [abs(inner_difference(CTX.mpc(0, -y), 0, PC)[0]) for y in (3, 5, 7)]
    assert us[0] > us[1] > us[2]


def test_theta1_depth_range():
    with pytest.raises(DomainError):
        theta1_fourier(1, 0, PC)


def test_theta1_depth_check():
    with pytest.raises(DepthInsufficient):
        theta1_fourier(3, 0, PC, nodes=8, tol=1e-12)


def test_reexpansion_recovers_series():
    a, b = reexpansion_fit(0, PC)
    assert abs(a[0] - CTX.mpc(0, 0.5)) < 1e-12
    assert abs(b[1] - CTX.mpc(0.5, -0.5)) < 1e-12
    assert abs(b[0]) < 1e-12


def test_decay_slope_exact_exponential():
    ims = [-3, -4, -5, -6]
    vals = [CTX.exp(-2 * CTX.pi * abs(y)) for y in ims]
    assert decay_slope(vals, ims) == pytest.approx(-2 * 3.141592653589793, rel=1e-12)
