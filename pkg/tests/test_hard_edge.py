"""Hard-edge kernel, tails, and experiment tests."""

import math

import numpy as np
import pytest

from wpl import hard_edge as he
from wpl.errors import CoincidentPoints, DomainError, UnsupportedR
from wpl.hard_edge import HardEdgeParams
from wpl.specfun import bessel_j

R1 = HardEdgeParams(r=1, nu=(0,))
R2 = HardEdgeParams(r=2, nu=(0, 0))


def bessel_kernel(x: float, y: float, nu: int = 0) -> float:
    """Classical hard-edge Bessel kernel (Lommel integral closed form)."""
    a, b = 2.0 * math.sqrt(x), 2.0 * math.sqrt(y)
    if x == y:
        return float(he.bessel_density(nu, x))
    num = a * bessel_j(nu + 1.0, a) * bessel_j(float(nu), b) - b * bessel_j(float(nu), a) * bessel_j(nu + 1.0, b)
    return num / (2.0 * (x - y))


def test_params_validation():
    with pytest.raises(DomainError):
        HardEdgeParams(r=0, nu=())
    with pytest.raises(DomainError):
        HardEdgeParams(r=2, nu=(0,))


def test_diagonal_bessel_values():
    k = he.k_hard(R1, 1.0, 1.0)
    assert k.method == "integral"
    assert k.value == pytest.approx(0.3827, abs=2e-4)
    assert k.value == pytest.approx(float(he.bessel_density(0, 1.0)), rel=1e-12)


def test_diagonal_limit_at_zero():
    # K(x,x) -> J_0(0)^2 = 1 as x -> 0+
    assert he.k_hard(R1, 1e-8, 1e-8).value == pytest.approx(1.0, abs=1e-6)


def test_bessel_reduction_all_a():
    xs = np.linspace(0.1, 10.0, 15)
    for a in (0, 1, 2):
        params = HardEdgeParams(r=1, nu=(a,))
        diag = he.k_hard_diag(params, xs)
        assert np.max(np.abs(diag - he.bessel_density(a, xs))) < 1e-6


def test_off_diagonal_matches_bessel_kernel_gauge():
    # r=1, nu=(a): K(x,y) = (y/x)^{a/2} * Bessel kernel
    for a in (0, 1):
        params = HardEdgeParams(r=1, nu=(a,))
        for (x, y) in ((0.5, 2.0), (3.0, 1.2)):
            gauge = (y / x) ** (a / 2.0)
            assert he.k_hard(params, x, y).value == pytest.approx(
                gauge * bessel_kernel(x, y, a), rel=1e-10
            )


def test_cd_matches_integral_r2():
    rng = np.random.default_rng(2)
    for _ in range(6):
        x, y = rng.uniform(0.5, 20.0, 2)
        if abs(x - y) < 1e-3:
            continue
        a = he.k_hard(R2, float(x), float(y)).value
        b = he.k_hard_cd(R2, float(x), float(y)).value
        assert b == pytest.approx(a, rel=1e-8)


def test_cd_r1_reduces_to_bessel():
    assert he.k_hard_cd(R1, 1.0, 4.0).value == pytest.approx(bessel_kernel(1.0, 4.0), rel=1e-8)


def test_cd_near_diagonal_continuity():
    # CD at small offset approaches the integral diagonal value
    diag = he.k_hard(R2, 2.0, 2.0).value
    near = he.k_hard_cd(R2, 2.0, 2.0 + 1e-5).value
    assert near == pytest.approx(diag, rel=1e-4)
    with pytest.raises(CoincidentPoints):
        he.k_hard_cd(R2, 2.0, 2.0 + 1e-12)
    with pytest.raises(DomainError):
        he.k_hard_cd(HardEdgeParams(r=2, nu=(0, 1)), 1.0, 2.0)


def test_positivity_and_repulsion():
    xs = np.linspace(0.2, 8.0, 12)
    diag = he.k_hard_diag(R2, xs)
    assert np.all(diag > 0)
    # 2x2 determinants nonnegative
    for (x, y) in ((0.5, 0.9), (2.0, 3.5)):
        det = (
            he.k_hard(R2, x, x).value * he.k_hard(R2, y, y).value
            - he.k_hard(R2, x, y).value * he.k_hard(R2, y, x).value
        )
        assert det >= -1e-10


def test_charpoly_hard_limit_values():
    # 0F1(; 1; 1) = I_0(2)
    i0_2 = sum((1.0 / math.factorial(k)) ** 2 for k in range(40))
    assert he.charpoly_hard_limit(R1, 1.0) == pytest.approx(i0_2, rel=1e-13)
    assert he.charpoly_hard_limit(R2, 0.0) == pytest.approx(1.0)


def test_charpoly_limit_consistency_with_meijer_reduction():
    # 0F_r from the series equals the G^{1,0} reduction with flipped argument
    from wpl.specfun import ContourSpec, MeijerSpec, meijer_g

    rng = np.random.default_rng(4)
    for nus in ((0,), (1, 0)):
        r = len(nus)
        params = HardEdgeParams(r=r, nu=nus)
        spec = MeijerSpec(1, 0, 0, r + 1, (), (0.0,) + tuple(-float(v) for v in nus))
        ct = ContourSpec.auto(spec)
        pref = 1.0
        for v in nus:
            pref *= math.gamma(1.0 + v)
        for lam in rng.uniform(0.1, 3.0, 5):
            lhs = he.charpoly_hard_limit(params, -float(lam))
            rhs = pref * meijer_g(spec, ct, float(lam))
            assert lhs == pytest.approx(rhs, rel=1e-10)


def test_charpoly_finite_N_convergence():
    lam = 1.0
    limit = he.charpoly_hard_limit(R2, lam)
    vals = he.charpoly_limit_convergence(2, 1, (0, 0), lambda N: (0,), lam, (20, 40, 80))
    diffs = [abs(v - limit) for v in vals]
    assert diffs[0] > diffs[1] > diffs[2]
    assert diffs[1] / diffs[0] < 0.6 and diffs[2] / diffs[1] < 0.6
    assert diffs[2] / limit < 0.01


def test_tail_diagonal_r1_exact_asymptotics():
    # Bessel density large-x mean is 1/(pi sqrt(x))
    rep = he.tail_diagonal_report(R1, 50.0, 200.0, n_grid=80)
    assert abs(rep["mean_ratio"] - 1.0) < 0.02


def test_tail_formula_values():
    assert he.tail_diagonal(R1, 4.0) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-13)


def test_rho2_truncated_tail_forms():
    assert he.rho2_truncated_tail(1, 100.0, 121.0) == pytest.approx(
        -(221.0) / (4.0 * math.pi**2 * 110.0 * 441.0), rel=1e-12
    )
    # r=2 symmetry under x <-> y
    assert he.rho2_truncated_tail(2, 100.0, 150.0) == pytest.approx(
        he.rho2_truncated_tail(2, 150.0, 100.0), rel=1e-14
    )
    with pytest.raises(UnsupportedR):
        he.rho2_truncated_tail(3, 1.0, 2.0)


def test_rho2_tail_r1_windowed():
    rep = he.rho2_tail_report(1, 100.0, 121.0)
    assert abs(rep["ratio"] - 1.0) < 0.1


def test_gauge_h():
    assert he.gauge_h(8.0) == pytest.approx(math.e**3, rel=1e-13)
    # gauge cancels in kernel products
    x, y = 1.7, 3.1
    prod = he.k_hard(R2, x, y).value * he.k_hard(R2, y, x).value
    gauged = (he.gauge_h(x) / he.gauge_h(y) * he.k_hard(R2, x, y).value) * (
        he.gauge_h(y) / he.gauge_h(x) * he.k_hard(R2, y, x).value
    )
    assert gauged == pytest.approx(prod, rel=1e-12)


def test_cd_numerator_asymptotic_envelope():
    # the Christoffel-Darboux numerator at large nearby x, y against the
    # closed (1/pi) e^{...} sin(...) leading form, within a 20% envelope
    x, y = 220.0, 260.0
    total = 0.0
    xa, ya = np.array([x]), np.array([y])
    for j in range(3):
        fj = float(he._g10_series(R2, xa, power=j)[0])
        gj = float(he._gr0_values(R2, ya, power=2 - j)[0])
        total += (-1.0) ** j * fj * gj
    total = -total  # (-1)^{r+1} for r = 2
    pref = math.exp(1.5 * x ** (1 / 3)) * math.exp(-1.5 * y ** (1 / 3)) / math.pi
    phase = 3.0 * math.sin(math.pi / 3.0) * (x ** (1 / 3) - y ** (1 / 3))
    ref = pref * math.sin(phase)
    assert abs(total - ref) < 0.2 * abs(pref)


def test_bulk_experiment_r1_and_r2():
    # r=1: near-quantitative agreement at the oscillation sweet spots;
    # the wiggle envelope stays below 0.04 on the half-integer grid
    for ydx, tol in ((0.25, 0.02), (1.0, 0.02), (1.5, 0.02), (0.75, 0.05), (2.0, 0.05)):
        prod, ref = he.bulk_experiment(1, 95.0, 0.0, ydx)
        assert abs(prod - ref) < tol
    # r=2: the product reaches (near) zero at y ~ 1.3 instead of 1.0
    vals = {y: he.bulk_experiment(2, 95.0, 0.0, y)[0] for y in (1.0, 1.1, 1.2, 1.3, 1.4)}
    assert min(vals, key=vals.get) == pytest.approx(1.3)
    assert vals[1.3] < 0.1 * vals[1.0]


def test_bulk_x_equals_y():
    prod, ref = he.bulk_experiment(2, 95.0, 0.7, 0.7)
    assert ref == 1.0
    assert prod > 0
