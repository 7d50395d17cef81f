"""Special-function kernel tests against independent oracles."""

import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.special

from wpl import specfun as sf
from wpl.errors import (
    ContourViolation,
    DivergentSeries,
    InternalImaginaryResidue,
    LowerParamPole,
    NonConvergent,
    PoleError,
)


# --- oracles -------------------------------------------------------------


def bessel_series(nu: int, x: float, terms: int = 120) -> float:
    """J_nu(x) summed directly to machine precision."""
    total = 0.0
    for k in range(terms):
        total += (-1.0) ** k * (x / 2.0) ** (nu + 2 * k) / (
            math.factorial(k) * math.gamma(nu + k + 1.0)
        )
    return total


def residue_series_0f2(x: float, terms: int = 60) -> float:
    """0F2(; 1, 1; -x) by direct summation (the G^{1,0}_{0,3} residue series)."""
    total = 0.0
    term = 1.0
    for k in range(terms):
        total += term
        term *= -x / float(k + 1) ** 3
    return total


def pochhammer_sum(upper, lower, x: Fraction, n_terms: int) -> Fraction:
    """Brute-force rational partial sum of pFq."""
    total = Fraction(0)
    for k in range(n_terms):
        num = Fraction(1)
        for a in upper:
            for i in range(k):
                num *= Fraction(a) + i
        den = Fraction(math.factorial(k))
        for b in lower:
            for i in range(k):
                den *= Fraction(b) + i
        total += num / den * x**k
    return total


# --- ln_gamma ------------------------------------------------------------


def test_ln_gamma_known_values():
    assert sf.ln_gamma(1.0) == pytest.approx(0.0, abs=1e-14)
    assert sf.ln_gamma(5.0).real == pytest.approx(math.log(24.0), rel=1e-14)
    assert sf.ln_gamma(0.5).real == pytest.approx(0.5 * math.log(math.pi), rel=1e-13)


def test_ln_gamma_recurrence_random_grid():
    rng = np.random.default_rng(0)
    z = rng.uniform(-30, 30, 3000) + 1j * rng.uniform(-40, 40, 3000)
    z = z[np.abs(z.imag) > 1e-6]
    lhs = sf.ln_gamma(z + 1)
    rhs = sf.ln_gamma(z) + np.log(z)
    rel = np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))
    assert np.max(rel) < 1e-13


def test_ln_gamma_matches_scipy_off_axis():
    rng = np.random.default_rng(1)
    z = rng.uniform(-50, 50, 500) + 1j * rng.uniform(0.05, 80, 500)
    mine = sf.ln_gamma(z)
    ref = scipy.special.loggamma(z)
    assert np.max(np.abs(mine - ref) / np.maximum(1.0, np.abs(ref))) < 1e-13


def test_ln_gamma_large_modulus():
    for z in (1e4, 1e4 + 1e3j, -9500.5 + 300j):
        mine = sf.ln_gamma(z)
        ref = scipy.special.loggamma(z)
        assert abs(mine - ref) / abs(ref) < 1e-13


def test_ln_gamma_pole():
    with pytest.raises(PoleError):
        sf.ln_gamma(0.0)
    with pytest.raises(PoleError):
        sf.ln_gamma(-3.0)


# --- pfq -----------------------------------------------------------------


def test_pfq_exponential():
    p = sf.HypSeriesParams.of((), ())
    assert sf.pfq(p, 1.0) == pytest.approx(math.e, rel=1e-14)


def test_pfq_terminating_1f1():
    p = sf.HypSeriesParams.of((-2.0,), (1.0,))
    assert p.terminating_at == 2
    assert sf.pfq(p, 1.0) == pytest.approx(-0.5, abs=1e-15)


def test_pfq_0f1_is_bessel():
    p = sf.HypSeriesParams.of((), (1.0,))
    assert sf.pfq(p, -1.0) == pytest.approx(bessel_series(0, 2.0), rel=1e-13)


def test_pfq_terminating_matches_rational_brute_force():
    upper, lower = (-4.0, 2.5), (1.0, 3.0)
    p = sf.HypSeriesParams.of(upper, lower)
    mine = sf.pfq(p, 0.7)
    oracle = pochhammer_sum((Fraction(-4), Fraction(5, 2)), (Fraction(1), Fraction(3)), Fraction(7, 10), 5)
    assert mine == pytest.approx(float(oracle), rel=1e-13)


def test_pfq_divergent_guards():
    with pytest.raises(DivergentSeries):
        sf.pfq(sf.HypSeriesParams.of((1.0, 2.0, 3.0), (1.5,)), 0.5)
    with pytest.raises(DivergentSeries):
        sf.pfq(sf.HypSeriesParams.of((1.0, 2.0), (3.0,)), 1.0)
    # terminating at the same orders is fine
    assert np.isfinite(sf.pfq(sf.HypSeriesParams.of((-3.0, 2.0), (3.0,)), 1.0))


def test_pfq_lower_param_pole():
    with pytest.raises(LowerParamPole):
        sf.HypSeriesParams.of((0.5,), (-2.0,))
    # pole beyond the termination order is harmless
    p = sf.HypSeriesParams.of((-2.0,), (-3.0,))
    assert np.isfinite(sf.pfq(p, 1.0))


def test_pfq_vectorized():
    p = sf.HypSeriesParams.of((), ())
    xs = np.array([0.0, 1.0, 2.0])
    assert np.allclose(sf.pfq(p, xs), np.exp(xs), rtol=1e-13)


# --- meijer_g ------------------------------------------------------------


def _spec_contour(m, n, p, q, a, b, **kw):
    spec = sf.MeijerSpec(m, n, p, q, tuple(a), tuple(b))
    return spec, sf.ContourSpec.auto(spec, **kw)


def test_meijer_exponential_identity():
    spec, ct = _spec_contour(1, 0, 0, 1, (), (0.0,))
    for x in (0.2, 1.0, 3.0):
        assert sf.meijer_g(spec, ct, x) == pytest.approx(math.exp(-x), rel=1e-11)


def test_meijer_g10_02_is_bessel_j0():
    spec, ct = _spec_contour(1, 0, 0, 2, (), (0.0, 0.0))
    assert sf.meijer_g(spec, ct, 1.0) == pytest.approx(bessel_series(0, 2.0), rel=1e-12)


def test_meijer_g10_03_residue_series_oracle():
    spec, ct = _spec_contour(1, 0, 0, 3, (), (0.0, 0.0, 0.0))
    for x in (1.0, 5.0):
        assert sf.meijer_g(spec, ct, x) == pytest.approx(residue_series_0f2(x), rel=1e-12)


def test_meijer_reduction_identity_vs_pfq():
    # G^{1,0}_{0,r+1}(x | -nu_0..-nu_r) * prod Gamma(1+nu_j) = 0F_r(; 1+nu; -x)
    for nus in ((0,), (1,), (0, 0), (0, 2), (1, 0, 2)):
        r = len(nus)
        b = (0.0,) + tuple(-float(v) for v in nus)
        spec, ct = _spec_contour(1, 0, 0, r + 1, (), b)
        pref = 1.0
        for v in nus:
            pref *= math.gamma(1.0 + v)
        series = sf.pfq(sf.HypSeriesParams.of((), tuple(1.0 + v for v in nus)), -1.3)
        assert sf.meijer_g(spec, ct, 1.3) * pref == pytest.approx(series, rel=1e-12)


def test_meijer_contour_independence():
    # two valid contours with different abscissa/height/order agree
    spec = sf.MeijerSpec(2, 0, 0, 3, (), (0.0, 0.0, 0.0))
    c1 = sf.ContourSpec(abscissa=-0.5, half_height=25.0, nodes=24)
    c2 = sf.ContourSpec(abscissa=-1.25, half_height=40.0, nodes=40)
    for x in (0.5, 2.0, 10.0):
        a = sf.meijer_g(spec, c1, x)
        b = sf.meijer_g(spec, c2, x)
        assert a == pytest.approx(b, rel=1e-10)
    # a Q-type spec used downstream: G^{2,1}_{2,2}
    spec_q = sf.MeijerSpec(2, 1, 2, 2, (-5.0, -2.0), (0.0, 1.0))
    c1 = sf.ContourSpec.auto(spec_q)
    c2 = sf.ContourSpec(abscissa=-0.8, half_height=30.0, nodes=32)
    for x in (0.5, 3.0):
        assert sf.meijer_g(spec_q, c1, x) == pytest.approx(sf.meijer_g(spec_q, c2, x), rel=1e-10)


def test_meijer_trapezoid_rule_agrees():
    spec = sf.MeijerSpec(2, 0, 0, 3, (), (0.0, 1.0, 0.0))
    gl = sf.ContourSpec.auto(spec)
    tz = sf.ContourSpec(abscissa=-0.5, half_height=28.0, nodes=40, rule="trapezoid")
    for x in (0.7, 3.0):
        assert sf.meijer_g(spec, tz, x) == pytest.approx(sf.meijer_g(spec, gl, x), rel=1e-9)


def test_meijer_vs_mpmath_oracle():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 30
    # a Q-shaped spec G^{2,1}_{2,2} with generic (non-integer-spaced)
    # parameters, where mpmath's hypergeometric route is itself reliable
    spec = sf.MeijerSpec(2, 1, 2, 2, (-5.5, -2.0), (0.0, 0.6))
    ct = sf.ContourSpec.auto(spec)
    for x in (0.4, 1.0, 7.0):
        ref = float(mpmath.meijerg([[-5.5], [-2.0]], [[0.0, 0.6], []], x))
        assert sf.meijer_g(spec, ct, x) == pytest.approx(ref, rel=1e-11)


def test_meijer_pole_separation_validation():
    with pytest.raises(ContourViolation):
        sf.MeijerSpec(1, 1, 1, 1, (2.0,), (0.0,))  # a - b = 2: overlapping lattices
    spec = sf.MeijerSpec(1, 0, 0, 1, (), (0.0,))
    with pytest.raises(ContourViolation):
        sf.meijer_g(spec, sf.ContourSpec(abscissa=0.5, half_height=10.0), 1.0)


def test_meijer_nonconvergent_spec():
    # m=1, n=0 but p = q: neither quadrature nor entire residue series
    spec = sf.MeijerSpec(1, 0, 1, 1, (3.5,), (0.0,))
    with pytest.raises(NonConvergent):
        sf.meijer_g(spec, sf.ContourSpec.auto(spec), 2.0)


def test_mellin_power_identity_and_derivative():
    spec, ct = _spec_contour(1, 0, 0, 1, (), (0.0,))
    assert sf.meijer_g_mellin_power(spec, ct, 1.0, 0) == pytest.approx(math.exp(-1.0), rel=1e-11)
    # x d/dx e^{-x} = -x e^{-x}
    assert sf.meijer_g_mellin_power(spec, ct, 1.0, 1) == pytest.approx(-math.exp(-1.0), rel=1e-11)


def test_mellin_power_k2_series_oracle():
    spec, ct = _spec_contour(1, 0, 0, 3, (), (0.0, 0.0, 0.0))
    x = 3.0
    oracle = sum(k * k * (-x) ** k / math.factorial(k) ** 3 for k in range(1, 70))
    assert sf.meijer_g_mellin_power(spec, ct, x, 2) == pytest.approx(oracle, rel=1e-11)


def test_mellin_power_k1_finite_difference():
    spec, ct = _spec_contour(2, 0, 0, 3, (), (0.0, 0.0, 0.0))
    for x in (0.7, 4.0):
        h = 1e-5 * x
        fd = x * (sf.meijer_g(spec, ct, x + h) - sf.meijer_g(spec, ct, x - h)) / (2 * h)
        assert sf.meijer_g_mellin_power(spec, ct, x, 1) == pytest.approx(fd, rel=1e-6)


# --- bessel_j ------------------------------------------------------------


def test_bessel_trivial_values():
    assert sf.bessel_j(0.0, 0.0) == pytest.approx(1.0)
    assert sf.bessel_j(1.0, 0.0) == pytest.approx(0.0)
    assert sf.bessel_j(0.0, 2.0) == pytest.approx(bessel_series(0, 2.0), rel=1e-13)


def test_bessel_negative_integer_reflection():
    assert sf.bessel_j(-1.0, 2.3) == pytest.approx(-sf.bessel_j(1.0, 2.3), rel=1e-14)
    assert sf.bessel_j(-2.0, 1.1) == pytest.approx(sf.bessel_j(2.0, 1.1), rel=1e-14)


def test_bessel_vs_scipy():
    xs = np.linspace(0.0, 25.0, 40)
    for nu in (0, 1, 2, 3):
        assert np.allclose(sf.bessel_j(float(nu), xs), scipy.special.jv(nu, xs), atol=1e-10)


# --- leading asymptotics (r = 2) ------------------------------------------


def test_asymp_g10_paper_substitution():
    # at u = 1000: (1/(pi sqrt(3) 10)) e^{30 cos(pi/3)} cos(30 sin(pi/3) - pi/3)
    expected = (
        math.exp(30.0 * math.cos(math.pi / 3.0))
        * math.cos(30.0 * math.sin(math.pi / 3.0) - math.pi / 3.0)
        / (math.pi * math.sqrt(3.0) * 10.0)
    )
    assert sf.asymp_g10_r2(1000.0) == pytest.approx(expected, rel=1e-14)


def test_asymp_ratio_against_exact():
    spec, ct = _spec_contour(1, 0, 0, 3, (), (0.0, 0.0, 0.0))
    exact = sf.meijer_g(spec, ct, 500.0)
    assert abs(exact / sf.asymp_g10_r2(500.0) - 1.0) < 0.1


def test_asymp_g20_envelope():
    # conjectural: sign and envelope within 15% at u = 500
    spec, ct = _spec_contour(2, 0, 0, 3, (), (0.0, 0.0, 0.0))
    exact = sf.meijer_g(spec, ct, 500.0)
    approx = sf.asymp_g20_r2(500.0)
    assert math.copysign(1.0, exact) == math.copysign(1.0, approx)
    assert abs(exact / approx - 1.0) < 0.15
