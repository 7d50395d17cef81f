"""Monte Carlo engine tests."""

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special
import scipy.stats

from wpl import freeprob as fp
from wpl import sampler as sp
from wpl.errors import AlreadyScaled, DomainError, EmptySample
from wpl.freeprob import EnsembleParams
from wpl.sampler import RngStream, Scaling


def test_ginibre_moments_and_independence():
    g = RngStream(12).generator()
    m = sp._ginibre(g, 1000, 1000)
    assert np.mean(np.abs(m) ** 2) == pytest.approx(1.0, abs=0.004)
    assert np.mean(m.real * m.imag) == pytest.approx(0.0, abs=0.004)


def test_ginibre_determinism_and_stream_independence():
    a = sp.sample_ginibre(5, 3, RngStream(7, 2))
    b = sp.sample_ginibre(5, 3, RngStream(7, 2))
    c = sp.sample_ginibre(5, 3, RngStream(7, 3))
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_induced_square_matches_plain_at_n_equals_N():
    # exponent 0: singular values must match plain Ginibre singular values
    N, draws = 8, 1500
    gen = RngStream(21).generator()
    induced = sp._induced_square_batch(gen, draws, N, N)
    plain = sp._ginibre(RngStream(22).generator(), draws, N, N)
    s_ind = np.linalg.svd(induced, compute_uv=False)[:, 0]
    s_pln = np.linalg.svd(plain, compute_uv=False)[:, 0]
    assert scipy.stats.ks_2samp(s_ind, s_pln).pvalue > 0.01


def test_induced_square_trace_mean():
    # E Tr M†M = E Tr H†H = n N
    n, N, draws = 6, 4, 60_000
    gen = RngStream(31).generator()
    m = sp._induced_square_batch(gen, draws, n, N)
    traces = np.einsum("bij,bij->b", m, np.conj(m)).real
    mean = traces.mean()
    sigma = traces.std(ddof=1) / math.sqrt(draws)
    assert abs(mean - n * N) < 3.0 * sigma


def test_induced_square_scalar_is_gamma():
    # N=1: |m|^2 ~ Gamma(n, 1)
    n, draws = 5, 100_000
    gen = RngStream(41).generator()
    m = sp._induced_square_batch(gen, draws, n, 1)
    vals = np.abs(m[:, 0, 0]) ** 2
    ecdf = sp.empirical_cdf(vals)
    ks = sp.sup_distance(ecdf, lambda t: scipy.special.gammainc(n, np.asarray(t)))
    assert ks < 0.02


def test_product_spectrum_psd_and_sorted():
    params = EnsembleParams(N=20, r=2, s=1, nu=(0, 1), mu=(0,))
    smp = sp.sample_product_spectrum(params, RngStream(5))
    eig = smp.eigenvalues
    assert np.all(np.diff(eig) >= 0)
    assert eig[0] >= -1e-10 * eig[-1]
    assert smp.scaling is Scaling.RAW


def test_product_spectrum_determinism():
    params = EnsembleParams(N=10, r=1, s=1, nu=(0,), mu=(1,))
    a = sp.sample_product_spectrum(params, RngStream(9, 1))
    b = sp.sample_product_spectrum(params, RngStream(9, 1))
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_mp_spectrum_ks():
    params = EnsembleParams(N=200, r=1, s=0, nu=(0,))
    samples = sp.sample_spectra(params, 40, RngStream(3), scaling=Scaling.GLOBAL)
    eig = np.concatenate([s.eigenvalues for s in samples])

    def mp(y):
        y = np.asarray(y)
        out = np.zeros_like(y)
        m = (y > 0) & (y < 4)
        out[m] = np.sqrt(y[m] * (4 - y[m])) / (2 * np.pi * y[m])
        return out

    cdf = sp.CdfFromDensity(mp, 0.0, 4.0)
    assert sp.sup_distance(sp.empirical_cdf(eig), cdf) < 0.03


def test_scalar_product_moments():
    # N=1, r=2, s=0: eigenvalue |g2|^2 |g1|^2, mean 1, second moment 4
    params = EnsembleParams(N=1, r=2, s=0, nu=(0, 0))
    vals = np.array(
        [sp.sample_product_spectrum(params, RngStream(1).substream(i)).eigenvalues[0] for i in range(40_000)]
    )
    m1, m2 = vals.mean(), (vals**2).mean()
    s1 = vals.std(ddof=1) / math.sqrt(len(vals))
    s2 = (vals**2).std(ddof=1) / math.sqrt(len(vals))
    assert abs(m1 - 1.0) < 3 * s1
    assert abs(m2 - 4.0) < 3 * s2


def test_rescale_exponents():
    params = EnsembleParams(N=100, r=1, s=0, nu=(0,))
    smp = sp.SpectrumSample(params, np.array([400.0]), Scaling.RAW)
    assert sp.rescale(smp, Scaling.GLOBAL).eigenvalues[0] == pytest.approx(4.0)
    params11 = EnsembleParams(N=100, r=1, s=1, nu=(0,), mu=(0,))
    smp11 = sp.SpectrumSample(params11, np.array([2.0]), Scaling.RAW)
    assert sp.rescale(smp11, Scaling.GLOBAL).eigenvalues[0] == pytest.approx(2.0)
    params20 = EnsembleParams(N=50, r=2, s=0, nu=(0, 0))
    smp20 = sp.SpectrumSample(params20, np.array([2500.0]), Scaling.RAW)
    assert sp.rescale(smp20, Scaling.GLOBAL).eigenvalues[0] == pytest.approx(1.0)
    with pytest.raises(AlreadyScaled):
        sp.rescale(sp.rescale(smp20, Scaling.GLOBAL), Scaling.HARD_EDGE)


def test_mc_charpoly_scalar_cases():
    # N=1, r=1, s=0: <det(lam - |g|^2)> = lam - 1
    p10 = EnsembleParams(N=1, r=1, s=0, nu=(0,))
    mean, err = sp.mc_charpoly(p10, 2.0, 40_000, RngStream(11))
    assert abs(mean - 1.0) < 3 * err
    # N=1, r=1, s=1: exact lam - 1 as well
    p11 = EnsembleParams(N=1, r=1, s=1, nu=(0,), mu=(0,))
    mean, err = sp.mc_charpoly(p11, 2.0, 40_000, RngStream(12))
    assert abs(mean - 1.0) < 3 * err
    with pytest.raises(DomainError):
        sp.mc_charpoly(p11, 2.0, 50, RngStream(1))


def test_mc_charpoly_worker_invariance():
    p = EnsembleParams(N=2, r=1, s=1, nu=(0,), mu=(0,))
    m1, e1 = sp.mc_charpoly(p, 1.5, 5000, RngStream(77), workers=1)
    m2, e2 = sp.mc_charpoly(p, 1.5, 5000, RngStream(77), workers=4)
    assert m1 == m2 and e1 == e2


def test_cauchy_triple_scalar_oracle():
    # N=1, a=b=0: mean of s3 s2/(s1+s2) against 2D quadrature of the density
    vals = np.array([sp.sample_cauchy_triple(1, 0, 0, RngStream(2).substream(i))[0] for i in range(30_000)])
    oracle, _ = scipy.integrate.dblquad(
        lambda s2, s1: s2 / (s1 + s2) * math.exp(-s1 - s2), 0, 30, 0, 30
    )
    # E[s3] = 1 multiplies the quadrature value
    mean = vals.mean()
    sig = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(mean - oracle) < 3 * sig


def test_cauchy_triple_seed_exchangeability():
    # permuting the G1 seed leaves the law unchanged: largest eigenvalues
    a = [sp.sample_cauchy_triple(6, 0, 0, RngStream(100).substream(i))[-1] for i in range(1500)]
    b = [sp.sample_cauchy_triple(6, 0, 0, RngStream(200).substream(i))[-1] for i in range(1500)]
    assert scipy.stats.ks_2samp(a, b).pvalue > 0.01


def test_square_factor_reordering_invariance():
    # N x N induced factors commute in law under reordering
    params = EnsembleParams(N=20, r=2, s=0, nu=(0, 2))
    a, b = [], []
    for i in range(2500):
        a.append(
            sp.sample_product_spectrum(
                params, RngStream(300).substream(i), square_induced=True, direct_order=(0, 1)
            ).eigenvalues[-1]
        )
        b.append(
            sp.sample_product_spectrum(
                params, RngStream(301).substream(i), square_induced=True, direct_order=(1, 0)
            ).eigenvalues[-1]
        )
    assert scipy.stats.ks_2samp(a, b).pvalue > 0.01


def test_matrix_f_jacobi_limit():
    # (XG4): lambda = 1/(1+y) empirical law approaches arcsine, alpha-independent
    arcsine = lambda t: (2 / np.pi) * np.arcsin(np.sqrt(np.clip(t, 0, 1)))
    for alpha, seed in ((0, 61), (2, 62)):
        N, M = 100, 100 + alpha
        eig = np.concatenate([sp.sample_matrix_f(N, M, RngStream(seed).substream(i)) for i in range(40)])
        lam = 1.0 / (1.0 + eig)
        assert sp.sup_distance(sp.empirical_cdf(lam), arcsine) < 0.03


def test_empirical_cdf_and_sup_distance():
    e = sp.empirical_cdf([1.0, 2.0, 3.0])
    assert e(2.5) == pytest.approx(2.0 / 3.0)
    with pytest.raises(EmptySample):
        sp.empirical_cdf([])
    g = RngStream(8).generator()
    u = g.uniform(0, 1, 100_000)
    assert sp.sup_distance(sp.empirical_cdf(u), lambda t: np.clip(t, 0, 1)) < 0.01


def test_sup_distance_detects_wrong_density():
    # MP-distributed data against the arcsine CDF is far off
    params = EnsembleParams(N=100, r=1, s=0, nu=(0,))
    samples = sp.sample_spectra(params, 20, RngStream(71), scaling=Scaling.GLOBAL)
    lam = 1.0 / (1.0 + np.concatenate([s.eigenvalues for s in samples]))
    arcsine = lambda t: (2 / np.pi) * np.arcsin(np.sqrt(np.clip(t, 0, 1)))
    assert sp.sup_distance(sp.empirical_cdf(lam), arcsine) > 0.2
