"""Hard-edge scaled kernel and its asymptotics.

K_hard^r(x, y) = ∫_0^1 G^{1,0}_{0,r+1}(ux | -ν_0..-ν_r) G^{r,0}_{0,r+1}(uy | ν_1..ν_r, ν_0) du

with ν_0 := 0.  The first factor reduces to a 0F_r series; the second is a
Mellin-Barnes line integral (r >= 2) or another Bessel-type series (r = 1).
Alongside the integral form: the generalized Christoffel-Darboux form (all
ν = 0), the scaled characteristic-polynomial limit, and the tail/bulk
comparison experiments, which report diagnostics rather than gate anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import QUAD_TOL_DEFAULT
from .errors import CoincidentPoints, DomainError, UnsupportedR
from .specfun import ContourSpec, HypSeriesParams, MeijerSpec, bessel_j, pfq


@dataclass(frozen=True)
class HardEdgeParams:
    r: int
    nu: tuple[int, ...]

    def __post_init__(self):
        if self.r < 1:
            raise DomainError("hard edge requires r >= 1")
        if len(self.nu) != self.r or any(v < 0 for v in self.nu):
            raise DomainError("nu must have length r with nonnegative entries")


class HardKernelEval(NamedTuple):
    x: float
    y: float
    value: float
    method: str


def _g10_series(params: HardEdgeParams, w: np.ndarray, power: int = 0) -> np.ndarray:
    """G^{1,0}_{0,r+1}(w | -ν_0,..,-ν_r) = 0F_r(; 1+ν; -w)/Π Γ(1+ν_j),
    with (x d/dx)^power applied termwise.

    For r = 1 the series is bounded-oscillatory (Bessel) and cancels badly
    at large w, so it goes through bessel_j; for r >= 2 the envelope grows
    like e^{(r+1) cos(pi/(r+1)) w^{1/(r+1)}} and the series keeps relative
    precision.
    """
    pref = 1.0
    for v in params.nu:
        pref /= math.gamma(v + 1.0)
    if power == 0 and params.r == 1:
        wv = np.asarray(w, dtype=float)
        nu1 = float(params.nu[0])
        return wv ** (-0.5 * nu1) * bessel_j(nu1, 2.0 * np.sqrt(wv))
    if power == 0:
        series = pfq(HypSeriesParams.of((), tuple(1.0 + v for v in params.nu)), -w)
        return pref * np.asarray(series)
    # termwise: coefficient of w^k gets k^power
    w = np.asarray(w, dtype=float)
    total = np.zeros_like(w)
    term = np.ones_like(w)
    k = 0
    while True:
        if k > 0:
            den = float(k)
            for v in params.nu:
                den *= v + k
            term = term * (-w) / den
            total = total + (k**power) * term
        k += 1
        if k > 8 and np.all(np.abs(term) * k**power <= 1e-17 * np.maximum(np.abs(total), 1.0)):
            return pref * total
        if k > 10_000:
            raise DomainError("series for G^{1,0} did not converge")


def _gr0_spec(params: HardEdgeParams) -> MeijerSpec:
    b = tuple(float(v) for v in params.nu) + (0.0,)
    return MeijerSpec(m=params.r, n=0, p=0, q=params.r + 1, a=(), b=b)


def _gr0_values(params: HardEdgeParams, w: np.ndarray, power: int = 0, tol: float = QUAD_TOL_DEFAULT) -> np.ndarray:
    """G^{r,0}_{0,r+1}(w | ν_1..ν_r, ν_0), vectorized, with Δ^power."""
    if params.r == 1:
        nu1 = params.nu[0]
        if power == 0:
            wv = np.asarray(w, dtype=float)
            return wv ** (0.5 * nu1) * bessel_j(float(nu1), 2.0 * np.sqrt(wv))
        # termwise derivative of sum_k (-1)^k w^{nu1+k} / (k! Γ(nu1+k+1))
        wv = np.asarray(w, dtype=float)
        total = np.zeros_like(wv)
        term = wv**nu1 / math.gamma(nu1 + 1.0)
        k = 0
        while True:
            total = total + (nu1 + k) ** power * term
            k += 1
            term = term * (-wv) / (k * (nu1 + k))
            if k > 8 and np.all(np.abs(term) * (nu1 + k) ** power <= 1e-17 * np.maximum(np.abs(total), 1e-10)):
                return total
            if k > 10_000:
                raise DomainError("series for G^{1,0}_{0,2} did not converge")
    spec = _gr0_spec(params)
    contour = ContourSpec.auto(spec, tol=tol)
    from .specfun import _meijer_eval  # vectorized core

    return np.asarray(_meijer_eval(spec, contour, w, power))


def _u_grid(x: float, y: float, r: int):
    """Nodes/weights for ∫_0^1 du with u = e^{-t}: resolves the log endpoint."""
    t_max = 42.0
    phase = 3.0 * ((max(x, y)) ** (1.0 / (r + 1))) + 8.0  # oscillation budget
    n_panels = max(24, int(t_max * 1.2), int(2.0 * phase))
    edges = np.linspace(0.0, t_max, n_panels + 1)
    xg, wg = np.polynomial.legendre.leggauss(12)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    t = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    wt = (half[:, None] * wg[None, :]).ravel()
    u = np.exp(-t)
    return u, wt * u  # du = e^{-t} dt


def k_hard(params: HardEdgeParams, x: float, y: float, tol: float = QUAD_TOL_DEFAULT) -> HardKernelEval:
    """Hard-edge kernel by the u-integral (independent of s and of mu)."""
    if x <= 0 or y <= 0:
        raise DomainError("k_hard requires x, y > 0")
    u, w = _u_grid(x, y, params.r)
    f = _g10_series(params, u * x)
    g = _gr0_values(params, u * y, tol=tol)
    return HardKernelEval(x=x, y=y, value=float(w @ (f * g)), method="integral")


def k_hard_diag(params: HardEdgeParams, xs: np.ndarray, tol: float = QUAD_TOL_DEFAULT) -> np.ndarray:
    """K_hard(x, x) on a grid of points."""
    xs = np.asarray(xs, dtype=float)
    out = np.empty_like(xs)
    for i, x in enumerate(xs):
        out[i] = k_hard(params, float(x), float(x), tol=tol).value
    return out


def bessel_density(a: int, x) -> np.ndarray:
    """Hard-edge density of the classical ensemble:
    J_a(2√x)^2 - J_{a+1}(2√x) J_{a-1}(2√x)."""
    z = 2.0 * np.sqrt(np.asarray(x, dtype=float))
    return bessel_j(float(a), z) ** 2 - bessel_j(float(a + 1), z) * bessel_j(float(a - 1), z)


def k_hard_cd(params: HardEdgeParams, x: float, y: float, tol: float = QUAD_TOL_DEFAULT) -> HardKernelEval:
    """Generalized Christoffel-Darboux form (all ν_j = 0):

    K = (-1)^{r+1} Σ_{j=0}^r (-1)^j Δ_x^j f(x) Δ_y^{r-j} g(y) / (x - y),

    f = G^{1,0}, g = G^{r,0}, Δ = x d/dx."""
    if any(v != 0 for v in params.nu):
        raise DomainError("Christoffel-Darboux form implemented for all nu = 0 only")
    if x <= 0 or y <= 0:
        raise DomainError("k_hard_cd requires x, y > 0")
    if abs(x - y) < 1e-8 * max(x, y):
        raise CoincidentPoints("use the integral form near the diagonal")
    r = params.r
    xa = np.array([x])
    ya = np.array([y])
    total = 0.0
    for j in range(r + 1):
        fj = float(_g10_series(params, xa, power=j)[0])
        gj = float(_gr0_values(params, ya, power=r - j, tol=tol)[0])
        total += (-1.0) ** j * fj * gj
    value = (-1.0) ** (r + 1) * total / (x - y)
    return HardKernelEval(x=x, y=y, value=value, method="christoffel_darboux")


def charpoly_hard_limit(params: HardEdgeParams, lam: float) -> float:
    """Scaled limit of the normalized characteristic polynomial: 0F_r(; ν+1; λ)."""
    return float(pfq(HypSeriesParams.of((), tuple(1.0 + v for v in params.nu)), lam))


def charpoly_limit_convergence(r: int, s: int, nu: tuple[int, ...], mu_of_N, lam: float, Ns) -> list[float]:
    """Normalized finite-N characteristic polynomials approaching the 0F_r limit.

    The eigenvalue-variable orientation: the normalized char poly evaluated
    at -λ/N^{s+1} converges to 0F_r(; ν+1; +λ).  mu_of_N maps N to the mu
    tuple (the limit is independent of it).
    """
    from .finite_kernel import charpoly_exact
    from .freeprob import EnsembleParams

    out = []
    for N in Ns:
        params = EnsembleParams(N=N, r=r, s=s, nu=nu, mu=mu_of_N(N))
        out.append(charpoly_exact(params, -lam / float(N) ** (s + 1), normalized=True))
    return out


def tail_diagonal(params: HardEdgeParams, x: float) -> float:
    """Conjectured large-x diagonal: sin(pi/(r+1)) / (pi x^{r/(r+1)})."""
    if x <= 0:
        raise DomainError("tail_diagonal requires x > 0")
    return math.sin(math.pi / (params.r + 1)) / (math.pi * x ** (params.r / (params.r + 1)))


def tail_diagonal_report(params: HardEdgeParams, x_lo: float, x_hi: float, n_grid: int = 160) -> dict:
    """Windowed-average comparison of K_hard(x,x) against the conjectured tail.

    Windows span one period of the oscillatory phase
    theta(x) = (r+1) x^{1/(r+1)} sin(pi/(r+1)); if the range holds less than
    one full period the whole range is averaged.  Returns the mean ratio,
    oscillation amplitude, and the window actually used.
    """
    r = params.r
    beta = math.sin(math.pi / (r + 1))

    def phase(x):
        return (r + 1) * x ** (1.0 / (r + 1)) * beta

    lo = x_lo
    hi = x_hi if phase(x_hi) - phase(x_lo) <= 2.0 * math.pi else _phase_step(phase, x_lo)
    xs = np.linspace(lo, hi, n_grid)
    ratio = k_hard_diag(params, xs) / np.array([tail_diagonal(params, float(x)) for x in xs])
    return {
        "window": (lo, hi),
        "mean_ratio": float(np.trapezoid(ratio, xs) / (hi - lo)),
        "osc_amplitude": float(0.5 * (ratio.max() - ratio.min())),
        "full_period": phase(x_hi) - phase(x_lo) > 2.0 * math.pi,
    }


def _phase_step(phase, x_lo: float) -> float:
    target = phase(x_lo) + 2.0 * math.pi
    lo, hi = x_lo, 10.0 * x_lo
    while phase(hi) < target:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if phase(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rho2_truncated_tail(r: int, x: float, y: float) -> float:
    """Leading non-oscillatory truncated two-point tail (r = 1 and r = 2)."""
    if x <= 0 or y <= 0 or x == y:
        raise DomainError("need distinct positive x, y")
    if r == 1:
        return -(x + y) / (4.0 * math.pi**2 * math.sqrt(x * y) * (x - y) ** 2)
    if r == 2:
        return -(1.0 + (y / x) ** (1.0 / 3.0) + (x / y) ** (1.0 / 3.0)) / (6.0 * math.pi**2 * (x - y) ** 2)
    raise UnsupportedR("truncated tail implemented for r in {1, 2}")


def _phase_uniform_window(r: int, x0: float, n: int) -> np.ndarray:
    """n points with theta(x) = (r+1) x^{1/(r+1)} sin(pi/(r+1)) advancing
    uniformly over one full period from x0 (closed-form inversion)."""
    beta = math.sin(math.pi / (r + 1))
    theta0 = (r + 1) * x0 ** (1.0 / (r + 1)) * beta
    thetas = theta0 + 2.0 * math.pi * np.arange(n) / n
    return (thetas / ((r + 1) * beta)) ** (r + 1)


def rho2_tail_report(r: int, x: float, y: float, n_phase: int = 9) -> dict:
    """Compare -K(x,y)K(y,x) to the truncated tail with oscillation averaging.

    The product carries the phases theta(x) +- theta(y); both average out
    only when x and y move through full periods independently, so the
    window is a phase-uniform torus grid in (theta(x'), theta(y')).  The
    y-window is placed just beyond the end of the x-window (one full
    period each, disjoint) because the truncated-tail form breaks down
    near coincidence.  Each sample is normalized by the formula at its own
    (x', y'); the envelope drifts over the window.
    """
    if x >= y:
        x, y = y, x
    params = HardEdgeParams(r=r, nu=(0,) * r)
    xs = _phase_uniform_window(r, x, n_phase)
    beta = math.sin(math.pi / (r + 1))
    theta_x0 = (r + 1) * x ** (1.0 / (r + 1)) * beta
    x_end = ((theta_x0 + 2.0 * math.pi) / ((r + 1) * beta)) ** (r + 1)
    y0 = max(y, 1.05 * x_end)
    ys = _phase_uniform_window(r, y0, n_phase)
    ratios = []
    for xv in xs:
        for yv in ys:
            prod = -k_hard(params, float(xv), float(yv)).value * k_hard(params, float(yv), float(xv)).value
            ratios.append(prod / rho2_truncated_tail(r, float(xv), float(yv)))
    ratio = float(np.mean(ratios))
    return {
        "windows": ((float(xs[0]), float(xs[-1])), (float(ys[0]), float(ys[-1]))),
        "kept": len(ratios),
        "reference": rho2_truncated_tail(r, x, y),
        "ratio": ratio,
    }


def gauge_h(x: float) -> float:
    """Gauge factor e^{3 x^{1/3} cos(pi/3)} = e^{1.5 x^{1/3}} (cancels in determinants)."""
    if x <= 0:
        raise DomainError("gauge_h requires x > 0")
    return math.exp(1.5 * x ** (1.0 / 3.0))


def bulk_experiment(r: int, c: float, x: float, y: float) -> tuple[float, float]:
    """Gauge-free bulk comparison (exploratory; the r >= 2 case is conjectural).

    Returns (scaled K(X,Y) K(Y,X) product, sine-kernel reference) where
    X = c + pi x c^{r/(r+1)}/sin(pi/(r+1)) and the scale is the prefactor
    of the x-variable change.
    """
    params = HardEdgeParams(r=r, nu=(0,) * r)
    scale = math.pi * c ** (r / (r + 1.0)) / math.sin(math.pi / (r + 1))
    X = c + x * scale
    Y = c + y * scale
    if x == y:
        kxx = k_hard(params, X, X).value
        return (scale * kxx) ** 2, 1.0
    prod = scale**2 * k_hard(params, X, Y).value * k_hard(params, Y, X).value
    t = math.pi * (x - y)
    return prod, (math.sin(t) / t) ** 2
