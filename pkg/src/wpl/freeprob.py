"""Global (macroscopic) spectral density machinery.

The ensemble is X†X with X a chain of r complex Gaussian factors times the
inverse of s such factors.  With every Wishart factor G†G divided by N, the
Stieltjes transform G(z) = ∫ rho(y)/(y-z) dy of the limiting density solves

    (1 - w)^{s+1} = zeta * w^{r+1},     w := -z G(z),  zeta := -1/z,

and the density is recovered by Stieltjes inversion.  Special cases carry
closed forms: Marchenko-Pastur (r=1, s=0), the trigonometric parametric
density for general r at s=0, and an explicit algebraic density for r=s.
Moment identities (Fuss-Catalan and the r=s transformed moments) are done
in exact integer/rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, NoPhysicalRoot, PoleAtMinusOne


@dataclass(frozen=True)
class EnsembleParams:
    """(N, r, s, nu_1..nu_r, mu_1..mu_s) specifying the product ensemble.

    nu_j = n_j - N are the rectangular offsets of the direct factors; mu_l
    are the induced determinant exponents of the (square) inverse factors.
    """

    N: int
    r: int
    s: int
    nu: tuple[int, ...] = ()
    mu: tuple[int, ...] = ()

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("N must be a positive integer")
        if self.r < 0 or self.s < 0 or self.r + self.s < 1:
            raise DomainError("need r, s >= 0 with r + s >= 1")
        if len(self.nu) != self.r or len(self.mu) != self.s:
            raise DomainError("len(nu) must equal r and len(mu) must equal s")
        if any(v < 0 for v in self.nu) or any(m < 0 for m in self.mu):
            raise DomainError("nu and mu entries must be nonnegative")


@dataclass(frozen=True)
class StieltjesValue:
    """Point evaluation of the resolvent, with the functional-equation residual."""

    z: complex
    G: complex
    root_index: int
    residual: float


@dataclass(frozen=True)
class ParametricPoint:
    """One point of the s=0 parametric density: phi in (0, pi/(r+1))."""

    phi: float
    x: float
    rho: float


@dataclass(frozen=True)
class MomentSequence:
    r: int
    values: tuple[int, ...]

    def __post_init__(self):
        if self.values and self.values[0] != 1:
            raise DomainError("moment sequence must start at m_0 = 1")

    @classmethod
    def fuss_catalan(cls, r: int, count: int) -> "MomentSequence":
        return cls(r, tuple(fuss_catalan(r, p) for p in range(count)))


def s_transform(r: int, s: int, z: float) -> float:
    """S-transform of the product ensemble: (-z)^s / (1+z)^r."""
    if z == -1.0 and r > 0:
        raise PoleAtMinusOne("S-transform has a pole at z = -1")
    return (-z) ** s / (1.0 + z) ** r


def _poly_coeffs(r: int, s: int, zeta: complex) -> np.ndarray:
    """Coefficients (highest degree first) of (1-w)^{s+1} - zeta*w^{r+1}."""
    deg = max(r, s) + 1
    coeffs = np.zeros(deg + 1, dtype=complex)
    for k in range(s + 2):
        # (1-w)^{s+1} = sum_k C(s+1,k) (-w)^k
        coeffs[deg - k] += math.comb(s + 1, k) * (-1.0) ** k
    coeffs[deg - (r + 1)] -= zeta
    return coeffs


def _track_root(r: int, s: int, zeta_path: np.ndarray, w0: complex) -> complex:
    """Follow the root of (1-w)^{s+1} = zeta w^{r+1} along zeta_path from w0."""
    w = w0
    i = 1
    path = list(zeta_path)
    guard = 0
    while i < len(path):
        zeta = path[i]
        roots = np.roots(_poly_coeffs(r, s, zeta))
        order = np.argsort(np.abs(roots - w))
        nearest, second = roots[order[0]], roots[order[1]] if len(roots) > 1 else None
        if second is not None and abs(second - w) < 2.0 * abs(nearest - w) and guard < 200:
            # ambiguous tracking: refine the step
            path.insert(i, 0.5 * (path[i - 1] + zeta))
            guard += 1
            continue
        w = nearest
        i += 1
    return w


def _newton_polish(r: int, s: int, zeta: complex, w: complex) -> complex:
    for _ in range(4):
        f = (1.0 - w) ** (s + 1) - zeta * w ** (r + 1)
        df = -(s + 1) * (1.0 - w) ** s - zeta * (r + 1) * w**r
        if df == 0:
            break
        w = w - f / df
    return w


def solve_stieltjes(r: int, s: int, z: complex) -> StieltjesValue:
    """Physical root of the functional equation at z (Im z > 0 or z < 0 real).

    The root is selected by homotopy continuation from the |z| -> inf regime
    (where w -> 1) and checked against the Herglotz sign.
    """
    z = complex(z)
    if z.imag < 0:
        raise DomainError("solve_stieltjes requires Im z >= 0")
    if z.imag == 0 and z.real >= 0:
        raise DomainError("on the positive real axis use global_density")

    if z.imag > 0:
        # descend z_h = Re z + i*h from high in the upper half plane; the
        # corresponding zeta = -1/z_h keeps Im zeta > 0, clearing all (real)
        # branch points of the root structure.
        h_hi = 1e7 * max(1.0, abs(z))
        n_steps = 80
        hs = np.geomspace(h_hi, z.imag, n_steps)
        zetas = -1.0 / (z.real + 1j * hs)
        w0 = 1.0 + 0j
        w = _track_root(r, s, zetas, w0)
    else:
        # z real negative: zeta = -1/z > 0; ray from 0+ to zeta.
        zeta_end = -1.0 / z.real
        taus = np.geomspace(1e-9, 1.0, 60)
        zetas = taus * zeta_end
        w0 = 1.0 - zetas[0] ** (1.0 / (s + 1))
        w = complex(_track_root(r, s, zetas + 0j, complex(w0)))

    zeta = -1.0 / z
    w = _newton_polish(r, s, zeta, w)
    G = -w / z
    if z.imag > 0 and G.imag <= -1e-13:
        raise NoPhysicalRoot(f"Herglotz violation: Im G = {G.imag} at z = {z}")
    residual = abs((1.0 - w) ** (s + 1) - zeta * w ** (r + 1))
    roots = sorted(np.roots(_poly_coeffs(r, s, zeta)), key=lambda v: (v.real, v.imag))
    root_index = int(np.argmin([abs(v - w) for v in roots]))
    return StieltjesValue(z=z, G=G, root_index=root_index, residual=residual)


def global_density(r: int, s: int, x: float) -> float:
    """rho(x) by Stieltjes inversion, Richardson-extrapolated in epsilon.

    Im G(x + i*eps)/pi at eps, eps/2, eps/4; the two-stage extrapolation
    removes the O(eps) and O(eps^2) terms.  eps scales with x because the
    density varies on scale x near the hard edge (x^{-r/(r+1)} behaviour).
    """
    if x <= 0:
        raise DomainError("global_density requires x > 0")
    eps = 1e-6 * x
    f = [solve_stieltjes(r, s, complex(x, e)).G.imag / math.pi for e in (eps, eps / 2, eps / 4)]
    a = 2.0 * f[1] - f[0]
    b = 2.0 * f[2] - f[1]
    rho = (4.0 * b - a) / 3.0
    if rho < 0:
        if rho < -1e-9:
            raise NoPhysicalRoot(f"negative density {rho} at x = {x}")
        rho = 0.0
    return rho


def density_rr_closed(r: int, x: float) -> float:
    """Closed-form density for the r = s ensemble on (0, inf)."""
    if x <= 0:
        raise DomainError("density_rr_closed requires x > 0")
    theta = math.pi / (r + 1)
    v = x ** (1.0 / (r + 1))
    return (1.0 / (math.pi * x)) * v * math.sin(theta) / (1.0 + 2.0 * v * math.cos(theta) + v * v)


def density_s0_parametric(r: int, phi: float) -> ParametricPoint:
    """Parametric point (x(phi), rho(phi)) of the s=0 density, 0 < phi < pi/(r+1)."""
    if not (0.0 < phi < math.pi / (r + 1)):
        raise DomainError(f"phi must lie in (0, pi/{r + 1})")
    sin = math.sin
    x = sin((r + 1) * phi) ** (r + 1) / (sin(phi) * sin(r * phi) ** r)
    rho = sin(phi) ** 2 * sin(r * phi) ** (r - 1) / (math.pi * sin((r + 1) * phi) ** r)
    return ParametricPoint(phi=phi, x=x, rho=rho)


def fuss_catalan(r: int, p: int) -> int:
    """Fuss-Catalan number binom(rp+p, p)/(rp+1), exact."""
    if r < 0 or p < 0:
        raise DomainError("fuss_catalan requires r, p >= 0")
    num = math.comb(r * p + p, p)
    den = r * p + 1
    q, rem = divmod(num, den)
    if rem:
        raise DomainError("Fuss-Catalan ratio is not an integer (bad inputs)")
    return q


def fuss_catalan_recurrence_check(r: int, p_max: int) -> bool:
    """m_p = sum over q_1+..+q_{r+1} = p-1 of m_{q_1}...m_{q_{r+1}}, exactly."""
    if p_max < 1:
        raise DomainError("p_max must be >= 1")
    m = [fuss_catalan(r, p) for p in range(p_max + 1)]
    # (r+1)-fold convolution of the sequence with itself
    conv = [1]
    for _ in range(r + 1):
        new = [0] * p_max
        for i, ci in enumerate(conv):
            for j in range(p_max - i):
                new[i + j] += ci * m[j]
        conv = new
    return all(m[p] == conv[p - 1] for p in range(1, p_max + 1))


def _series_inverse(a: list[Fraction], n: int) -> list[Fraction]:
    """First n coefficients of 1/sum a_k t^k (a[0] != 0)."""
    inv = [Fraction(1, 1) / a[0]]
    for k in range(1, n):
        acc = Fraction(0)
        for j in range(1, min(k, len(a) - 1) + 1):
            acc += a[j] * inv[k - j]
        inv.append(-acc / a[0])
    return inv


def moments_rr(r: int, p: int) -> Fraction:
    """p-th moment of the lambda = 1/(1+x) transformed r=s density.

    Equals the coefficient of (1-z)^{p-1} in the expansion about z = 1 of
    (1/z)(1 - 1/(1 + z^{1/(r+1)})), computed in exact rationals.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    n = p  # need coefficients of t^0..t^{p-1} with t = 1 - z
    alpha = Fraction(1, r + 1)
    # z^{1/(r+1)} = (1-t)^{alpha} = sum binom(alpha,k) (-t)^k
    w = []
    binom = Fraction(1)
    for k in range(n + 1):
        w.append(binom * (-1) ** k)
        binom = binom * (alpha - k) / (k + 1)
    a = [Fraction(2)] + [w[k] for k in range(1, n + 1)]  # 1 + z^{1/(r+1)}
    inv = _series_inverse(a, n + 1)
    one_minus = [Fraction(1) - inv[0]] + [-c for c in inv[1:]]
    # 1/z = 1/(1-t) = sum t^k; multiply series
    coeff = Fraction(0)
    for j in range(p):
        coeff += one_minus[j]  # times t^{p-1-j} coefficient 1 of the geometric series
    return coeff


def tail_small_x(r: int, x: float) -> float:
    """Leading x -> 0+ singular form sin(pi/(r+1)) / (pi x^{r/(r+1)})."""
    if x <= 0:
        raise DomainError("tail_small_x requires x > 0")
    return math.sin(math.pi / (r + 1)) / (math.pi * x ** (r / (r + 1)))
