"""Monte Carlo engine for the product ensemble.

Draws the Gaussian factor chains, forms X = G_r...G_1 (Gt_s...Gt_1)^{-1},
extracts eigenvalues of X†X, estimates densities and moments, and provides
the determinant oracle for the generalized characteristic polynomial.

Randomness is counter-based (Philox) and keyed by (seed, stream_id): the
same key reproduces bit-identical draws on any platform, and distinct
stream ids are independent.  Monte Carlo loops are chunked with a fixed
chunk size, one stream per chunk, so results do not depend on the worker
count.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .config import effective_workers
from .errors import AlreadyScaled, DomainError, EmptySample, NumericalSingularity
from .freeprob import EnsembleParams

_CHUNK = 1024
_COND_SWITCH = 1e12
_RESAMPLE_CAP = 10


class Scaling(enum.Enum):
    RAW = "raw"
    GLOBAL = "global"
    HARD_EDGE = "hard_edge"


@dataclass(frozen=True)
class RngStream:
    """Keyed Philox stream: identical (seed, stream_id) replay bit-identically."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.seed & 0xFFFFFFFFFFFFFFFF) | ((self.stream_id & 0xFFFFFFFFFFFFFFFF) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, k: int) -> "RngStream":
        mixed = (self.stream_id * 0x9E3779B97F4A7C15 + k + 1) & 0xFFFFFFFFFFFFFFFF
        return RngStream(self.seed, mixed)


@dataclass(frozen=True)
class SpectrumSample:
    params: EnsembleParams
    eigenvalues: np.ndarray  # sorted ascending, nonnegative
    scaling: Scaling


def sample_ginibre(rows: int, cols: int, rng: RngStream) -> np.ndarray:
    """rows x cols matrix of i.i.d. standard complex Gaussians (E|z|^2 = 1)."""
    if rows < 1 or cols < 1:
        raise DomainError("matrix dimensions must be positive")
    return _ginibre(rng.generator(), rows, cols)


def _ginibre(gen: np.random.Generator, *shape: int) -> np.ndarray:
    re = gen.standard_normal(shape)
    im = gen.standard_normal(shape)
    return (re + 1j * im) / math.sqrt(2.0)


def _haar_unitary(gen: np.random.Generator, batch: int, n: int) -> np.ndarray:
    g = _ginibre(gen, batch, n, n)
    q, r = np.linalg.qr(g)
    d = np.einsum("...ii->...i", r)
    phase = d / np.abs(d)
    return q * phase[:, None, :]


def _psd_sqrt(mats: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mats)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _induced_square_batch(gen: np.random.Generator, batch: int, n: int, N: int) -> np.ndarray:
    """batch of N x N draws with density ∝ (det M†M)^{n-N} e^{-Tr M†M}."""
    h = _ginibre(gen, batch, n, N)
    s = np.conj(np.swapaxes(h, -1, -2)) @ h
    root = _psd_sqrt(s)
    u = _haar_unitary(gen, batch, N)
    return root @ u


def sample_induced_square(n: int, N: int, rng: RngStream) -> np.ndarray:
    """One N x N draw of the induced measure (det M†M)^{n-N} e^{-Tr M†M}."""
    if n < N:
        raise DomainError("need n >= N for the induced construction")
    return _induced_square_batch(rng.generator(), 1, n, N)[0]


def _draw_inverse_chain(gen: np.random.Generator, params: EnsembleParams) -> np.ndarray | None:
    """Product Gt_s ... Gt_1 of square induced factors, or None for s = 0."""
    if params.s == 0:
        return None
    B = None
    for mu in params.mu:
        g = _induced_square_batch(gen, 1, params.N + mu, params.N)[0]
        B = g if B is None else g @ B
    return B


def _draw_direct_chain(gen: np.random.Generator, params: EnsembleParams) -> np.ndarray:
    """Rectangular chain G_r ... G_1 with G_k of shape (N + nu_k) x n_{k-1}."""
    A = np.eye(params.N, dtype=complex)
    dim = params.N
    for nu in params.nu:
        g = _ginibre(gen, params.N + nu, dim)
        A = g @ A
        dim = params.N + nu
    return A


def sample_product_spectrum(
    params: EnsembleParams,
    rng: RngStream,
    square_induced: bool = False,
    direct_order: tuple[int, ...] | None = None,
) -> SpectrumSample:
    """Eigenvalues of X†X for one draw of the factor chain (raw scaling).

    Direct factors are rectangular (N+nu_j) x (previous dim) Ginibre draws
    unless square_induced is set, in which case they are N x N induced
    draws (same eigenvalue law).  Inverse factors are always square induced
    draws with exponents mu_l.  direct_order permutes the order in which
    the square direct factors are multiplied (only with square_induced).
    """
    gen = rng.generator()
    if direct_order is not None and not square_induced:
        raise DomainError("direct_order requires square_induced=True")
    for attempt in range(_RESAMPLE_CAP):
        if square_induced:
            factors = [
                _induced_square_batch(gen, 1, params.N + nu, params.N)[0] for nu in params.nu
            ]
            order = direct_order if direct_order is not None else tuple(range(params.r))
            A = np.eye(params.N, dtype=complex)
            for idx in order:
                A = factors[idx] @ A
        else:
            A = _draw_direct_chain(gen, params)
        B = _draw_inverse_chain(gen, params)
        try:
            eig = _chain_eigenvalues(A, B)
        except np.linalg.LinAlgError:
            continue
        eig = np.sort(np.clip(eig, 0.0, None))
        return SpectrumSample(params=params, eigenvalues=eig, scaling=Scaling.RAW)
    raise NumericalSingularity(f"factor chain singular {_RESAMPLE_CAP} times in a row")


def _chain_eigenvalues(A: np.ndarray, B: np.ndarray | None) -> np.ndarray:
    AhA = np.conj(A.T) @ A
    if B is None:
        return np.linalg.eigvalsh(AhA)
    if np.linalg.cond(B) > _COND_SWITCH:
        # generalized Hermitian-definite path A†A v = x B†B v
        BhB = np.conj(B.T) @ B
        return scipy.linalg.eigh(AhA, BhB, eigvals_only=True)
    X = A @ np.linalg.inv(B)
    return np.linalg.eigvalsh(np.conj(X.T) @ X)


def rescale(sample: SpectrumSample, target: Scaling) -> SpectrumSample:
    """Move a raw sample to global (x N^{s-r}) or hard-edge (x N^{s+1}) units."""
    if sample.scaling is not Scaling.RAW:
        raise AlreadyScaled(f"sample already in {sample.scaling.value} scaling")
    p = sample.params
    if target is Scaling.RAW:
        return sample
    if target is Scaling.GLOBAL:
        factor = float(p.N) ** (p.s - p.r)
    elif target is Scaling.HARD_EDGE:
        factor = float(p.N) ** (p.s + 1)
    else:
        raise DomainError(f"unknown scaling {target}")
    return replace(sample, eigenvalues=sample.eigenvalues * factor, scaling=target)


def sample_spectra(
    params: EnsembleParams,
    draws: int,
    rng: RngStream,
    scaling: Scaling = Scaling.RAW,
    workers: int = 1,
) -> list[SpectrumSample]:
    """Independent spectra, one substream per draw (worker-count invariant)."""

    def one(i: int) -> SpectrumSample:
        s = sample_product_spectrum(params, rng.substream(i))
        return rescale(s, scaling) if scaling is not Scaling.RAW else s

    n_workers = effective_workers(workers)
    if n_workers == 1:
        return [one(i) for i in range(draws)]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(one, range(draws)))


# --------------------------------------------------------------------------
# Characteristic polynomial Monte Carlo oracle
# --------------------------------------------------------------------------


def _charpoly_chunk(params: EnsembleParams, lam: np.ndarray, rng: RngStream, size: int) -> np.ndarray:
    gen = rng.generator()
    N = params.N
    A = np.broadcast_to(np.eye(N, dtype=complex), (size, N, N)).copy()
    for nu in params.nu:
        A = _induced_square_batch(gen, size, N + nu, N) @ A
    B = np.broadcast_to(np.eye(N, dtype=complex), (size, N, N)).copy()
    for mu in params.mu:
        B = _induced_square_batch(gen, size, N + mu, N) @ B
    AhA = np.conj(np.swapaxes(A, -1, -2)) @ A
    BhB = np.conj(np.swapaxes(B, -1, -2)) @ B
    out = np.empty((len(lam), size))
    for i, lv in enumerate(lam):
        out[i] = np.linalg.det(lv * BhB - AhA).real
    return out


def mc_charpoly(
    params: EnsembleParams,
    lam,
    samples: int,
    rng: RngStream,
    workers: int = 1,
):
    """Monte Carlo mean and standard error of det(lam B†B - A†A).

    All factors are drawn from the induced square measures.  `lam` may be a
    scalar or a vector (shared draws, per-lambda statistics).
    """
    if samples < 100:
        raise DomainError("mc_charpoly requires at least 100 samples")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    scalar = np.ndim(lam) == 0
    chunks = [(i, min(_CHUNK, samples - i * _CHUNK)) for i in range((samples + _CHUNK - 1) // _CHUNK)]

    def one(arg):
        idx, size = arg
        return _charpoly_chunk(params, lam_arr, rng.substream(idx), size)

    n_workers = effective_workers(workers)
    if n_workers == 1:
        parts = [one(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(one, chunks))
    vals = np.concatenate(parts, axis=1)
    mean = vals.mean(axis=1)
    stderr = vals.std(axis=1, ddof=1) / math.sqrt(vals.shape[1])
    if scalar:
        return float(mean[0]), float(stderr[0])
    return mean, stderr


# --------------------------------------------------------------------------
# Cauchy two-matrix bridge
# --------------------------------------------------------------------------


def sample_cauchy_triple(N: int, a: int, b: int, rng: RngStream) -> np.ndarray:
    """Eigenvalues (raw, sorted) distributed as those of S3 S2 (S1+S2)^{-1}.

    S1 = G1†G1 (G1 N x N), S2 = G2†G2 (G2 (N+a+b) x N), S3 = G3†G3
    (G3 (N+a) x N).  Realized as the Hermitian matrix M S3 M† with
    M = S2^{1/2} (S1+S2)^{-1/2}, which has the same eigenvalue law.
    """
    if N < 1 or a < 0 or b < 0:
        raise DomainError("need N >= 1 and a, b >= 0")
    gen = rng.generator()
    for attempt in range(_RESAMPLE_CAP):
        g1 = _ginibre(gen, N, N)
        g2 = _ginibre(gen, N + a + b, N)
        g3 = _ginibre(gen, N + a, N)
        s1 = np.conj(g1.T) @ g1
        s2 = np.conj(g2.T) @ g2
        s3 = np.conj(g3.T) @ g3
        t = s1 + s2
        w, v = np.linalg.eigh(t)
        if w[0] <= 0:
            continue
        t_isqrt = (v / np.sqrt(w)) @ np.conj(v.T)
        m = _psd_sqrt(s2[None])[0] @ t_isqrt
        amat = m @ s3 @ np.conj(m.T)
        return np.sort(np.clip(np.linalg.eigvalsh(amat), 0.0, None))
    raise NumericalSingularity("S1 + S2 numerically singular repeatedly")


# --------------------------------------------------------------------------
# Matrix F-distribution reference construction (r = s = 1 with offsets)
# --------------------------------------------------------------------------


def sample_matrix_f(N: int, M: int, rng: RngStream) -> np.ndarray:
    """Eigenvalues of C†C with C = A^{-1}B, A (M x M) and B (M x N) Ginibre."""
    if M < N:
        raise DomainError("need M >= N")
    gen = rng.generator()
    for attempt in range(_RESAMPLE_CAP):
        A = _ginibre(gen, M, M)
        B = _ginibre(gen, M, N)
        try:
            C = np.linalg.solve(A, B)
        except np.linalg.LinAlgError:
            continue
        return np.sort(np.linalg.eigvalsh(np.conj(C.T) @ C))
    raise NumericalSingularity("A numerically singular repeatedly")


# --------------------------------------------------------------------------
# Empirical CDF machinery
# --------------------------------------------------------------------------


class EmpiricalCdf:
    """Right-continuous step function of a sorted sample."""

    def __init__(self, values: np.ndarray):
        if len(values) == 0:
            raise EmptySample("empirical CDF of an empty sample")
        self.values = np.sort(np.asarray(values, dtype=float))
        self.n = len(self.values)

    def __call__(self, x) -> np.ndarray:
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        return idx / self.n


def empirical_cdf(values) -> EmpiricalCdf:
    return EmpiricalCdf(np.asarray(values, dtype=float))


def sup_distance(ecdf: EmpiricalCdf, analytic_cdf) -> float:
    """Kolmogorov-Smirnov sup |F_n - F| against a CDF callable."""
    f = np.asarray(analytic_cdf(ecdf.values), dtype=float)
    steps_hi = np.arange(1, ecdf.n + 1) / ecdf.n
    steps_lo = np.arange(0, ecdf.n) / ecdf.n
    return float(np.max(np.maximum(np.abs(steps_hi - f), np.abs(f - steps_lo))))


class CdfFromDensity:
    """CDF of a density callback via panelwise Gauss-Legendre accumulation."""

    def __init__(self, density, lo: float, hi: float, n_panels: int = 512, order: int = 12):
        self.lo, self.hi = float(lo), float(hi)
        edges = np.linspace(self.lo, self.hi, n_panels + 1)
        xg, wg = np.polynomial.legendre.leggauss(order)
        mids = 0.5 * (edges[1:] + edges[:-1])
        halfs = 0.5 * (edges[1:] - edges[:-1])
        nodes = mids[:, None] + halfs[:, None] * xg[None, :]
        vals = np.asarray(density(nodes.ravel()), dtype=float).reshape(nodes.shape)
        panel = (vals * wg[None, :]).sum(axis=1) * halfs
        self.edges = edges
        self.cum = np.concatenate([[0.0], np.cumsum(panel)])
        self.total = self.cum[-1]

    def __call__(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        return np.interp(x, self.edges, self.cum) / max(self.total, 1e-300)
