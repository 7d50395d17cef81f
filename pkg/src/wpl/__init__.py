"""Eigenvalue statistics of product complex Wishart matrices.

Submodules:
    specfun       complex log-gamma, pFq, Meijer G (Mellin-Barnes), Bessel J
    freeprob      global spectral densities, S-transform, moment sequences
    sampler       Monte Carlo matrix sampling and empirical statistics
    finite_kernel exact finite-N biorthogonal kernel and correlations
    hard_edge     hard-edge scaled kernel, tails, experiments
    cli           reproducible experiment harness
"""

__version__ = "0.1.0"
