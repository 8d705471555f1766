"""Numerical laboratory for discrete Carleson-type operators.

Subpackages cover the pipeline from arithmetic to operators:

  rationals    reduced fractions, Dirichlet approximation, arc families
  expsums      complete Weyl sums, orthogonality and decay scans
  kernels      truncated kernel families and dyadic pieces
  oscint       oscillatory integrals of the dyadic pieces
  multipliers  lattice symbols, cutoffs, arc-localized approximants
  operators    convolution operators, maximal sweeps, quadratic-pair kernels
  cli          deterministic command-line experiments
"""

from .accel import BACKEND, HAS_NUMBA

__version__ = "0.1.0"

__all__ = ["BACKEND", "HAS_NUMBA", "__version__"]
