"""Operators on lattice functions: single-scale modulated convolutions,
the maximal (supremum over modulation) operator, TT* kernels and their
Schur bounds, and the small numerical inequalities used to control
maxima over modulation grids.

Convolutions are exact: the input box and the kernel ball are zero-
padded to a power of two at least the width of their sum, so the cyclic
transform equals the linear convolution coefficient-for-coefficient.
The supremum over the modulation parameter runs over an explicit grid
in [0,1) (integer phase weights make every symbol 1-periodic), and the
grid coarseness is accounted for by a reported modulus-of-continuity
bound instead of being silently ignored.

Maximum reductions scan the grid in index order and keep the first
attaining index, so results are reproducible and independent of any
worker-pool layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .accel import frac_mul, phase_weighted_sum, phase_weighted_sum_cw
from .errors import BudgetExceededError, VerificationError
from .expsums import complete_weyl_sum
from .kernels import (
    DEFAULT_LATTICE_BUDGET,
    KernelFamily,
    cumulative_lattice_arrays,
    exact_phase_weights,
    kernel_piece,
    lattice_arrays,
)
from .parallel import ordered_map
from .rationals import ArcPair, ReducedRational

__all__ = [
    "LatticeFunction",
    "LambdaGrid",
    "CarlesonResult",
    "delta_function",
    "random_function",
    "apply_mj",
    "carleson_apply",
    "norm_ratio_stats",
    "tts_kernel",
    "s_xy",
    "kappa_forms",
    "kappa_table",
    "kappa",
    "schur_bound",
    "rm_bound",
    "sobolev_maximal_bound",
]


# ==================== lattice functions ====================


@dataclass(frozen=True)
class LatticeFunction:
    """Complex function supported on the box center +- halfwidth."""

    n: int
    center: tuple[int, ...]
    halfwidth: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if len(self.center) != self.n or len(self.halfwidth) != self.n:
            raise ValueError("center/halfwidth must have length n")
        if any(h < 0 for h in self.halfwidth):
            raise ValueError("halfwidths must be >= 0")
        expected = tuple(2 * h + 1 for h in self.halfwidth)
        if self.values.shape != expected:
            raise ValueError(
                f"values shape {self.values.shape} != {expected}"
            )
        if not np.all(np.isfinite(self.values.view(np.float64))):
            raise ValueError("values must be finite")

    def norm2(self) -> float:
        return float(np.linalg.norm(self.values.ravel()))

    def norm1(self) -> float:
        return float(np.abs(self.values).sum())

    def norm_inf(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def index_of(self, x) -> tuple[int, ...]:
        x = np.asarray(x, dtype=np.int64)
        idx = tuple(
            int(x[k] - self.center[k] + self.halfwidth[k])
            for k in range(self.n)
        )
        for k, i in enumerate(idx):
            if not 0 <= i < 2 * self.halfwidth[k] + 1:
                raise IndexError(f"point {tuple(x)} outside support box")
        return idx

    def value_at(self, x) -> complex:
        try:
            return complex(self.values[self.index_of(x)])
        except IndexError:
            return 0.0 + 0.0j

    def translated(self, shift) -> "LatticeFunction":
        shift = tuple(int(t) for t in shift)
        center = tuple(c + t for c, t in zip(self.center, shift))
        return LatticeFunction(self.n, center, self.halfwidth, self.values)


def delta_function(n: int, radius: int = 0) -> LatticeFunction:
    """Point mass at the origin on a box of the given half-width."""
    shape = (2 * radius + 1,) * n
    values = np.zeros(shape, dtype=np.complex128)
    values[(radius,) * n] = 1.0
    return LatticeFunction(n, (0,) * n, (radius,) * n, values)


def random_function(n: int, radius: int, seed_key) -> LatticeFunction:
    """Seeded complex-normal values on [-radius, radius]^n.  seed_key is
    any sequence acceptable to numpy's seeding (e.g. (seed, trial)), so
    per-trial streams are independent of execution order."""
    rng = np.random.default_rng(seed_key)
    shape = (2 * radius + 1,) * n
    values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return LatticeFunction(n, (0,) * n, (radius,) * n, values)


# ==================== modulation grids ====================


@dataclass(frozen=True)
class LambdaGrid:
    """Finite modulation grid inside [0,1).

    values are sorted and deduplicated; spacing is the largest circular
    gap, which drives the sup-approximation error bound.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("grid must contain at least one value")
        if any(not 0.0 <= v < 1.0 for v in self.values):
            raise ValueError("grid values must lie in [0, 1)")
        if list(self.values) != sorted(set(self.values)):
            raise ValueError("grid values must be sorted and distinct")

    @classmethod
    def uniform(cls, M: int) -> "LambdaGrid":
        if M < 1:
            raise ValueError(f"M must be >= 1, got {M}")
        return cls(tuple(i / M for i in range(M)))

    def refined(self, factor: int) -> "LambdaGrid":
        """Uniform refinement keeping every existing point (each value
        i/M reappears as i*factor/(M*factor)), so suprema never drop."""
        if factor < 1:
            raise ValueError(f"factor must be >= 1, got {factor}")
        extra = []
        vals = list(self.values) + [1.0]
        for lo, hi in zip(vals[:-1], vals[1:]):
            extra.extend(
                lo + (hi - lo) * t / factor for t in range(1, factor)
            )
        merged = sorted(set(self.values) | set(extra))
        return LambdaGrid(tuple(merged))

    def with_extra(self, points: Iterable[float]) -> "LambdaGrid":
        merged = sorted(set(self.values) | {p % 1.0 for p in points})
        return LambdaGrid(tuple(merged))

    @property
    def M(self) -> int:
        return len(self.values)

    @property
    def spacing(self) -> float:
        if len(self.values) == 1:
            return 1.0
        arr = np.asarray(self.values)
        gaps = np.diff(arr)
        wrap = 1.0 - arr[-1] + arr[0]
        return float(max(gaps.max(), wrap))


# ==================== single-scale application ====================


def _fft_shape(widths: Sequence[int]) -> tuple[int, ...]:
    return tuple(1 << (int(w) - 1).bit_length() for w in widths)


def _kernel_box(pts, vals, phases=None):
    """Dense array of kernel samples on its bounding box, origin at the
    geometric center; optionally modulated by e(phases)."""
    radius = int(np.abs(pts).max()) if len(pts) else 0
    n = pts.shape[1]
    shape = (2 * radius + 1,) * n
    box = np.zeros(shape, dtype=np.complex128)
    idx = tuple(pts[:, k] + radius for k in range(n))
    if phases is None:
        box[idx] = vals
    else:
        box[idx] = vals * np.exp(2j * np.pi * phases)
    return box, radius


def apply_mj(
    fam: KernelFamily,
    j: int,
    lam: float,
    f: LatticeFunction,
    budget: int = DEFAULT_LATTICE_BUDGET,
) -> LatticeFunction:
    """g(x) = sum_{y != 0} f(x-y) e(lam |y|^(2d)) K_j(y), exactly, on
    the support box of f grown by the kernel radius 2^(j+1)."""
    if fam.n != f.n:
        raise ValueError(f"function dimension {f.n} != kernel n {fam.n}")
    pts, vals, nvals = lattice_arrays(fam, j, budget)
    kbox, radius = _kernel_box(pts, vals, frac_mul(float(lam) % 1.0, nvals))
    out_half = tuple(h + radius for h in f.halfwidth)
    widths = tuple(2 * h + 1 for h in out_half)
    shape = _fft_shape(widths)
    fpad = np.zeros(shape, dtype=np.complex128)
    fpad[tuple(slice(0, s) for s in f.values.shape)] = f.values
    kpad = np.zeros(shape, dtype=np.complex128)
    kpad[tuple(slice(0, s) for s in kbox.shape)] = kbox
    conv = np.fft.ifftn(np.fft.fftn(fpad) * np.fft.fftn(kpad))
    out = np.ascontiguousarray(conv[tuple(slice(0, w) for w in widths)])
    return LatticeFunction(f.n, f.center, out_half, out)


# ==================== the maximal operator ====================


@dataclass(frozen=True)
class CarlesonResult:
    """Gridded maximal-operator output.

    cf holds max over the grid of |sum_{j<=J} modulated convolution|;
    argmax_lambda the first grid value attaining it per site; and
    grid_error_bound the worst-case shortfall against the true supremum
    over [0,1):  (spacing/2) * 2*pi * sum_y |y|^(2d) |K^(J)(y)| * ||f||_inf,
    from the exact modulation-derivative bound.
    """

    cf: LatticeFunction
    argmax_lambda: np.ndarray
    argmax_index: np.ndarray
    grid_error_bound: float
    J: int


def carleson_apply(
    fam: KernelFamily,
    f: LatticeFunction,
    J: int,
    grid: LambdaGrid,
    budget: int = DEFAULT_LATTICE_BUDGET,
    chunk: int = 64,
) -> CarlesonResult:
    """Maximal modulated convolution against the cumulative kernel
    sum_{j<=J} K_j, maximized over the modulation grid.

    The per-lambda modulated kernels share one cumulative lattice (the
    modulation e(lam |y|^(2d)) factors out of the j-sum), so each grid
    value costs one padded transform.  Scanning is in grid order with
    first-index ties, independent of chunk size.
    """
    if fam.n != f.n:
        raise ValueError(f"function dimension {f.n} != kernel n {fam.n}")
    if J < 1:
        raise ValueError(f"J must be >= 1, got {J}")
    pts, vals, nvals = cumulative_lattice_arrays(fam, J, budget)
    radius = int(np.abs(pts).max()) if len(pts) else 0
    out_half = tuple(h + radius for h in f.halfwidth)
    widths = tuple(2 * h + 1 for h in out_half)
    shape = _fft_shape(widths)
    fpad = np.zeros(shape, dtype=np.complex128)
    fpad[tuple(slice(0, s) for s in f.values.shape)] = f.values
    fhat = np.fft.fftn(fpad)
    crop = tuple(slice(0, w) for w in widths)

    kshape = (2 * radius + 1,) * fam.n
    kidx = tuple(pts[:, k] + radius for k in range(fam.n))
    best = np.full(widths, -1.0, dtype=np.float64)
    best_idx = np.zeros(widths, dtype=np.int64)
    lam_values = grid.values
    for start in range(0, len(lam_values), max(1, chunk)):
        block = lam_values[start : start + max(1, chunk)]
        kpad = np.zeros((len(block),) + shape, dtype=np.complex128)
        for row, lam in enumerate(block):
            kbox = np.zeros(kshape, dtype=np.complex128)
            kbox[kidx] = vals * np.exp(
                2j * np.pi * frac_mul(float(lam) % 1.0, nvals)
            )
            kpad[row][tuple(slice(0, s) for s in kshape)] = kbox
        axes = tuple(range(1, fam.n + 1))
        ghat = np.fft.fftn(kpad, axes=axes)
        ghat *= fhat[np.newaxis]
        gval = np.fft.ifftn(ghat, axes=axes)
        for row in range(len(block)):
            mag = np.abs(gval[row][crop])
            mask = mag > best
            best[mask] = mag[mask]
            best_idx[mask] = start + row
    weighted = float(
        np.sum(np.abs(vals) * nvals.astype(np.float64))
    )
    bound = 2.0 * math.pi * weighted * f.norm_inf() * grid.spacing / 2.0
    cf = LatticeFunction(
        f.n, f.center, out_half, best.astype(np.complex128)
    )
    argmax_lambda = np.asarray(lam_values, dtype=np.float64)[best_idx]
    return CarlesonResult(
        cf=cf,
        argmax_lambda=argmax_lambda,
        argmax_index=best_idx,
        grid_error_bound=bound,
        J=J,
    )


def norm_ratio_stats(
    fam: KernelFamily,
    J: int,
    grid: LambdaGrid,
    trials: int,
    radius: int,
    seed: int,
    budget: int = DEFAULT_LATTICE_BUDGET,
    workers: int = 1,
) -> tuple[float, list[dict]]:
    """Seeded exploration of ||Cf||_2 / ||f||_2.

    Trial 0 is the point mass (its ratio equals ||sum_{j<=J} K_j||_2
    exactly: modulation factors have unit modulus).  Trials 1.. draw
    complex normals on [-radius, radius]^n from per-trial seed streams,
    so the table is reproducible for any worker count.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    def run(trial: int) -> dict:
        if trial == 0:
            f = delta_function(fam.n, radius)
        else:
            f = random_function(fam.n, radius, (seed, trial))
        res = carleson_apply(fam, f, J, grid, budget)
        nf = f.norm2()
        nc = res.cf.norm2()
        return {
            "trial": trial,
            "norm_f": nf,
            "norm_cf": nc,
            "ratio": nc / nf,
            "grid_error_bound": res.grid_error_bound,
        }

    rows = ordered_map(run, range(trials), workers=workers)
    max_ratio = max(r["ratio"] for r in rows)
    return max_ratio, rows


# ==================== TT* kernels ====================


def _as_point(x, n: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=np.int64))
    if arr.shape != (n,):
        raise ValueError(f"lattice point must have shape ({n},)")
    return arr


def tts_kernel(
    fam: KernelFamily,
    j: int,
    lambda_map: Callable[[np.ndarray], float],
    x,
    y,
    budget: int = DEFAULT_LATTICE_BUDGET,
) -> complex:
    """Kernel of the composition (modulated convolution) x (its
    adjoint) when the modulation parameter may vary per site:

        sum_z e( lam(x)|z|^(2d) - lam(y)|y-x+z|^(2d) )
              K_j(z) conj(K_j(y-x+z)) 1_{|x-z| <= 2^j}

    Vanishes whenever |x| > 2^(j+2) or |y| > 2^(j+2).
    """
    x = _as_point(x, fam.n)
    y = _as_point(y, fam.n)
    lim = 2.0 ** (j + 2)
    if np.linalg.norm(x) > lim or np.linalg.norm(y) > lim:
        return 0.0 + 0.0j
    pts, vals, nvals = lattice_arrays(fam, j, budget)
    shifted = pts + (y - x)[np.newaxis, :]
    other = kernel_piece(fam, j, shifted.astype(np.float64))
    ball = (
        ((x[np.newaxis, :] - pts) ** 2).sum(axis=1) <= (1 << j) ** 2
    )
    weights = vals * other * ball
    keep = weights != 0.0
    if not np.any(keep):
        return 0.0 + 0.0j
    lam_x = float(lambda_map(x)) % 1.0
    lam_y = float(lambda_map(y)) % 1.0
    n2 = exact_phase_weights(shifted[keep], fam.d)
    ph = frac_mul(lam_x, nvals[keep]) - frac_mul(lam_y, n2)
    return phase_weighted_sum(ph, np.ascontiguousarray(weights[keep]))


def schur_bound(
    kernel: Callable[[np.ndarray, np.ndarray], complex],
    rows: Sequence,
    cols: Sequence,
) -> float:
    """max over row points of sum over column points of |kernel(x,y)|;
    bounds the l2 operator norm when the kernel is Hermitian."""
    best = 0.0
    cols = [np.atleast_1d(np.asarray(c, dtype=np.int64)) for c in cols]
    for x in rows:
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        total = 0.0
        for y in cols:
            total += abs(kernel(x, y))
        best = max(best, total)
    return best


# ==================== rational-block pair sums ====================


@lru_cache(maxsize=None)
def _roots(q: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(q) / q)


@lru_cache(maxsize=200_000)
def _weyl_cached(a: int, b: tuple, q: int, d: int) -> complex:
    return complete_weyl_sum(ArcPair(a=a, b=b, q=q), d).value


def s_xy(
    a: int,
    q: int,
    ap: int,
    qp: int,
    w,
    d: int,
    n: int,
    budget: int = 10**8,
) -> complex:
    """q^(-n) sum_{r in [q]^n} e( a|r|^(2d)/q - a'|r+w|^(2d)/q' ), with
    the phase reduced exactly as an integer mod q*q'."""
    if q < 1 or qp < 1:
        raise ValueError("q, q' must be >= 1")
    if q**n > budget:
        raise BudgetExceededError(f"{q}^{n} terms exceed budget {budget}")
    w = _as_point(w, n)
    counts = _sxy_counts(q, qp, a, ap, tuple(int(t) for t in w), d)
    value = complex(np.dot(counts, _roots(q * qp)))
    return value / q**n


@lru_cache(maxsize=100_000)
def _sxy_counts(q, qp, a, ap, w, d) -> np.ndarray:
    from .accel import sxy_phase_counts

    return np.asarray(
        sxy_phase_counts(q, qp, a, ap, np.asarray(w, dtype=np.int64), d),
        dtype=np.float64,
    )


def kappa_forms(
    a: int,
    q: int,
    ap: int,
    qp: int,
    w,
    d: int,
    n: int,
) -> tuple[complex, complex]:
    """Both closed forms of the block pair sum for reduced a/q, a'/q':

    beta form:    sum_{b in [g]^n} S(a/q, b/g) conj(S(a'/q', b/g)) e(w.b/g)
    double form:  (q'/g)^(-n) sum_{u in [q'/g]^n} s_xy(a,q,a',q', w + u*g)

    with g = gcd(q, q').  The two are equal identically; callers compare
    them as a correctness check on the exponential-sum machinery.
    """
    if math.gcd(a, q) != 1 or math.gcd(ap, qp) != 1:
        raise ValueError("a/q and a'/q' must be reduced")
    w = _as_point(w, n)
    g = math.gcd(q, qp)
    beta = 0.0 + 0.0j
    for b in np.ndindex(*((g,) * n)):
        b1 = tuple((int(t) * (q // g)) % q for t in b)
        b2 = tuple((int(t) * (qp // g)) % qp for t in b)
        s1 = _weyl_cached(a % q, b1, q, d)
        s2 = _weyl_cached(ap % qp, b2, qp, d)
        phase = sum(int(wi) * int(bi) for wi, bi in zip(w, b)) % g
        beta += s1 * np.conj(s2) * _roots(g)[phase]
    m = qp // g
    double = 0.0 + 0.0j
    for u in np.ndindex(*((m,) * n)):
        shift = w + g * np.asarray(u, dtype=np.int64)
        double += s_xy(a, q, ap, qp, shift, d, n)
    double /= float(m**n)
    return beta, double


def kappa_table(
    a: int,
    q: int,
    ap: int,
    qp: int,
    shifts: np.ndarray,
    d: int,
    n: int,
) -> tuple[np.ndarray, np.ndarray]:
    """kappa_forms evaluated at every row of shifts (an integer array of
    shape (count, n)); returns the (beta, double) value arrays.

    Exhaustive |w|-box scans call this instead of looping kappa_forms:
    the beta form depends on w only mod g and the double form only mod
    q', so each is tabulated once on its fundamental domain and the box
    is filled by residue lookup.
    """
    if math.gcd(a, q) != 1 or math.gcd(ap, qp) != 1:
        raise ValueError("a/q and a'/q' must be reduced")
    shifts = np.asarray(shifts, dtype=np.int64)
    if shifts.ndim != 2 or shifts.shape[1] != n:
        raise ValueError(f"shift array must have shape (count, {n})")
    g = math.gcd(q, qp)
    prod = np.empty((g,) * n, dtype=np.complex128)
    for b in np.ndindex(*((g,) * n)):
        b1 = tuple((int(t) * (q // g)) % q for t in b)
        b2 = tuple((int(t) * (qp // g)) % qp for t in b)
        prod[b] = _weyl_cached(a % q, b1, q, d) * np.conj(
            _weyl_cached(ap % qp, b2, qp, d)
        )
    # sum_b prod[b] e(+w.b/g) is the unnormalized inverse transform
    beta_dom = np.fft.ifftn(prod) * g**n
    zs = np.indices((q,) * n, dtype=np.int64).reshape(n, -1)
    vs = np.indices((qp,) * n, dtype=np.int64).reshape(n, -1)
    zq = (zs * zs).sum(axis=0) % q
    x = np.ones_like(zq)
    for _ in range(d):
        x = x * zq % q
    sh = zs[:, None, :] + vs[:, :, None]
    t2 = (sh * sh).sum(axis=0) % qp
    y = np.ones_like(t2)
    for _ in range(d):
        y = y * t2 % qp
    ph = (qp * ((a % q) * x % q)[None, :] - q * ((ap % qp) * y % qp)) % (q * qp)
    sxy_dom = _roots(q * qp)[ph].sum(axis=1) / float(q**n)
    m = qp // g
    strides = qp ** np.arange(n - 1, -1, -1, dtype=np.int64)
    dbl_dom = np.zeros(qp**n, dtype=np.complex128)
    for u in np.ndindex(*((m,) * n)):
        moved = (vs + g * np.asarray(u, dtype=np.int64).reshape(n, 1)) % qp
        dbl_dom += sxy_dom[strides @ moved]
    dbl_dom /= float(m**n)
    beta_vals = beta_dom[tuple(np.mod(shifts.T, g))]
    dbl_vals = dbl_dom[strides @ np.mod(shifts.T, qp)]
    return beta_vals, dbl_vals


def kappa(
    s: int,
    alpha: ReducedRational,
    alpha_prime: ReducedRational,
    w,
    d: int,
    n: int,
    tol: float = 1e-9,
) -> complex:
    """Block pair sum at level s for modulation rationals alpha (the
    unconjugated factor) and alpha_prime (conjugated), with frequency
    shift w.  Both closed forms are evaluated and must agree to tol;
    disagreement raises, because the identity is exact and a gap can
    only mean a bug in the exponential sums.
    """
    lo, hi = 1 << (s - 1), 1 << s
    for r in (alpha, alpha_prime):
        if not lo <= r.den < hi:
            raise ValueError(
                f"denominator {r.den} outside block [{lo}, {hi})"
            )
    beta, double = kappa_forms(
        alpha.num, alpha.den, alpha_prime.num, alpha_prime.den, w, d, n
    )
    if abs(beta - double) > tol:
        raise VerificationError(
            f"pair-sum forms disagree by {abs(beta - double):.3e} "
            f"(> {tol:.1e}) at alpha={alpha}, alpha'={alpha_prime}, w={w}"
        )
    return beta


# ==================== numerical inequalities ====================


def rm_bound(a: Sequence[complex], j0: int) -> tuple[float, float]:
    """Dyadic chaining bound for a maximum over 2^s + 1 values:

    lhs = max_j |a_j|
    rhs = |a_{j0}| + sqrt(2) * sum_{l=0..s}
              ( sum_{k < 2^(s-l)} |a_{(k+1)2^l} - a_{k 2^l}|^2 )^(1/2)

    Guarantees lhs <= rhs for every anchor index 0 <= j0 <= 2^s.
    """
    arr = np.asarray(a, dtype=np.complex128)
    m = arr.shape[0] - 1
    if m < 1 or (m & (m - 1)) != 0:
        raise ValueError(
            f"sequence length must be 2^s + 1, got {arr.shape[0]}"
        )
    s = m.bit_length() - 1
    if not 0 <= j0 <= m:
        raise ValueError(f"anchor {j0} outside [0, {m}]")
    lhs = float(np.abs(arr).max())
    rhs = float(abs(arr[j0]))
    for l in range(s + 1):
        step = 1 << l
        diffs = arr[step::step] - arr[:-step:step]
        rhs += math.sqrt(2.0) * float(np.linalg.norm(diffs))
    return lhs, rhs


def sobolev_maximal_bound(N: int, A: float, B: float, delta: float) -> float:
    """Operator-norm bound sqrt(N)*A + sqrt(2*N*A*B*delta) for a maximal
    function over N disjoint modulation intervals of length delta, from
    a size bound A and a derivative bound B."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if A < 0 or B < 0 or delta < 0:
        raise ValueError("A, B, delta must be >= 0")
    return math.sqrt(N) * A + math.sqrt(2.0 * N * A * B * delta)
