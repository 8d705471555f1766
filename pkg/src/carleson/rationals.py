"""Exact rational and arc-set machinery.

This module owns every Diophantine object the lab needs: reduced fractions,
Dirichlet approximation, Farey sets, the dyadic families of rational pairs
(a/q, b/q) with gcd(a, b, q) = 1 grouped by denominator block
q in [2^(s-1), 2^s), and the frequency-space neighborhoods around them.

Conventions
-----------
* All set memberships with a real tolerance use closed inequalities (<=),
  so boundary points are members.
* Window tests against a rational a/q are performed against the nearest
  integer translate (the underlying objects are 1-periodic), while the
  returned representatives are canonical: ArcPair has a, b_k in [0, q);
  the rational returned by in_Xj keeps its true (untranslated) value.
* Numerator candidates are found by rounding; windows are always far
  smaller than the 1/(2q) spacing at the parameter ranges the lab admits,
  so the nearest candidate is the only possible member.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetExceededError

__all__ = [
    "ReducedRational",
    "ArcPair",
    "ArcParams",
    "reduce",
    "dirichlet_approx",
    "farey_set",
    "in_Xj",
    "in_Mj",
    "mj_candidates",
    "enumerate_Rs",
    "rs_block",
    "lcm_range",
    "divisor_count",
]

DEFAULT_ENUM_LIMIT = 5_000_000


@dataclass(frozen=True)
class ReducedRational:
    """A fraction num/den in lowest terms with den >= 1."""

    num: int
    den: int

    def __post_init__(self):
        if self.den < 1:
            raise ValueError(f"denominator must be >= 1, got {self.den}")
        if math.gcd(self.num, self.den) != 1:
            raise ValueError(f"{self.num}/{self.den} is not reduced")

    @property
    def value(self) -> float:
        return self.num / self.den

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"


@dataclass(frozen=True)
class ArcPair:
    """A canonical pair (a/q, b/q) with common denominator q.

    a in [0, q), every b_k in [0, q), and gcd(a, b_1, ..., b_n, q) = 1.
    The pair need not be reduced coordinate-wise: (2/4, 1/4) is canonical.
    """

    a: int
    b: tuple[int, ...]
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if len(self.b) < 1:
            raise ValueError("b must have at least one component")
        if not 0 <= self.a < self.q:
            raise ValueError(f"a={self.a} outside [0, q={self.q})")
        if any(not 0 <= bk < self.q for bk in self.b):
            raise ValueError(f"b={self.b} outside [0, q={self.q})^n")
        if math.gcd(self.a, *self.b, self.q) != 1:
            raise ValueError(
                f"gcd(a, b, q) must be 1, got ({self.a}, {self.b}, {self.q})"
            )

    @property
    def n(self) -> int:
        return len(self.b)

    @property
    def alpha(self) -> float:
        return self.a / self.q

    @property
    def beta(self) -> np.ndarray:
        return np.array(self.b, dtype=np.float64) / self.q

    def alpha_fraction(self) -> Fraction:
        return Fraction(self.a, self.q)

    def beta_fractions(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(bk, self.q) for bk in self.b)


@dataclass(frozen=True)
class ArcParams:
    """Shared arc-geometry parameters.

    eps1 controls the modulation arcs (denominators below 2^floor(j*eps1),
    window half-width 2^(-2dj+eps1*j)); eps2 controls the joint
    frequency-modulation neighborhoods.  The classical regime keeps
    eps1 < eps2 = 2^-5; desk-scale sweeps at small j may rescale both
    upward jointly with j, so validation only requires 0 < eps1 < eps2 < 1.
    """

    d: int
    n: int
    eps1: float = 2.0**-6
    eps2: float = 2.0**-5

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not (0.0 < self.eps1 < self.eps2 < 1.0):
            raise ValueError(
                f"need 0 < eps1 < eps2 < 1, got eps1={self.eps1}, eps2={self.eps2}"
            )

    def aj_denominator_bound(self, j: int) -> int:
        """Exclusive upper bound 2^floor(j*eps1) for modulation-arc
        denominators at scale j (bound 1 means the family is empty)."""
        return 1 << self.s_max(j)

    def s_max(self, j: int) -> int:
        """Largest integer s with s <= j*eps1 (0 when even s=1 fails).

        The dyadic blocks [2^(s-1), 2^s) for 1 <= s <= s_max(j) tile
        [1, aj_denominator_bound(j)) exactly, so the arc-piece sum over s
        covers precisely the denominators admitted at scale j.
        """
        return max(0, math.floor(j * self.eps1))

    def xj_halfwidth(self, j: int) -> float:
        return 2.0 ** (-2 * self.d * j + self.eps1 * j)


def _nearest_int(x: float) -> int:
    """Nearest integer with deterministic half-up tie break."""
    return math.floor(x + 0.5)


def reduce(num: int, den: int) -> ReducedRational:
    """Canonical reduced form of num/den with den >= 1.

    Raises ZeroDivisionError for den = 0.
    """
    if den == 0:
        raise ZeroDivisionError("zero denominator")
    if den < 0:
        num, den = -num, -den
    g = math.gcd(num, den)
    return ReducedRational(num // g, den // g)


def dirichlet_approx(x: float, Q: int) -> ReducedRational:
    """Best rational approximation a/q with 1 <= q <= Q and
    |x - a/q| <= 1/(qQ).

    Among qualifying denominators the smallest q wins; the numerator is
    the nearest integer to q*x (ties broken half-up).  The smallest
    qualifying q is always a continued-fraction convergent denominator,
    which is how the search proceeds; a linear scan backstops float
    degeneracies.
    """
    if Q < 1:
        raise ValueError(f"Q must be >= 1, got {Q}")
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x}")

    def qualifies(q: int) -> Optional[ReducedRational]:
        m = _nearest_int(x * q)
        if abs(x - m / q) <= 1.0 / (q * Q):
            return reduce(m, q)
        return None

    prev_q = 0
    cur_q = 1
    t = x - math.floor(x)
    for _ in range(128):
        if cur_q > Q:
            break
        hit = qualifies(cur_q)
        if hit is not None:
            return hit
        if t <= 1e-18:
            break
        inv = 1.0 / t
        digit = math.floor(inv)
        t = inv - digit
        prev_q, cur_q = cur_q, digit * cur_q + prev_q

    for q in range(1, min(Q, 100_000) + 1):
        hit = qualifies(q)
        if hit is not None:
            return hit

    # Mathematically unreachable (Dirichlet's theorem); kept as a
    # deterministic last resort against pathological floats.
    best_q = min(
        range(1, min(Q, 100_000) + 1),
        key=lambda q: (abs(x * q - _nearest_int(x * q)), q),
    )
    return reduce(_nearest_int(x * best_q), best_q)


def farey_set(Q: int) -> list[ReducedRational]:
    """All reduced fractions a/q with 0 <= a < q <= Q, ascending by value.

    The cardinality is 1 + sum_{q=2..Q} phi(q) (the single q=1 element
    is 0/1).
    """
    if Q < 1:
        raise ValueError(f"Q must be >= 1, got {Q}")
    out = [ReducedRational(0, 1)]
    for q in range(2, Q + 1):
        for a in range(1, q):
            if math.gcd(a, q) == 1:
                out.append(ReducedRational(a, q))
    out.sort(key=lambda r: Fraction(r.num, r.den))
    return out


def in_Xj(lam: float, j: int, params: ArcParams) -> Optional[ReducedRational]:
    """The unique rational a/q with q < 2^floor(j*eps1) whose window
    |lam - a/q| <= 2^(-2dj + eps1*j) contains lam, or None.

    The window bound is closed, so boundary points are members.  The
    returned rational keeps its true value (it is not translated into
    [0, 1)).  Raises if the windows at the given parameters are not
    disjoint and several match.
    """
    if j < 1:
        raise ValueError(f"j must be >= 1, got {j}")
    qmax = params.aj_denominator_bound(j)
    width = params.xj_halfwidth(j)
    hits: list[ReducedRational] = []
    for q in range(1, qmax):
        a = _nearest_int(lam * q)
        if math.gcd(a, q) != 1:
            continue  # same value appears reduced at denominator q/gcd
        if abs(lam - a / q) <= width:
            cand = ReducedRational(a, q)
            if all(
                cand.as_fraction() != h.as_fraction() for h in hits
            ):
                hits.append(cand)
    if not hits:
        return None
    if len(hits) > 1:
        raise ValueError(
            f"windows overlap at lam={lam}, j={j}: {[str(h) for h in hits]}"
        )
    return hits[0]


def mj_candidates(
    lam: float, xi: Sequence[float], j: int, params: ArcParams
) -> list[ArcPair]:
    """All pairs (a/q, b/q) with gcd(a,b,q)=1, q < 2^floor(j*eps2), whose
    joint window |lam - a/q| <= 2^(-2dj+eps2*j), |xi - b/q| <= 2^(-j+eps2*j)
    contains (lam, xi).  Euclidean norm on the xi offset; closed bounds."""
    if j < 1:
        raise ValueError(f"j must be >= 1, got {j}")
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != (params.n,):
        raise ValueError(f"xi must have shape ({params.n},), got {xi.shape}")
    s_max = math.floor(j * params.eps2)
    lam_width = 2.0 ** (-2 * params.d * j + params.eps2 * j)
    xi_width = 2.0 ** (-j + params.eps2 * j)
    hits: list[ArcPair] = []
    for q in range(1, 1 << s_max):
        a = _nearest_int(lam * q)
        b = [_nearest_int(x * q) for x in xi]
        if math.gcd(a, *b, q) != 1:
            continue  # the same rational pair is canonical at q/gcd
        if abs(lam - a / q) > lam_width:
            continue
        off = xi - np.array(b, dtype=np.float64) / q
        if math.sqrt(float(np.dot(off, off))) > xi_width:
            continue
        hits.append(ArcPair(a % q, tuple(bk % q for bk in b), q))
    return hits


def in_Mj(
    lam: float, xi: Sequence[float], j: int, params: ArcParams
) -> Optional[ArcPair]:
    """The unique canonical pair whose joint neighborhood contains
    (lam, xi), or None.  See ``mj_candidates`` for the window geometry."""
    hits = mj_candidates(lam, xi, j, params)
    if not hits:
        return None
    if len(hits) > 1:
        raise ValueError(
            f"joint windows overlap at lam={lam}, xi={xi}, j={j}: "
            f"{[(h.a, h.b, h.q) for h in hits]}"
        )
    return hits[0]


def rs_block(s: int) -> range:
    """Denominator block [2^(s-1), 2^s) for s >= 1."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    return range(1 << (s - 1), 1 << s)


def enumerate_Rs(
    s: int, n: int, max_size: int = DEFAULT_ENUM_LIMIT
) -> list[ArcPair]:
    """All canonical pairs (a, b, q) with q in [2^(s-1), 2^s), a in [0,q),
    b in [0,q)^n and gcd(a, b, q) = 1, ordered by (q, a, b).

    Raises BudgetExceededError when the candidate count q^(n+1) summed
    over the block exceeds max_size.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    block = rs_block(s)
    candidates = sum(q ** (n + 1) for q in block)
    if candidates > max_size:
        raise BudgetExceededError(
            f"enumerate_Rs(s={s}, n={n}) needs {candidates} candidates "
            f"(> {max_size}); use the window-based lookups instead"
        )
    out: list[ArcPair] = []
    for q in block:
        for a in range(q):
            ga = math.gcd(a, q)
            if ga == 1:
                # every b works
                for b in np.ndindex(*(q,) * n):
                    out.append(ArcPair(a, tuple(int(x) for x in b), q))
            else:
                for b in np.ndindex(*(q,) * n):
                    if math.gcd(ga, *b) == 1:
                        out.append(ArcPair(a, tuple(int(x) for x in b), q))
    return out


def lcm_range(s: int) -> int:
    """Least common multiple of every integer in [2^(s-1), 2^s] (closed).

    Exact integer result.  s <= 6 is supported (the s=6 value needs 90
    bits; anything larger would not even fit 128-bit, so it raises
    OverflowError rather than silently extending)."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if s > 6:
        raise OverflowError(
            f"lcm over [2^{s-1}, 2^{s}] exceeds 128-bit integer range"
        )
    return math.lcm(*range(1 << (s - 1), (1 << s) + 1))


def divisor_count(q: int) -> int:
    """Number of positive divisors tau(q)."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    count = 1
    rem = q
    p = 2
    while p * p <= rem:
        if rem % p == 0:
            e = 0
            while rem % p == 0:
                rem //= p
                e += 1
            count *= e + 1
        p += 1 if p == 2 else 2
    if rem > 1:
        count *= 2
    return count
