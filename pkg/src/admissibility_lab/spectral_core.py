"""Diagonal semigroup systems on l^2, the two example families, and truncation.

A :class:`DiagonalSystem` is a pair of closed-form sequences ``lambda_k``
(eigenvalues of the generator) and ``b_k`` (coefficients of a scalar-input
control operator) over an index set that is either the positive integers,
all integers, or a finite table.  Values are only materialized on a
contiguous index window.  Everything outside a truncation window is
accounted for through :class:`Tails`, a bundle of closed-form bounds that
each generator family supplies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "BetaProfile",
    "ControlClassification",
    "DiagonalSystem",
    "PerturbationSequence",
    "Tails",
    "TruncatedSystem",
    "classify_control",
    "is_in_I1",
    "make_diagonal",
    "make_example1",
    "make_example2",
    "perturbation_between",
    "truncate",
]

NATURALS = "N"
INTEGERS = "Z"
FINITE = "finite"

BOUNDED = "bounded"
UNBOUNDED = "unbounded"
NOT_IN_X_MINUS_1 = "inadmissible-for-X-1"

ArrayFn = Callable[[np.ndarray], np.ndarray]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def is_in_I1(k: int) -> bool:
    """True iff ``k`` is a perfect square (integer arithmetic only)."""
    k = int(k)
    if k <= 0:
        raise ValueError(f"mode index must be positive, got {k}")
    r = math.isqrt(k)
    return r * r == k


def _square_mask(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64)
    r = np.floor(np.sqrt(k.astype(float))).astype(np.int64)
    # exact integer correction of the float estimate
    r -= (r * r > k)
    r += ((r + 1) * (r + 1) <= k)
    return r * r == k


@dataclass(frozen=True)
class Tails:
    """Closed-form bounds on the modes outside a window ``[lo, hi]``.

    Every callable receives the window bounds.  ``b_sq`` and ``weighted``
    bound the omitted parts of ``sum |b_k|^2`` and
    ``sum |b_k|^2 / (1 + |lambda_k|^2)`` (``inf`` when divergent).
    ``m_bound(lo, hi, side)`` returns ``(estimate, upper)`` for the omitted
    part of ``sum |b_k|^2 / |Re lambda_k|``; ``criterion(lo, hi, z)`` bounds
    the omitted part of ``sum |b_k|^2 / |z - lambda_k|^2`` for ``Re z > 0``.
    ``sup_re`` is the supremum of ``Re lambda_k`` over any cofinite tail.
    """

    b_sq: Callable[[int, int], float]
    weighted: Callable[[int, int], float]
    m_bound: Callable[[int, int, str], tuple[float, float]]
    criterion: Callable[[int, int, complex], float]
    sup_re: float

    @staticmethod
    def none() -> "Tails":
        return Tails(
            b_sq=lambda lo, hi: 0.0,
            weighted=lambda lo, hi: 0.0,
            m_bound=lambda lo, hi, side: (0.0, 0.0),
            criterion=lambda lo, hi, z: 0.0,
            sup_re=-math.inf,
        )


@dataclass(frozen=True)
class BetaProfile:
    """Imaginary parts ``beta_k`` of the first example's eigenvalues.

    ``beta_k = table[k-1]`` for ``k <= len(table)`` and continues linearly
    with ``slope`` afterwards; an empty table gives ``beta_k = slope * k``.
    """

    table: tuple[float, ...] = ()
    slope: float = 1.0

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError("beta profile slope must be positive")
        t = np.asarray(self.table, dtype=float)
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("beta profile table must be strictly increasing")

    @classmethod
    def linear(cls, slope: float = 1.0) -> "BetaProfile":
        return cls((), float(slope))

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        n = len(self.table)
        if n == 0:
            return self.slope * k.astype(float)
        table = np.asarray(self.table, dtype=float)
        out = table[-1] + self.slope * (k - n).astype(float)
        inside = (k >= 1) & (k <= n)
        out[inside] = table[k[inside] - 1]
        return out

    def first_index_reaching(self, level: float, start: int) -> int:
        """Smallest ``k >= start`` with ``beta_k >= level`` and ``beta_k > 0``."""
        def ok(k):
            v = float(self(np.array([k]))[0])
            return v >= level and v > 0

        lo = start
        if ok(lo):
            return lo
        step = 1
        hi = lo + step
        while not ok(hi):
            lo = hi
            step *= 2
            hi = lo + step
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        return hi

    def describe(self) -> dict:
        if not self.table:
            return {"kind": "linear", "slope": self.slope}
        return {"kind": "table", "table": list(self.table), "slope": self.slope}


@dataclass(frozen=True)
class DiagonalSystem:
    """Diagonal generator ``x -> (lambda_k x_k)`` with scalar control ``(b_k)``.

    ``eigenvalue_fn`` and ``control_fn`` map integer index arrays to complex
    arrays.  ``window`` is the inclusive index range that is materialized.
    """

    eigenvalue_fn: ArrayFn
    control_fn: ArrayFn
    window: tuple[int, int]
    family_tag: str
    index_set: str
    tails: Tails = field(default_factory=Tails.none)
    unbounded_spectrum: bool = False
    params: dict = field(default_factory=dict)
    strict: bool = True

    def __post_init__(self):
        lo, hi = self.window
        if hi < lo:
            raise ValueError(f"empty index window {self.window}")
        if self.index_set == NATURALS and lo < 1:
            raise ValueError("systems indexed by the positive integers reject k <= 0")
        if self.strict:
            lam = self.eigenvalues
            if np.any(lam.real > 0) or np.any(np.isnan(lam)):
                raise ValueError(f"{self.family_tag}: eigenvalues must lie in the open left half-plane")
            negative = lam.real < 0
            # -exp(-k) underflows to -0.0 beyond k ~ 745; those modes are
            # negative in closed form, so only the finite tables are held to
            # strict negativity.
            if self.index_set == FINITE and not np.all(negative):
                raise ValueError(f"{self.family_tag}: eigenvalues must lie in the open left half-plane")
            if np.unique(lam).size != lam.size:
                raise ValueError(f"{self.family_tag}: eigenvalues must be pairwise distinct")

    # -- materialization -------------------------------------------------
    @cached_property
    def indices(self) -> np.ndarray:
        lo, hi = self.window
        return _frozen(np.arange(lo, hi + 1, dtype=np.int64))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return _frozen(np.asarray(self.eigenvalue_fn(self.indices.copy()), dtype=complex))

    @cached_property
    def controls(self) -> np.ndarray:
        return _frozen(np.asarray(self.control_fn(self.indices.copy()), dtype=complex))

    def _check_index(self, k: int) -> np.ndarray:
        k = int(k)
        if self.index_set == NATURALS and k <= 0:
            raise ValueError(f"{self.family_tag} is indexed by k >= 1, got {k}")
        if self.index_set == FINITE and not (self.window[0] <= k <= self.window[1]):
            raise ValueError(f"index {k} outside finite system {self.window}")
        return np.array([k], dtype=np.int64)

    def eigenvalue(self, k: int) -> complex:
        return complex(self.eigenvalue_fn(self._check_index(k))[0])

    def control(self, k: int) -> complex:
        return complex(self.control_fn(self._check_index(k))[0])

    @property
    def underflowed_modes(self) -> int:
        """Modes whose negative real part is not representable in double precision."""
        return int(np.count_nonzero(self.eigenvalues.real == 0))

    def truncation_window(self, N: int) -> tuple[int, int]:
        if self.index_set == INTEGERS:
            return (-N, N)
        lo = self.window[0]
        return (lo, lo + N - 1)


@dataclass(frozen=True)
class TruncatedSystem:
    """Finite restriction of a :class:`DiagonalSystem` plus its tail data."""

    lam: np.ndarray
    b: np.ndarray
    indices: np.ndarray
    origin: DiagonalSystem
    tail_sup_re: float
    tail_b_sq: float

    @property
    def window(self) -> tuple[int, int]:
        return int(self.indices[0]), int(self.indices[-1])

    @property
    def size(self) -> int:
        return self.lam.size

    def position(self, k: int) -> int:
        lo, hi = self.window
        if not lo <= k <= hi:
            raise IndexError(f"mode {k} outside window {self.window}")
        return int(k - lo)

    def criterion_tail(self, z: complex) -> float:
        return float(self.origin.tails.criterion(*self.window, z))

    def weighted_tail(self) -> float:
        return float(self.origin.tails.weighted(*self.window))

    def m_tail(self, side: str = "both") -> tuple[float, float]:
        return self.origin.tails.m_bound(*self.window, side)


def truncate(sys: DiagonalSystem, N: int) -> TruncatedSystem:
    """Restrict ``sys`` to its first ``N`` modes (``-N..N`` for integer-indexed systems)."""
    N = int(N)
    if N < 1:
        raise ValueError("truncation size must be positive")
    lo, hi = sys.truncation_window(N)
    if lo < sys.window[0] or hi > sys.window[1]:
        raise ValueError(f"truncation {lo}..{hi} exceeds materialized window {sys.window}")
    sl = slice(lo - sys.window[0], hi - sys.window[0] + 1)
    return TruncatedSystem(
        lam=sys.eigenvalues[sl],
        b=sys.controls[sl],
        indices=sys.indices[sl],
        origin=sys,
        tail_sup_re=sys.tails.sup_re,
        tail_b_sq=float(sys.tails.b_sq(lo, hi)),
    )


# -- generic constructor --------------------------------------------------

def make_diagonal(eigenvalues: Sequence[complex], control: Sequence[complex], *,
                  start: int = 1, family_tag: str = "synthetic", strict: bool = True) -> DiagonalSystem:
    """Finite diagonal system from explicit tables (no tail)."""
    lam = np.asarray(eigenvalues, dtype=complex).ravel().copy()
    b = np.asarray(control, dtype=complex).ravel().copy()
    if lam.shape != b.shape:
        raise ValueError(f"eigenvalue/control length mismatch: {lam.size} vs {b.size}")
    if lam.size == 0:
        raise ValueError("empty system")

    def eig(k, _lam=lam, _s=start):
        return _lam[np.asarray(k) - _s]

    def ctl(k, _b=b, _s=start):
        return _b[np.asarray(k) - _s]

    return DiagonalSystem(eig, ctl, (start, start + lam.size - 1), family_tag, FINITE,
                          Tails.none(), False, {}, strict)


# -- Example 1: A0 = diag(-1/k + i beta_k), b_k = k^{-3/8} on squares, 1/k else

def _ex1_control(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64)
    kf = k.astype(float)
    return np.where(_square_mask(k), kf ** -0.375, 1.0 / kf).astype(complex)


def _ex1_b_sq_tail(N: int) -> float:
    # squares l^2 > N contribute l^{-3/2}; sum_{l > L} <= 2/sqrt(L).
    # non-squares k > N contribute at most sum_{k > N} k^{-2} <= 1/N.
    L = math.isqrt(N)
    return 2.0 / math.sqrt(L) + 1.0 / N


def _ex1_tails(beta: BetaProfile) -> Tails:
    def b_sq(lo, hi):
        return _ex1_b_sq_tail(hi)

    def weighted(lo, hi):
        return _ex1_b_sq_tail(hi)

    def m_bound(lo, hi, side):
        # k |b_k|^2 = k^{1/4} on squares
        return (math.inf, math.inf)

    def criterion(lo, hi, z):
        x, y = z.real, abs(z.imag)
        # |z - lambda_k| > Re z for every mode
        crude = _ex1_b_sq_tail(hi) / x ** 2
        # beyond K, beta_k >= 2|Im z| so |Im z - beta_k| >= beta_k / 2
        K = beta.first_index_reaching(2.0 * y, hi + 1)
        beta_K = float(beta(np.array([K]))[0])
        far = 4.0 * _ex1_b_sq_tail(K - 1) / beta_K ** 2 if K - 1 >= 1 else math.inf
        near = _ex1_b_sq_tail(hi) / x ** 2 if K > hi + 1 else 0.0
        return min(crude, near + far)

    return Tails(b_sq, weighted, m_bound, criterion, sup_re=0.0)


def make_example1(N: int, beta_profile: BetaProfile | Callable | None = None) -> DiagonalSystem:
    """First example: ``lambda_k = -1/k + i beta_k`` over ``k = 1..N``.

    The control sequence is ``k^{-3/8}`` on perfect squares and ``1/k``
    elsewhere.  ``beta_profile`` defaults to ``beta_k = k``.
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    beta = BetaProfile.linear() if beta_profile is None else beta_profile
    if not isinstance(beta, BetaProfile):
        fn = beta
        vals = np.asarray(fn(np.arange(1, N + 1)), dtype=float)
        if vals.size > 1 and np.any(np.diff(vals) <= 0):
            raise ValueError("beta profile must be strictly increasing")
        beta = BetaProfile(tuple(vals.tolist()), 1.0)
    vals = beta(np.arange(1, N + 1))
    if vals.size > 1 and np.any(np.diff(vals) <= 0):
        raise ValueError("beta profile must be strictly increasing")

    def eig(k, _beta=beta):
        k = np.asarray(k, dtype=np.int64)
        return -1.0 / k.astype(float) + 1j * _beta(k)

    return DiagonalSystem(eig, _ex1_control, (1, N), "example1-A0", NATURALS,
                          _ex1_tails(beta), True, {"N": N, "beta_profile": beta.describe()})


# -- Example 2: A, A' on Z ---------------------------------------------------

def _ex2_control(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64)
    kf = np.abs(k).astype(float)
    with np.errstate(divide="ignore"):
        out = np.where(k > 0, 1.0 / kf, kf ** -0.5)
    out[k == 0] = 0.0
    return out.astype(complex)


def _ex2_negative(k: np.ndarray) -> np.ndarray:
    return -np.sqrt(np.abs(k).astype(float) + 1.0)


def _ex2_eig_A(k):
    k = np.asarray(k, dtype=np.int64)
    kf = k.astype(float)
    pos = k > 0
    out = _ex2_negative(k).astype(complex)
    out[pos] = -kf[pos] ** -0.5 + 1j * kf[pos]
    return out


def _ex2_eig_Aprime(k):
    k = np.asarray(k, dtype=np.int64)
    kf = k.astype(float)
    pos = k > 0
    out = _ex2_negative(k).astype(complex)
    out[pos] = -np.exp(-kf[pos]) + 1j * kf[pos]
    return out


def _neg_m_integral(a: float) -> float:
    # int_a^inf dm / (m sqrt(m+1))
    s = math.sqrt(a + 1.0)
    return math.log((s + 1.0) / (s - 1.0))


def _ex2_negative_criterion_tail(N: int, x: float) -> float:
    # (1/m) / ((x + sqrt(m+1))^2 + y^2) <= 1 / (m (m + c)),  c = 1 + x^2
    c = 1.0 + x * x
    return math.log1p(c / N) / c


def _ex2_positive_criterion_tail(N: int, z: complex, near_floor: Callable[[int], float]) -> float:
    # k > K >= 2|Im z|: |Im z - k| >= k/2, term <= 4/k^4.
    y = abs(z.imag)
    K = max(N, math.floor(2.0 * y))
    far = 4.0 / (3.0 * K ** 3)
    if K == N:
        return far
    # N < k <= K: term <= k^{-2} / floor^2 with sum_{N<k<=K} k^{-2} <= 1/N - 1/K
    return (1.0 / N - 1.0 / K) / near_floor(K) ** 2 + far


def _ex2_tails(prime: bool) -> Tails:
    def b_sq(lo, hi):
        return math.inf  # negative side: sum 1/|k| diverges

    def weighted(lo, hi):
        N = hi
        return 1.0 / (3.0 * N ** 3) + 1.0 / N

    def m_bound(lo, hi, side):
        N = hi
        pos = (math.inf, math.inf) if prime else (2.0 / math.sqrt(N + 0.5), 2.0 / math.sqrt(N))
        neg = (_neg_m_integral(N + 0.5), _neg_m_integral(N))
        if side == "positive":
            return pos
        if side == "negative":
            return neg
        return (pos[0] + neg[0], pos[1] + neg[1])

    def criterion(lo, hi, z):
        N = hi
        x = z.real
        if prime:
            floor = lambda K: x
        else:
            floor = lambda K: x + K ** -0.5
        return _ex2_positive_criterion_tail(N, z, floor) + _ex2_negative_criterion_tail(N, x)

    return Tails(b_sq, weighted, m_bound, criterion, sup_re=0.0)


def make_example2(N: int) -> tuple[DiagonalSystem, DiagonalSystem]:
    """Second example over ``k = -N..N``: the pair ``(A, A')`` sharing one control.

    ``A`` has ``-k^{-1/2} + ik`` and ``A'`` has ``-e^{-k} + ik`` for ``k > 0``;
    both have ``-(|k|+1)^{1/2}`` for ``k <= 0``.  The control is ``b_0 = 0``,
    ``b_k = 1/k`` for ``k > 0`` and ``|k|^{-1/2}`` for ``k < 0``.
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    params = {"N": N}
    A = DiagonalSystem(_ex2_eig_A, _ex2_control, (-N, N), "example2-A", INTEGERS,
                       _ex2_tails(False), True, params)
    Ap = DiagonalSystem(_ex2_eig_Aprime, _ex2_control, (-N, N), "example2-Aprime", INTEGERS,
                        _ex2_tails(True), True, params)
    return A, Ap


# -- control classification ----------------------------------------------

@dataclass(frozen=True)
class ControlClassification:
    kind: str
    norm_sq_window: float
    norm_sq_tail: float
    weighted_window: float
    weighted_tail: float

    @property
    def x_minus1_norm_sq(self) -> float:
        """Upper bound on ``sum |b_k|^2 / (1 + |lambda_k|^2)``."""
        return self.weighted_window + self.weighted_tail


def classify_control(sys: DiagonalSystem | TruncatedSystem) -> ControlClassification:
    """Bounded if ``sum |b_k|^2`` converges, unbounded if only the X_{-1} sum does."""
    if isinstance(sys, TruncatedSystem):
        lam, b, lo, hi, tails = sys.lam, sys.b, *sys.window, sys.origin.tails
    else:
        lam, b, (lo, hi), tails = sys.eigenvalues, sys.controls, sys.window, sys.tails
    b2 = np.abs(b) ** 2
    nsq = float(np.sum(b2))
    wsum = float(np.sum(b2 / (1.0 + np.abs(lam) ** 2)))
    nsq_tail = float(tails.b_sq(lo, hi))
    w_tail = float(tails.weighted(lo, hi))
    if math.isfinite(nsq_tail):
        kind = BOUNDED
    elif math.isfinite(w_tail):
        kind = UNBOUNDED
    else:
        kind = NOT_IN_X_MINUS_1
    return ControlClassification(kind, nsq, nsq_tail, wsum, w_tail)


# -- perturbations ---------------------------------------------------------

# Closed-form rank rules: (declared rank, bound on sup_{k > K} |q_k|).
_RANK_RULES: dict[tuple[str, str], tuple[str | int, Callable[[int], float]]] = {
    ("example2-A", "example2-Aprime"): ("infinite", lambda K: K ** -0.5 + math.exp(-K)),
}


@dataclass(frozen=True)
class PerturbationSequence:
    """Diagonal perturbation ``q_k = lambda'_k - lambda_k`` on a common window."""

    entries: np.ndarray
    indices: np.ndarray
    declared_rank: str | int
    beyond_window_bound: float
    beyond_rule: Callable[[int], float] | None = None

    @property
    def sup_abs(self) -> float:
        return max(float(np.max(np.abs(self.entries))), self.beyond_window_bound)

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.entries))

    def entry(self, k: int) -> complex:
        return complex(self.entries[int(k - self.indices[0])])

    def tail_sup(self) -> np.ndarray:
        """``sup_{|k| > K} |q_k|`` for ``K = 0..max|k|`` (window plus beyond-window bound).

        This is also the operator-norm error of the finite-rank cut-off that
        keeps only modes with ``|k| <= K``.
        """
        a = np.abs(self.entries)
        K = int(np.max(np.abs(self.indices)))
        by_radius = np.zeros(K + 1)
        np.maximum.at(by_radius, np.abs(self.indices), a)
        # suffix max over radii strictly greater than K
        out = np.empty(K + 1)
        running = self.beyond_window_bound
        for r in range(K, -1, -1):
            out[r] = running
            running = max(running, by_radius[r])
        return out

    def restrict(self, N: int, index_set: str) -> "PerturbationSequence":
        lo = -N if index_set == INTEGERS else int(self.indices[0])
        hi = N if index_set == INTEGERS else lo + N - 1
        off = int(self.indices[0])
        if lo < off or hi > int(self.indices[-1]):
            raise ValueError(f"restriction {lo}..{hi} exceeds window")
        inside = slice(lo - off, hi - off + 1)
        if self.beyond_rule is not None:
            beyond = self.beyond_rule(int(max(abs(lo), abs(hi))) + 1)
        else:
            dropped = np.abs(np.concatenate([self.entries[: inside.start], self.entries[inside.stop:]]))
            beyond = max(self.beyond_window_bound, float(dropped.max()) if dropped.size else 0.0)
        return PerturbationSequence(self.entries[inside], self.indices[inside], self.declared_rank,
                                    beyond, self.beyond_rule)


def _as_arrays(sys):
    if isinstance(sys, TruncatedSystem):
        return sys.lam, sys.indices, sys.origin
    return sys.eigenvalues, sys.indices, sys


def perturbation_between(A: DiagonalSystem | TruncatedSystem,
                         A_prime: DiagonalSystem | TruncatedSystem) -> PerturbationSequence:
    """Entrywise difference of two diagonal generators on the same window."""
    lam, idx, origin = _as_arrays(A)
    lam_p, idx_p, origin_p = _as_arrays(A_prime)
    if idx.shape != idx_p.shape or not np.array_equal(idx, idx_p):
        raise ValueError("perturbation_between needs identical index windows")
    q = lam_p - lam
    bound = None
    rule = _RANK_RULES.get((origin.family_tag, origin_p.family_tag))
    if rule is not None:
        rank, bound = rule
        beyond = bound(int(np.max(np.abs(idx))) + 1)
    elif origin.index_set == FINITE and origin_p.index_set == FINITE:
        rank, beyond = int(np.count_nonzero(q)), 0.0
    else:
        # no closed-form rule: finite only if the window edges are quiet
        edge = q[-1] if origin.index_set == NATURALS else (q[0], q[-1])
        rank = "infinite" if np.any(np.asarray(edge) != 0) else int(np.count_nonzero(q))
        beyond = math.nan if rank == "infinite" else 0.0
    return PerturbationSequence(_frozen(q), idx, rank, beyond, bound)
