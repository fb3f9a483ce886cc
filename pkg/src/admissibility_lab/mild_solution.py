"""Input map ``Phi_t(u) = int_0^t e^{As} B u(s) ds`` for diagonal systems.

Inputs are finite sums of modulated pieces ``a * exp(-i w s)`` on ``[s0, s1)``,
for which every mode integral has an exact antiderivative.  The Simpson
oracle at the bottom evaluates the integrand pointwise and is only meant to
check the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral_core import TruncatedSystem

__all__ = [
    "InputSignal",
    "Piece",
    "QuadratureResult",
    "TruncatedState",
    "cexpm1",
    "default_time_grid",
    "make_un_signal",
    "mode_integral",
    "phi1",
    "phi_state",
    "phi_sup_norm",
    "quadrature_oracle",
    "random_signal",
]

# |mu * length| below this uses the series of expm1(w)/w
SERIES_THRESHOLD = 1e-8


def cexpm1(w):
    """``exp(w) - 1`` for complex ``w`` without cancellation near zero."""
    w = np.asarray(w, dtype=complex)
    x, y = w.real, w.imag
    em1 = np.expm1(x)
    s = np.sin(0.5 * y)
    real = em1 * np.cos(y) - 2.0 * s * s
    imag = np.exp(x) * np.sin(y)
    return real + 1j * imag


def phi1(w):
    """``(exp(w) - 1) / w`` with the removable singularity filled in."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, w)
    out = cexpm1(safe) / safe
    return np.where(small, 1.0 + 0.5 * w, out)


@dataclass(frozen=True)
class Piece:
    start: float
    stop: float
    amplitude: complex
    omega: float = 0.0

    def __post_init__(self):
        if not self.stop > self.start:
            raise ValueError(f"piece needs start < stop, got [{self.start}, {self.stop})")
        if self.start < 0:
            raise ValueError("pieces live on [0, inf)")


@dataclass(frozen=True)
class InputSignal:
    """``u(s) = amplitude * exp(-i omega s)`` on each piece, zero elsewhere."""

    pieces: tuple[Piece, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        for a, b in zip(self.pieces, self.pieces[1:]):
            if b.start < a.stop:
                raise ValueError("signal pieces must be ordered and disjoint")

    @classmethod
    def zero(cls) -> "InputSignal":
        return cls(())

    @property
    def norm(self) -> float:
        return math.sqrt(sum(abs(p.amplitude) ** 2 * (p.stop - p.start) for p in self.pieces))

    @property
    def support_end(self) -> float:
        return self.pieces[-1].stop if self.pieces else 0.0

    @property
    def breakpoints(self) -> list[float]:
        pts = set()
        for p in self.pieces:
            pts.update((p.start, p.stop))
        return sorted(pts)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape, dtype=complex)
        for p in self.pieces:
            on = (s >= p.start) & (s < p.stop)
            out[on] = p.amplitude * np.exp(-1j * p.omega * s[on])
        return out

    def scaled(self, c: complex) -> "InputSignal":
        return InputSignal(tuple(Piece(p.start, p.stop, c * p.amplitude, p.omega) for p in self.pieces))

    def __add__(self, other: "InputSignal") -> "InputSignal":
        # only disjoint supports are representable
        pieces = sorted(self.pieces + other.pieces, key=lambda p: p.start)
        return InputSignal(tuple(pieces))


def make_un_signal(n: int, beta_n: float) -> InputSignal:
    """Unit-norm witness ``n^{-1/2} chi_[0,n](s) exp(-i beta_n s)``."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    return InputSignal((Piece(0.0, float(n), n ** -0.5, float(beta_n)),))


def random_signal(rng: np.random.Generator, n_pieces: int = 3, span: float = 6.0,
                  omega_max: float = 16.0, unit_norm: bool = True) -> InputSignal:
    """Random piecewise signal on ``[0, span]`` (gaps allowed), optionally of unit norm."""
    cuts = np.sort(rng.uniform(0.0, span, size=2 * n_pieces))
    pieces = []
    for i in range(n_pieces):
        s0, s1 = float(cuts[2 * i]), float(cuts[2 * i + 1])
        if s1 - s0 < 1e-3:
            s1 = s0 + 1e-3
        amp = complex(rng.normal(), rng.normal())
        pieces.append(Piece(s0, s1, amp, float(rng.uniform(-omega_max, omega_max))))
    # nudge overlaps created by the minimum length
    fixed = [pieces[0]]
    for p in pieces[1:]:
        if p.start < fixed[-1].stop:
            shift = fixed[-1].stop - p.start
            p = Piece(p.start + shift, p.stop + shift, p.amplitude, p.omega)
        fixed.append(p)
    sig = InputSignal(tuple(fixed))
    return sig.scaled(1.0 / sig.norm) if unit_norm else sig


def mode_integral(lam, signal: InputSignal, t: float):
    """``int_0^t u(s) exp(lam s) ds`` by the exact antiderivative on each piece.

    ``lam`` may be an array; the result has its shape.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    lam = np.asarray(lam, dtype=complex)
    out = np.zeros(lam.shape, dtype=complex)
    for p in signal.pieces:
        s0 = max(p.start, 0.0)
        s1 = min(p.stop, t)
        if s1 <= s0:
            continue
        mu = lam - 1j * p.omega
        length = s1 - s0
        out += p.amplitude * np.exp(mu * s0) * length * phi1(mu * length)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class TruncatedState:
    values: np.ndarray
    indices: np.ndarray
    time: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def phi_state(sys: TruncatedSystem, signal: InputSignal, t: float) -> TruncatedState:
    return TruncatedState(sys.b * mode_integral(sys.lam, signal, t), sys.indices, float(t))


def default_time_grid(signal: InputSignal, n_geometric: int = 48, horizon: float | None = None) -> np.ndarray:
    """Geometric grid up to ``horizon`` merged with every piece endpoint."""
    end = signal.support_end
    horizon = horizon if horizon is not None else max(4.0 * end, 1.0)
    lo = min(1e-3, horizon / 10)
    geo = np.geomspace(lo, horizon, n_geometric)
    pts = np.concatenate([geo, np.asarray(signal.breakpoints, dtype=float)])
    pts = pts[pts > 0]
    return np.unique(pts)


def phi_sup_norm(sys: TruncatedSystem, signal: InputSignal, t_grid: Sequence[float] | None = None
                 ) -> tuple[float, float]:
    """Largest ``||Phi_t(u)||`` over a time grid, with the maximizing time.

    A grid only ever gives a lower bound on the supremum over all ``t``.
    """
    grid = default_time_grid(signal) if t_grid is None else np.asarray(t_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty time grid")
    best, arg = -1.0, float(grid[0])
    for t in grid:
        v = phi_state(sys, signal, float(t)).norm
        if v > best:
            best, arg = v, float(t)
    return best, arg


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float
    converged: bool


def _simpson(f, a: float, b: float, m: int) -> complex:
    s = np.linspace(a, b, m + 1)
    y = f(s)
    h = (b - a) / m
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def quadrature_oracle(lam: complex, signal: InputSignal, t: float, panels_per_period: int = 16,
                      rtol: float = 1e-11, max_doublings: int = 14) -> QuadratureResult:
    """Composite Simpson with Richardson extrapolation, piece by piece.

    The integrand ``u(s) exp(lam s)`` is evaluated pointwise.  Panels are
    sized by the combined phase and decay rate of the integrand on the
    piece; the step is halved until successive estimates agree to ``rtol``.
    """
    if panels_per_period < 8:
        raise ValueError("panels_per_period must be >= 8")
    lam = complex(lam)
    total, err, ok = 0j, 0.0, True
    for p in signal.pieces:
        a, b = max(p.start, 0.0), min(p.stop, t)
        if b <= a:
            continue

        def f(s, p=p):
            return p.amplitude * np.exp(-1j * p.omega * s) * np.exp(lam * s)

        rate = abs(lam.imag - p.omega) + abs(lam.real)
        m = max(8, math.ceil((b - a) * rate / (2 * math.pi) * panels_per_period))
        m += m % 2
        coarse = _simpson(f, a, b, m)
        for _ in range(max_doublings):
            m *= 2
            fine = _simpson(f, a, b, m)
            e = abs(fine - coarse) / 15.0
            est = fine + (fine - coarse) / 15.0
            if e <= rtol * (1.0 + abs(est)):
                break
            coarse = fine
        else:
            ok = False
        total += est
        err += e
    return QuadratureResult(complex(total), err, ok)
