"""Resolvent test for infinite-time admissibility of diagonal systems.

For a diagonal generator with eigenvalues in the open left half-plane and a
scalar control ``(b_k)``, the control is infinite-time admissible exactly
when ``Re z * S(z)`` stays bounded on the right half-plane, where
``S(z) = sum |b_k|^2 / |z - lambda_k|^2``.  Here ``S`` is evaluated on a
truncation with a closed-form bound for the omitted modes, and the
supremum is probed on a grid, on mirrored eigenvalues and on user points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .spectral_core import TruncatedSystem, is_in_I1

__all__ = [
    "CriterionReport",
    "GridSpec",
    "MBound",
    "ProbePoint",
    "criterion_sum",
    "criterion_sums",
    "example1_divergence_witness",
    "m_bound",
    "probe_example2",
    "resolvent_control_norm",
    "sup_search",
]

ADMISSIBLE = "admissible"
NOT_ADMISSIBLE = "not-admissible"
INCONCLUSIVE = "inconclusive"

ONE_MINUS_INV_E_SQ = math.expm1(-1.0) ** 2


@dataclass(frozen=True)
class ProbePoint:
    z: complex
    source: str = "user"
    label: int | None = None

    def __post_init__(self):
        z = complex(self.z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)) or not z.real > 0:
            raise ValueError(f"probe point must satisfy Re z > 0, got {z}")
        object.__setattr__(self, "z", z)

    def to_dict(self) -> dict:
        d = {"re": self.z.real, "im": self.z.imag, "source": self.source}
        if self.label is not None:
            d["n"] = self.label
        return d


def probe_example2(n: int) -> ProbePoint:
    """``z_n = e^{-n} + i n``; rejected once ``e^{-n}`` underflows to zero."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    re = math.exp(-n)
    if re == 0.0:
        raise ValueError(f"exp(-{n}) underflows to 0; z_n would leave the open right half-plane")
    return ProbePoint(complex(re, n), "paper-example2", n)


def _ratios(z: np.ndarray, sys: TruncatedSystem) -> np.ndarray:
    # |b_k| / |z - lambda_k|, kept unsquared so tiny distances do not underflow
    return np.abs(sys.b)[None, :] / np.abs(z[:, None] - sys.lam[None, :])


def criterion_sums(sys: TruncatedSystem, zs, chunk: int = 256) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``(S(z), Re z * S(z), tail bound on S(z))`` over many points.

    Sums run along contiguous rows, so numpy's pairwise reduction applies
    and the result does not depend on how the points are chunked.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    if np.any(~(zs.real > 0)):
        raise ValueError("criterion sums need Re z > 0")
    S = np.empty(zs.size)
    xS = np.empty(zs.size)
    for i in range(0, zs.size, chunk):
        z = zs[i:i + chunk]
        with np.errstate(over="ignore", divide="ignore"):
            r = _ratios(z, sys)
            S[i:i + chunk] = np.sum(r * r, axis=1)
            rx = r * np.sqrt(z.real)[:, None]
            xS[i:i + chunk] = np.sum(rx * rx, axis=1)
    tails = np.array([sys.criterion_tail(complex(z)) for z in zs])
    return S, xS, tails


def criterion_sum(sys: TruncatedSystem, z: complex | ProbePoint) -> tuple[float, float]:
    """Windowed ``S(z)`` and a bound on the omitted modes' contribution."""
    z = z.z if isinstance(z, ProbePoint) else ProbePoint(z).z
    S, _, tail = criterion_sums(sys, [z])
    return float(S[0]), float(tail[0])


def resolvent_control_norm(sys: TruncatedSystem, z: complex | ProbePoint) -> float:
    """``||(z - A)^{-1} B||``; for scalar input and diagonal A this is ``sqrt(S(z))``."""
    z = z.z if isinstance(z, ProbePoint) else complex(z)
    x = (sys.b / (z - sys.lam))
    return float(np.linalg.norm(x))


@dataclass(frozen=True)
class MBound:
    """``sum |b_k|^2 / |Re lambda_k|`` split into window part and tail."""

    window: float
    tail_estimate: float
    tail_upper: float

    @property
    def divergent(self) -> bool:
        return not math.isfinite(self.tail_upper) or not math.isfinite(self.window)

    @property
    def value(self) -> float:
        return self.window + self.tail_estimate

    @property
    def upper(self) -> float:
        return self.window + self.tail_upper

    def to_json(self):
        return "divergent" if self.divergent else self.upper


def m_bound(sys: TruncatedSystem, side: str = "both") -> MBound:
    """Sufficient constant for the resolvent test, with an integral-test tail.

    ``side`` restricts integer-indexed systems to ``k > 0`` ("positive") or
    ``k < 0`` ("negative").
    """
    if side not in ("both", "positive", "negative"):
        raise ValueError(f"unknown side {side!r}")
    mask = np.ones(sys.size, dtype=bool)
    if side == "positive":
        mask = sys.indices > 0
    elif side == "negative":
        mask = sys.indices < 0
    b2 = np.abs(sys.b[mask]) ** 2
    re = np.abs(sys.lam[mask].real)
    live = b2 > 0
    with np.errstate(divide="ignore", over="ignore"):
        window = float(np.sum(b2[live] / re[live]))
    est, up = sys.m_tail(side)
    return MBound(window, float(est), float(up))


def example1_divergence_witness(n: int) -> float:
    """Lower bound ``(1 - e^{-1})^2 n^{1/4}`` on ``sup_t ||Phi_t||^2`` via the input ``u_n``."""
    if not is_in_I1(n):
        raise ValueError(f"{n} is not a perfect square")
    return ONE_MINUS_INV_E_SQ * n ** 0.25


@dataclass(frozen=True)
class GridSpec:
    re_min: float = 1e-6
    re_max: float = 1e2
    n_re: int = 60
    n_im: int = 400
    im_pad: float = 10.0
    mirrors: bool = True
    # mirrors closer to the axis than this overflow S(z) in double precision
    mirror_re_floor: float = 1e-150

    def __post_init__(self):
        if self.n_re < 1 or self.n_im < 1:
            raise ValueError("empty grid")
        if not 0 < self.re_min <= self.re_max:
            raise ValueError("grid needs 0 < re_min <= re_max")

    def points(self, sys: TruncatedSystem) -> np.ndarray:
        re = np.geomspace(self.re_min, self.re_max, self.n_re)
        im_lo = float(sys.lam.imag.min()) - self.im_pad
        im_hi = float(sys.lam.imag.max()) + self.im_pad
        im = np.linspace(im_lo, im_hi, self.n_im)
        R, I = np.meshgrid(re, im, indexing="ij")
        return (R + 1j * I).ravel()

    def to_dict(self) -> dict:
        return {"re_min": self.re_min, "re_max": self.re_max, "n_re": self.n_re,
                "n_im": self.n_im, "im_pad": self.im_pad, "mirrors": self.mirrors,
                "mirror_re_floor": self.mirror_re_floor}


@dataclass(frozen=True)
class CriterionReport:
    sup_estimate: float
    witness: ProbePoint
    M_bound: MBound
    tail_bound_at_witness: float
    verdict: str
    witness_sequence: list[tuple[int, float, float | None]]
    rows: np.ndarray = field(repr=False, compare=False, default=None)

    def to_dict(self) -> dict:
        return {
            "sup_estimate": self.sup_estimate,
            "witness": self.witness.to_dict(),
            "M_bound": self.M_bound.to_json(),
            "tail_bound_at_witness": self.tail_bound_at_witness,
            "verdict": self.verdict,
            "witness_sequence": [list(w) for w in self.witness_sequence],
        }

    CSV_HEADER = ("re_z", "im_z", "S", "rezS", "tail")


def _paper_bound(p: ProbePoint) -> float | None:
    if p.source != "paper-example2" or p.label is None:
        return None
    n = p.label
    return math.exp(n) / (4.0 * n * n)


def sup_search(sys: TruncatedSystem, grid: GridSpec | None = None,
               extra_probes: Iterable[ProbePoint] = (), divergence_threshold: float = 1e3
               ) -> CriterionReport:
    """Probe ``sup Re z * S(z)`` and render a verdict.

    ``admissible`` needs a finite certified ``M`` (then ``Re z S(z) <= M/2``
    holds everywhere).  ``not-admissible`` needs the extra probes, taken in
    order, to form a strictly increasing witness sequence whose last value
    exceeds ``divergence_threshold``; finite computation cannot show more.
    """
    grid = GridSpec() if grid is None else grid
    pts = [grid.points(sys)]
    sources = [np.full(pts[0].size, 0)]
    if grid.mirrors:
        mirror = np.abs(sys.lam.real) + 1j * sys.lam.imag
        mirror = mirror[mirror.real >= grid.mirror_re_floor]
        pts.append(mirror)
        sources.append(np.full(mirror.size, 1))
    probes = list(extra_probes)
    if probes:
        pts.append(np.array([p.z for p in probes]))
        sources.append(np.full(len(probes), 2))
    zs = np.concatenate(pts)
    src = np.concatenate(sources)
    if zs.size == 0:
        raise ValueError("nothing to evaluate")

    S, xS, tails = criterion_sums(sys, zs)
    best = int(np.argmax(xS))
    if src[best] == 2:
        witness = probes[best - (zs.size - len(probes))]
    else:
        witness = ProbePoint(zs[best], "grid" if src[best] == 0 else "eigenvalue-mirror")

    seq = []
    if probes:
        base = zs.size - len(probes)
        for j, p in enumerate(probes):
            label = p.label if p.label is not None else j + 1
            seq.append((label, float(xS[base + j]), _paper_bound(p)))

    M = m_bound(sys)
    if not M.divergent and float(xS.max()) <= 0.5 * M.upper * (1 + 1e-12):
        verdict = ADMISSIBLE
    elif (len(seq) >= 2 and all(b[1] > a[1] for a, b in zip(seq, seq[1:]))
          and seq[-1][1] > divergence_threshold
          and all(w[2] is None or w[1] >= w[2] * (1 - 1e-12) for w in seq)):
        verdict = NOT_ADMISSIBLE
    else:
        verdict = INCONCLUSIVE

    rows = np.column_stack([zs.real, zs.imag, S, xS, tails])
    return CriterionReport(float(xS[best]), witness, M, float(tails[best]), verdict, seq, rows)
