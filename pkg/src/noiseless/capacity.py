"""Per-slot quantum and classical capacities of the restricted scheme.

Small trains (N <= EXACT_LIMIT) are evaluated with exact integers.  Larger
trains use log-gamma arithmetic; the quantum maximum over j is taken at the
spin given by ``rule_optimal_spin`` (the multiplicity is unimodal in j for
fixed L), and the classical sum over j collapses to C(L, floor(L/2)).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError
from .multiplicity import (
    SectorKey,
    SpinLabel,
    allowed_spins,
    restricted_multiplicity,
)

LOG2_3 = math.log2(3)
EXACT_LIMIT = 64
MAX_SWEEP_SLOTS = 10**5
_LN2 = math.log(2)


class CapacityKind(enum.Enum):
    QUANTUM = "quantum"
    CLASSICAL = "classical"

    @classmethod
    def parse(cls, value: "CapacityKind | str") -> "CapacityKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(
                f"unknown capacity kind {value!r} (expected 'quantum' or 'classical')"
            ) from None


@dataclass(frozen=True)
class CapacityPoint:
    n_slots: int
    kind: CapacityKind
    bits_per_slot: float
    avg_photons_per_slot: float
    achieving_photons: Optional[int] = None
    achieving_spin: Optional[SpinLabel] = None


@dataclass(frozen=True)
class FitResult:
    """C_N ~ limit - amplitude * N**(-exponent); residual is the RMS log-space error."""

    limit: float
    amplitude: float
    exponent: float
    residual: float
    n_points: int


def _ln_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def log2_restricted_multiplicity(key: SectorKey) -> float:
    if key.photons > key.n_slots:
        raise DomainError(
            f"restricted occupancy needs L <= N, got L={key.photons} > N={key.n_slots}"
        )
    n, lam, t = key.n_slots, key.photons, key.twice_j
    ln = (
        _ln_binom(n, lam)
        + math.log(t + 1)
        - math.log(lam + 1)
        + _ln_binom(lam + 1, (lam - t) // 2)
    )
    return float(ln) / _LN2


def _rule_twice_j(photons: np.ndarray) -> np.ndarray:
    """Vectorised ``rule_optimal_spin``: largest 2j = L mod 2 with (2j)^2 <= L + 2."""
    t = np.floor(np.sqrt(photons + 2.0)).astype(np.int64)
    t = np.where(t * t > photons + 2, t - 1, t)
    t = np.where((t + 1) ** 2 <= photons + 2, t + 1, t)
    t = np.where((t - photons) % 2 != 0, t - 1, t)
    return np.minimum(t, photons)


def _check_slots(n_slots: int) -> None:
    if not isinstance(n_slots, (int, np.integer)) or n_slots < 1:
        raise DomainError(f"n_slots must be a positive integer, got {n_slots!r}")


def _quantum_exact(n_slots: int) -> CapacityPoint:
    best_value, best_l, best_spin = -1, 0, SpinLabel(0)
    for lam in range(n_slots + 1):
        for spin in allowed_spins(lam):
            value = restricted_multiplicity(SectorKey(n_slots, lam, spin))
            # strict '>' keeps the smallest L; '>=' within one L keeps the largest j
            if value > best_value or (value == best_value and lam == best_l):
                best_value, best_l, best_spin = value, lam, spin
    return CapacityPoint(
        n_slots,
        CapacityKind.QUANTUM,
        math.log2(best_value) / n_slots,
        best_l / n_slots,
        best_l,
        best_spin,
    )


def _quantum_log(n_slots: int) -> CapacityPoint:
    photons = np.arange(n_slots + 1, dtype=np.int64)
    twice_j = _rule_twice_j(photons)
    ln_k = (
        _ln_binom(n_slots, photons)
        + np.log(twice_j + 1.0)
        - np.log(photons + 1.0)
        + _ln_binom(photons + 1, (photons - twice_j) // 2)
    )
    i = int(np.argmax(ln_k))
    return CapacityPoint(
        n_slots,
        CapacityKind.QUANTUM,
        float(ln_k[i]) / _LN2 / n_slots,
        i / n_slots,
        i,
        SpinLabel(int(twice_j[i])),
    )


def quantum_capacity(n_slots: int) -> CapacityPoint:
    """(1/N) log2 of the largest restricted multiplicity over all (L, j)."""
    _check_slots(n_slots)
    n_slots = int(n_slots)
    if n_slots <= EXACT_LIMIT:
        return _quantum_exact(n_slots)
    return _quantum_log(n_slots)


def message_weights(n_slots: int) -> list[int]:
    """Exact W_L = sum_j K(N, L, j) for L = 0..N."""
    return [
        sum(restricted_multiplicity(SectorKey(n_slots, lam, s)) for s in allowed_spins(lam))
        for lam in range(n_slots + 1)
    ]


def mean_photons_per_slot(photons: np.ndarray, weights: np.ndarray, n_slots: int) -> float:
    """Photon number per slot averaged uniformly over all distinguishable messages.

    ``weights`` are natural-log message counts per photon number.
    """
    p = np.exp(weights - logsumexp(weights))
    return float(np.dot(p, photons)) / n_slots


def _classical_exact(n_slots: int) -> CapacityPoint:
    w = message_weights(n_slots)
    total = sum(w)
    mean = Fraction(sum(lam * x for lam, x in enumerate(w)), n_slots * total)
    return CapacityPoint(
        n_slots, CapacityKind.CLASSICAL, math.log2(total) / n_slots, float(mean)
    )


def _classical_log(n_slots: int) -> CapacityPoint:
    photons = np.arange(n_slots + 1, dtype=np.int64)
    # sum over j of the L-qubit multiplicities telescopes to C(L, floor(L/2))
    ln_w = _ln_binom(n_slots, photons) + _ln_binom(photons, photons // 2)
    bits = float(logsumexp(ln_w)) / _LN2 / n_slots
    return CapacityPoint(
        n_slots,
        CapacityKind.CLASSICAL,
        bits,
        mean_photons_per_slot(photons, ln_w, n_slots),
    )


def classical_capacity(n_slots: int) -> CapacityPoint:
    """(1/N) log2 of the number of distinguishable messages with up to N photons."""
    _check_slots(n_slots)
    n_slots = int(n_slots)
    if n_slots <= EXACT_LIMIT:
        return _classical_exact(n_slots)
    return _classical_log(n_slots)


def capacity_point(n_slots: int, kind: CapacityKind | str) -> CapacityPoint:
    if CapacityKind.parse(kind) is CapacityKind.QUANTUM:
        return quantum_capacity(n_slots)
    return classical_capacity(n_slots)


def capacity_sweep(
    n_grid: Sequence[int], kind: CapacityKind | str, workers: int = 1
) -> list[CapacityPoint]:
    kind = CapacityKind.parse(kind)
    grid = [int(n) for n in n_grid]
    if not grid:
        raise DomainError("capacity sweep needs a non-empty grid")
    if any(n < 1 for n in grid):
        raise DomainError(f"grid values must be positive, got {grid}")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must be sorted ascending")
    if grid[-1] > MAX_SWEEP_SLOTS:
        raise DomainError(f"grid maximum {grid[-1]} exceeds {MAX_SWEEP_SLOTS}")
    if workers <= 1:
        return [capacity_point(n, kind) for n in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: capacity_point(n, kind), grid))


def geometric_grid(start: int, stop: int) -> list[int]:
    """start, 2*start, 4*start, ... up to and including stop."""
    if start < 1 or stop < start:
        raise DomainError(f"invalid geometric grid {start}:{stop}")
    grid = []
    n = start
    while n <= stop:
        grid.append(n)
        n *= 2
    return grid


def fit_asymptote(
    points: Sequence[CapacityPoint], min_slots: int = 100, min_points: int = 5
) -> FitResult:
    """Fit log(log2(3) - C_N) = log(amplitude) - exponent * log(N) for N >= min_slots."""
    if len({p.kind for p in points}) > 1:
        raise DomainError("cannot fit a mixture of quantum and classical points")
    for p in points:
        if p.bits_per_slot >= LOG2_3:
            raise DomainError(
                f"point N={p.n_slots} has {p.bits_per_slot} >= log2(3); no gap to fit"
            )
    usable = [p for p in points if p.n_slots >= min_slots]
    if len(usable) < min_points:
        raise DomainError(
            f"need at least {min_points} points with N >= {min_slots}, got {len(usable)}"
        )
    x = np.log([float(p.n_slots) for p in usable])
    y = np.log([LOG2_3 - p.bits_per_slot for p in usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return FitResult(
        limit=LOG2_3,
        amplitude=float(np.exp(intercept)),
        exponent=float(-slope),
        residual=float(np.sqrt(np.mean(resid**2))),
        n_points=len(usable),
    )
