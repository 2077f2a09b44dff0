"""Exact multiplicities of spin-j representations in N-slot, L-photon sectors.

Spins are carried as ``twice_j`` integers throughout; nothing here touches
floating point.  Two occupancy models are supported:

* ``Restricted`` -- at most one photon per slot (an L-qubit ensemble spread
  over N slots), closed form.
* ``General`` -- arbitrary occupancy, computed by a recursion over the
  number of slots.

``oracle_multiplicity`` recomputes both by highest-weight counting and
shares no code with the closed form or the recursion.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from functools import total_ordering
from math import comb

from .errors import DomainError


class OccupancyMode(enum.Enum):
    RESTRICTED = "restricted"
    GENERAL = "general"

    @classmethod
    def parse(cls, value: "OccupancyMode | str") -> "OccupancyMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(
                f"unknown occupancy mode {value!r} (expected 'restricted' or 'general')"
            ) from None


@total_ordering
@dataclass(frozen=True)
class SpinLabel:
    """A spin j stored as the integer 2j."""

    twice_j: int

    def __post_init__(self):
        if not isinstance(self.twice_j, int) or isinstance(self.twice_j, bool):
            raise DomainError(f"twice_j must be an int, got {self.twice_j!r}")
        if self.twice_j < 0:
            raise DomainError(f"twice_j must be >= 0, got {self.twice_j}")

    def __lt__(self, other: "SpinLabel") -> bool:
        return self.twice_j < other.twice_j

    @property
    def dim(self) -> int:
        return self.twice_j + 1

    def __str__(self) -> str:
        if self.twice_j % 2:
            return f"{self.twice_j}/2"
        return str(self.twice_j // 2)


@dataclass(frozen=True)
class SectorKey:
    """The (N, L, j) label of an isotypic sector."""

    n_slots: int
    photons: int
    spin: SpinLabel

    def __post_init__(self):
        if isinstance(self.spin, int):
            object.__setattr__(self, "spin", SpinLabel(self.spin))
        if self.n_slots < 1:
            raise DomainError(f"n_slots must be >= 1, got {self.n_slots}")
        if self.photons < 0:
            raise DomainError(f"photons must be >= 0, got {self.photons}")
        if self.spin.twice_j > self.photons:
            raise DomainError(
                f"2j = {self.spin.twice_j} exceeds the photon number L = {self.photons}"
            )
        if (self.spin.twice_j - self.photons) % 2:
            raise DomainError(
                f"parity mismatch: 2j = {self.spin.twice_j} and L = {self.photons} "
                f"must have equal parity"
            )

    @property
    def twice_j(self) -> int:
        return self.spin.twice_j

    @classmethod
    def of(cls, n_slots: int, photons: int, twice_j: int) -> "SectorKey":
        return cls(n_slots, photons, SpinLabel(twice_j))


def allowed_spins(photons: int) -> list[SpinLabel]:
    """Spins that occur among L photons, ascending: (L mod 2)/2, ..., L/2."""
    if photons < 0:
        raise DomainError(f"photons must be >= 0, got {photons}")
    return [SpinLabel(t) for t in range(photons % 2, photons + 1, 2)]


def sector_dimension(n_slots: int, photons: int, mode: OccupancyMode | str) -> int:
    """Dimension of the (N, L) photon-number sector."""
    mode = OccupancyMode.parse(mode)
    if n_slots < 1 or photons < 0:
        raise DomainError(f"invalid sector N={n_slots}, L={photons}")
    if mode is OccupancyMode.RESTRICTED:
        return comb(n_slots, photons) * 2**photons
    return comb(photons + 2 * n_slots - 1, 2 * n_slots - 1)


def _check_restricted(key: SectorKey) -> None:
    if key.photons > key.n_slots:
        raise DomainError(
            f"restricted occupancy needs L <= N, got L={key.photons} > N={key.n_slots}"
        )


def _check_spin(photons: int, twice_j: int) -> None:
    # builds a throwaway key only to reuse its validation
    SectorKey(1, photons, SpinLabel(twice_j))


def qubit_ensemble_multiplicity(photons: int, spin: SpinLabel | int) -> int:
    """Number of spin-j copies in L qubits: (2j+1)/(L+1) * C(L+1, L/2 - j)."""
    twice_j = spin.twice_j if isinstance(spin, SpinLabel) else spin
    _check_spin(photons, twice_j)
    numerator = (twice_j + 1) * comb(photons + 1, (photons - twice_j) // 2)
    value, rest = divmod(numerator, photons + 1)
    assert rest == 0
    return value


def restricted_multiplicity(key: SectorKey) -> int:
    """Multiplicity with at most one photon per slot: C(N, L) times the qubit count."""
    _check_restricted(key)
    return comb(key.n_slots, key.photons) * qubit_ensemble_multiplicity(
        key.photons, key.spin
    )


def tensor_product_spins(j1: SpinLabel, j2: SpinLabel) -> list[SpinLabel]:
    """Clebsch-Gordan series of j1 x j2, ascending."""
    lo = abs(j1.twice_j - j2.twice_j)
    hi = j1.twice_j + j2.twice_j
    return [SpinLabel(t) for t in range(lo, hi + 1, 2)]


class GeneralMultiplicityCache:
    """Memo of the slot recursion, keyed by (N, L, 2j) and filled bottom-up in N.

    Level N is computed for all photon numbers up to the largest L requested
    so far; a request for more photons recomputes every level up to N.
    Filling happens under a lock, reads of completed levels do not mutate.
    """

    def __init__(self):
        self.table: dict[tuple[int, int, int], int] = {}
        self._photon_cap = -1
        self._slot_cap = 0
        self._lock = threading.Lock()

    def clear(self) -> None:
        with self._lock:
            self.table.clear()
            self._photon_cap = -1
            self._slot_cap = 0

    def _level(self, n_slots: int, max_photons: int) -> None:
        table = self.table
        for photons in range(max_photons + 1):
            for twice_j in range(photons % 2, photons + 1, 2):
                if n_slots == 1:
                    # one slot with L photons is exactly one spin-L/2 copy
                    table[(1, photons, twice_j)] = int(twice_j == photons)
                    continue
                a = (photons - twice_j) // 2
                b = (photons + twice_j) // 2
                total = 0
                for nu in range(a + 1):
                    for mu in range(a, b + 1):
                        total += table[(n_slots - 1, mu + nu, mu - nu)]
                table[(n_slots, photons, twice_j)] = total

    def ensure(self, n_slots: int, photons: int) -> None:
        if n_slots <= self._slot_cap and photons <= self._photon_cap:
            return
        with self._lock:
            if n_slots <= self._slot_cap and photons <= self._photon_cap:
                return
            if photons > self._photon_cap:
                start, cap = 1, photons
            else:
                start, cap = self._slot_cap + 1, self._photon_cap
            top = max(n_slots, self._slot_cap)
            for n in range(start, top + 1):
                self._level(n, cap)
            self._photon_cap = cap
            self._slot_cap = top

    def get(self, key: SectorKey) -> int:
        self.ensure(key.n_slots, key.photons)
        return self.table[(key.n_slots, key.photons, key.twice_j)]


_GENERAL_CACHE = GeneralMultiplicityCache()


def general_multiplicity(key: SectorKey) -> int:
    """Multiplicity with arbitrary occupancy, via the recursion over slots.

    K(N, L, j) = sum_{nu=0}^{L/2-j} sum_{mu=L/2-j}^{L/2+j} K(N-1, mu+nu, (mu-nu)/2)
    """
    return _GENERAL_CACHE.get(key)


def multiplicity(key: SectorKey, mode: OccupancyMode | str) -> int:
    mode = OccupancyMode.parse(mode)
    if mode is OccupancyMode.RESTRICTED:
        return restricted_multiplicity(key)
    return general_multiplicity(key)


# --- independent counting oracle -------------------------------------------


def _slot_weights(mode: OccupancyMode, max_photons: int) -> list[tuple[int, int]]:
    """(photons, n_H - n_V) for every single-slot occupation (n_H, n_V)."""
    if mode is OccupancyMode.RESTRICTED:
        return [(0, 0), (1, 1), (1, -1)]
    return [
        (n_h + n_v, n_h - n_v)
        for n_h in range(max_photons + 1)
        for n_v in range(max_photons + 1 - n_h)
    ]


def weight_count(
    n_slots: int, photons: int, twice_m: int, mode: OccupancyMode | str
) -> int:
    """Count occupation vectors with L photons in total and J_z weight m.

    Dynamic programme over slots; the state is (photons so far, 2m so far).
    """
    mode = OccupancyMode.parse(mode)
    if n_slots < 1 or photons < 0:
        raise DomainError(f"invalid sector N={n_slots}, L={photons}")
    if (twice_m - photons) % 2:
        raise DomainError(
            f"parity mismatch: 2m = {twice_m} and L = {photons} must have equal parity"
        )
    if abs(twice_m) > photons:
        return 0
    slot = _slot_weights(mode, photons)
    counts = {(0, 0): 1}
    for _ in range(n_slots):
        nxt: dict[tuple[int, int], int] = {}
        for (p, w), c in counts.items():
            for dp, dw in slot:
                if p + dp <= photons:
                    k = (p + dp, w + dw)
                    nxt[k] = nxt.get(k, 0) + c
        counts = nxt
    return counts.get((photons, twice_m), 0)


def oracle_multiplicity(key: SectorKey, mode: OccupancyMode | str) -> int:
    """Highest-weight count: #states at m = j minus #states at m = j + 1."""
    mode = OccupancyMode.parse(mode)
    if mode is OccupancyMode.RESTRICTED:
        _check_restricted(key)
    n, lam, t = key.n_slots, key.photons, key.twice_j
    return weight_count(n, lam, t, mode) - weight_count(n, lam, t + 2, mode)


# --- derived queries ---------------------------------------------------------


def optimal_spin(
    n_slots: int, photons: int, mode: OccupancyMode | str
) -> tuple[SpinLabel, int]:
    """Spin with the largest multiplicity for fixed (N, L), and that multiplicity.

    Exhaustive over j; ties go to the larger j so that a hybrid encoding is
    reported only when it strictly beats the pure-phase one.
    """
    mode = OccupancyMode.parse(mode)
    best: tuple[SpinLabel, int] | None = None
    for spin in allowed_spins(photons):
        value = multiplicity(SectorKey(n_slots, photons, spin), mode)
        if best is None or value >= best[1]:
            best = (spin, value)
    assert best is not None
    return best


def rule_optimal_spin(photons: int) -> SpinLabel:
    """Largest j of the right parity with j <= sqrt(L+2)/2 (restricted occupancy).

    From the sign of K(j) - K(j-1), which is the sign of (L+2) - (2j)^2.
    """
    if photons < 0:
        raise DomainError(f"photons must be >= 0, got {photons}")
    t = photons % 2
    while (t + 2) <= photons and (t + 2) ** 2 <= photons + 2:
        t += 2
    return SpinLabel(t)


def is_hybrid(n_slots: int, photons: int, mode: OccupancyMode | str) -> bool:
    """Does the best spin for (N, L) strictly beat pure phase encoding?

    The pure-phase benchmark is the (N, L) entry j = L/2 for general occupancy.
    With at most one photon per slot the photon number is a free choice up to
    N, so the benchmark is the best pure-phase entry over all L <= N.
    """
    mode = OccupancyMode.parse(mode)
    spin, value = optimal_spin(n_slots, photons, mode)
    if spin.twice_j == photons:
        return False
    if mode is OccupancyMode.GENERAL:
        return True
    pure_best = max(
        restricted_multiplicity(SectorKey(n_slots, lam, SpinLabel(lam)))
        for lam in range(n_slots + 1)
    )
    return value > pure_best


def message_count(n_slots: int, max_photons: int, mode: OccupancyMode | str) -> int:
    """Distinguishable classical messages with at most ``max_photons`` photons."""
    mode = OccupancyMode.parse(mode)
    if mode is OccupancyMode.RESTRICTED and max_photons > n_slots:
        raise DomainError(
            f"restricted occupancy needs L <= N, got L={max_photons} > N={n_slots}"
        )
    if max_photons < 0:
        raise DomainError(f"max_photons must be >= 0, got {max_photons}")
    return sum(
        multiplicity(SectorKey(n_slots, lam, spin), mode)
        for lam in range(max_photons + 1)
        for spin in allowed_spins(lam)
    )
