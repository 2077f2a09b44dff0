"""Cross-checks between the closed form, the recursion, counting and spectra."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, Optional

from .fock_sim import basis_dimension, sector_multiplicity_numeric
from .multiplicity import (
    OccupancyMode,
    SectorKey,
    allowed_spins,
    multiplicity,
    oracle_multiplicity,
)

NUMERIC_DIM_LIMIT = 2000


@dataclass(frozen=True)
class Failure:
    check: str
    mode: OccupancyMode
    n_slots: int
    photons: int
    twice_j: Optional[int]
    detail: str

    def __str__(self) -> str:
        j = "" if self.twice_j is None else f" 2j={self.twice_j}"
        return f"{self.check} [{self.mode.value}] N={self.n_slots} L={self.photons}{j}: {self.detail}"


def _sectors(mode: OccupancyMode, max_slots: int, max_photons: int):
    for n in range(1, max_slots + 1):
        top = min(n, max_photons) if mode is OccupancyMode.RESTRICTED else max_photons
        for lam in range(top + 1):
            yield n, lam


def expected_sector_dimension(n_slots: int, photons: int, mode: OccupancyMode) -> int:
    if mode is OccupancyMode.RESTRICTED:
        return comb(n_slots, photons) * 2**photons
    return comb(photons + 2 * n_slots - 1, 2 * n_slots - 1)


def verify_identities(
    max_slots: int,
    max_photons: int,
    modes: Iterable[OccupancyMode] = (OccupancyMode.RESTRICTED, OccupancyMode.GENERAL),
    numeric: bool = False,
) -> list[Failure]:
    """Oracle equivalence and dimension sums; optionally the spectral count too."""
    failures = []
    for mode in modes:
        for n, lam in _sectors(mode, max_slots, max_photons):
            dim_sum = 0
            numeric_here = numeric and basis_dimension(n, lam, mode) <= NUMERIC_DIM_LIMIT
            for spin in allowed_spins(lam):
                key = SectorKey(n, lam, spin)
                k = multiplicity(key, mode)
                dim_sum += spin.dim * k
                oracle = oracle_multiplicity(key, mode)
                if k != oracle:
                    failures.append(Failure("oracle", mode, n, lam, spin.twice_j,
                                            f"formula {k} != counting {oracle}"))
                if numeric_here:
                    spectral = sector_multiplicity_numeric(key, mode)
                    if spectral != oracle:
                        failures.append(Failure("spectral", mode, n, lam, spin.twice_j,
                                                f"spectral {spectral} != counting {oracle}"))
            expected = expected_sector_dimension(n, lam, mode)
            if dim_sum != expected:
                failures.append(Failure("dimension", mode, n, lam, None,
                                        f"sum (2j+1)K = {dim_sum} != {expected}"))
    return failures
