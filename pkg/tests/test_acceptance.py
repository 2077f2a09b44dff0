"""Exit criteria of the build, one test per criterion.

Run alone with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import time
from math import comb

import numpy as np
import pytest

from noiseless.capacity import LOG2_3, capacity_sweep, fit_asymptote, geometric_grid
from noiseless.cli import main
from noiseless.fock_sim import (
    StateVector,
    basis_dimension,
    enumerate_basis,
    logical_fidelity_check,
    noiseless_basis,
    random_logical_state,
    sector_multiplicity_numeric,
    twirl_exact,
    twirl_monte_carlo,
)
from noiseless.multiplicity import (
    SectorKey,
    allowed_spins,
    general_multiplicity,
    oracle_multiplicity,
    restricted_multiplicity,
)
from noiseless.tables_io import parse_table_csv

from conftest import ACCEPTANCE_RESULTS, G, R

pytestmark = pytest.mark.acceptance


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for the running criterion."""
    label = request.node.function.__doc__.strip().splitlines()[0]
    if hasattr(request.node, "callspec"):
        label += f" [{request.node.callspec.id}]"
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    rep = getattr(request.node, "rep_call", None)
    status = "PASS" if rep is not None and rep.passed else "FAIL"
    ACCEPTANCE_RESULTS.append(f"{status}  {label}  ({elapsed:.2f} s)")


def _table_from_cli(capsys, *argv):
    code = main(list(argv))
    out, _ = capsys.readouterr()
    assert code == 0
    return out


def _assert_cells(golden_dir, capsys, mode, name, argv):
    start = time.perf_counter()
    out = _table_from_cli(capsys, *argv)
    elapsed = time.perf_counter() - start
    rendered = {(c.n_slots, c.photons, c.spin): c for c in parse_table_csv(out, mode).cells}
    golden_doc = parse_table_csv((golden_dir / name).read_text(), mode)
    for cell in golden_doc.cells:
        assert rendered[(cell.n_slots, cell.photons, cell.spin)] == cell
    return rendered, elapsed


def test_table_one_reproduction(criterion, capsys, golden_dir):
    """1. Restricted table reproduction (restricted, N<=6, L<=6): exact cells and flags, < 1 s"""
    rendered, elapsed = _assert_cells(
        golden_dir, capsys, R, "table1_restricted.csv",
        ["table", "--mode", "restricted", "--max-slots", "6", "--max-photons", "6", "--format", "csv"],
    )
    key = lambda n, lam, t: rendered[(n, lam, SectorKey.of(n, lam, t).spin)]
    assert key(4, 3, 1).multiplicity == 8 and key(4, 3, 1).optimal
    assert key(6, 4, 2).multiplicity == 45 and key(6, 4, 2).optimal
    assert [key(6, 6, t).multiplicity for t in (4, 2, 0)] == [5, 9, 5]
    assert elapsed < 1.0


def test_table_two_reproduction(criterion, capsys, golden_dir):
    """2. General table reproduction (general, N<=8, L<=4): exact cells and flags, < 1 s"""
    rendered, elapsed = _assert_cells(
        golden_dir, capsys, G, "table2_general.csv",
        ["table", "--mode", "general", "--max-slots", "8", "--max-photons", "4"],
    )
    key = lambda n, lam, t: rendered[(n, lam, SectorKey.of(n, lam, t).spin)]
    assert key(5, 3, 1).multiplicity == 40 and key(5, 3, 1).optimal
    assert key(8, 4, 2).multiplicity == 630 and key(8, 4, 2).optimal
    assert key(8, 4, 0).multiplicity == 336
    assert elapsed < 1.0


def test_oracle_triangle(criterion):
    """3. Oracle triangle: closed form / recursion = counting = spectral (dim <= 2000), < 2 min"""
    start = time.perf_counter()
    spectral_checked = 0
    for mode, max_n, photon_range in [(R, 8, lambda n: range(n + 1)), (G, 6, lambda n: range(7))]:
        formula = restricted_multiplicity if mode is R else general_multiplicity
        for n in range(1, max_n + 1):
            for lam in photon_range(n):
                spectral = basis_dimension(n, lam, mode) <= 2000
                for s in allowed_spins(lam):
                    key = SectorKey(n, lam, s)
                    counted = oracle_multiplicity(key, mode)
                    assert formula(key) == counted, (mode, key)
                    if spectral:
                        assert sector_multiplicity_numeric(key, mode) == counted, (mode, key)
                        spectral_checked += 1
    assert spectral_checked > 100
    assert time.perf_counter() - start < 120


def test_dimension_sums(criterion):
    """4. Dimension sums for N<=8, L<=8 in both modes, exact, < 5 s"""
    start = time.perf_counter()
    for n in range(1, 9):
        for lam in range(9):
            spins = allowed_spins(lam)
            assert sum(s.dim * general_multiplicity(SectorKey(n, lam, s)) for s in spins) == comb(
                lam + 2 * n - 1, 2 * n - 1
            )
            if lam <= n:
                assert sum(
                    s.dim * restricted_multiplicity(SectorKey(n, lam, s)) for s in spins
                ) == comb(n, lam) * 2**lam
    assert time.perf_counter() - start < 5


def test_capacity_asymptotics(criterion):
    """5. Capacities to N=16384: approach log2(3) within 0.05, exponents in [0.74, 0.94], <L>/N -> 2/3, < 2 min"""
    start = time.perf_counter()
    grid = geometric_grid(2, 16384)
    for kind in ("quantum", "classical"):
        points = capacity_sweep(grid, kind)
        gaps = [LOG2_3 - p.bits_per_slot for p in points]
        assert all(g > 0 for g in gaps)
        assert all(b <= a for a, b in zip(gaps, gaps[1:])), kind
        assert gaps[-1] < 0.05
        fit = fit_asymptote(points)
        assert 0.74 <= fit.exponent <= 0.94, (kind, fit)
        assert abs(points[-1].avg_photons_per_slot - 2 / 3) < 0.05
    assert time.perf_counter() - start < 120


@pytest.mark.parametrize("twice_j_key", [(3, 3, 1), (4, 3, 1), (4, 4, 0)])
def test_noiseless_subsystem_property(criterion, twice_j_key):
    """6. Per-sample logical fidelity >= 1 - 1e-9 over 100 Haar samples (restricted), < 1 min"""
    start = time.perf_counter()
    key = SectorKey.of(*twice_j_key)
    nb = noiseless_basis(key, R)
    if key.photons == key.n_slots:
        # the N=L=3 and N=L=4 sectors are the two-dimensional subsystems
        assert nb.logical_dim == 2
    logical = random_logical_state(nb.logical_dim, seed=2024)
    report = logical_fidelity_check(key, R, logical, samples=100, seed=2024)
    assert report.fidelities.size == 100
    assert report.min_fidelity >= 1 - 1e-9
    assert time.perf_counter() - start < 60


def test_twirl_convergence(criterion):
    """7. Twirl on N=2, L<=2: MC error shrinks 4x (within 2x) from M=1e3 to 1.6e4; exact twirl idempotent, < 30 s"""
    start = time.perf_counter()
    basis = enumerate_basis(2, mode=G, max_photons=2)
    rng = np.random.default_rng(7)
    psi = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    rho = StateVector(basis, psi / np.linalg.norm(psi)).density()
    exact = twirl_exact(rho)
    small = np.linalg.norm(twirl_monte_carlo(rho, 1000, seed=7).matrix - exact.matrix)
    large = np.linalg.norm(twirl_monte_carlo(rho, 16000, seed=7).matrix - exact.matrix)
    assert 2.0 <= small / large <= 8.0
    again = twirl_exact(exact)
    assert np.abs(again.matrix - exact.matrix).max() < 1e-10
    assert time.perf_counter() - start < 30
