import itertools
from pathlib import Path

import pytest

from noiseless.multiplicity import OccupancyMode

GOLDEN = Path(__file__).parent / "golden"

# filled by the ``criterion`` fixture of test_acceptance.py
ACCEPTANCE_RESULTS: list[str] = []

R = OccupancyMode.RESTRICTED
G = OccupancyMode.GENERAL


def brute_force_occupations(n_slots, photons, mode):
    """Every occupation vector with exactly ``photons`` photons, by full enumeration."""
    cap = 1 if mode is R else photons
    per_slot = [(h, v) for h in range(cap + 1) for v in range(cap + 1) if h + v <= cap]
    for combo in itertools.product(per_slot, repeat=n_slots):
        if sum(h + v for h, v in combo) == photons:
            yield combo


def brute_force_weight_count(n_slots, photons, twice_m, mode):
    return sum(
        1
        for combo in brute_force_occupations(n_slots, photons, mode)
        if sum(h - v for h, v in combo) == twice_m
    )


@pytest.fixture
def golden_dir():
    return GOLDEN


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, f"rep_{rep.when}", rep)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
