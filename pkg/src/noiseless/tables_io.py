"""Multiplicity tables, figure data and noiseless-basis documents.

Table flags:

* ``pure_phase`` -- 2j = L, the completely symmetric (identically polarized) entry.
* ``optimal`` -- a hybrid entry (2j < L) that is the strict maximum of its group.
  Restricted tables group by column N (all L, j); general tables group by (N, L).
  Ties mark nothing, so a pure-phase entry that ties a hybrid one keeps the
  hybrid entry unmarked.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence, Union

import numpy as np

from .capacity import CapacityKind, CapacityPoint, capacity_sweep
from .errors import DomainError
from .fock_sim import FockBasis, NoiselessBasis
from .multiplicity import OccupancyMode, SectorKey, SpinLabel, allowed_spins, multiplicity

TABLE_COLUMNS = ("N", "L", "twice_j", "multiplicity", "pure_phase", "optimal")
FIGURE_COLUMNS = (
    "N", "kind", "bits_per_slot", "avg_photons_per_slot", "argmax_L", "argmax_twice_j",
)
BASIS_FORMAT = "nss-noiseless-basis/1"

PathOrFile = Union[str, os.PathLike, IO[str]]


@dataclass(frozen=True)
class TableCell:
    n_slots: int
    photons: int
    spin: SpinLabel
    multiplicity: int
    pure_phase: bool
    optimal: bool


@dataclass(frozen=True)
class TableDocument:
    mode: OccupancyMode
    max_slots: int
    max_photons: int
    cells: tuple[TableCell, ...]
    min_slots: int = 1
    min_photons: int = 0

    def rows(self) -> list[tuple[int, SpinLabel, dict[int, int], dict[int, tuple[bool, bool]]]]:
        """(L, j, {N: K}, {N: (pure_phase, optimal)}) in table order."""
        out: dict[tuple[int, int], tuple] = {}
        for c in self.cells:
            key = (c.photons, c.spin.twice_j)
            if key not in out:
                out[key] = (c.photons, c.spin, {}, {})
            out[key][2][c.n_slots] = c.multiplicity
            out[key][3][c.n_slots] = (c.pure_phase, c.optimal)
        return list(out.values())


def _cell_spins(photons: int) -> list[SpinLabel]:
    return sorted(allowed_spins(photons), reverse=True)


def _strict_winner(values: dict) -> Optional[object]:
    if not values:
        return None
    top = max(values.values())
    winners = [k for k, v in values.items() if v == top]
    return winners[0] if len(winners) == 1 else None


def build_table(
    mode: OccupancyMode | str,
    max_slots: int,
    max_photons: int,
    min_slots: int = 1,
    min_photons: int = 0,
) -> TableDocument:
    mode = OccupancyMode.parse(mode)
    if max_slots < 1 or max_photons < 1:
        raise DomainError(
            f"table bounds must be >= 1, got max_slots={max_slots}, max_photons={max_photons}"
        )
    if not 1 <= min_slots <= max_slots or not 0 <= min_photons <= max_photons:
        raise DomainError("lower table bounds must lie inside the upper bounds")
    restricted = mode is OccupancyMode.RESTRICTED

    values: dict[tuple[int, int, int], int] = {}
    for n in range(1, max_slots + 1):
        top = min(n, max_photons) if restricted else max_photons
        for lam in range(top + 1):
            for spin in _cell_spins(lam):
                values[(n, lam, spin.twice_j)] = multiplicity(SectorKey(n, lam, spin), mode)

    optimal = set()
    groups: dict[tuple, dict] = {}
    for (n, lam, t), k in values.items():
        group = (n,) if restricted else (n, lam)
        groups.setdefault(group, {})[(n, lam, t)] = k
    for members in groups.values():
        win = _strict_winner(members)
        if win is not None and win[2] < win[1]:
            optimal.add(win)

    cells = [
        TableCell(n, lam, SpinLabel(t), values[(n, lam, t)], t == lam, (n, lam, t) in optimal)
        for lam in range(min_photons, max_photons + 1)
        for t in (s.twice_j for s in _cell_spins(lam))
        for n in range(min_slots, max_slots + 1)
        if (n, lam, t) in values
    ]
    return TableDocument(mode, max_slots, max_photons, tuple(cells), min_slots, min_photons)


def is_optimal_entry(key: SectorKey, mode: OccupancyMode | str) -> bool:
    """Would ``key`` carry the optimal flag in a table covering its whole group?"""
    mode = OccupancyMode.parse(mode)
    n = key.n_slots
    if mode is OccupancyMode.RESTRICTED:
        keys = [SectorKey(n, lam, s) for lam in range(n + 1) for s in allowed_spins(lam)]
    else:
        keys = [SectorKey(n, key.photons, s) for s in allowed_spins(key.photons)]
    win = _strict_winner({k: multiplicity(k, mode) for k in keys})
    return win == key and key.twice_j < key.photons


def _flag(value: bool) -> str:
    return "true" if value else "false"


def table_to_csv(doc: TableDocument) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for c in doc.cells:
        writer.writerow(
            [c.n_slots, c.photons, c.spin.twice_j, str(c.multiplicity),
             _flag(c.pure_phase), _flag(c.optimal)]
        )
    return buf.getvalue()


def table_to_json(doc: TableDocument) -> str:
    payload = {
        "mode": doc.mode.value,
        "max_slots": doc.max_slots,
        "max_photons": doc.max_photons,
        "min_slots": doc.min_slots,
        "min_photons": doc.min_photons,
        "cells": [
            {
                "N": c.n_slots, "L": c.photons, "twice_j": c.spin.twice_j,
                "multiplicity": c.multiplicity,
                "pure_phase": c.pure_phase, "optimal": c.optimal,
            }
            for c in doc.cells
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def table_to_pretty(doc: TableDocument) -> str:
    """Grid layout: _K_ marks pure phase entries, K* optimal hybrid ones."""
    slots = list(range(doc.min_slots, doc.max_slots + 1))
    rows = doc.rows()
    def cell(k, flags):
        pure, best = flags
        return f"_{k}_" if pure else f"{k}*" if best else str(k)
    text_rows = [
        [str(lam), f"j={spin}"]
        + [cell(values[n], flags[n]) if n in values else "" for n in slots]
        for lam, spin, values, flags in rows
    ]
    header = ["L", "spin"] + [f"N={n}" for n in slots]
    widths = [max(len(r[i]) for r in [header] + text_rows) for i in range(len(header))]
    lines = [f"{doc.mode.value} occupancy multiplicities"]
    for r in [header] + text_rows:
        lines.append("  ".join(s.rjust(w) for s, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def render_table(
    mode: OccupancyMode | str,
    max_slots: int,
    max_photons: int,
    fmt: str = "csv",
    min_slots: int = 1,
    min_photons: int = 0,
) -> str:
    doc = build_table(mode, max_slots, max_photons, min_slots, min_photons)
    if fmt == "csv":
        return table_to_csv(doc)
    if fmt == "json":
        return table_to_json(doc)
    if fmt == "pretty":
        return table_to_pretty(doc)
    raise DomainError(f"unknown table format {fmt!r} (expected csv, json or pretty)")


def _data_lines(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln and not ln.startswith("#")]


def _parse_flag(value: str) -> bool:
    if value not in ("true", "false"):
        raise DomainError(f"bad boolean {value!r}")
    return value == "true"


def parse_table_csv(text: str, mode: OccupancyMode | str) -> TableDocument:
    """Inverse of ``table_to_csv``; '#' comment lines are skipped, bounds inferred."""
    mode = OccupancyMode.parse(mode)
    reader = csv.reader(_data_lines(text))
    header = next(reader, None)
    if tuple(header or ()) != TABLE_COLUMNS:
        raise DomainError(f"unexpected table header {header}")
    cells = []
    for row in reader:
        n, lam, t, k, pure, best = row
        cells.append(
            TableCell(int(n), int(lam), SpinLabel(int(t)), int(k),
                      _parse_flag(pure), _parse_flag(best))
        )
    if not cells:
        raise DomainError("table has no rows")
    return TableDocument(
        mode,
        max(c.n_slots for c in cells),
        max(c.photons for c in cells),
        tuple(cells),
        min(c.n_slots for c in cells),
        min(c.photons for c in cells),
    )


# --- output plumbing -------------------------------------------------------------


@contextlib.contextmanager
def _open_text(target: PathOrFile, mode: str):
    if hasattr(target, "write") or hasattr(target, "read"):
        yield target
        return
    path = Path(target)
    try:
        fh = open(path, mode, encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot open {path}: {exc.strerror}", str(path)) from exc
    with fh:
        yield fh


def write_text(text: str, out: PathOrFile) -> None:
    with _open_text(out, "w") as fh:
        fh.write(text)


def _comment_block(header_lines: Iterable[str]) -> str:
    return "".join(f"# {line}\n" for line in header_lines)


# --- figure data -----------------------------------------------------------------


def figure_rows_csv(points: Sequence[CapacityPoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIGURE_COLUMNS)
    for p in points:
        writer.writerow([
            p.n_slots,
            p.kind.value,
            repr(float(p.bits_per_slot)),
            repr(float(p.avg_photons_per_slot)),
            "" if p.achieving_photons is None else p.achieving_photons,
            "" if p.achieving_spin is None else p.achieving_spin.twice_j,
        ])
    return buf.getvalue()


def emit_figure_data(
    n_grid: Sequence[int],
    out: PathOrFile,
    kinds: Sequence[CapacityKind | str] = (CapacityKind.QUANTUM, CapacityKind.CLASSICAL),
    header_lines: Iterable[str] = (),
    workers: int = 1,
) -> list[CapacityPoint]:
    """Capacity series for every N and kind, one CSV row per (N, kind), N ascending."""
    series = [capacity_sweep(n_grid, k, workers=workers) for k in kinds]
    points = [p for group in zip(*series) for p in group]
    write_text(_comment_block(header_lines) + figure_rows_csv(points), out)
    return points


def read_figure_data(source: PathOrFile) -> list[CapacityPoint]:
    with _open_text(source, "r") as fh:
        text = fh.read()
    reader = csv.DictReader(_data_lines(text))
    if tuple(reader.fieldnames or ()) != FIGURE_COLUMNS:
        raise DomainError(f"unexpected figure-data header {reader.fieldnames}")
    points = []
    for row in reader:
        try:
            points.append(CapacityPoint(
                int(row["N"]),
                CapacityKind.parse(row["kind"]),
                float(row["bits_per_slot"]),
                float(row["avg_photons_per_slot"]),
                int(row["argmax_L"]) if row["argmax_L"] else None,
                SpinLabel(int(row["argmax_twice_j"])) if row["argmax_twice_j"] else None,
            ))
        except (TypeError, ValueError) as exc:
            raise DomainError(f"malformed figure-data row {row}: {exc}") from None
    return points


# --- noiseless basis documents -----------------------------------------------------


def noiseless_basis_document(nb: NoiselessBasis) -> dict:
    vec = nb.vectors
    return {
        "format": BASIS_FORMAT,
        "sector": {
            "n_slots": nb.sector.n_slots,
            "photons": nb.sector.photons,
            "twice_j": nb.sector.twice_j,
        },
        "mode": nb.mode.value,
        "logical_dim": nb.logical_dim,
        "gauge_dim": nb.gauge_dim,
        "basis": [list(s) for s in nb.basis.states],
        "vectors": [
            [[[float(z.real), float(z.imag)] for z in vec[k, g]] for g in range(nb.gauge_dim)]
            for k in range(nb.logical_dim)
        ],
    }


def serialize_noiseless_basis(
    nb: NoiselessBasis, out: PathOrFile, header: Optional[dict] = None
) -> None:
    doc = noiseless_basis_document(nb)
    if header:
        doc = {"meta": header, **doc}
    write_text(json.dumps(doc) + "\n", out)


def read_noiseless_basis(source: PathOrFile) -> NoiselessBasis:
    with _open_text(source, "r") as fh:
        doc = json.load(fh)
    if doc.get("format") != BASIS_FORMAT:
        raise DomainError(f"not a noiseless-basis document (format={doc.get('format')!r})")
    sec = doc["sector"]
    key = SectorKey.of(sec["n_slots"], sec["photons"], sec["twice_j"])
    mode = OccupancyMode.parse(doc["mode"])
    states = [tuple(s) for s in doc["basis"]]
    basis = FockBasis(key.n_slots, key.photons, key.photons, mode, states)
    arr = np.array(doc["vectors"], dtype=float)
    vectors = np.empty(arr.shape[:-1], dtype=complex)
    vectors.real, vectors.imag = arr[..., 0], arr[..., 1]
    shape = (doc["logical_dim"], doc["gauge_dim"], len(states))
    if vectors.shape != shape:
        raise DomainError(f"vector array has shape {vectors.shape}, expected {shape}")
    vectors.setflags(write=False)
    return NoiselessBasis(key, mode, basis, vectors)
