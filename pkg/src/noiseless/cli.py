"""Command-line interface: ``nss <command> [flags]``.

Exit codes: 0 success, 1 usage or domain error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import __version__
from .capacity import CapacityKind, fit_asymptote, geometric_grid
from .errors import DomainError, ResourceError
from .fock_sim import logical_fidelity_check, noiseless_basis, random_logical_state
from .multiplicity import OccupancyMode, SectorKey, is_hybrid, multiplicity
from .tables_io import (
    emit_figure_data,
    is_optimal_entry,
    read_figure_data,
    render_table,
    serialize_noiseless_basis,
    write_text,
)
from .verify import verify_identities

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2
SEED_MAX = 2**64 - 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for verification failures
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    command: str
    flags: dict
    argv: list[str] = field(default_factory=list)
    seed: Optional[int] = None
    dim_guard: Optional[int] = None
    out: Optional[str] = None

    def header_lines(self) -> list[str]:
        lines = [f"nss {__version__}", "command: nss " + shlex.join(self.argv)]
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        return lines


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonnegative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def parse_grid(spec: str) -> list[int]:
    """``geometric:<start>:<stop>`` (doubling) or ``list:a,b,c``."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "geometric":
            start, stop = rest.split(":")
            return geometric_grid(int(start), int(stop))
        if kind == "list":
            values = [int(x) for x in rest.split(",")]
            if not values:
                raise ValueError
            return values
    except ValueError:
        pass
    raise DomainError(
        f"malformed grid {spec!r} (expected geometric:<start>:<stop> or list:a,b,c)"
    )


def _add_sector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--slots", type=_positive, required=True)
    p.add_argument("--photons", type=_nonnegative, required=True)
    p.add_argument("--spin2", type=_nonnegative, required=True, help="twice the spin j")
    p.add_argument("--mode", choices=[m.value for m in OccupancyMode], default="general")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nss {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("table", help="multiplicity table with pure-phase/optimal flags")
    p.add_argument("--mode", choices=[m.value for m in OccupancyMode], default="restricted")
    p.add_argument("--max-slots", type=_positive, required=True)
    p.add_argument("--max-photons", type=_positive, required=True)
    p.add_argument("--min-slots", type=_positive, default=1)
    p.add_argument("--min-photons", type=_nonnegative, default=0)
    p.add_argument("--format", choices=["csv", "json", "pretty"], default="csv")
    p.add_argument("--out")

    p = sub.add_parser("multiplicity", help="one sector: exact multiplicity and flags")
    _add_sector_flags(p)

    p = sub.add_parser("capacity", help="per-slot capacity series (figure data CSV)")
    p.add_argument("--kind", choices=["quantum", "classical", "both"], default="both")
    p.add_argument("--grid", default="geometric:2:16384")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--out")

    p = sub.add_parser("fit", help="power-law fit of a capacity series")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", choices=["quantum", "classical"])
    p.add_argument("--min-slots", type=_positive, default=100)

    p = sub.add_parser("verify", help="oracle-equivalence and dimension-sum suites")
    p.add_argument("--max-slots", type=_positive, default=6)
    p.add_argument("--max-photons", type=_nonnegative, default=6)
    p.add_argument("--mode", choices=["restricted", "general", "both"], default="both")
    p.add_argument("--numeric", action="store_true",
                   help="also compare spectral counts on sectors of dimension <= 2000")

    p = sub.add_parser("simulate", help="logical fidelity under Haar-random collective unitaries")
    _add_sector_flags(p)
    p.add_argument("--samples", type=_positive, default=100)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--gauge", type=_nonnegative, default=0, help="gauge index g (m = j - g)")
    p.add_argument("--dim-guard", type=_positive)

    p = sub.add_parser("basis", help="export an explicit noiseless-subsystem basis (JSON)")
    _add_sector_flags(p)
    p.add_argument("--dim-guard", type=_positive)
    p.add_argument("--out")
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        write_text(text, out)
    else:
        sys.stdout.write(text)


def _comments(cfg: RunConfig) -> str:
    return "".join(f"# {line}\n" for line in cfg.header_lines())


def cmd_table(args, cfg: RunConfig) -> int:
    body = render_table(args.mode, args.max_slots, args.max_photons, args.format,
                        args.min_slots, args.min_photons)
    if args.format == "json":
        _emit(body, args.out)
    else:
        _emit(_comments(cfg) + body, args.out)
    return EXIT_OK


def cmd_multiplicity(args, cfg: RunConfig) -> int:
    key = SectorKey.of(args.slots, args.photons, args.spin2)
    value = multiplicity(key, args.mode)
    flags = {
        "pure_phase": key.twice_j == key.photons,
        "optimal": is_optimal_entry(key, args.mode),
        "hybrid": is_hybrid(key.n_slots, key.photons, args.mode),
    }
    sys.stdout.write(_comments(cfg))
    print(value)
    print(" ".join(f"{k}={str(v).lower()}" for k, v in flags.items()))
    return EXIT_OK


def cmd_capacity(args, cfg: RunConfig) -> int:
    grid = parse_grid(args.grid)
    kinds = (
        [CapacityKind.QUANTUM, CapacityKind.CLASSICAL]
        if args.kind == "both" else [CapacityKind.parse(args.kind)]
    )
    emit_figure_data(grid, args.out or sys.stdout, kinds, cfg.header_lines(), args.workers)
    return EXIT_OK


def cmd_fit(args, cfg: RunConfig) -> int:
    points = read_figure_data(args.input)
    kinds = [CapacityKind.parse(args.kind)] if args.kind else list(
        dict.fromkeys(p.kind for p in points)
    )
    if not kinds:
        raise DomainError(f"{args.input} holds no capacity points")
    results = []
    for kind in kinds:
        series = [p for p in points if p.kind is kind]
        results.append((kind, fit_asymptote(series, min_slots=args.min_slots)))
    sys.stdout.write(_comments(cfg))
    for kind, fit in results:
        print(f"kind={kind.value} limit={fit.limit!r} amplitude={fit.amplitude!r} "
              f"exponent={fit.exponent!r} residual={fit.residual!r} points={fit.n_points}")
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    modes = list(OccupancyMode) if args.mode == "both" else [OccupancyMode.parse(args.mode)]
    failures = verify_identities(args.max_slots, args.max_photons, modes, args.numeric)
    sys.stdout.write(_comments(cfg))
    if failures:
        for f in failures:
            print(f"FAIL {f}")
        print(f"{len(failures)} failing identities")
        return EXIT_VERIFY
    print("all identities hold")
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    key = SectorKey.of(args.slots, args.photons, args.spin2)
    nb = noiseless_basis(key, args.mode, args.dim_guard)
    logical = random_logical_state(nb.logical_dim, args.seed)
    report = logical_fidelity_check(key, args.mode, logical, args.samples, args.seed,
                                    gauge_index=args.gauge, guard=args.dim_guard)
    sys.stdout.write(_comments(cfg))
    print(f"sector N={key.n_slots} L={key.photons} j={key.spin} mode={nb.mode.value} "
          f"logical_dim={nb.logical_dim} gauge_dim={nb.gauge_dim}")
    print(f"samples={args.samples}")
    print(f"min_fidelity={report.min_fidelity!r}")
    print(f"mean_fidelity={report.mean_fidelity!r}")
    print(f"max_leakage={report.max_leakage!r}")
    return EXIT_OK


def cmd_basis(args, cfg: RunConfig) -> int:
    key = SectorKey.of(args.slots, args.photons, args.spin2)
    nb = noiseless_basis(key, args.mode, args.dim_guard)
    header = {"version": __version__, "command": "nss " + shlex.join(cfg.argv)}
    serialize_noiseless_basis(nb, args.out or sys.stdout, header)
    return EXIT_OK


COMMANDS = {
    "table": cmd_table,
    "multiplicity": cmd_multiplicity,
    "capacity": cmd_capacity,
    "fit": cmd_fit,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "basis": cmd_basis,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    cfg = RunConfig(
        command=args.command,
        flags={k: v for k, v in vars(args).items() if k != "command"},
        argv=argv,
        seed=getattr(args, "seed", None),
        dim_guard=getattr(args, "dim_guard", None),
        out=getattr(args, "out", None),
    )
    try:
        return COMMANDS[args.command](args, cfg)
    except (DomainError, ResourceError, OSError) as exc:
        print(f"nss {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
