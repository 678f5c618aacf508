"""Command line entry point ``kovtop``.

Exit codes: 0 success, 1 domain error (validation, type conflict, move
failure, empty level set, failed check), 2 I/O or syntax error.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .algebra import COORDS, J1, VARIABLES, jacobi_defect, poisson_bracket
from .classify import MoveNotApplicable, TypeConflict, classify
from .corpus import default_corpus_dir, load_corpus, load_molecule_file, run_propagation
from .homology import UnsupportedAtom, first_homology
from .molecule import MoleculeSyntaxError, ValidationError, serialize
from .scanner import EmptyLevelSet, ScanConfig, parse_grid, scan_h
from .system import casimirs, first_integral, hamiltonian

DEFAULT_SEED = ScanConfig.seed
EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2

# corruptions for mutation testing of `verify`
MUTATIONS = {
    "K": lambda f1, f2, H, K: (f1, f2, H, K + J1),
    "H": lambda f1, f2, H, K: (f1, f2, H + J1 * J1 * J1, K),
    "f1": lambda f1, f2, H, K: (f1 + J1, f2, H, K),
    "f2": lambda f1, f2, H, K: (f1, f2 + J1 * J1, H, K),
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    paths: list = field(default_factory=list)
    seed: int = DEFAULT_SEED
    json: bool = False
    corpus: Path | None = None


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _check_paths(paths) -> None:
    for p in paths:
        if not Path(p).is_file():
            raise CliError(f"no such file: {p}", EXIT_IO)


# --- verify --------------------------------------------------------------

def verify_checks(mutate: str | None = None) -> list:
    """``[(name, residual Poly)]`` for every symbolic identity."""
    f1, f2 = casimirs()
    H, K = hamiltonian(), first_integral()
    if mutate:
        f1, f2, H, K = MUTATIONS[mutate](f1, f2, H, K)
    names = VARIABLES[:6]
    checks = []
    for fname, f in (("f1", f1), ("f2", f2)):
        for zname, z in zip(names, COORDS):
            checks.append((f"{{{fname},{zname}}}", poisson_bracket(f, z)))
    checks.append(("{H,K}", poisson_bracket(H, K)))
    for i, j, k in itertools.combinations_with_replacement(range(6), 3):
        checks.append((f"jacobi({names[i]},{names[j]},{names[k]})",
                       jacobi_defect(COORDS[i], COORDS[j], COORDS[k])))
    return checks


def cmd_verify(cfg: RunConfig, args) -> int:
    checks = verify_checks(args.mutate)
    failed = [(n, r) for n, r in checks if not r.is_zero()]
    if cfg.json:
        _emit({
            "schema": 1,
            "mutate": args.mutate,
            "checks": [{"name": n, "pass": r.is_zero(), "residual": str(r)} for n, r in checks],
            "passed": not failed,
        })
    else:
        for n, r in checks:
            print(f"{'PASS' if r.is_zero() else 'FAIL'} {n}" + ("" if r.is_zero() else f" = {r}"))
        print(f"{len(checks) - len(failed)}/{len(checks)} identities hold")
    return EXIT_DOMAIN if failed else EXIT_OK


# --- molecules -----------------------------------------------------------

def cmd_molecule_check(cfg: RunConfig, args) -> int:
    _check_paths(cfg.paths)
    out = []
    for path in cfg.paths:
        m = load_molecule_file(path)
        out.append({"path": str(path), "digest": m.digest(), "atoms": len(m.atoms), "edges": len(m.edges)})
        if args.format:
            sys.stdout.write(serialize(m))
    if cfg.json:
        _emit({"schema": 1, "molecules": out})
    elif not args.format:
        for row in out:
            print(f"ok {row['path']} atoms={row['atoms']} edges={row['edges']} digest={row['digest']}")
    return EXIT_OK


def cmd_homology(cfg: RunConfig, args) -> int:
    _check_paths(cfg.paths)
    g = first_homology(load_molecule_file(cfg.paths[0]))
    if cfg.json:
        _emit({"schema": 1, **g.to_json()})
    else:
        print(f"H1 = {g}")
    return EXIT_OK


def cmd_classify(cfg: RunConfig, args) -> int:
    _check_paths(cfg.paths)
    result = classify(load_molecule_file(cfg.paths[0]), max_moves=args.max_moves)
    if cfg.json:
        _emit(result.to_json(with_trace=args.trace))
    else:
        print(result.label())
        if result.h1 is not None:
            print(f"H1 = {result.h1}")
        if args.trace:
            for s in result.trace:
                print(f"  [{s.path}] {s.move} {s.target} -> {s.result}")
    return EXIT_OK if result.known else EXIT_DOMAIN


def cmd_propagate(cfg: RunConfig, args) -> int:
    directory = Path(args.corpus_dir) if args.corpus_dir else cfg.corpus or default_corpus_dir()
    if not directory.is_dir():
        raise CliError(f"no such corpus directory: {directory}", EXIT_IO)
    report = run_propagation(load_corpus(directory))
    if cfg.json:
        _emit(report.to_json())
    else:
        for t, ids in report.rows():
            print(f"{t}: {', '.join(map(str, ids))}")
        print(f"unreached: {', '.join(map(str, report.unreached)) or '-'}")
    return EXIT_OK


def cmd_scan(cfg: RunConfig, args) -> int:
    try:
        grid = parse_grid(args.h)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_IO) from None
    conf = ScanConfig(samples=args.samples, seed=cfg.seed, workers=args.workers,
                      radius_factor=args.radius_factor, svd_tol=args.svd_tol, tol=args.tol)
    on_cloud = None
    if args.csv:
        csv_dir = Path(args.csv)
        csv_dir.mkdir(parents=True, exist_ok=True)
        on_cloud = lambda i, cloud: cloud.to_csv(csv_dir / f"cloud_{i:03d}.csv")  # noqa: E731
    report = scan_h(args.kappa, args.a, args.b, grid, n=args.samples, seed=cfg.seed, c1=args.c1,
                    critical=args.critical, config=conf, on_cloud=on_cloud)
    target = args.json if args.json not in (None, False) else ("-" if cfg.json else None)
    if target == "-":
        sys.stdout.write(report.dumps() + "\n")
    else:
        if target:
            Path(target).write_text(report.dumps() + "\n")
        for row in report.rows:
            comp = "-" if row.components is None else row.components
            crit = f" critical_K={row.critical_K}" if row.critical_K else ""
            print(f"h={row.h:.6g} {row.status} samples={row.samples} components={comp}{crit}")
    bad = any(r.status == "singular-orbit" for r in report.rows)
    return EXIT_DOMAIN if bad else EXIT_OK


# --- parser --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kovtop", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--json", dest="json_global", action="store_true", help="machine-readable output")
    ap.add_argument("--corpus", type=Path, help="corpus directory (default: $KOVTOP_CORPUS or shipped data)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="exact Poisson-bracket identities")
    p.add_argument("--mutate", choices=sorted(MUTATIONS), help="corrupt one polynomial first")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("molecule", help="molecule file tooling")
    msub = p.add_subparsers(dest="action", required=True)
    q = msub.add_parser("check", help="parse and validate molecule files")
    q.add_argument("paths", nargs="+")
    q.add_argument("--format", action="store_true", help="print the canonical serialization")
    q.add_argument("--json", action="store_true")
    q.set_defaults(func=cmd_molecule_check)

    p = sub.add_parser("homology", help="first homology of the glued manifold")
    p.add_argument("paths", nargs=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_homology)

    p = sub.add_parser("classify", help="topological type by rewrite moves")
    p.add_argument("paths", nargs=1)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--max-moves", type=int, default=32)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("propagate", help="spread types over the arrow file")
    p.add_argument("corpus_dir", nargs="?")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("scan", help="sample Q^3 over a grid of h")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--h", required=True, help="lo:hi:steps or a single value")
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=ScanConfig.samples)
    p.add_argument("--tol", type=float, default=ScanConfig.tol)
    p.add_argument("--radius-factor", type=float, default=ScanConfig.radius_factor)
    p.add_argument("--svd-tol", type=float, default=ScanConfig.svd_tol)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--critical", action="store_true", help="also locate critical values of K")
    p.add_argument("--csv", help="directory for per-level point clouds")
    p.add_argument("--json", nargs="?", const="-", default=None, help="report path ('-' or no value: stdout)")
    p.add_argument("--seed", type=int, dest="scan_seed")
    p.set_defaults(func=cmd_scan)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = getattr(args, "scan_seed", None) or args.seed
    sub_json = getattr(args, "json", False)
    cfg = RunConfig(
        command=args.command,
        paths=getattr(args, "paths", []),
        seed=seed,
        json=bool(args.json_global or sub_json is True),
        corpus=args.corpus,
    )
    try:
        return args.func(cfg, args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (MoleculeSyntaxError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, TypeConflict, MoveNotApplicable, UnsupportedAtom, EmptyLevelSet, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
