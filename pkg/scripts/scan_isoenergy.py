"""Scan component counts of Q^3 over h for fixed (kappa, a, b), at two
sample sizes and two seeds, and report where the counts disagree."""
import argparse

from kovtop.scanner import ScanConfig, parse_grid, scan_h
from kovtop.system import OrbitParams, is_regular_orbit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=2.0)
    ap.add_argument("--b", type=float, default=0.5)
    ap.add_argument("--h", default="-2.5:4.2:12")
    ap.add_argument("--samples", type=int, default=ScanConfig.samples)
    ap.add_argument("--seed", type=int, default=ScanConfig.seed)
    ap.add_argument("--critical", action="store_true")
    ap.add_argument("--json", help="write the base report here")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    if not is_regular_orbit(OrbitParams(args.kappa, args.a, args.b)):
        raise SystemExit("orbit is not regular")
    grid = parse_grid(args.h)
    cfg = ScanConfig(workers=args.workers)
    runs = {
        "n, seed": scan_h(args.kappa, args.a, args.b, grid, args.samples, args.seed,
                          critical=args.critical, config=cfg),
        "n, seed+1": scan_h(args.kappa, args.a, args.b, grid, args.samples, args.seed + 1, config=cfg),
        "2n, seed": scan_h(args.kappa, args.a, args.b, grid, 2 * args.samples, args.seed, config=cfg),
    }
    print(f"{'h':>9} " + " ".join(f"{k:>10}" for k in runs) + "  stable")
    for i, h in enumerate(grid):
        counts = [r.rows[i].components for r in runs.values()]
        shown = " ".join(f"{'-' if c is None else c:>10}" for c in counts)
        crit = runs["n, seed"].rows[i].critical_K
        extra = f"  K*={[round(k, 6) for k in crit]}" if crit else ""
        print(f"{h:9.4f} {shown}  {'yes' if len(set(counts)) == 1 else 'NO'}{extra}")
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(runs["n, seed"].dumps() + "\n")


if __name__ == "__main__":
    main()
