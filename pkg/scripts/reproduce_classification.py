"""Classify every shipped molecule and propagate types over the arrow file.

Prints the per-type id lists, the seeds with their origin and the ids that
no seed reaches; ``--json`` writes the propagation report.
"""
import argparse
import json

from kovtop.classify import classify
from kovtop.corpus import load_corpus, run_propagation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--corpus", help="corpus directory (default: shipped data)")
    ap.add_argument("--json", help="write the report here")
    args = ap.parse_args()

    corpus = load_corpus(args.corpus)
    print("shipped molecules:")
    for i, m in sorted(corpus.molecules.items()):
        c = classify(m)
        print(f"  {i:2d}  {c.label():32s} H1 = {c.h1}  ({len(c.trace)} steps)")
    report = run_propagation(corpus)
    print("\nseeds:")
    for i, (t, src) in sorted(report.seeds.items()):
        print(f"  {i:2d}  {str(t):32s} {src}")
    print("\ntypes after propagation:")
    for t, ids in report.rows():
        print(f"  {str(t):32s} {', '.join(map(str, ids))}")
    print(f"\nunreached: {', '.join(map(str, report.unreached)) or '-'}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


if __name__ == "__main__":
    main()
