"""Walk the molecule-25 reconstruction through the rewrite moves, printing
each intermediate molecule with its first homology."""
import argparse

from kovtop.classify import MOVES, classify, replay
from kovtop.corpus import default_corpus_dir, load_molecule_file
from kovtop.homology import first_homology
from kovtop.molecule import serialize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("path", nargs="?", default=str(default_corpus_dir() / "molecules" / "m25.mol"))
    args = ap.parse_args()

    m = load_molecule_file(args.path)
    result = classify(m)
    print(f"start  H1 = {first_homology(m)}")
    print(serialize(m))
    state = m
    for step in result.trace:
        if step.move == "base_case":
            print(f"base case -> {step.target}")
            continue
        state = MOVES[step.move](state, step.target)
        print(f"{step.move} on {step.target}  H1 = {first_homology(state)}")
        print(serialize(state))
    replay(m, result.trace)
    print(f"result: {result.label()} (trace replays, {len(result.trace)} steps)")


if __name__ == "__main__":
    main()
