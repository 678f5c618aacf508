"""Loading the shipped molecule corpus and the seed/arrow data file."""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .classify import TypeConflict, classify, parse_class, propagate
from .homology import reverse_edge
from .molecule import Molecule, parse_molecule

CORPUS_ENV = "KOVTOP_CORPUS"
ARROWS_FILE = "table1_arrows.txt"
CONVENTIONS = ("canonical", "reversed")
_COMMENT = re.compile(r"(^|\s)#.*$")  # '#' inside a class name like (S1xS2)#(S1xS2) is not a comment


def default_corpus_dir() -> Path:
    override = os.environ.get(CORPUS_ENV)
    if override:
        return Path(override)
    return Path(str(resources.files("kovtop") / "data"))


@dataclass
class Corpus:
    ids: list
    molecules: dict = field(default_factory=dict)  # id -> Molecule
    seeds: dict = field(default_factory=dict)  # id -> (ManifoldClass, source)
    arrows: list = field(default_factory=list)  # (src, dst, label)

    def entries(self) -> dict:
        """id -> Molecule, or None for ids known only by number."""
        return {i: self.molecules.get(i) for i in self.ids}


def load_molecule_file(path: Path) -> Molecule:
    m = parse_molecule(Path(path).read_text())
    convention = m.meta.get("convention", "canonical")
    if convention not in CONVENTIONS:
        raise ValueError(f"{path}: unknown mark convention {convention!r}")
    if convention == "reversed":
        for e in list(m.edges):
            m = reverse_edge(m, e.key)
    return m


def parse_arrows(text: str) -> tuple:
    ids: list = []
    seeds: dict = {}
    arrows: list = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _COMMENT.sub("", raw).strip()
        if not line:
            continue
        head, *rest = line.split(None, 1)
        rest = rest[0] if rest else ""
        if head == "ids":
            mt = re.fullmatch(r"(\d+)-(\d+)", rest.strip())
            if not mt:
                raise ValueError(f"line {lineno}: bad id range {rest!r}")
            ids = list(range(int(mt.group(1)), int(mt.group(2)) + 1))
        elif head == "seed":
            parts = rest.split(None, 2)
            if len(parts) < 2:
                raise ValueError(f"line {lineno}: seed needs an id and a class")
            seeds[int(parts[0])] = (parse_class(parts[1]), parts[2] if len(parts) > 2 else "")
        elif head == "arrow":
            parts = rest.split(None, 2)
            if len(parts) < 2:
                raise ValueError(f"line {lineno}: arrow needs two ids")
            arrows.append((int(parts[0]), int(parts[1]), parts[2] if len(parts) > 2 else ""))
        else:
            raise ValueError(f"line {lineno}: unknown directive {head!r}")
    return ids, seeds, arrows


def load_corpus(directory: Path | str | None = None) -> Corpus:
    directory = Path(directory) if directory else default_corpus_dir()
    ids, seeds, arrows = parse_arrows((directory / ARROWS_FILE).read_text())
    molecules = {}
    mol_dir = directory / "molecules"
    for path in sorted(mol_dir.glob("*.mol")) if mol_dir.is_dir() else []:
        m = load_molecule_file(path)
        if "id" not in m.meta:
            raise ValueError(f"{path}: missing '#@ id:' header")
        molecules[int(m.meta["id"])] = m
    ids = ids or sorted(set(molecules) | set(seeds) | {x for a in arrows for x in a[:2]})
    return Corpus(ids, molecules, seeds, arrows)


@dataclass
class PropagationReport:
    types: dict  # id -> ManifoldClass
    seeds: dict  # id -> (ManifoldClass, source)
    unreached: list

    def rows(self) -> list:
        """``(class, sorted ids)`` grouped by type."""
        by_type: dict = {}
        for i, t in self.types.items():
            by_type.setdefault(t, []).append(i)
        return sorted(((t, sorted(v)) for t, v in by_type.items()), key=lambda r: r[1][0])

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "rows": [{"class": str(t), "ids": ids} for t, ids in self.rows()],
            "seeds": {str(i): {"class": str(t), "source": s} for i, (t, s) in sorted(self.seeds.items())},
            "unreached": self.unreached,
        }


def corpus_seeds(corpus: Corpus) -> dict:
    """Seeds from the data file plus classifications of shipped molecules."""
    seeds = dict(corpus.seeds)
    for i, m in sorted(corpus.molecules.items()):
        result = classify(m)
        if not result.known:
            continue
        if i in seeds and seeds[i][0] != result.manifold:
            raise TypeConflict([i], {seeds[i][0], result.manifold})
        seeds[i] = (result.manifold, "classify(" + m.meta.get("source", f"m{i:02d}") + ")")
    return seeds


def run_propagation(corpus: Corpus) -> PropagationReport:
    seeds = corpus_seeds(corpus)
    types = propagate(corpus.entries(), {i: t for i, (t, _) in seeds.items()}, corpus.arrows)
    unreached = sorted(i for i in corpus.ids if i not in types)
    return PropagationReport(types, seeds, unreached)
