"""Labeled molecules (Fomenko-Zieschang invariants): data model and DSL.

DSL, one statement per ``;``, ``#`` starts a comment::

    atom a1 A;
    atom b  saddle(0,3,0);
    edge a1.1 b.1 r=1/2 eps=-1;
    family [b] n=0;

Lines of the form ``#@ key: value`` carry file metadata (``id``,
``reconstructed``, ``convention``...) and survive a parse/serialize
roundtrip.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional


class MoleculeSyntaxError(ValueError):
    def __init__(self, message: str, line: int, token: str):
        super().__init__(f"line {line}: {message} (at {token!r})")
        self.line = line
        self.token = token


class ValidationError(ValueError):
    def __init__(self, diagnostics: list):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class AtomKind:
    """Atom A (``saddle=False``) or a saddle atom of given genus/valence/stars."""

    name: str
    genus: int = 0
    valence: int = 1
    stars: int = 0
    saddle: bool = True

    def __post_init__(self):
        if not self.saddle and (self.valence, self.genus, self.stars) != (1, 0, 0):
            raise ValueError("atom A has valence 1, genus 0, no stars")
        if self.genus < 0 or self.valence < 1 or self.stars < 0:
            raise ValueError(f"bad saddle parameters {self}")

    @property
    def is_A(self) -> bool:
        return not self.saddle

    @property
    def planar(self) -> bool:
        return self.saddle and self.genus == 0 and self.stars == 0

    def dsl(self) -> str:
        return self.name


A = AtomKind("A", 0, 1, 0, saddle=False)
B = AtomKind("B", 0, 3, 0)
C2 = AtomKind("C2", 0, 4, 0)
ASTAR = AtomKind("Astar", 0, 2, 1)
BUILTIN = {"A": A, "B": B, "C2": C2, "Astar": ASTAR}


def saddle_kind(genus: int, valence: int, stars: int = 0) -> AtomKind:
    """Saddle atom with the given shape, using the built-in name when one fits."""
    for kind in (B, C2, ASTAR):
        if (kind.genus, kind.valence, kind.stars) == (genus, valence, stars):
            return kind
    return AtomKind(f"saddle({genus},{valence},{stars})", genus, valence, stars)


@dataclass(frozen=True)
class EdgeMarks:
    """Marks of an edge. ``r`` is a Fraction in [0, 1) or ``None`` for infinity."""

    r: Optional[Fraction]
    eps: int = 1

    @property
    def infinite(self) -> bool:
        return self.r is None

    def dsl(self) -> str:
        r = "inf" if self.r is None else (str(self.r.numerator) if self.r.denominator == 1 else f"{self.r.numerator}/{self.r.denominator}")
        return f"r={r} eps={'+1' if self.eps > 0 else '-1'}"


INF = None


@dataclass(frozen=True, order=True)
class Edge:
    u: str
    su: int
    v: str
    sv: int
    marks: EdgeMarks = field(compare=False, default=EdgeMarks(Fraction(0)))

    @property
    def key(self) -> tuple:
        return (self.u, self.su, self.v, self.sv)

    def label(self) -> str:
        return f"{self.u}.{self.su}-{self.v}.{self.sv}"

    def ends(self) -> tuple:
        return ((self.u, self.su), (self.v, self.sv))

    def other(self, atom: str, slot: int) -> tuple:
        if (self.u, self.su) == (atom, slot):
            return (self.v, self.sv)
        return (self.u, self.su)


@dataclass(frozen=True)
class Family:
    atoms: frozenset
    n: int = 0

    def sorted_atoms(self) -> list:
        return sorted(self.atoms)


@dataclass(frozen=True)
class Molecule:
    atoms: dict
    edges: tuple
    families: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    # -- lookups ----------------------------------------------------------
    def edge(self, key) -> Edge:
        if isinstance(key, Edge):
            key = key.key
        if isinstance(key, str):
            for e in self.edges:
                if e.label() == key:
                    return e
            raise KeyError(key)
        for e in self.edges:
            if e.key == tuple(key):
                return e
        raise KeyError(key)

    def incident(self, atom: str) -> list:
        """``(slot, edge)`` pairs at ``atom``; a self-loop appears twice."""
        out = []
        for e in self.edges:
            if e.u == atom:
                out.append((e.su, e))
            if e.v == atom:
                out.append((e.sv, e))
        return sorted(out, key=lambda t: t[0])

    def edge_at(self, atom: str, slot: int) -> Edge:
        for s, e in self.incident(atom):
            if s == slot:
                return e
        raise KeyError((atom, slot))

    def family_of(self, atom: str) -> Optional[Family]:
        for fam in self.families:
            if atom in fam.atoms:
                return fam
        return None

    def saddles(self) -> list:
        return sorted(a for a, k in self.atoms.items() if k.saddle)

    def components(self) -> list:
        """Connected components as sorted lists of atom ids."""
        parent = {a: a for a in self.atoms}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in self.edges:
            if e.u in parent and e.v in parent:
                parent[find(e.u)] = find(e.v)
        groups: dict = {}
        for a in self.atoms:
            groups.setdefault(find(a), []).append(a)
        return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])

    def restrict(self, atoms) -> "Molecule":
        atoms = set(atoms)
        return Molecule(
            {a: k for a, k in self.atoms.items() if a in atoms},
            tuple(e for e in self.edges if e.u in atoms),
            tuple(f for f in self.families if f.atoms <= atoms),
        )

    def split_components(self) -> list:
        return [self.restrict(c) for c in self.components()]

    def digest(self) -> str:
        body = serialize(Molecule(self.atoms, self.edges, self.families))
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def __str__(self):
        return serialize(self)


def families(m: Molecule) -> list:
    """Components of the subgraph on saddle atoms induced by r = inf edges."""
    saddles = set(m.saddles())
    parent = {a: a for a in saddles}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in m.edges:
        if e.marks.infinite and e.u in saddles and e.v in saddles:
            parent[find(e.u)] = find(e.v)
    groups: dict = {}
    for a in saddles:
        groups.setdefault(find(a), set()).add(a)
    return sorted((frozenset(g) for g in groups.values()), key=lambda g: sorted(g))


def with_default_families(m: Molecule) -> Molecule:
    """Attach ``n = 0`` to every family that carries no mark yet."""
    stored = {f.atoms: f.n for f in m.families}
    fams = tuple(Family(g, stored.get(g, 0)) for g in families(m))
    extra = tuple(f for f in m.families if f.atoms not in {g.atoms for g in fams})
    return Molecule(m.atoms, m.edges, fams + extra, m.meta)


def validate(m: Molecule) -> list:
    diags = []
    used: dict = {}
    for e in m.edges:
        for atom, slot in e.ends():
            if atom not in m.atoms:
                diags.append(f"edge {e.label()}: unknown atom {atom!r}")
                continue
            kind = m.atoms[atom]
            if not 1 <= slot <= kind.valence:
                diags.append(f"edge {e.label()}: slot {slot} out of range for {atom} ({kind.name}, valence {kind.valence})")
                continue
            if (atom, slot) in used:
                diags.append(f"slot {atom}.{slot} used by more than one edge end")
            used[(atom, slot)] = e
        r = e.marks.r
        if r is not None and not (0 <= r < 1):
            diags.append(f"edge {e.label()}: r={r} not reduced to [0, 1)")
        if e.marks.eps not in (1, -1):
            diags.append(f"edge {e.label()}: eps={e.marks.eps} not +-1")
    for atom, kind in sorted(m.atoms.items()):
        for slot in range(1, kind.valence + 1):
            if (atom, slot) not in used:
                what = "valence" if kind.is_A else "boundary slot"
                diags.append(f"{what}: slot {atom}.{slot} has no edge")
    true_fams = set(families(m))
    seen = set()
    for fam in m.families:
        if fam.atoms not in true_fams:
            diags.append(f"family [{','.join(fam.sorted_atoms())}] is not an r=inf component of saddle atoms")
        elif fam.atoms in seen:
            diags.append(f"family [{','.join(fam.sorted_atoms())}] declared twice")
        seen.add(fam.atoms)
    return diags


# --- DSL ---------------------------------------------------------------

_ID = r"[A-Za-z_][A-Za-z0-9_+~']*"
_ATOM_RE = re.compile(rf"^atom\s+({_ID})\s+(\S+)$")
_EDGE_RE = re.compile(rf"^edge\s+({_ID})\.(\d+)\s+({_ID})\.(\d+)\s+r=(\S+)\s+eps=(\S+)$")
_FAMILY_RE = re.compile(r"^family\s+\[([^\]]*)\]\s+n=(\S+)$")
_SADDLE_RE = re.compile(r"^saddle\((\d+),(\d+),(\d+)\)$")


def parse_kind(text: str) -> AtomKind:
    if text in BUILTIN:
        return BUILTIN[text]
    mt = _SADDLE_RE.match(text.replace(" ", ""))
    if not mt:
        raise ValueError(f"unknown atom type {text!r}")
    g, v, s = (int(x) for x in mt.groups())
    return saddle_kind(g, v, s)


def parse_r(text: str) -> Optional[Fraction]:
    if text in ("inf", "oo", "∞"):
        return None
    return Fraction(text)


def parse_molecule(text: str, check: bool = True) -> Molecule:
    meta = {}
    statements = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("#@"):
            key, _, value = stripped[2:].partition(":")
            meta[key.strip()] = value.strip()
            continue
        body = line.split("#", 1)[0]
        for chunk in body.split(";"):
            if chunk.strip():
                statements.append((lineno, " ".join(chunk.split())))
        if body.strip() and not body.rstrip().endswith(";"):
            raise MoleculeSyntaxError("statement not terminated by ';'", lineno, body.strip().split(";")[-1].strip())

    atoms: dict = {}
    edges = []
    fams = []
    for lineno, st in statements:
        head = st.split(" ", 1)[0]
        if head == "atom":
            mt = _ATOM_RE.match(st)
            if not mt:
                raise MoleculeSyntaxError("malformed atom statement", lineno, st)
            try:
                kind = parse_kind(mt.group(2))
            except ValueError:
                raise MoleculeSyntaxError("unknown atom type", lineno, mt.group(2)) from None
            if mt.group(1) in atoms:
                raise ValidationError([f"atom {mt.group(1)!r} declared twice"])
            atoms[mt.group(1)] = kind
        elif head == "edge":
            mt = _EDGE_RE.match(st)
            if not mt:
                raise MoleculeSyntaxError("malformed edge statement", lineno, st)
            u, su, v, sv, r, eps = mt.groups()
            try:
                r_val = parse_r(r)
            except (ValueError, ZeroDivisionError):
                raise MoleculeSyntaxError("bad r mark", lineno, r) from None
            if eps not in ("+1", "-1", "1"):
                raise MoleculeSyntaxError("bad eps mark", lineno, eps)
            edges.append(Edge(u, int(su), v, int(sv), EdgeMarks(r_val, -1 if eps == "-1" else 1)))
        elif head == "family":
            mt = _FAMILY_RE.match(st)
            if not mt:
                raise MoleculeSyntaxError("malformed family statement", lineno, st)
            members = frozenset(x.strip() for x in mt.group(1).split(",") if x.strip())
            try:
                n = int(mt.group(2))
            except ValueError:
                raise MoleculeSyntaxError("bad n mark", lineno, mt.group(2)) from None
            fams.append(Family(members, n))
        else:
            raise MoleculeSyntaxError("unknown statement", lineno, head)

    m = Molecule(atoms, tuple(edges), tuple(fams), meta)
    if check:
        diags = validate(m)
        if diags:
            raise ValidationError(diags)
        m = with_default_families(m)
    return m


def serialize(m: Molecule) -> str:
    lines = [f"#@ {k}: {v}" for k, v in sorted(m.meta.items())]
    for atom in sorted(m.atoms):
        lines.append(f"atom {atom} {m.atoms[atom].dsl()};")
    for e in sorted(m.edges):
        lines.append(f"edge {e.u}.{e.su} {e.v}.{e.sv} {e.marks.dsl()};")
    for fam in sorted(m.families, key=lambda f: f.sorted_atoms()):
        lines.append(f"family [{','.join(fam.sorted_atoms())}] n={fam.n};")
    return "\n".join(lines) + "\n"


def relabel(m: Molecule, mapping: dict) -> Molecule:
    """Rename atoms; ``mapping`` must be injective on the atom ids."""
    return Molecule(
        {mapping[a]: k for a, k in m.atoms.items()},
        tuple(Edge(mapping[e.u], e.su, mapping[e.v], e.sv, e.marks) for e in m.edges),
        tuple(Family(frozenset(mapping[a] for a in f.atoms), f.n) for f in m.families),
        dict(m.meta),
    )


def disjoint_union(*parts: Molecule, prefixes=None) -> Molecule:
    prefixes = prefixes or [f"c{i}_" for i in range(len(parts))]
    atoms: dict = {}
    edges: list = []
    fams: list = []
    for pre, part in zip(prefixes, parts):
        renamed = relabel(part, {a: pre + a for a in part.atoms})
        atoms.update(renamed.atoms)
        edges.extend(renamed.edges)
        fams.extend(renamed.families)
    return Molecule(atoms, tuple(edges), tuple(fams))
