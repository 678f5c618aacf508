"""Topological type of Q^3 from a labeled molecule.

The engine knows a handful of molecules whose manifold is known outright
(:func:`base_case`) and three rewrite moves that change the molecule but
not the manifold, or split it along a sphere. :func:`classify` searches
over the moves; :func:`propagate` spreads known types along arrows between
molecules that are joined by non-critical deformations.

All moves work on actual gluing matrices (see :mod:`kovtop.homology`) and
re-read the marks afterwards, so family marks n are carried exactly.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

from .homology import (
    AbelianGroup, UnsupportedAtom, first_homology, mat_inv, mat_mul,
    molecule_from_matrices, realize, shear,
)
from .molecule import Edge, Molecule, saddle_kind

MAX_MOVES = 32
T0 = ((1, 0), (0, -1))  # (lambda, mu) across a trivial product annulus x S^1


class MoveNotApplicable(ValueError):
    pass


class TypeConflict(ValueError):
    def __init__(self, component, types):
        self.component = sorted(component)
        self.types = types
        shown = ", ".join(sorted(str(t) for t in types))
        super().__init__(f"type conflict on ids {self.component}: {shown}")


# --- manifold classes ----------------------------------------------------

def normalize_lens(q: int, p: int) -> tuple:
    """Canonical (q, p) for L(q, p): (0, 1) is S^1xS^2, (1, 0) is S^3."""
    q = abs(q)
    if q == 0:
        return (0, 1)
    if q == 1:
        return (1, 0)
    p %= q
    if math.gcd(p, q) != 1:
        raise ValueError(f"L({q},{p}) needs gcd(p, q) = 1")
    inv = pow(p, -1, q)
    return (q, min(p, q - p, inv, q - inv))


def _render_summand(s: tuple) -> str:
    q, p = s
    if q == 0:
        return "S^1xS^2"
    if q == 2:
        return "RP^3"
    return f"L({q},{p})"


@dataclass(frozen=True)
class ManifoldClass:
    """Disjoint union of connected sums of lens spaces and S^1xS^2.

    Each component is a sorted tuple of ``(q, p)`` summands; the empty tuple
    is S^3.
    """

    components: tuple

    @classmethod
    def of(cls, *components) -> "ManifoldClass":
        comps = []
        for comp in components:
            summands = [normalize_lens(*s) for s in comp]
            comps.append(tuple(sorted(s for s in summands if s != (1, 0))))
        return cls(tuple(sorted(comps)))

    @classmethod
    def lens(cls, q: int, p: int) -> "ManifoldClass":
        return cls.of([(q, p)])

    def __add__(self, other: "ManifoldClass") -> "ManifoldClass":
        """Disjoint union."""
        return ManifoldClass(tuple(sorted(self.components + other.components)))

    def connected_sum(self, other: "ManifoldClass") -> "ManifoldClass":
        if len(self.components) != 1 or len(other.components) != 1:
            raise ValueError("connected sum needs connected manifolds")
        return ManifoldClass.of(self.components[0] + other.components[0])

    def h1(self) -> AbelianGroup:
        rank = sum(1 for comp in self.components for q, _ in comp if q == 0)
        orders = [q for comp in self.components for q, _ in comp if q > 1]
        return AbelianGroup.from_orders(rank, orders)

    @staticmethod
    def render_component(comp: tuple) -> str:
        if not comp:
            return "S^3"
        if len(comp) == 1:
            return _render_summand(comp[0])
        return "#".join(f"({_render_summand(s)})" if s[0] == 0 else _render_summand(s) for s in comp)

    def __str__(self):
        parts = []
        i = 0
        comps = list(self.components)
        while i < len(comps):
            j = i
            while j < len(comps) and comps[j] == comps[i]:
                j += 1
            body = self.render_component(comps[i])
            k = j - i
            if k > 1:
                compound = len(comps[i]) > 1 or (comps[i] and comps[i][0][0] == 0)
                body = f"{k}({body})" if compound else f"{k}{body}"
            parts.append(body)
            i = j
        return " + ".join(parts)

    def to_json(self) -> list:
        return [{"summands": [_render_summand(s) for s in comp] or ["S^3"]} for comp in self.components]


_SUMMAND_TOKENS = {
    "S3": (1, 0), "S^3": (1, 0),
    "RP3": (2, 1), "RP^3": (2, 1),
    "S1xS2": (0, 1), "S^1xS^2": (0, 1), "S1×S2": (0, 1), "S^1×S^2": (0, 1),
}


def _parse_summand(tok: str) -> tuple:
    tok = _strip_outer(tok)
    if tok in _SUMMAND_TOKENS:
        return _SUMMAND_TOKENS[tok]
    mt = re.fullmatch(r"L\((\d+),(\d+)\)", tok.replace(" ", ""))
    if mt:
        return normalize_lens(int(mt.group(1)), int(mt.group(2)))
    raise ValueError(f"unknown summand {tok!r}")


def _split_top(text: str, sep: str) -> list:
    out, depth, cur = [], 0, ""
    for ch in text:
        depth += ch == "("
        depth -= ch == ")"
        if ch == sep and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    out.append(cur)
    return out


def _strip_outer(text: str) -> str:
    text = text.strip()
    while text.startswith("("):
        depth = 0
        for pos, ch in enumerate(text):
            depth += (ch == "(") - (ch == ")")
            if depth == 0:
                break
        if pos != len(text) - 1:
            break
        text = text[1:-1].strip()
    return text


def parse_class(text: str) -> ManifoldClass:
    """Inverse of ``str(ManifoldClass)``; also takes ``S3``, ``2(S1xS2)``,
    ``#3(S1xS2)``..."""
    comps = []
    for part in text.split(" + "):
        part = part.strip()
        mt = re.fullmatch(r"#(\d+)\((.*)\)", part)
        if mt:
            comps.append([_parse_summand(mt.group(2))] * int(mt.group(1)))
            continue
        mt = re.fullmatch(r"(\d+)(.*)", part)
        k = 1
        if mt:
            k, part = int(mt.group(1)), _strip_outer(mt.group(2))
        summands = [_parse_summand(s) for s in _split_top(part, "#")]
        comps.extend([summands] * k)
    return ManifoldClass.of(*comps)


S3 = ManifoldClass.of([])
S1xS2 = ManifoldClass.of([(0, 1)])
RP3 = ManifoldClass.of([(2, 1)])


# --- base cases ----------------------------------------------------------

def _base_component(m: Molecule) -> Optional[tuple]:
    atoms = m.atoms
    kinds = sorted(k.name for k in atoms.values())
    if kinds == ["A", "A"] and len(m.edges) == 1:
        r = m.edges[0].marks.r
        if r is None:
            return ((0, 1),)
        s = normalize_lens(r.denominator, r.numerator)
        return () if s == (1, 0) else (s,)
    if kinds == ["A", "A", "Astar"] and len(m.edges) == 2:
        star = next(a for a, k in atoms.items() if k.stars)
        fam = m.family_of(star)
        if all(e.marks.r == 0 for e in m.edges) and fam is not None and fam.n == -1:
            return ()
        return None
    saddles = [a for a, k in atoms.items() if k.saddle]
    if len(saddles) == 1 and atoms[saddles[0]].planar:
        v = saddles[0]
        legs = m.incident(v)
        others = {e.other(v, s)[0] for s, e in legs}
        if (
            len(legs) == atoms[v].valence
            and len(others) == len(legs)
            and all(atoms[o].is_A for o in others)
            and all(e.marks.infinite for _, e in legs)
        ):
            return ((0, 1),) * (atoms[v].valence - 1)
    return None


def base_case(m: Molecule) -> Optional[ManifoldClass]:
    comps = []
    for part in m.split_components():
        c = _base_component(part)
        if c is None:
            return None
        comps.append(c)
    return ManifoldClass.of(*comps)


# --- rewrite moves -------------------------------------------------------

def _end_basis_change(mats: dict, e: Edge, atom: str, slot: int, P) -> None:
    """Re-express the basis at one edge end: old (lambda, mu) = P (new)."""
    c = mats[e.key]
    if (e.u, e.su) == (atom, slot):
        mats[e.key] = mat_mul(c, P)
    else:
        mats[e.key] = mat_mul(mat_inv(P), c)


def _outward(mats: dict, e: Edge, atom: str, slot: int):
    c = mats[e.key]
    return c if (e.u, e.su) == (atom, slot) else mat_inv(c)


def _set_outward(mats: dict, e: Edge, atom: str, slot: int, c) -> None:
    mats[e.key] = c if (e.u, e.su) == (atom, slot) else mat_inv(c)


def _rewire(edges, mats, renames: dict) -> tuple:
    """Rename edge ends per ``renames[(atom, slot)] = (atom', slot')``."""
    new_edges, new_mats = [], {}
    for e in edges:
        u, su = renames.get((e.u, e.su), (e.u, e.su))
        v, sv = renames.get((e.v, e.sv), (e.v, e.sv))
        ne = Edge(u, su, v, sv, e.marks)
        new_edges.append(ne)
        new_mats[ne.key] = mats[e.key]
    return new_edges, new_mats


def _a_and_saddle(m: Molecule, e: Edge) -> tuple:
    ku, kv = m.atoms[e.u], m.atoms[e.v]
    if ku.is_A and kv.saddle:
        return (e.u, e.su), (e.v, e.sv)
    if kv.is_A and ku.saddle:
        return (e.v, e.sv), (e.u, e.su)
    raise MoveNotApplicable(f"edge {e.label()} does not join A to a saddle atom")


def move_absorb_A(m: Molecule, key) -> Molecule:
    """Cap the boundary circle of a saddle glued to A with r = 0.

    The saddle loses one boundary slot; a saddle left with an annulus base
    is a product region and is removed, its two edges fused into one.
    """
    e = m.edge(key)
    (a, _), (v, i) = _a_and_saddle(m, e)
    kind = m.atoms[v]
    if e.marks.r != 0:
        raise MoveNotApplicable(f"edge {e.label()} has r={e.marks.r}, need r=0")
    if kind.stars or kind.valence < 3:
        raise MoveNotApplicable(f"atom {v} ({kind.name}) cannot absorb an A atom")
    mats = realize(m)
    alpha, beta = _outward(mats, e, v, i)[0]
    k = alpha * beta
    rest = [(s, x) for s, x in m.incident(v) if s != i]
    j, ej = rest[0]
    _end_basis_change(mats, e, v, i, shear(-k))
    _end_basis_change(mats, ej, v, j, shear(k))

    atoms = {x: kd for x, kd in m.atoms.items() if x != a}
    edges = [x for x in m.edges if x.key != e.key]
    mats.pop(e.key)
    new_kind = saddle_kind(kind.genus, kind.valence - 1, 0)
    renames = {(v, s): (v, s - 1) for s in range(i + 1, kind.valence + 1)}
    edges, mats = _rewire(edges, mats, renames)
    atoms[v] = new_kind

    if new_kind.genus == 0 and new_kind.valence == 2:
        tmp = Molecule(atoms, tuple(edges))
        (s1, e1), (s2, e2) = tmp.incident(v)
        if e1.key == e2.key:
            raise MoveNotApplicable(f"atom {v} would close up into a torus bundle")
        out1 = _outward(mats, e1, v, s1)
        out2 = _outward(mats, e2, v, s2)
        x, y = e1.other(v, s1), e2.other(v, s2)
        fused = Edge(x[0], x[1], y[0], y[1])
        c = mat_mul(mat_mul(out2, T0), mat_inv(out1))
        edges = [z for z in edges if z.key not in (e1.key, e2.key)] + [fused]
        mats = {k2: m2 for k2, m2 in mats.items() if k2 not in (e1.key, e2.key)}
        mats[fused.key] = c
        del atoms[v]
    return molecule_from_matrices(atoms, edges, mats, m.meta)


def move_fuse_BB_to_C2(m: Molecule, key) -> Molecule:
    """Merge two B atoms joined by r = inf, eps = -1 into one C2 atom."""
    e = m.edge(key)
    v1, i1, v2, i2 = e.u, e.su, e.v, e.sv
    if v1 == v2 or m.atoms[v1].name != "B" or m.atoms[v2].name != "B":
        raise MoveNotApplicable(f"edge {e.label()} does not join two distinct B atoms")
    if not e.marks.infinite or e.marks.eps != -1:
        raise MoveNotApplicable(f"edge {e.label()} is not r=inf, eps=-1")
    mats = realize(m)
    (eps, _), (t, _) = mats[e.key]
    others2 = [(s, x) for s, x in m.incident(v2) if s != i2]
    shift_slot = others2[0][0]
    for s, x in others2:
        shift = eps * t if s == shift_slot else 0
        _end_basis_change(mats, x, v2, s, ((eps, 0), (-eps * shift, eps)))

    new_id = f"{v1}+{v2}"
    renames = {}
    slot = 1
    for s, _ in m.incident(v1):
        if s != i1:
            renames[(v1, s)] = (new_id, slot)
            slot += 1
    for s, _ in others2:
        renames[(v2, s)] = (new_id, slot)
        slot += 1
    edges = [x for x in m.edges if x.key != e.key]
    mats.pop(e.key)
    edges, mats = _rewire(edges, mats, renames)
    atoms = {x: k for x, k in m.atoms.items() if x not in (v1, v2)}
    atoms[new_id] = saddle_kind(0, 4, 0)
    return molecule_from_matrices(atoms, edges, mats, m.meta)


def move_split_connected_sum(m: Molecule, key) -> tuple:
    """Cut along the sphere over an arc through the saddle point of a B atom
    whose fibre is the meridian of an adjacent A (r = inf).

    Each side is capped by a solid torus whose meridian is the B fibre,
    i.e. B is replaced by a fresh A atom on both sides. Returns the two
    summands (only the connected component of the edge is kept).
    """
    e = m.edge(key)
    (a, _), (v, i) = _a_and_saddle(m, e)
    if m.atoms[v].name != "B":
        raise MoveNotApplicable(f"atom {v} is not a B atom")
    if not e.marks.infinite:
        raise MoveNotApplicable(f"edge {e.label()} is not r=inf")
    rest = [(s, x) for s, x in m.incident(v) if s != i]
    (j1, e1), (j2, e2) = rest
    if e1.key == e2.key:
        raise MoveNotApplicable(f"cut through {v} does not separate")
    comp = next(c for c in m.components() if v in c)
    mats = realize(m)
    caps = {(v, j1): (f"{v}~{j1}", 1), (v, j2): (f"{v}~{j2}", 1)}
    keep = [x for x in m.edges if x.key != e.key and x.u in comp]
    edges, mats = _rewire(keep, mats, caps)
    atoms = {x: k for x, k in m.atoms.items() if x in comp and x not in (a, v)}
    for cap_id, _ in caps.values():
        atoms[cap_id] = m.atoms[a]
    whole = Molecule(atoms, tuple(edges))
    parts = whole.components()
    side = [next(c for c in parts if cap_id in c) for cap_id, _ in caps.values()]
    if side[0] == side[1]:
        raise MoveNotApplicable(f"cut through {v} does not separate")
    pieces = []
    for c in side:
        sub = [x for x in edges if x.u in c]
        pieces.append(molecule_from_matrices({x: atoms[x] for x in c}, sub, {x.key: mats[x.key] for x in sub}))
    return tuple(pieces)


MOVES = {
    "absorb_A": move_absorb_A,
    "fuse_BB_to_C2": move_fuse_BB_to_C2,
    "split_connected_sum": move_split_connected_sum,
}


def candidate_moves(m: Molecule) -> list:
    """Applicable-looking (move, edge) pairs in search order."""
    out = []
    for name, test in (
        ("absorb_A", lambda e: e.marks.r == 0),
        ("fuse_BB_to_C2", lambda e: e.marks.infinite and e.marks.eps == -1),
        ("split_connected_sum", lambda e: e.marks.infinite),
    ):
        out += [(name, e.label()) for e in sorted(m.edges) if test(e)]
    return out


# --- search --------------------------------------------------------------

@dataclass(frozen=True)
class Step:
    """One derivation step on the summand at ``path``.

    ``path`` addresses a summand: the root of component ``k`` is ``"k"``,
    a split appends ``.0`` / ``.1``. ``result`` is the digest of the new
    molecule (two digests joined by ``,`` after a split).
    """

    move: str
    path: str
    target: str
    result: str

    def to_json(self) -> dict:
        return {"move": self.move, "path": self.path, "target": self.target, "result": self.result}


@dataclass
class Classification:
    manifold: Optional[ManifoldClass]
    h1: Optional[AbelianGroup]
    trace: list = field(default_factory=list)

    @property
    def known(self) -> bool:
        return self.manifold is not None

    def label(self) -> str:
        return str(self.manifold) if self.known else "Unknown"

    def to_json(self, with_trace: bool = True) -> dict:
        out = {
            "schema": 1,
            "class": self.label(),
            "components": self.manifold.to_json() if self.known else [],
            "h1": self.h1.to_json() if self.h1 is not None else None,
        }
        if with_trace:
            out["trace"] = [s.to_json() for s in self.trace]
        return out


class _Budget:
    def __init__(self, n):
        self.left = n


def _solve(m: Molecule, path: str, budget: _Budget, seen: frozenset):
    hit = _base_component(m)
    if hit is not None:
        return hit, [Step("base_case", path, ManifoldClass.render_component(hit), m.digest())]
    for name, target in candidate_moves(m):
        if budget.left <= 0:
            return None
        try:
            result = MOVES[name](m, target)
        except MoveNotApplicable:
            continue
        budget.left -= 1
        if name == "split_connected_sum":
            p0, p1 = result
            step = Step(name, path, target, f"{p0.digest()},{p1.digest()}")
            r0 = _solve(p0, path + ".0", budget, seen)
            r1 = _solve(p1, path + ".1", budget, seen) if r0 else None
            if r0 and r1:
                return r0[0] + r1[0], [step] + r0[1] + r1[1]
            continue
        h = result.digest()
        if h in seen:
            continue
        sub = _solve(result, path, budget, seen | {h})
        if sub:
            return sub[0], [Step(name, path, target, h)] + sub[1]
    return None


def classify(m: Molecule, max_moves: int = MAX_MOVES) -> Classification:
    try:
        h1 = first_homology(m)
    except UnsupportedAtom:
        h1 = None
    comps, trace = [], []
    for k, part in enumerate(m.split_components()):
        res = _solve(part, str(k), _Budget(max_moves), frozenset({part.digest()}))
        if res is None:
            return Classification(None, h1, trace)
        comps.append(res[0])
        trace += res[1]
    return Classification(ManifoldClass.of(*comps), h1, trace)


def replay(m: Molecule, trace: list) -> dict:
    """Re-apply a derivation; returns the final summand molecules by path.

    Raises ``ValueError`` if any recorded digest is not reproduced.
    """
    state = {str(k): part for k, part in enumerate(m.split_components())}
    for step in trace:
        cur = state[step.path]
        if step.move == "base_case":
            hit = _base_component(cur)
            if hit is None or cur.digest() != step.result:
                raise ValueError(f"base case does not hold at {step.path}")
            continue
        result = MOVES[step.move](cur, step.target)
        if step.move == "split_connected_sum":
            digest = f"{result[0].digest()},{result[1].digest()}"
            del state[step.path]
            state[step.path + ".0"], state[step.path + ".1"] = result
        else:
            digest = result.digest()
            state[step.path] = result
        if digest != step.result:
            raise ValueError(f"step {step.move} at {step.path}: digest {digest} != {step.result}")
    return state


# --- propagation ---------------------------------------------------------

def propagate(corpus: dict, seeds: dict, arrows) -> dict:
    """Spread seed types over arrow-connected components of molecule ids."""
    parent = {i: i for i in corpus}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for src, dst, label in arrows:
        for x in (src, dst):
            if x not in parent:
                raise KeyError(f"arrow {src} -> {dst} ({label}) references unknown id {x}")
        parent[find(src)] = find(dst)
    for i in seeds:
        if i not in parent:
            raise KeyError(f"seed for unknown id {i}")
    groups: dict = {}
    for i in corpus:
        groups.setdefault(find(i), []).append(i)
    out = {}
    for members in groups.values():
        types = {seeds[i] for i in members if i in seeds}
        if len(types) > 1:
            raise TypeConflict(members, types)
        if types:
            t = types.pop()
            out.update({i: t for i in members})
    return out
