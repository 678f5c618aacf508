"""First homology of the 3-manifold glued from a labeled molecule.

Each saddle atom is (base surface) x S^1 with a product section; the
boundary torus at slot i has basis (lambda = fibre, mu = i-th boundary
circle of the section). Atom A is a solid torus with meridian lambda.
An edge u -> v with gluing matrix C = (a b / g d) identifies

    lambda_v = a lambda_u + b mu_u,    mu_v = g lambda_u + d mu_u.

Marks are realised as matrices by a fixed table; the family mark n is
put on one designated edge per family.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .molecule import Edge, EdgeMarks, Family, Molecule, families

Matrix2 = tuple  # ((a, b), (g, d))


class UnsupportedAtom(ValueError):
    pass


# --- 2x2 integer matrices ------------------------------------------------

def mat_mul(x: Matrix2, y: Matrix2) -> Matrix2:
    return (
        (x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]),
        (x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]),
    )


def det2(x: Matrix2) -> int:
    return x[0][0] * x[1][1] - x[0][1] * x[1][0]


def mat_inv(x: Matrix2) -> Matrix2:
    d = det2(x)
    if d not in (1, -1):
        raise ValueError(f"matrix {x} is not unimodular")
    (a, b), (g, dd) = x
    return ((dd * d, -b * d), (-g * d, a * d))


def shear(k: int) -> Matrix2:
    return ((1, 0), (k, 1))


# --- marks <-> matrices --------------------------------------------------

def edge_matrix(marks: EdgeMarks, twist: int = 0) -> Matrix2:
    """Canonical gluing matrix for ``marks``; ``twist`` is added as
    ``twist * (a b)`` to the second row (or as the lower-left entry for r=inf)."""
    eps = marks.eps
    if marks.r is None:
        return ((eps, 0), (twist, -eps))
    p, q = marks.r.numerator, marks.r.denominator
    if q == 1:
        delta = 0
    else:
        d0 = (-pow(p, -1, q)) % q
        delta = d0 - q if d0 else 0
    gamma = (p * delta + 1) // q
    a, b, g, d = p, q, gamma, delta
    if eps < 0:
        a, b, g, d = -a, -b, -g, -d
    return ((a, b), (g + twist * a, d + twist * b))


def marks_of(c: Matrix2) -> EdgeMarks:
    (a, b), _ = c
    if b == 0:
        return EdgeMarks(None, 1 if a > 0 else -1)
    return EdgeMarks(Fraction(a, b) % 1, 1 if b > 0 else -1)


def _end_contribution(c: Matrix2, source: bool) -> int:
    """Integer part contributed to the family mark by one finite edge end."""
    (a, b), (g, d) = c
    return a // b if source else (-d) // b


def _inf_contribution(c: Matrix2) -> int:
    (a, _), (g, _) = c
    return -a * g


def family_mark(m: Molecule, fam, mats: dict) -> int:
    """Family mark n read off actual gluing matrices (sections fixed)."""
    n = 0
    for e in m.edges:
        ends_in = [e.u in fam, e.v in fam]
        if not any(ends_in):
            continue
        c = mats[e.key]
        if c[0][1] == 0:
            n += _inf_contribution(c)
        else:
            if ends_in[0]:
                n += _end_contribution(c, True)
            if ends_in[1]:
                n += _end_contribution(c, False)
    return n


def designated_edge(m: Molecule, fam) -> Edge | None:
    incident = sorted(e for e in m.edges if e.u in fam or e.v in fam)
    inf = [e for e in incident if e.marks.infinite]
    if inf:
        return inf[0]
    return incident[0] if incident else None


def realize(m: Molecule) -> dict:
    """Gluing matrices (stored orientation) realising all marks of ``m``."""
    mats = {e.key: edge_matrix(e.marks) for e in m.edges}
    for fam in m.families:
        if not fam.n:
            continue
        e = designated_edge(m, fam.atoms)
        if e is None:
            continue
        c = mats[e.key]
        if e.marks.infinite:
            mats[e.key] = edge_matrix(e.marks, -e.marks.eps * fam.n)
        elif e.u in fam.atoms:
            mats[e.key] = mat_mul(c, shear(fam.n))
        else:
            mats[e.key] = mat_mul(shear(-fam.n), c)
    return mats


def molecule_from_matrices(atoms: dict, edges, mats: dict, meta=None) -> Molecule:
    """Rebuild marks (r, eps, n) of a molecule from actual gluing matrices.

    ``edges`` supplies the incidence only; their marks are ignored.
    """
    new_edges = tuple(sorted(Edge(e.u, e.su, e.v, e.sv, marks_of(mats[e.key])) for e in edges))
    skeleton = Molecule(dict(atoms), new_edges, ())
    fams = tuple(Family(g, family_mark(skeleton, g, mats)) for g in families(skeleton))
    return Molecule(dict(atoms), new_edges, fams, dict(meta or {}))


def reverse_edge(m: Molecule, key) -> Molecule:
    """Flip the stored orientation of one edge, inverting its gluing matrix."""
    mats = realize(m)
    e = m.edge(key)
    new = Edge(e.v, e.sv, e.u, e.su, e.marks)
    mats[new.key] = mat_inv(mats.pop(e.key))
    edges = [x for x in m.edges if x.key != e.key] + [new]
    return molecule_from_matrices(m.atoms, edges, mats, m.meta)


# --- Smith normal form ---------------------------------------------------

def _identity(n: int) -> list:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def smith_normal_form(M) -> tuple:
    """Return ``(D, U, V)`` with ``D = U M V``, U and V unimodular and D
    diagonal with d_i | d_{i+1} (all d_i >= 0)."""
    A = [list(map(int, row)) for row in M]
    m = len(A)
    n = len(A[0]) if m else 0
    U, V = _identity(m), _identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, k):  # row_dst += k row_src
        A[dst] = [x + k * y for x, y in zip(A[dst], A[src])]
        U[dst] = [x + k * y for x, y in zip(U[dst], U[src])]

    def add_col(dst, src, k):
        for row in A:
            row[dst] += k * row[src]
        for row in V:
            row[dst] += k * row[src]

    for t in range(min(m, n)):
        nonzero = [(abs(A[i][j]), i, j) for i in range(t, m) for j in range(t, n) if A[i][j]]
        if not nonzero:
            break
        _, i0, j0 = min(nonzero)
        swap_rows(t, i0)
        swap_cols(t, j0)
        while True:
            p = A[t][t]
            clean = True
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
                    clean = clean and not A[i][t]
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
                    clean = clean and not A[t][j]
            if not clean:
                cands = [(abs(A[i][t]), i, t) for i in range(t + 1, m) if A[i][t]]
                cands += [(abs(A[t][j]), t, j) for j in range(t + 1, n) if A[t][j]]
                _, i1, j1 = min(cands)
                if j1 == t:
                    swap_rows(t, i1)
                else:
                    swap_cols(t, j1)
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
    return A, U, V


def invariant_factors(M) -> list:
    D, _, _ = smith_normal_form(M)
    return [D[i][i] for i in range(min(len(D), len(D[0]) if D else 0)) if D[i][i]]


# --- abelian groups ------------------------------------------------------

@dataclass(frozen=True)
class AbelianGroup:
    rank: int = 0
    torsion: tuple = ()

    def __post_init__(self):
        t = tuple(int(d) for d in self.torsion)
        if any(d < 2 for d in t) or any(t[i + 1] % t[i] for i in range(len(t) - 1)):
            raise ValueError(f"torsion {t} not in invariant-factor form")
        object.__setattr__(self, "torsion", t)

    @classmethod
    def from_orders(cls, rank: int, orders) -> "AbelianGroup":
        """Group Z^rank + sum Z_{orders}, normalised to invariant factors."""
        orders = [abs(int(o)) for o in orders if abs(int(o)) != 1]
        rank += sum(1 for o in orders if o == 0)
        orders = [o for o in orders if o]
        if not orders:
            return cls(rank, ())
        diag = [[o if i == j else 0 for j in range(len(orders))] for i, o in enumerate(orders)]
        return cls(rank, tuple(d for d in invariant_factors(diag) if d > 1))

    def __add__(self, other: "AbelianGroup") -> "AbelianGroup":
        return AbelianGroup.from_orders(self.rank + other.rank, self.torsion + other.torsion)

    def is_trivial(self) -> bool:
        return self.rank == 0 and not self.torsion

    def to_json(self) -> dict:
        return {"rank": self.rank, "torsion": list(self.torsion)}

    def __str__(self):
        parts = [f"Z^{self.rank}"] if self.rank else []
        parts += [f"Z_{d}" for d in self.torsion]
        return " (+) ".join(parts) if parts else "0"


# --- presentation --------------------------------------------------------

@dataclass
class Presentation:
    matrix: list
    generators: list = field(default_factory=list)


def presentation(m: Molecule, mats: dict | None = None) -> Presentation:
    """Relation matrix (rows) over the generators (columns) of H_1."""
    for atom, kind in sorted(m.atoms.items()):
        if kind.stars:
            raise UnsupportedAtom(f"atom {atom} ({kind.name}) has star vertices")
    mats = realize(m) if mats is None else mats
    gens: list = []
    index: dict = {}

    def gen(label):
        index[label] = len(gens)
        gens.append(label)
        return index[label]

    slot_vec: dict = {}
    for atom, kind in sorted(m.atoms.items()):
        if kind.is_A:
            c = gen(f"core[{atom}]")
            slot_vec[(atom, 1)] = ({}, {c: 1})
        else:
            f = gen(f"fiber[{atom}]")
            for s in range(1, kind.valence + 1):
                b = gen(f"circle[{atom}.{s}]")
                slot_vec[(atom, s)] = ({f: 1}, {b: 1})
            for h in range(2 * kind.genus):
                gen(f"handle[{atom}.{h}]")
    n_loops = len(m.edges) - len(m.atoms) + len(m.components())
    for k in range(n_loops):
        gen(f"graph_cycle[{k}]")

    rows = []

    def add_row(vec: dict):
        row = [0] * len(gens)
        for k, v in vec.items():
            row[k] += v
        if any(row):
            rows.append(row)

    def combo(*terms):
        out: dict = {}
        for coef, vec in terms:
            for k, v in vec.items():
                out[k] = out.get(k, 0) + coef * v
        return out

    for atom, kind in sorted(m.atoms.items()):
        if kind.saddle:
            add_row({index[f"circle[{atom}.{s}]"]: 1 for s in range(1, kind.valence + 1)})
    for e in sorted(m.edges):
        (a, b), (g, d) = mats[e.key]
        lu, mu = slot_vec[(e.u, e.su)]
        lv, mv = slot_vec[(e.v, e.sv)]
        add_row(combo((1, lv), (-a, lu), (-b, mu)))
        add_row(combo((1, mv), (-g, lu), (-d, mu)))
    if not rows:
        rows = [[0] * len(gens)] if gens else []
    return Presentation(rows, gens)


def group_from_relations(matrix: list, ngens: int) -> AbelianGroup:
    if ngens == 0:
        return AbelianGroup()
    factors = invariant_factors(matrix) if matrix else []
    return AbelianGroup.from_orders(ngens - len(factors), factors)


def first_homology(m: Molecule, mats: dict | None = None) -> AbelianGroup:
    pres = presentation(m, mats)
    return group_from_relations(pres.matrix, len(pres.generators))
