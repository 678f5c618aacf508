"""Independent reference implementations used only by the tests.

Only the molecule data classes are imported from the package (to build
random inputs); every expected value is computed here from scratch.
"""
from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction
from functools import reduce

import numpy as np
import sympy as sp

# --- integer linear algebra ----------------------------------------------

def perm_det(M) -> int:
    """Leibniz-formula determinant (exact, small matrices only)."""
    n = len(M)
    total = 0
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = 1
        for i in range(n):
            prod *= M[i][perm[i]]
        total += -prod if inversions % 2 else prod
    return total


def determinantal_divisors(M) -> list:
    """d_k = gcd of all k x k minors, k = 1..min(m, n), stopping at the rank."""
    m, n = len(M), len(M[0]) if M else 0
    out = []
    for k in range(1, min(m, n) + 1):
        g = 0
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                g = math.gcd(g, perm_det([[M[r][c] for c in cols] for r in rows]))
        if g == 0:
            break
        out.append(g)
    return out


def invariant_factors_oracle(M) -> list:
    d = [1] + determinantal_divisors(M)
    return [d[k] // d[k - 1] for k in range(1, len(d))]


# --- closed-form phase functions -----------------------------------------

def f1_num(J, x, kappa):
    return np.sum(x * x, axis=-1) + kappa * np.sum(J * J, axis=-1)


def f2_num(J, x, kappa):
    return np.sum(x * J, axis=-1)


def H_num(J, x, c1=1.0):
    return J[..., 0] ** 2 + J[..., 1] ** 2 + 2 * J[..., 2] ** 2 + 2 * c1 * x[..., 0]


def K_num(J, x, kappa, c1=1.0):
    u = J[..., 0] ** 2 - J[..., 1] ** 2 - 2 * c1 * x[..., 0] + kappa * c1 ** 2
    v = 2 * J[..., 0] * J[..., 1] - 2 * c1 * x[..., 1]
    return u * u + v * v


def sgrad_H_num(J, x, kappa, c1=1.0):
    """{z, H} from cross products: dJ = dH/dJ x J + dH/dx x x, dx = dH/dJ x x + kappa dH/dx x J."""
    hJ = np.array([2 * J[0], 2 * J[1], 4 * J[2]])
    hx = np.array([2 * c1, 0.0, 0.0])
    return np.concatenate([np.cross(hJ, J) + np.cross(hx, x), np.cross(hJ, x) + kappa * np.cross(hx, J)])


# --- symbolic bracket via sympy -------------------------------------------

SYM = sp.symbols("J1 J2 J3 x1 x2 x3 kappa c1")


def sympy_bracket(f, g):
    J, x, kappa = SYM[:3], SYM[3:6], SYM[6]
    eps = sp.LeviCivita
    out = 0
    for i in range(3):
        for j in range(3):
            for k in range(3):
                e = eps(i, j, k)
                if not e:
                    continue
                out += e * J[k] * sp.diff(f, J[i]) * sp.diff(g, J[j])
                out += e * x[k] * (sp.diff(f, J[i]) * sp.diff(g, x[j]) + sp.diff(f, x[i]) * sp.diff(g, J[j]))
                out += e * kappa * J[k] * sp.diff(f, x[i]) * sp.diff(g, x[j])
    return sp.expand(out)


def to_sympy(poly):
    return sp.expand(sum(
        sp.Rational(c.numerator, c.denominator) * reduce(lambda a, b: a * b, (s ** e for s, e in zip(SYM, exp)), 1)
        for exp, c in poly.terms.items()
    ))


# --- random molecules -----------------------------------------------------

R_CHOICES = [Fraction(0), None, Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(2, 5), Fraction(1, 4)]


def random_molecule(rng: random.Random, max_saddles: int = 3, p_inf: float = 0.0):
    """Valid molecule over atoms {A, B, C2} with random marks and family marks.

    ``p_inf`` is an extra probability of drawing r = inf on an edge.
    """
    from kovtop.molecule import A, B, C2, Edge, EdgeMarks, Family, Molecule, families

    atoms, slots = {}, []
    for i in range(rng.randint(1, max_saddles)):
        kind = rng.choice([B, B, C2])
        atoms[f"s{i}"] = kind
        slots += [(f"s{i}", j) for j in range(1, kind.valence + 1)]
    rng.shuffle(slots)
    edges, na = [], 0
    while slots:
        u = slots.pop()
        if slots and rng.random() < 0.4:
            v = slots.pop()
        else:
            v = (f"a{na}", 1)
            atoms[f"a{na}"] = A
            na += 1
        if rng.random() < 0.5:
            u, v = v, u
        r = None if rng.random() < p_inf else rng.choice(R_CHOICES)
        edges.append(Edge(u[0], u[1], v[0], v[1], EdgeMarks(r, rng.choice([1, -1]))))
    bare = Molecule(atoms, tuple(edges), ())
    fams = tuple(Family(g, rng.randint(-2, 2)) for g in families(bare))
    return Molecule(atoms, tuple(edges), fams)


def lens_h1_order(r: Fraction | None) -> int:
    """|H1(L(q, p))| = q for r = p/q; 0 encodes the infinite cyclic group."""
    if r is None:
        return 0
    return Fraction(r).denominator if r else 1
