"""Exact polynomials over Q in (J1, J2, J3, x1, x2, x3, kappa, c1) and the
Lie-Poisson pencil bracket on the six phase coordinates.

Coefficients are ``fractions.Fraction``; nothing in here touches floats
except :meth:`Poly.lambdify`, which builds a numeric evaluator on request.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Union

import numpy as np

VARIABLES = ("J1", "J2", "J3", "x1", "x2", "x3", "kappa", "c1")
NVARS = len(VARIABLES)
PHASE = tuple(range(6))  # indices of J1..x3
KAPPA, C1 = 6, 7

Exponent = tuple
Scalar = Union[int, Fraction]


class Poly:
    """Sparse polynomial: ``{exponent tuple: nonzero Fraction}``.

    Instances are treated as immutable values. The zero polynomial has an
    empty term map.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Exponent, Scalar] | None = None):
        clean = {}
        for exp, coef in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != NVARS or min(exp) < 0:
                raise ValueError(f"bad exponent vector {exp}")
            coef = Fraction(coef)
            if coef:
                clean[exp] = clean.get(exp, Fraction(0)) + coef
                if not clean[exp]:
                    del clean[exp]
        self._terms = clean
        self._hash = None

    # -- construction -------------------------------------------------
    @classmethod
    def const(cls, c: Scalar) -> "Poly":
        return cls({(0,) * NVARS: c})

    @classmethod
    def var(cls, name_or_index: Union[str, int]) -> "Poly":
        i = VARIABLES.index(name_or_index) if isinstance(name_or_index, str) else name_or_index
        exp = [0] * NVARS
        exp[i] = 1
        return cls({tuple(exp): 1})

    @classmethod
    def _raw(cls, terms: dict) -> "Poly":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def sorted_terms(self) -> list:
        """Terms in graded lexicographic order, highest first."""
        return sorted(self._terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def __iter__(self):
        return iter(self.sorted_terms())

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            try:
                other = _coerce(other)
            except TypeError:
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        out = dict(self._terms)
        for exp, c in other._terms.items():
            s = out.get(exp, 0) + c
            if s:
                out[exp] = s
            else:
                out.pop(exp, None)
        return Poly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        out: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return Poly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c: Scalar) -> "Poly":
        c = Fraction(c)
        if not c:
            return Poly()
        return Poly._raw({e: v * c for e, v in self._terms.items()})

    def diff(self, var: Union[str, int]) -> "Poly":
        i = VARIABLES.index(var) if isinstance(var, str) else var
        out = {}
        for e, c in self._terms.items():
            if e[i]:
                ne = e[:i] + (e[i] - 1,) + e[i + 1:]
                out[ne] = c * e[i]
        return Poly._raw(out)

    # -- evaluation ---------------------------------------------------
    def subs(self, values: Mapping[Union[str, int], Scalar]) -> "Poly":
        """Exact partial substitution of rational values."""
        idx = {(VARIABLES.index(k) if isinstance(k, str) else k): Fraction(v) for k, v in values.items()}
        out = Poly()
        for e, c in self._terms.items():
            coef = c
            ne = list(e)
            for i, v in idx.items():
                coef *= v ** e[i]
                ne[i] = 0
            out = out + Poly({tuple(ne): coef})
        return out

    def __call__(self, point: Iterable[float]) -> float:
        return float(self.lambdify()(np.asarray(point, dtype=float)))

    def lambdify(self) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorised float evaluator on arrays of shape ``(..., 8)``."""
        terms = [(tuple((i, e) for i, e in enumerate(exp) if e), float(c)) for exp, c in self._terms.items()]

        def f(z):
            z = np.asarray(z, dtype=float)
            out = np.zeros(z.shape[:-1])
            powers: dict = {}
            for factors, c in terms:
                mono = c
                for i, e in factors:
                    key = (i, e)
                    if key not in powers:
                        powers[key] = z[..., i] ** e
                    mono = mono * powers[key]
                out = out + mono
            return out

        return f

    # -- text ---------------------------------------------------------
    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for exp, c in self.sorted_terms():
            factors = []
            for name, e in zip(VARIABLES, exp):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            if factors and mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"Poly({self})"


def _coerce(x) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, (int, Fraction)):
        return Poly.const(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to Poly")


def poly_combine(op: str, a: Poly, b) -> Poly:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "scale":
        return a.scale(b)
    raise ValueError(f"unknown op {op!r}")


def poly_diff(f: Poly, var: Union[str, int]) -> Poly:
    return f.diff(var)


J1, J2, J3, X1, X2, X3, KAPPA_VAR, C1_VAR = (Poly.var(i) for i in range(NVARS))
COORDS = (J1, J2, J3, X1, X2, X3)


def levi_civita(i: int, j: int, k: int) -> int:
    if len({i, j, k}) < 3:
        return 0
    return 1 if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1


@lru_cache(maxsize=None)
def structure_table() -> tuple:
    """6x6 table of {z_i, z_j} for z = (J1, J2, J3, x1, x2, x3)."""
    table = [[Poly() for _ in range(6)] for _ in range(6)]
    for i, j in itertools.product(range(3), repeat=2):
        jj = sum((COORDS[k].scale(levi_civita(i, j, k)) for k in range(3)), Poly())
        xx = sum((COORDS[3 + k].scale(levi_civita(i, j, k)) for k in range(3)), Poly())
        table[i][j] = jj
        table[i][3 + j] = xx
        table[3 + i][j] = xx  # {x_i, J_j} = -{J_j, x_i} = eps_ijk x_k
        table[3 + i][3 + j] = KAPPA_VAR * jj
    return tuple(tuple(row) for row in table)


def poisson_bracket(f: Poly, g: Poly) -> Poly:
    """{f, g} = sum_{i,j} df/dz_i dg/dz_j {z_i, z_j}."""
    table = structure_table()
    df = [f.diff(i) for i in PHASE]
    dg = [g.diff(j) for j in PHASE]
    out = Poly()
    for i in PHASE:
        if not df[i]:
            continue
        inner = Poly()
        for j in PHASE:
            if dg[j] and table[i][j]:
                inner = inner + dg[j] * table[i][j]
        if inner:
            out = out + df[i] * inner
    return out


def jacobi_defect(f: Poly, g: Poly, h: Poly) -> Poly:
    pb = poisson_bracket
    return pb(f, pb(g, h)) + pb(g, pb(h, f)) + pb(h, pb(f, g))
