"""
Valid inequalities for the Boolean quadric polytope and the relaxation
systems assembled from them.

Every constraint is a sparse rational row sum(coef * var) <= rhs over
x_i and y_ij variables, tagged with the family that produced it and its
parameters. A ConstraintSystem is a named, deduplicated collection of such
rows over a declared y-variable universe; 0 <= x <= 1 is always implied.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config import get_config
from graph_model import (
    NotACycle,
    PointX,
    WeightedGraph,
    cycle_weights,
    enumerate_cliques,
    enumerate_cycles,
    kn_minus_graph,
    sign_partition,
    wheel_graph,
)
from utils import format_rational

logger = logging.getLogger(__name__)

ONE = Fraction(1)
MINUS_ONE = Fraction(-1)


class InequalityError(Exception):
    """Base exception for inequality generation errors."""

    pass


class BadAlpha(InequalityError):
    """Clique multiplier outside 1..|S|-2, or |S| < 3."""


class Overlap(InequalityError):
    """Two vertex sets that must be disjoint intersect."""


class BadSubset(InequalityError):
    """A vertex set is too small or not part of the expected structure."""


class EvenD(InequalityError):
    """The odd-cycle subset D has even cardinality."""


class TooSmall(InequalityError):
    """The requested structure needs more vertices."""


class BadIndex(InequalityError):
    """A family or parameter index is outside its range."""


class BadClass(InequalityError):
    """Unknown relaxation class tag or invalid size subscript."""


class WitnessNotFound(InequalityError):
    """No separating point was found for a minimality witness."""


@dataclass(frozen=True, order=True)
class VarRef:
    """
    An x_i (kind "x", j unused) or y_ij (kind "y", i <= j) variable.
    Use x_var / y_var to build canonical, shared instances.
    """

    kind: str
    i: int
    j: int = 0

    @property
    def name(self) -> str:
        return f"x{self.i}" if self.kind == "x" else f"y{self.i}_{self.j}"

    @property
    def pair(self) -> Tuple[int, int]:
        return (self.i, self.j)

    @classmethod
    def parse(cls, name: str) -> "VarRef":
        """Inverse of name ("x3" or "y1_2")."""
        try:
            if name.startswith("x"):
                return x_var(int(name[1:]))
            if name.startswith("y"):
                i, j = name[1:].split("_")
                return y_var(int(i), int(j))
        except ValueError as e:
            raise InequalityError(f"Malformed variable name {name!r}") from e
        raise InequalityError(f"Malformed variable name {name!r}")

    def __str__(self) -> str:
        return self.name


@lru_cache(maxsize=None)
def x_var(i: int) -> VarRef:
    return VarRef("x", i, 0)


@lru_cache(maxsize=None)
def y_var(i: int, j: int) -> VarRef:
    if i > j:
        i, j = j, i
    return VarRef("y", i, j)


class CompiledRow(NamedTuple):
    """A row scaled to integer coefficients: sum x_coef*x + sum y_coef*y <= rhs."""

    x_terms: Tuple[Tuple[int, int], ...]
    y_terms: Tuple[Tuple[int, int], ...]
    rhs: int


@dataclass(frozen=True)
class LinearConstraint:
    """
    A sparse inequality sum coefs[k] * refs[k] <= rhs.

    Attributes:
        refs (tuple): Sorted variables with nonzero coefficients.
        coefs (tuple): Matching nonzero coefficients.
        rhs (Fraction): Right-hand side.
        family (str): Generator name, e.g. "triangle".
        params (tuple): Generator parameters as short strings.
    """

    refs: Tuple[VarRef, ...]
    coefs: Tuple[Fraction, ...]
    rhs: Fraction
    family: str
    params: Tuple[str, ...] = ()

    @property
    def label(self) -> str:
        return f"{self.family}({';'.join(self.params)})"

    @cached_property
    def coeffs(self) -> Dict[VarRef, Fraction]:
        return dict(zip(self.refs, self.coefs))

    def lhs(self, x: Sequence[Fraction], y: Mapping[Tuple[int, int], Fraction]) -> Fraction:
        """Left-hand side at (x, y); y is keyed by canonical (i, j) pairs."""
        total = Fraction(0)
        for ref, c in zip(self.refs, self.coefs):
            total += c * (x[ref.i - 1] if ref.kind == "x" else y[ref.pair])
        return total

    def slack(self, x: Sequence[Fraction], y: Mapping[Tuple[int, int], Fraction]) -> Fraction:
        return self.rhs - self.lhs(x, y)

    def is_satisfied(self, x: Sequence[Fraction], y: Mapping[Tuple[int, int], Fraction]) -> bool:
        return self.lhs(x, y) <= self.rhs

    def canonical_key(self) -> tuple:
        """Coefficient-level identity up to positive scaling."""
        values = list(self.coefs) + [self.rhs]
        scale = math.lcm(*(v.denominator for v in values))
        ints = [int(v * scale) for v in values]
        g = math.gcd(*ints) or 1
        return (self.refs, tuple(v // g for v in ints))

    def compiled(self) -> CompiledRow:
        values = list(self.coefs) + [self.rhs]
        scale = math.lcm(*(v.denominator for v in values))
        x_terms, y_terms = [], []
        for ref, c in zip(self.refs, self.coefs):
            if ref.kind == "x":
                x_terms.append((ref.i, int(c * scale)))
            else:
                y_terms.append((ref, int(c * scale)))
        return CompiledRow(tuple(x_terms), tuple(y_terms), int(self.rhs * scale))

    def __str__(self) -> str:
        terms = " ".join(
            f"{'+' if c > 0 else '-'} {format_rational(abs(c))} {r.name}" for r, c in zip(self.refs, self.coefs)
        )
        return f"{self.label}: {terms} <= {format_rational(self.rhs)}"


def make_constraint(family: str, params: Sequence[str], terms: Iterable[Tuple[VarRef, object]], rhs: object) -> LinearConstraint:
    """Accumulate terms, drop zeros and build a sorted constraint."""
    acc: Dict[VarRef, Fraction] = {}
    for ref, c in terms:
        acc[ref] = acc.get(ref, 0) + c
    items = sorted((ref, Fraction(c)) for ref, c in acc.items() if c != 0)
    return LinearConstraint(
        refs=tuple(ref for ref, _ in items),
        coefs=tuple(c for _, c in items),
        rhs=Fraction(rhs),
        family=family,
        params=tuple(params),
    )


@dataclass(frozen=True)
class ConstraintSystem:
    """
    A named polyhedron P over (x, y).

    Attributes:
        name (str): Display name, e.g. "MT" or "kn_minus(6)".
        n (int): Number of x variables.
        universe (tuple): The y variables of P, in column order.
        constraints (tuple): The rows.
        sources (int): Number of generating structures (edges, triangles, cliques or cycles).
    """

    name: str
    n: int
    universe: Tuple[VarRef, ...]
    constraints: Tuple[LinearConstraint, ...]
    sources: int = 0

    def __post_init__(self):
        allowed = set(self.universe)
        for con in self.constraints:
            for ref in con.refs:
                if ref.kind == "x":
                    if not 1 <= ref.i <= self.n:
                        raise BadIndex(f"{con.label} uses x{ref.i} outside 1..{self.n}")
                elif ref not in allowed:
                    raise BadIndex(f"{con.label} uses {ref.name}, which is not in the universe of {self.name}")

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    @cached_property
    def y_index(self) -> Dict[VarRef, int]:
        return {ref: k for k, ref in enumerate(self.universe)}

    @cached_property
    def compiled_rows(self) -> Tuple[CompiledRow, ...]:
        """Integer-scaled rows with y terms mapped to universe columns."""
        rows = []
        for con in self.constraints:
            row = con.compiled()
            rows.append(CompiledRow(row.x_terms, tuple((self.y_index[r], c) for r, c in row.y_terms), row.rhs))
        return tuple(rows)

    def labels(self) -> List[str]:
        return [con.label for con in self.constraints]

    def families(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for con in self.constraints:
            counts[con.family] = counts.get(con.family, 0) + 1
        return counts

    def without(self, label: str) -> "ConstraintSystem":
        """
        The system with the labelled row removed.

        Raises:
            BadIndex: If no row carries the label.
        """
        kept = tuple(con for con in self.constraints if con.label != label)
        if len(kept) == len(self.constraints):
            raise BadIndex(f"{self.name} has no constraint labelled {label}")
        return ConstraintSystem(f"{self.name}-{label}", self.n, self.universe, kept, self.sources)

    def merge(self, other: "ConstraintSystem", name: Optional[str] = None) -> "ConstraintSystem":
        """The intersection of two systems over the union of their universes."""
        n = max(self.n, other.n)
        universe = tuple(sorted(set(self.universe) | set(other.universe)))
        return assemble(name or f"{self.name}+{other.name}", n, universe,
                        list(self.constraints) + list(other.constraints), self.sources + other.sources)

    def violations(self, x: Sequence[Fraction], y: Mapping[Tuple[int, int], Fraction]) -> List[Tuple[str, Fraction]]:
        """Labels and excess of every violated row."""
        found = []
        for con in self.constraints:
            excess = con.lhs(x, y) - con.rhs
            if excess > 0:
                found.append((con.label, excess))
        return found

    def to_lp_model(self, objective: Optional[Mapping[VarRef, Fraction]] = None, sense: str = "min"):
        """Describe the system as an LP model with an (optional) objective."""
        from lpfile import LpModel, LpRow

        rows = [
            LpRow(name=con.label, linear={r.name: c for r, c in zip(con.refs, con.coefs)}, sense="<=", rhs=con.rhs)
            for con in self.constraints
        ]
        bounds = {x_var(i).name: (Fraction(0), Fraction(1)) for i in range(1, self.n + 1)}
        bounds.update({ref.name: (None, None) for ref in self.universe})
        return LpModel(
            name=self.name,
            sense=sense,
            objective={r.name: Fraction(c) for r, c in (objective or {}).items()},
            rows=rows,
            bounds=bounds,
        )


def assemble(name: str, n: int, universe: Sequence[VarRef], constraints: Iterable[LinearConstraint], sources: int = 0) -> ConstraintSystem:
    """Build a system, keeping the first row of every coefficient-level duplicate."""
    seen = set()
    kept = []
    for con in constraints:
        key = con.canonical_key()
        if key in seen:
            continue
        seen.add(key)
        kept.append(con)
    return ConstraintSystem(name=name, n=n, universe=tuple(universe), constraints=tuple(kept), sources=sources)


# Term helpers


def _x_terms(vertices: Iterable[int], coef: object) -> List[Tuple[VarRef, object]]:
    return [(x_var(v), coef) for v in vertices]


def _pair_terms(vertices: Sequence[int], coef: object) -> List[Tuple[VarRef, object]]:
    return [(y_var(u, v), coef) for u, v in itertools.combinations(sorted(vertices), 2)]


def _cross_terms(left: Iterable[int], right: Iterable[int], coef: object) -> List[Tuple[VarRef, object]]:
    return [(y_var(u, v), coef) for u in left for v in right]


def _set_param(prefix: str, vertices: Iterable[int]) -> str:
    return prefix + ",".join(str(v) for v in sorted(vertices))


# Families


def mccormick(i: int, j: int) -> List[LinearConstraint]:
    """
    The four McCormick bounds for y_ij (also for a loop i == j).

    Returns rows M1: -y <= 0, M2: y - x_i <= 0, M3: y - x_j <= 0,
    M4: x_i + x_j - y <= 1.
    """
    i, j = min(i, j), max(i, j)
    y = y_var(i, j)
    pair = f"{i},{j}"
    return [
        make_constraint("mccormick", (pair, "M1"), [(y, MINUS_ONE)], 0),
        make_constraint("mccormick", (pair, "M2"), [(y, ONE), (x_var(i), MINUS_ONE)], 0),
        make_constraint("mccormick", (pair, "M3"), [(y, ONE), (x_var(j), MINUS_ONE)], 0),
        make_constraint("mccormick", (pair, "M4"), [(x_var(i), ONE), (x_var(j), ONE), (y, MINUS_ONE)], 1),
    ]


def triangle(i: int, j: int, k: int) -> List[LinearConstraint]:
    """
    The four triangle inequalities on distinct vertices, sorted so that
    T2, T3 and T4 have apex at the smallest, middle and largest vertex.
    """
    if len({i, j, k}) != 3:
        raise BadSubset(f"Triangle needs distinct vertices, got ({i}, {j}, {k})")
    i, j, k = sorted((i, j, k))
    yij, yik, yjk = y_var(i, j), y_var(i, k), y_var(j, k)
    tri = f"{i},{j},{k}"
    return [
        make_constraint("triangle", (tri, "T1"),
                        [(x_var(i), 1), (x_var(j), 1), (x_var(k), 1), (yij, -1), (yik, -1), (yjk, -1)], 1),
        make_constraint("triangle", (tri, "T2"), [(x_var(i), -1), (yij, 1), (yik, 1), (yjk, -1)], 0),
        make_constraint("triangle", (tri, "T3"), [(x_var(j), -1), (yij, 1), (yik, -1), (yjk, 1)], 0),
        make_constraint("triangle", (tri, "T4"), [(x_var(k), -1), (yij, -1), (yik, 1), (yjk, 1)], 0),
    ]


def _clique_terms(vertices: Sequence[int], alpha: int) -> List[Tuple[VarRef, object]]:
    return _x_terms(vertices, alpha) + _pair_terms(vertices, -1)


def clique(S: Iterable[int], alpha: int, family: str = "clique") -> LinearConstraint:
    """
    alpha * x(S) - y(E(S)) <= alpha(alpha+1)/2 over all pairs of S.

    Raises:
        BadAlpha: Unless |S| >= 3 and 1 <= alpha <= |S| - 2.
    """
    vertices = sorted(set(S))
    if len(vertices) < 3 or not 1 <= alpha <= len(vertices) - 2:
        raise BadAlpha(f"Clique inequality needs |S| >= 3 and 1 <= alpha <= |S|-2, got |S|={len(vertices)}, alpha={alpha}")
    return make_constraint(family, (_set_param("S", vertices), f"a{alpha}"),
                           _clique_terms(vertices, alpha), Fraction(alpha * (alpha + 1), 2))


def _check_cut_sets(S: Iterable[int], T: Iterable[int]) -> Tuple[List[int], List[int]]:
    left, right = sorted(set(S)), sorted(set(T))
    if set(left) & set(right):
        raise Overlap(f"S and T intersect in {sorted(set(left) & set(right))}")
    if len(left) < 1 or len(right) < 2:
        raise BadSubset(f"Cut inequality needs |S| >= 1 and |T| >= 2, got {len(left)} and {len(right)}")
    return left, right


def cut(S: Iterable[int], T: Iterable[int]) -> LinearConstraint:
    """
    -x(S) - y(E(S)) + y(E(S:T)) - y(E(T)) <= 0.

    Raises:
        Overlap: If S and T intersect.
    """
    left, right = _check_cut_sets(S, T)
    terms = _x_terms(left, -1) + _pair_terms(left, -1) + _cross_terms(left, right, 1) + _pair_terms(right, -1)
    return make_constraint("cut", (_set_param("S", left), _set_param("T", right)), terms, 0)


def generalized_cut(S: Iterable[int], T: Iterable[int]) -> LinearConstraint:
    """
    (s-t)x(S) + (t-s-1)x(T) - y(E(S)) + y(E(S:T)) - y(E(T)) <= (t-s)(t-s-1)/2.

    Raises:
        Overlap: If S and T intersect.
    """
    left, right = _check_cut_sets(S, T)
    s, t = len(left), len(right)
    terms = (
        _x_terms(left, s - t)
        + _x_terms(right, t - s - 1)
        + _pair_terms(left, -1)
        + _cross_terms(left, right, 1)
        + _pair_terms(right, -1)
    )
    return make_constraint("generalized_cut", (_set_param("S", left), _set_param("T", right)),
                           terms, Fraction((t - s) * (t - s - 1), 2))


def _cycle_edges(C: Sequence[int]) -> List[Tuple[int, int]]:
    k = len(C)
    return [tuple(sorted((C[t], C[(t + 1) % k]))) for t in range(k)]


def odd_cycle(C: Sequence[int], D: Iterable[Tuple[int, int]], family: str = "odd_cycle") -> LinearConstraint:
    """
    x(V_0) - x(V_1) + y(C minus D) - y(D) <= (|D|-1)/2.

    C is a cyclic vertex sequence with edges {C[t], C[t+1]}; D is an odd set
    of those edges. V_0 holds the vertices where two D edges meet, V_1 those
    where two non-D edges meet.

    Raises:
        NotACycle: If C repeats a vertex or has fewer than 3 vertices.
        BadSubset: If D contains a pair that is not an edge of C.
        EvenD: If |D| is even.
    """
    C = list(C)
    if len(C) < 3 or len(set(C)) != len(C):
        raise NotACycle(f"Not a simple cycle: {C}")
    edges = _cycle_edges(C)
    chosen = {tuple(sorted(e)) for e in D}
    if not chosen <= set(edges):
        raise BadSubset(f"D contains pairs outside the cycle: {sorted(chosen - set(edges))}")
    if len(chosen) % 2 == 0:
        raise EvenD(f"|D| = {len(chosen)} is even")
    k = len(C)
    v0, v1 = [], []
    for t in range(k):
        before, after = edges[t - 1] in chosen, edges[t] in chosen
        if before and after:
            v0.append(C[t])
        elif not before and not after:
            v1.append(C[t])
    terms = _x_terms(v0, 1) + _x_terms(v1, -1)
    terms += [(y_var(*e), -1 if e in chosen else 1) for e in edges]
    params = ("C" + ",".join(str(v) for v in C), "D" + "|".join(f"{u}.{v}" for u, v in sorted(chosen)))
    return make_constraint(family, params, terms, Fraction(len(chosen) - 1, 2))


def signed_cycle_pair(C: Sequence[int], weights: Sequence[Fraction]) -> List[LinearConstraint]:
    """
    The cycle pair for a signed cycle given as a vertex sequence.

    weights[t] is the weight of edge {C[t], C[t+1]}. cycle_1 (D = negative
    edges) is emitted iff their number is odd, cycle_2 (D = positive edges)
    iff theirs is.
    """
    edges = _cycle_edges(C)
    negative = [e for e, a in zip(edges, weights) if a < 0]
    positive = [e for e, a in zip(edges, weights) if a > 0]
    pair = []
    if len(negative) % 2 == 1:
        pair.append(odd_cycle(C, negative, family="cycle_1"))
    if len(positive) % 2 == 1:
        pair.append(odd_cycle(C, positive, family="cycle_2"))
    return pair


def cycle_theorem_pair(g: WeightedGraph, semantics: str = "junction") -> List[LinearConstraint]:
    """
    The 0..2 cycle inequalities for a signed cycle in natural indexing.

    With semantics "literal" the vertex classes V^+- = {i : {i-1, i} in E^+-}
    are used verbatim instead of the junction vertices. Those rows are not
    valid in general: on signs (+, +, +, -) cycle_2_literal cuts off the
    0/1 point x = (0, 1, 0, 1), so checks against the envelopes are expected
    to fail on the lower side or in the projection.

    Raises:
        NotACycle: If g is not the cycle 1-2-...-n-1.
    """
    a = cycle_weights(g)
    n = g.n
    if semantics == "junction":
        return signed_cycle_pair(list(range(1, n + 1)), a)
    if semantics != "literal":
        raise ValueError(f"Unknown vertex semantics: {semantics!r}")
    part = sign_partition(g, semantics="literal")
    edges = _cycle_edges(list(range(1, n + 1)))
    ey = {e: y_var(*edges[e - 1]) for e in range(1, n + 1)}
    pair = []
    if len(part.e_minus) % 2 == 1:
        terms = _x_terms(part.v_minus, 1) + _x_terms(part.v_plus, -1)
        terms += [(ey[e], 1) for e in part.e_plus] + [(ey[e], -1) for e in part.e_minus]
        pair.append(make_constraint("cycle_1_literal", (f"n{n}",), terms, len(part.e_minus) // 2))
    if len(part.e_plus) % 2 == 1:
        terms = _x_terms(part.v_plus, 1) + _x_terms(part.v_minus, -1)
        terms += [(ey[e], 1) for e in part.e_minus] + [(ey[e], -1) for e in part.e_plus]
        pair.append(make_constraint("cycle_2_literal", (f"n{n}",), terms, len(part.e_plus) // 2))
    return pair


def clique_envelope_value(x: Sequence[Fraction], s: Optional[int] = None) -> Fraction:
    """
    s * sum(x) - C(s+1, 2), the convex envelope of the unit clique when
    s = floor(sum(x)).
    """
    total = sum(x, Fraction(0))
    if s is None:
        s = math.floor(total)
    return s * total - Fraction(s * (s + 1), 2)


# The almost complete graph K_n minus {n-1, n}


def all_pairs(n: int) -> Tuple[VarRef, ...]:
    return tuple(y_var(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1))


def edge_objective(g: WeightedGraph) -> Dict[VarRef, Fraction]:
    """The linear objective sum a_ij y_ij of f."""
    return {y_var(i, j): a for i, j, a in g.edges}


def kn_minus_label(family: int, s: int) -> str:
    return f"clique_minus_{family}(s{s})"


def kn_minus_system(n: int) -> ConstraintSystem:
    """
    McCormick on every pair of K_n plus the 3n-10 clique-type rows that make
    the projection exact for K_n minus the edge {n-1, n}.

    Raises:
        TooSmall: If n < 5.
    """
    if n < 5:
        raise TooSmall(f"kn_minus_system needs n >= 5, got {n}")
    rows: List[LinearConstraint] = []
    for i, j in itertools.combinations(range(1, n + 1), 2):
        rows.extend(mccormick(i, j))
    first = list(range(1, n))
    second = list(range(1, n - 1)) + [n]
    everything = list(range(1, n + 1))
    for s in range(1, n - 2):
        rows.append(make_constraint("clique_minus_1", (f"s{s}",), _clique_terms(first, s), Fraction(s * (s + 1), 2)))
    for s in range(1, n - 2):
        rows.append(make_constraint("clique_minus_2", (f"s{s}",), _clique_terms(second, s), Fraction(s * (s + 1), 2)))
    for s in range(2, n - 2):
        # y(E) - y_{n-1,n} together cover all pairs of K_n
        rows.append(make_constraint("clique_minus_3", (f"s{s}",), _clique_terms(everything, s), Fraction(s * (s + 1), 2)))
    return ConstraintSystem(name=f"kn_minus({n})", n=n, universe=all_pairs(n), constraints=tuple(rows), sources=1)


@dataclass(frozen=True)
class MinimalityWitness:
    """
    A point of kn_minus_system(n) minus one row whose projection leaves X(f).

    Attributes:
        n (int): Vertex count.
        family (int): 1, 2 or 3.
        s (int): Row parameter.
        label (str): Label of the dropped row.
        x (tuple): The x part.
        y (dict): y values on all pairs of K_n.
        z (Fraction): sum of y over the edges of K_n minus {n-1, n}.
    """

    n: int
    family: int
    s: int
    label: str
    x: PointX
    y: Dict[Tuple[int, int], Fraction] = field(compare=False)
    z: Fraction

    def as_tuple(self) -> Tuple[PointX, Dict[Tuple[int, int], Fraction]]:
        return self.x, self.y


def _symmetric_witness(n: int, s: int) -> Tuple[PointX, Dict[Tuple[int, int], Fraction]]:
    inner = Fraction(2 * s - 1, 2 * (n - 2))
    half = Fraction(1, 2)
    x = tuple([inner] * (n - 2) + [half, half])
    y: Dict[Tuple[int, int], Fraction] = {}
    for i, j in itertools.combinations(range(1, n - 1), 2):
        y[(i, j)] = Fraction((s - 1) ** 2 + 1, (n - 2) * (n - 3))
    for i in range(1, n - 1):
        y[(i, n - 1)] = y[(i, n)] = Fraction(s - 2, 2 * (n - 2))
    y[(n - 1, n)] = half
    return x, y


def _first_family_seed_point(n: int, s: int) -> PointX:
    x = [Fraction(0)] * n
    for i in range(s - 1):
        x[i] = Fraction(1)
    x[s - 1] = Fraction(4, 5)
    x[s] = Fraction(1, 5)
    x[n - 2] = Fraction(3, 5)
    x[n - 1] = Fraction(2, 5)
    return tuple(x)


def _first_family_candidates(n: int, s: int, tries: int) -> Iterable[PointX]:
    """The textbook pattern first, then seeded grid points with floor(x(1..n-1)) = s."""
    yield _first_family_seed_point(n, s)
    rng = np.random.default_rng([n, s, 1])
    grid = 10
    produced = 1
    draws = 0
    while produced < tries and draws < 200 * tries:
        draws += 1
        numerators = rng.integers(0, grid + 1, size=n)
        if sum(int(v) for v in numerators[: n - 1]) // grid != s:
            continue
        produced += 1
        yield tuple(Fraction(int(v), grid) for v in numerators)


def _swap_last_two(n: int, x: PointX, y: Mapping[Tuple[int, int], Fraction]) -> Tuple[PointX, Dict[Tuple[int, int], Fraction]]:
    perm = {v: v for v in range(1, n + 1)}
    perm[n - 1], perm[n] = n, n - 1
    swapped_x = list(x)
    swapped_x[n - 2], swapped_x[n - 1] = x[n - 1], x[n - 2]
    swapped_y = {}
    for (i, j), value in y.items():
        a, b = perm[i], perm[j]
        swapped_y[(min(a, b), max(a, b))] = value
    return tuple(swapped_x), swapped_y


def minimality_witness(n: int, family: int, s: int, tries: Optional[int] = None) -> MinimalityWitness:
    """
    A point satisfying every row of kn_minus_system(n) except the selected
    special row, with sum of y over K_n^- below vex[f](x).

    Family 3 uses the closed-form symmetric point (x_i = (2s-1)/(2(n-2)),
    x_{n-1} = x_n = y_{n-1,n} = 1/2). Families 1 and 2 are certified by
    LP: candidate x points are tried until dropping the row lowers the
    fixed-x bound, and y is the optimum of the reduced LP. Family 2 is
    family 1 with the roles of vertices n-1 and n exchanged.

    Raises:
        BadIndex: If (family, s) is outside the row ranges.
        WitnessNotFound: If no candidate separates within the try budget.
    """
    from ratsolver import fix_x_and_solve, solution_y

    if n < 5:
        raise TooSmall(f"kn_minus_system needs n >= 5, got {n}")
    low = 2 if family == 3 else 1
    if family not in (1, 2, 3) or not low <= s <= n - 3:
        raise BadIndex(f"No special row for family {family}, s={s} at n={n}")
    label = kn_minus_label(family, s)
    objective = edge_objective(kn_minus_graph(n))

    if family == 3:
        x, y = _symmetric_witness(n, s)
    else:
        budget = tries or get_config().witness_tries
        system = kn_minus_system(n)
        reduced = system.without(kn_minus_label(1, s))
        for attempt, candidate in enumerate(_first_family_candidates(n, s, budget), start=1):
            relaxed = fix_x_and_solve(reduced, candidate, objective, "min")
            exact = fix_x_and_solve(system, candidate, objective, "min")
            if relaxed.value < exact.value:
                logger.debug(f"Witness for {label} at n={n} found after {attempt} candidates")
                x, y = candidate, solution_y(reduced, relaxed)
                break
        else:
            raise WitnessNotFound(f"No separating point for {label} at n={n} within {budget} candidates")
        if family == 2:
            x, y = _swap_last_two(n, x, y)

    z = sum((c * y[ref.pair] for ref, c in objective.items()), Fraction(0))
    return MinimalityWitness(n=n, family=family, s=s, label=label, x=x, y=y, z=z)


# Wheels


def wheel_inequalities(n: int) -> List[LinearConstraint]:
    """
    The extra wheel rows for W_n (rim 1..n, hub n+1):
    floor(n/2) x_hub + x(rim) - y(E) <= floor(n/2), and for odd n
    ((n+1)/2) x_hub + 2 x(rim) - y(E) <= n.

    Raises:
        TooSmall: If n < 4.
    """
    if n < 4:
        raise TooSmall(f"wheel_inequalities needs n >= 4, got {n}")
    hub = n + 1
    rim = list(range(1, n + 1))
    edge_terms = [(y_var(i, j), -1) for i, j in _cycle_edges(rim)] + [(y_var(i, hub), -1) for i in rim]
    half = n // 2
    rows = [make_constraint("wheel_a", (f"n{n}",), [(x_var(hub), half)] + _x_terms(rim, 1) + edge_terms, half)]
    if n % 2 == 1:
        rows.append(make_constraint("wheel_b", (f"n{n}",), [(x_var(hub), (n + 1) // 2)] + _x_terms(rim, 2) + edge_terms, n))
    return rows


# Relaxation classes


CLASS_TAGS = ("M", "MT", "MQ", "MC", "MG", "MO")


def parse_class_tag(tag: str, k: Optional[int] = None) -> Tuple[str, Optional[int]]:
    """
    Split "MQ4" into ("MQ", 4).

    Raises:
        BadClass: On unknown tags, subscripts below 4, or subscripts on M/MT.
    """
    base = tag.rstrip("0123456789")
    suffix = tag[len(base):]
    if base not in CLASS_TAGS:
        raise BadClass(f"Unknown relaxation class {tag!r}; expected one of {', '.join(CLASS_TAGS)}")
    if suffix:
        if k is not None and k != int(suffix):
            raise BadClass(f"Conflicting sizes in {tag!r} and k={k}")
        k = int(suffix)
    if k is not None:
        if base in ("M", "MT"):
            raise BadClass(f"Class {base} takes no size subscript")
        if k < 4:
            raise BadClass(f"Size subscript must be at least 4, got {k}")
    return base, k


def edge_universe(g: WeightedGraph) -> Tuple[VarRef, ...]:
    return tuple(y_var(i, j) for i, j, _ in g.edges)


def _clique_hosts(g: WeightedGraph, k: Optional[int]) -> List[Tuple[int, ...]]:
    if k is None:
        return list(enumerate_cliques(g, 4, g.n)) if g.n >= 4 else []
    return list(enumerate_cliques(g, k, k)) if k <= g.n else []


def _hosted_subsets(hosts: List[Tuple[int, ...]], k: Optional[int], min_size: int) -> List[Tuple[int, ...]]:
    """Distinct vertex sets of size >= min_size contained in some host clique."""
    found = set()
    if k is None:
        # every subset of size >= 4 of a host is itself a host
        found.update(h for h in hosts if len(h) >= min_size)
        if min_size <= 3:
            for host in hosts:
                if len(host) == 4:
                    found.update(itertools.combinations(host, 3))
    else:
        for host in hosts:
            for r in range(min_size, len(host) + 1):
                found.update(itertools.combinations(host, r))
    return sorted(found, key=lambda u: (len(u), u))


def _splits(vertices: Tuple[int, ...]) -> Iterable[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """Ordered partitions (S, T) of the set with |S| >= 1 and |T| >= 2."""
    size = len(vertices)
    for r in range(1, size - 1):
        for left in itertools.combinations(vertices, r):
            right = tuple(v for v in vertices if v not in left)
            yield left, right


def relaxation_system(g: WeightedGraph, class_tag: str, k: Optional[int] = None) -> ConstraintSystem:
    """
    The relaxation of a class (M, MT, MQ, MC, MG, MO, optionally size-subscripted).

    McCormick rows are always present. MT adds the triangle rows of every
    triangle of g; MQ, MC and MG add clique, cut and generalized cut rows for
    vertex sets inside cliques of g with at least 4 (exactly k) vertices;
    MO adds the cycle pair of every cycle of length at least 4 (exactly k).
    The sources field counts edges, triangles, cliques or cycles.

    Raises:
        BadClass: On an unknown tag.
    """
    base, k = parse_class_tag(class_tag, k)
    name = base if k is None else f"{base}{k}"
    rows: List[LinearConstraint] = []
    for i, j, _ in g.edges:
        rows.extend(mccormick(i, j))
    sources = g.m

    if base == "MT":
        triangles = list(enumerate_cliques(g, 3, 3)) if g.n >= 3 else []
        for tri in triangles:
            rows.extend(triangle(*tri))
        sources = len(triangles)
    elif base in ("MQ", "MC", "MG"):
        hosts = _clique_hosts(g, k)
        sources = len(hosts)
        if base == "MQ":
            for subset in _hosted_subsets(hosts, k, 3):
                rows.extend(clique(subset, alpha) for alpha in range(1, len(subset) - 1))
        else:
            generator = cut if base == "MC" else generalized_cut
            for subset in _hosted_subsets(hosts, k, 4):
                rows.extend(generator(left, right) for left, right in _splits(subset))
    elif base == "MO":
        if g.n >= 4 and (k is None or k <= g.n):
            low, high = (4, g.n) if k is None else (k, k)
            sources = 0
            for cycle in enumerate_cycles(g, low, high):
                sources += 1
                weights = [g.weight(cycle[t], cycle[(t + 1) % len(cycle)]) for t in range(len(cycle))]
                rows.extend(signed_cycle_pair(cycle, weights))
        else:
            sources = 0

    system = assemble(name, g.n, edge_universe(g), rows, sources)
    logger.debug(f"{name} on {g}: {len(system)} rows from {sources} sources")
    return system


def disjoint_cycles_system(g: WeightedGraph, cycles: Sequence[Sequence[int]]) -> ConstraintSystem:
    """
    McCormick on every edge plus the cycle pair of each listed cycle.
    Exact for graphs whose cycles are vertex disjoint and listed.

    Raises:
        Overlap: If two listed cycles share a vertex.
    """
    used: set = set()
    rows: List[LinearConstraint] = []
    for i, j, _ in g.edges:
        rows.extend(mccormick(i, j))
    for cycle in cycles:
        if used & set(cycle):
            raise Overlap(f"Cycle {list(cycle)} shares vertices {sorted(used & set(cycle))} with an earlier cycle")
        used.update(cycle)
        weights = [g.weight(cycle[t], cycle[(t + 1) % len(cycle)]) for t in range(len(cycle))]
        if any(w == 0 for w in weights):
            raise BadSubset(f"{list(cycle)} is not a cycle of {g}")
        rows.extend(signed_cycle_pair(cycle, weights))
    return assemble("cycles", g.n, edge_universe(g), rows, len(cycles))


def cycle_system(g: WeightedGraph, semantics: str = "junction") -> ConstraintSystem:
    """McCormick plus the cycle pair for a signed cycle in natural indexing."""
    rows: List[LinearConstraint] = []
    for i, j, _ in g.edges:
        rows.extend(mccormick(i, j))
    rows.extend(cycle_theorem_pair(g, semantics=semantics))
    return assemble(f"cycle({g.n})", g.n, edge_universe(g), rows, 1)


def wheel_system(n: int) -> ConstraintSystem:
    """McCormick on the edges of W_n plus the wheel rows."""
    g = wheel_graph(n)
    rows: List[LinearConstraint] = []
    for i, j, _ in g.edges:
        rows.extend(mccormick(i, j))
    rows.extend(wheel_inequalities(n))
    return assemble(f"wheel({n})", g.n, edge_universe(g), rows, 1)
