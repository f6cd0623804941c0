"""
Edge-weighted graphs and the bilinear functions they encode.

A WeightedGraph on vertices 1..n with weights a_ij stands for
f(x) = sum a_ij x_i x_j over [0,1]^n. This module also provides the sign
partition of a signed cycle, seeded random graphs, and clique/cycle
enumeration backed by networkx.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from utils import format_rational, parse_rational

logger = logging.getLogger(__name__)

Edge = Tuple[int, int, Fraction]
PointX = Tuple[Fraction, ...]


class GraphError(Exception):
    """Base exception for graph construction and evaluation errors."""

    pass


class DuplicateEdge(GraphError):
    """The same vertex pair was given twice."""


class IndexOutOfRange(GraphError):
    """A vertex index lies outside 1..n, or a loop was given without loop mode."""


class ZeroWeight(GraphError):
    """An edge was given a zero weight."""


class DimensionMismatch(GraphError):
    """A vector does not have one entry per vertex."""


class OutOfBox(GraphError):
    """A point leaves the unit box."""


class NotACycle(GraphError):
    """The graph is not the cycle 1-2-...-n-1 with edge i = {i, i+1}."""


class BadProbability(GraphError):
    """Edge probability outside the open unit interval."""


class BadSizeRange(GraphError):
    """Enumeration size bounds are inconsistent."""


@dataclass(frozen=True)
class WeightedGraph:
    """
    A graph on vertices 1..n with nonzero rational edge weights.

    Attributes:
        n (int): Number of vertices.
        edges (tuple): Sorted (i, j, a_ij) triples with i < j (i == j for loops).
        allow_loops (bool): Whether (i, i) entries are permitted (QP mode).
    """

    n: int
    edges: Tuple[Edge, ...]
    allow_loops: bool = False

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise IndexOutOfRange(f"Vertex count must be a positive integer, got {self.n!r}")
        seen = set()
        for i, j, a in self.edges:
            if not (1 <= i <= j <= self.n):
                raise IndexOutOfRange(f"Edge ({i}, {j}) is outside 1..{self.n}")
            if i == j and not self.allow_loops:
                raise IndexOutOfRange(f"Loop ({i}, {i}) requires loop mode")
            if a == 0:
                raise ZeroWeight(f"Edge ({i}, {j}) has zero weight")
            if (i, j) in seen:
                raise DuplicateEdge(f"Edge ({i}, {j}) appears twice")
            seen.add((i, j))

    @property
    def m(self) -> int:
        """Number of edges."""
        return len(self.edges)

    @cached_property
    def weights(self) -> Dict[Tuple[int, int], Fraction]:
        return {(i, j): a for i, j, a in self.edges}

    def weight(self, i: int, j: int) -> Fraction:
        """Weight of the pair {i, j}, zero when it is not an edge."""
        key = (i, j) if i <= j else (j, i)
        return self.weights.get(key, Fraction(0))

    @cached_property
    def support(self) -> nx.Graph:
        """The loop-free support graph, nodes 1..n added in order."""
        graph = nx.Graph()
        graph.add_nodes_from(range(1, self.n + 1))
        graph.add_edges_from((i, j) for i, j, _ in self.edges if i != j)
        return graph

    def evaluate(self, x: Sequence[Fraction]) -> Fraction:
        """Evaluate f at x exactly."""
        return evaluate(self, x)

    def __str__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m})"


def from_edge_list(n: int, edges: Iterable[Tuple[int, int, object]], allow_loops: bool = False) -> WeightedGraph:
    """
    Build a canonical graph from an edge list.

    Args:
        n: Vertex count; vertices are 1..n.
        edges: (i, j, weight) triples in any order and orientation.
        allow_loops: Accept (i, i) entries.

    Returns:
        WeightedGraph: Graph with sorted edges and exact weights.

    Raises:
        DuplicateEdge: If a pair occurs twice.
        IndexOutOfRange: If an index is outside 1..n.
        ZeroWeight: If a weight is zero.
    """
    canonical = []
    for i, j, a in edges:
        i, j = int(i), int(j)
        if i > j:
            i, j = j, i
        canonical.append((i, j, parse_rational(a) if not isinstance(a, Fraction) else a))
    canonical.sort(key=lambda e: (e[0], e[1]))
    return WeightedGraph(n=n, edges=tuple(canonical), allow_loops=allow_loops)


def as_point(values: Iterable[object], n: Optional[int] = None) -> PointX:
    """
    Convert values to an exact point of the unit box.

    Raises:
        DimensionMismatch: If n is given and the length differs.
        OutOfBox: If a coordinate leaves [0, 1].
    """
    point = tuple(v if isinstance(v, Fraction) else parse_rational(v) for v in values)
    if n is not None and len(point) != n:
        raise DimensionMismatch(f"Expected {n} coordinates, got {len(point)}")
    for k, v in enumerate(point, start=1):
        if not 0 <= v <= 1:
            raise OutOfBox(f"x_{k} = {format_rational(v)} is outside [0, 1]")
    return point


def evaluate(g: WeightedGraph, x: Sequence[Fraction]) -> Fraction:
    """
    Evaluate f(x) = sum a_ij x_i x_j.

    Raises:
        DimensionMismatch: If len(x) != g.n.
    """
    if len(x) != g.n:
        raise DimensionMismatch(f"Point has {len(x)} coordinates, graph has {g.n} vertices")
    return sum((a * x[i - 1] * x[j - 1] for i, j, a in g.edges), Fraction(0))


def negate(g: WeightedGraph) -> WeightedGraph:
    """The graph of -f."""
    return WeightedGraph(n=g.n, edges=tuple((i, j, -a) for i, j, a in g.edges), allow_loops=g.allow_loops)


def union(g: WeightedGraph, h: WeightedGraph) -> WeightedGraph:
    """
    The graph of f + g for edge-disjoint graphs on the same vertex set.

    Raises:
        DimensionMismatch: If the vertex counts differ.
        DuplicateEdge: If the graphs share an edge.
    """
    if g.n != h.n:
        raise DimensionMismatch(f"Cannot combine graphs on {g.n} and {h.n} vertices")
    return from_edge_list(g.n, list(g.edges) + list(h.edges), allow_loops=g.allow_loops or h.allow_loops)


def support_vertices(g: WeightedGraph) -> FrozenSet[int]:
    """Vertices incident to at least one edge."""
    return frozenset(v for i, j, _ in g.edges for v in (i, j))


# Builders


def complete_graph(n: int, weight: object = 1) -> WeightedGraph:
    """K_n with a uniform weight."""
    a = parse_rational(weight)
    return WeightedGraph(n=n, edges=tuple((i, j, a) for i in range(1, n + 1) for j in range(i + 1, n + 1)))


def kn_minus_graph(n: int, weight: object = 1) -> WeightedGraph:
    """K_n without the edge {n-1, n}."""
    a = parse_rational(weight)
    edges = tuple(
        (i, j, a) for i in range(1, n + 1) for j in range(i + 1, n + 1) if (i, j) != (n - 1, n)
    )
    return WeightedGraph(n=n, edges=edges)


def cycle_graph(weights: Sequence[object]) -> WeightedGraph:
    """
    The cycle C_n where edge i = {i, i+1} carries weights[i-1] and edge n = {1, n}.

    Raises:
        NotACycle: If fewer than three weights are given.
    """
    n = len(weights)
    if n < 3:
        raise NotACycle(f"A cycle needs at least 3 edges, got {n}")
    edges = [(i, i + 1, weights[i - 1]) for i in range(1, n)]
    edges.append((1, n, weights[n - 1]))
    return from_edge_list(n, edges)


def wheel_graph(n: int, weight: object = 1) -> WeightedGraph:
    """The wheel W_n: rim cycle on 1..n plus spokes to the hub n+1."""
    if n < 3:
        raise IndexOutOfRange(f"A wheel needs at least 3 rim vertices, got {n}")
    a = parse_rational(weight)
    rim = [(i, i + 1, a) for i in range(1, n)] + [(1, n, a)]
    spokes = [(i, n + 1, a) for i in range(1, n + 1)]
    return from_edge_list(n + 1, rim + spokes)


def _sample_weight(rng: np.random.Generator, weight_sampler: str) -> Fraction:
    if weight_sampler == "unit":
        return Fraction(1)
    if weight_sampler == "sign":
        return Fraction(1) if rng.random() < 0.5 else Fraction(-1)
    if weight_sampler != "normal":
        raise ValueError(f"Unknown weight sampler: {weight_sampler!r}")
    while True:
        # Fraction(float) is the exact dyadic value of the double
        value = Fraction(float(rng.standard_normal()))
        if value != 0:
            return value


def erdos_renyi(n: int, p: float, seed: int, weight_sampler: str = "normal") -> WeightedGraph:
    """
    Sample G(n, p) with independent weights.

    Args:
        n: Vertex count.
        p: Edge probability, 0 < p < 1.
        seed: Seed for numpy's default generator.
        weight_sampler: "normal" (exact dyadic N(0,1)), "unit" or "sign".

    Returns:
        WeightedGraph: A graph that depends only on (n, p, seed, weight_sampler).

    Raises:
        BadProbability: If p is not in (0, 1).
    """
    if not 0 < p < 1:
        raise BadProbability(f"Edge probability must lie in (0, 1), got {p}")
    rng = np.random.default_rng(seed)
    edges = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < p:
                edges.append((i, j, _sample_weight(rng, weight_sampler)))
    logger.debug(f"G({n}, {p}) seed={seed}: {len(edges)} edges")
    return WeightedGraph(n=n, edges=tuple(edges))


def random_forest(n: int, seed: int, attach_probability: float = 0.8, weight_sampler: str = "normal") -> WeightedGraph:
    """A random forest: vertex v > 1 hangs below a random earlier vertex with the given probability."""
    rng = np.random.default_rng(seed)
    edges = []
    for v in range(2, n + 1):
        if rng.random() < attach_probability:
            parent = int(rng.integers(1, v))
            edges.append((parent, v, _sample_weight(rng, weight_sampler)))
    return from_edge_list(n, edges)


# Signed cycles


@dataclass(frozen=True)
class SignPartition:
    """
    Sign classes of a signed cycle with edge i = {i, i+1}.

    Attributes:
        e_plus, e_minus: Edge indices with positive / negative weight.
        v_plus, v_minus: Vertex classes under the chosen semantics.
        d_set: The odd edge class used for specialization (E^- if odd, else E^+ if odd, else empty).
    """

    e_plus: FrozenSet[int]
    e_minus: FrozenSet[int]
    v_plus: FrozenSet[int]
    v_minus: FrozenSet[int]
    d_set: FrozenSet[int]


def cycle_weights(g: WeightedGraph) -> List[Fraction]:
    """
    Return a_1..a_n for a cycle graph in its natural indexing.

    Raises:
        NotACycle: If g is not exactly the cycle 1-2-...-n-1.
    """
    n = g.n
    expected = {(i, i + 1) for i in range(1, n)} | {(1, n)}
    if n < 3 or set(g.weights) != expected:
        raise NotACycle(f"{g} is not the cycle 1-2-...-{n}-1")
    return [g.weights[(i, i + 1)] for i in range(1, n)] + [g.weights[(1, n)]]


def incident_cycle_edges(n: int, v: int) -> Tuple[int, int]:
    """Edge indices (incoming, outgoing) at vertex v of C_n."""
    return (v - 1 if v > 1 else n, v)


def junction_vertices(n: int, edge_class: FrozenSet[int]) -> FrozenSet[int]:
    """Vertices of C_n where both incident edges belong to edge_class."""
    return frozenset(
        v for v in range(1, n + 1) if all(e in edge_class for e in incident_cycle_edges(n, v))
    )


def sign_partition(g: WeightedGraph, semantics: str = "junction") -> SignPartition:
    """
    Partition the edges and vertices of a signed cycle by sign.

    With semantics "junction", V^+ (V^-) are the vertices where two positive
    (negative) edges meet. With "literal", V^+- = {i : edge {i-1, i} in E^+-}.

    Raises:
        NotACycle: If g is not a cycle in natural indexing.
    """
    a = cycle_weights(g)
    n = g.n
    e_plus = frozenset(i for i in range(1, n + 1) if a[i - 1] > 0)
    e_minus = frozenset(i for i in range(1, n + 1) if a[i - 1] < 0)
    if semantics == "junction":
        v_plus = junction_vertices(n, e_plus)
        v_minus = junction_vertices(n, e_minus)
    elif semantics == "literal":
        v_plus = frozenset(v for v in range(1, n + 1) if incident_cycle_edges(n, v)[0] in e_plus)
        v_minus = frozenset(v for v in range(1, n + 1) if incident_cycle_edges(n, v)[0] in e_minus)
    else:
        raise ValueError(f"Unknown vertex semantics: {semantics!r}")
    if len(e_minus) % 2 == 1:
        d_set = e_minus
    elif len(e_plus) % 2 == 1:
        d_set = e_plus
    else:
        d_set = frozenset()
    return SignPartition(e_plus=e_plus, e_minus=e_minus, v_plus=v_plus, v_minus=v_minus, d_set=d_set)


# Enumeration


def enumerate_cliques(g: WeightedGraph, k_min: int, k_max: int) -> Iterator[Tuple[int, ...]]:
    """
    Yield every clique of the support with k_min <= size <= k_max.

    Cliques come as sorted vertex tuples, ordered by size and then
    lexicographically within a size.

    Raises:
        BadSizeRange: Unless 3 <= k_min <= k_max <= n.
    """
    if not 3 <= k_min <= k_max <= g.n:
        raise BadSizeRange(f"Need 3 <= k_min <= k_max <= {g.n}, got [{k_min}, {k_max}]")
    group: List[Tuple[int, ...]] = []
    group_size = k_min
    # enumerate_all_cliques yields cliques in nondecreasing size
    for clique in nx.enumerate_all_cliques(g.support):
        size = len(clique)
        if size < k_min:
            continue
        if size > k_max:
            break
        if size != group_size:
            yield from sorted(group)
            group, group_size = [], size
        group.append(tuple(sorted(clique)))
    yield from sorted(group)


def canonical_cycle(cycle: Sequence[int]) -> Tuple[int, ...]:
    """Rotate so the smallest vertex comes first, then orient toward its smaller neighbor."""
    k = cycle.index(min(cycle))
    rotated = list(cycle[k:]) + list(cycle[:k])
    if rotated[-1] < rotated[1]:
        rotated = [rotated[0]] + rotated[1:][::-1]
    return tuple(rotated)


def enumerate_cycles(g: WeightedGraph, k_min: int, k_max: int) -> Iterator[Tuple[int, ...]]:
    """
    Yield each simple cycle of the support with k_min <= length <= k_max once.

    Raises:
        BadSizeRange: Unless 4 <= k_min <= k_max <= n.
    """
    if not 4 <= k_min <= k_max <= g.n:
        raise BadSizeRange(f"Need 4 <= k_min <= k_max <= {g.n}, got [{k_min}, {k_max}]")
    for cycle in nx.simple_cycles(g.support, length_bound=k_max):
        if len(cycle) >= k_min:
            yield canonical_cycle(cycle)


# Edge-list text format


def to_text(g: WeightedGraph) -> str:
    """Serialize as "n m" followed by one "i j num/den" line per edge."""
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{i} {j} {format_rational(a)}" for i, j, a in g.edges)
    return "\n".join(lines) + "\n"


def from_text(text: str, allow_loops: bool = False) -> WeightedGraph:
    """
    Parse the edge-list format.

    Raises:
        GraphError: If the header or an edge line is malformed.
    """
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise GraphError("Edge list must start with a header line 'n m'")
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
        edges = []
        for row in rows[1:]:
            if len(row) != 3:
                raise GraphError(f"Malformed edge line: {' '.join(row)!r}")
            edges.append((int(row[0]), int(row[1]), parse_rational(row[2])))
    except ValueError as e:
        raise GraphError(f"Malformed edge list: {e}") from e
    if len(edges) != m:
        raise GraphError(f"Header announces {m} edges, found {len(edges)}")
    return from_edge_list(n, edges, allow_loops=allow_loops)


def read_graph(path: str, allow_loops: bool = False) -> WeightedGraph:
    """Read an edge-list file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return from_text(f.read(), allow_loops=allow_loops)
    except OSError as e:
        raise GraphError(f"Cannot read graph file {path}: {e}") from e
