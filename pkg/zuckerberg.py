"""
Interval-set certificates for points of X(f).

Sets X_1..X_n inside [0, 1) with measure(X_i) = x_i certify that
(x, sum a_ij measure(X_i & X_j)) lies in X(f). This module computes the
atoms of such a family, converts convex combinations of 0/1 points into
sets and back, and builds the explicit families used for cliques, for
K_n minus an edge and for signed cycles, together with the defect
bookkeeping and the dual solution that close the cycle argument.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from envelopes import envelope
from graph_model import (
    DimensionMismatch,
    PointX,
    WeightedGraph,
    as_point,
    cycle_graph,
    cycle_weights,
    junction_vertices,
)
from intervals import ONE, ZERO, IntervalSet
from utils import format_rational

logger = logging.getLogger(__name__)

Pattern = Tuple[int, ...]


class CertificateError(Exception):
    """Base exception for certificate construction and file errors."""

    pass


class BadWeights(CertificateError):
    """Convex-combination weights are negative, do not sum to 1 or have mixed lengths."""


class BadPartition(CertificateError):
    """The reservoirs given to bucket do not partition [0, 1)."""


# Measure algebra


def atoms(sets: Sequence[IntervalSet]) -> Dict[Pattern, Fraction]:
    """
    Measures of the atoms R_xi = {t : t in X_i exactly when xi_i = 1}.

    Elementary intervals between consecutive boundary points are swept once,
    so the cost depends on the number of endpoints rather than on 2^n.

    Returns:
        Dict[Pattern, Fraction]: Nonzero atom measures; they sum to 1.
    """
    cuts = sorted({ZERO, ONE}.union(*(s.points for s in sets)))
    result: Dict[Pattern, Fraction] = {}
    for left, right in zip(cuts, cuts[1:]):
        pattern = tuple(1 if s.contains(left) else 0 for s in sets)
        result[pattern] = result.get(pattern, ZERO) + (right - left)
    return result


def certificate_value(sets: Sequence[IntervalSet], g: WeightedGraph) -> Fraction:
    """
    sum a_ij measure(X_i & X_j) over the edges of g.

    Raises:
        DimensionMismatch: If the number of sets differs from g.n.
    """
    if len(sets) != g.n:
        raise DimensionMismatch(f"Got {len(sets)} sets for a graph on {g.n} vertices")
    return sum(((sets[i - 1] & sets[j - 1]).measure * a for i, j, a in g.edges), ZERO)


def point_of(sets: Sequence[IntervalSet]) -> PointX:
    """The point x_i = measure(X_i) certified by the sets."""
    return tuple(s.measure for s in sets)


def from_convex_combination(weights: Mapping[Pattern, object]) -> List[IntervalSet]:
    """
    Lay the weights of a convex combination side by side in [0, 1).

    The k-th vertex xi receives the interval I_k = [c_{k-1}, c_k), and X_i
    is the union of the intervals of vertices with xi_i = 1.

    Raises:
        BadWeights: If a weight is negative, the sum is not 1 or the
            vertices have different lengths.
    """
    items = [(tuple(int(v) for v in xi), Fraction(lam)) for xi, lam in weights.items()]
    if not items:
        raise BadWeights("No vertices given")
    n = len(items[0][0])
    if any(len(xi) != n for xi, _ in items):
        raise BadWeights("Vertices have different lengths")
    if any(lam < 0 for _, lam in items):
        raise BadWeights("Convex-combination weights must be nonnegative")
    total = sum((lam for _, lam in items), ZERO)
    if total != 1:
        raise BadWeights(f"Weights sum to {format_rational(total)}, not 1")
    spans: List[List[Tuple[Fraction, Fraction]]] = [[] for _ in range(n)]
    start = ZERO
    for xi, lam in items:
        if not lam:
            continue
        for i, bit in enumerate(xi):
            if bit:
                spans[i].append((start, start + lam))
        start += lam
    return [IntervalSet(s) for s in spans]


# Explicit constructions


def _wrapped(start: Fraction, length: Fraction) -> IntervalSet:
    """[start, start + length) read modulo 1."""
    if length >= 1:
        return IntervalSet.universe()
    end = start + length
    if end <= 1:
        return IntervalSet.span(start, end)
    return IntervalSet([(start, ONE), (ZERO, end - 1)])


def clique_construction(x: Sequence[object]) -> List[IntervalSet]:
    """
    Concatenate intervals of lengths x_1, ..., x_n around the circle [0, 1).

    Every t is then covered by s or s + 1 sets with s = floor(sum x), which
    makes the certificate value on the unit clique s*sum(x) - C(s+1, 2).
    """
    point = as_point(x)
    sets = []
    start = ZERO
    for v in point:
        sets.append(_wrapped(start, v))
        start = (start + v) % 1
    return sets


@dataclass(frozen=True)
class KnMinusLayout:
    """
    Sets built for K_n minus {n-1, n}.

    Attributes:
        sets (list): X_1..X_n in the caller's vertex order.
        order (tuple): order[k] is the caller's vertex placed at position k+1.
        a (Fraction): Final lower marker of the sweep.
        b (Fraction): Final upper marker; b = 1 and b < 1 are the two layouts.
    """

    sets: List[IntervalSet] = field(compare=False)
    order: Tuple[int, ...]
    a: Fraction
    b: Fraction


def kn_minus_layout(x: Sequence[object]) -> KnMinusLayout:
    """
    Run the sweep construction for K_n minus {n-1, n}.

    Vertices 1..n-2 are sorted by decreasing x and x_n <= x_{n-1} is arranged
    by exchanging the last two; the graph is invariant under both moves.
    With X_n = [0, x_n), X_{n-1} = [0, x_{n-1}) and (a, b) = (x_n, x_{n-1}),
    each remaining x_k extends the layout from b, wraps onto a, or wraps
    around from a.
    """
    point = as_point(x)
    n = len(point)
    if n < 3:
        raise DimensionMismatch(f"The sweep needs at least 3 coordinates, got {n}")
    head = sorted(range(1, n - 1), key=lambda v: (-point[v - 1], v))
    tail = [n - 1, n] if point[n - 2] >= point[n - 1] else [n, n - 1]
    order = tuple(head + tail)
    xs = [point[v - 1] for v in order]

    placed: List[IntervalSet] = [IntervalSet.empty()] * n
    placed[n - 1] = IntervalSet.span(ZERO, xs[n - 1])
    placed[n - 2] = IntervalSet.span(ZERO, xs[n - 2])
    a, b = xs[n - 1], xs[n - 2]
    for k in range(n - 2):
        xk = xs[k]
        if xk <= 1 - b:
            placed[k] = IntervalSet.span(b, b + xk)
            b = b + xk
        elif xk <= 1 - a:
            placed[k] = IntervalSet([(b, ONE), (a, a + xk + b - 1)])
            a, b = a + xk + b - 1, ONE
        else:
            placed[k] = IntervalSet([(a, ONE), (ZERO, xk + a - 1)])
            a = xk + a - 1

    sets: List[IntervalSet] = [IntervalSet.empty()] * n
    for position, vertex in enumerate(order):
        sets[vertex - 1] = placed[position]
    logger.debug(f"Sweep for n={n} ended with a={format_rational(a)}, b={format_rational(b)}")
    return KnMinusLayout(sets=sets, order=order, a=a, b=b)


def kn_minus_construction(x: Sequence[object]) -> List[IntervalSet]:
    """The sweep sets for K_n minus {n-1, n}, indexed like x."""
    return kn_minus_layout(x).sets


def bucket(y1: IntervalSet, y2: IntervalSet, y3: IntervalSet, y4: IntervalSet, x: object) -> IntervalSet:
    """
    Fill a set of measure x from the reservoirs y1, y2, y3, y4 in that order.

    Each reservoir contributes its leftmost part.

    Raises:
        BadPartition: If the reservoirs are not a partition of [0, 1).
        CertificateError: If x is outside [0, 1].
    """
    reservoirs = (y1, y2, y3, y4)
    covered = IntervalSet.empty()
    for y in reservoirs:
        if (covered & y).measure:
            raise BadPartition("Reservoirs overlap")
        covered = covered | y
    if covered != IntervalSet.universe():
        raise BadPartition(f"Reservoirs cover only {format_rational(covered.measure)} of [0, 1)")
    capacity = Fraction(x)
    if not 0 <= capacity <= 1:
        raise CertificateError(f"Capacity {format_rational(capacity)} is outside [0, 1]")
    filled = IntervalSet.empty()
    for y in reservoirs:
        need = capacity - filled.measure
        if need <= 0:
            break
        filled = filled | y.take_measure(min(y.measure, need))
    return filled


# Signed cycles


@dataclass(frozen=True)
class CycleContext:
    """
    Bookkeeping of the cycle construction, in rotated indexing.

    The rotation places a minimum-|a| edge last: rotated vertex k is the
    original vertex ((shift + k - 1) mod n) + 1, and rotated edge k is the
    original edge with the same formula.

    Attributes:
        n (int): Cycle length.
        shift (int): Rotation offset (0 when edge n already has minimum |a|).
        x (tuple): Rotated point.
        a (tuple): Rotated weights; edge i joins i and i+1, edge n joins n and 1.
        mu (tuple): mu_i = min(x_i, x_{i+1}).
        eta (tuple): eta_i = max(0, x_i + x_{i+1} - 1).
        big_a (Fraction): x(V^+) - x(V^-) + floor(|E^-| / 2) on junction vertices.
        defects (dict): delta_i for i = 2..n.
        e_minus_tail (dict): |E_i^-| = #{j >= i : a_j < 0} for i = 2..n.
        edge_values (tuple): measure(X_i & X_{i+1}) realized by the sets.
        value (Fraction): sum a_i * edge_values[i].
    """

    n: int
    shift: int
    x: PointX
    a: Tuple[Fraction, ...]
    mu: Tuple[Fraction, ...]
    eta: Tuple[Fraction, ...]
    big_a: Fraction
    defects: Dict[int, Fraction] = field(compare=False)
    e_minus_tail: Dict[int, int] = field(compare=False)
    edge_values: Tuple[Fraction, ...] = ()
    value: Fraction = ZERO

    @property
    def e_plus(self) -> List[int]:
        return [i for i in range(1, self.n + 1) if self.a[i - 1] > 0]

    @property
    def e_minus(self) -> List[int]:
        return [i for i in range(1, self.n + 1) if self.a[i - 1] < 0]

    @property
    def closed_form(self) -> Fraction:
        """sum_{E+} a_i mu_i + sum_{E-} a_i eta_i - |a_n| delta_n."""
        total = sum((self.a[i - 1] * self.mu[i - 1] for i in self.e_plus), ZERO)
        total += sum((self.a[i - 1] * self.eta[i - 1] for i in self.e_minus), ZERO)
        return total - abs(self.a[-1]) * self.defects[self.n]

    def original_vertex(self, k: int) -> int:
        return (self.shift + k - 1) % self.n + 1


def rotation_shift(weights: Sequence[Fraction]) -> int:
    """0 if |a_n| is minimal, else the smallest index of a minimum-|a| edge."""
    smallest = min(abs(a) for a in weights)
    if abs(weights[-1]) == smallest:
        return 0
    return next(i for i, a in enumerate(weights, start=1) if abs(a) == smallest)


def _rotate(values: Sequence, shift: int) -> Tuple:
    n = len(values)
    return tuple(values[(shift + k - 1) % n] for k in range(1, n + 1))


def _cycle_sets(x: Sequence[Fraction], a: Sequence[Fraction]) -> List[IntervalSet]:
    n = len(x)
    sets = [IntervalSet.span(ZERO, x[0])]
    if a[0] > 0:
        sets.append(IntervalSet.span(ZERO, x[1]))
    else:
        sets.append(IntervalSet.span(ONE - x[1], ONE))
    first = sets[0]
    for i in range(3, n + 1):
        prev = sets[i - 2]
        r1 = prev - first
        r2 = prev & first
        r3 = ~(first | prev)
        r4 = first - prev
        odd = sum(1 for j in range(i, n + 1) if a[j - 1] < 0) % 2 == 1
        if a[i - 2] > 0:
            order = (r1, r2, r3, r4) if odd else (r2, r1, r4, r3)
        else:
            order = (r3, r4, r1, r2) if odd else (r4, r3, r2, r1)
        sets.append(bucket(*order, x[i - 1]))
    return sets


def cycle_construction(g: WeightedGraph, x: Sequence[object]) -> Tuple[List[IntervalSet], CycleContext]:
    """
    Build the concave-side sets for a signed cycle.

    Positive edges other than the last receive their largest possible
    overlap and negative ones their smallest; the last edge (a minimum-|a|
    edge after rotation) absorbs the defect.

    Args:
        g: A cycle 1-2-...-n-1 with nonzero weights.
        x: The point.

    Returns:
        Tuple[List[IntervalSet], CycleContext]: Sets indexed by original
            vertices, and the rotated bookkeeping.

    Raises:
        NotACycle: If g is not a cycle in natural indexing.
    """
    weights = cycle_weights(g)
    n = g.n
    point = as_point(x, n)
    shift = rotation_shift(weights)
    a = _rotate(weights, shift)
    xr = _rotate(point, shift)

    rotated_sets = _cycle_sets(xr, a)
    nxt = [i % n for i in range(1, n + 1)]
    mu = tuple(min(xr[i], xr[nxt[i]]) for i in range(n))
    eta = tuple(max(ZERO, xr[i] + xr[nxt[i]] - 1) for i in range(n))
    e_plus = frozenset(i for i in range(1, n + 1) if a[i - 1] > 0)
    e_minus = frozenset(i for i in range(1, n + 1) if a[i - 1] < 0)
    v_plus = junction_vertices(n, e_plus)
    v_minus = junction_vertices(n, e_minus)
    big_a = (
        sum((xr[v - 1] for v in v_plus), ZERO)
        - sum((xr[v - 1] for v in v_minus), ZERO)
        + len(e_minus) // 2
    )

    first = rotated_sets[0]
    defects: Dict[int, Fraction] = {}
    tail: Dict[int, int] = {}
    for i in range(2, n + 1):
        count = sum(1 for j in range(i, n + 1) if a[j - 1] < 0)
        tail[i] = count
        overlap = (first & rotated_sets[i - 1]).measure
        if count % 2:
            defects[i] = overlap - max(ZERO, xr[0] + xr[i - 1] - 1)
        else:
            defects[i] = min(xr[i - 1], xr[0]) - overlap
    edge_values = tuple((rotated_sets[i] & rotated_sets[nxt[i]]).measure for i in range(n))
    value = sum((a[i] * edge_values[i] for i in range(n)), ZERO)
    ctx = CycleContext(
        n=n, shift=shift, x=xr, a=a, mu=mu, eta=eta, big_a=big_a, defects=defects,
        e_minus_tail=tail, edge_values=edge_values, value=value,
    )

    sets: List[IntervalSet] = [IntervalSet.empty()] * n
    for k in range(1, n + 1):
        sets[ctx.original_vertex(k) - 1] = rotated_sets[k - 1]
    return sets, ctx


def vex_cycle_construction(g: WeightedGraph, x: Sequence[object]) -> Tuple[List[IntervalSet], CycleContext, Fraction]:
    """
    Convex-side sets: run the construction on -f.

    Returns:
        Sets, the context for -f, and the certificate value for f.
    """
    negated = cycle_graph([-a for a in cycle_weights(g)])
    sets, ctx = cycle_construction(negated, x)
    return sets, ctx, -ctx.value


@dataclass
class DefectReport:
    """Outcome of replaying the defect identities on a constructed cycle."""

    monotone: bool = True
    nonnegative: bool = True
    edges_extreme: bool = True
    formula_checked: bool = False
    formula_holds: bool = True
    value_matches: bool = True
    mismatches: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def defect_formula_check(ctx: CycleContext) -> DefectReport:
    """
    Replay the identities behind the cycle construction.

    Checks delta_i >= 0 and delta_i <= delta_{i-1}; edge values mu_i on
    positive and eta_i on negative non-final edges; the value
    identity with |a_n| delta_n; and, when delta_n > 0,
    delta_n = sum_{E+} mu_i - sum_{E-} eta_i - A.
    """
    report = DefectReport()
    n = ctx.n
    for i in range(2, n + 1):
        if ctx.defects[i] < 0:
            report.nonnegative = False
            report.mismatches.append(f"delta_{i} = {format_rational(ctx.defects[i])} < 0")
        if i >= 3 and ctx.defects[i] > ctx.defects[i - 1]:
            report.monotone = False
            report.mismatches.append(f"delta_{i} > delta_{i - 1}")
    for i in range(1, n):
        expected = ctx.mu[i - 1] if ctx.a[i - 1] > 0 else ctx.eta[i - 1]
        if ctx.edge_values[i - 1] != expected:
            report.edges_extreme = False
            report.mismatches.append(
                f"edge {i}: overlap {format_rational(ctx.edge_values[i - 1])}, expected {format_rational(expected)}"
            )
    if ctx.value != ctx.closed_form:
        report.value_matches = False
        report.mismatches.append(
            f"value {format_rational(ctx.value)} differs from closed form {format_rational(ctx.closed_form)}"
        )
    if ctx.defects[n] > 0:
        report.formula_checked = True
        gamma = (
            sum((ctx.mu[i - 1] for i in ctx.e_plus), ZERO)
            - sum((ctx.eta[i - 1] for i in ctx.e_minus), ZERO)
            - ctx.big_a
        )
        if gamma != ctx.defects[n]:
            report.formula_holds = False
            report.mismatches.append(
                f"delta_n = {format_rational(ctx.defects[n])} but the edge sum gives {format_rational(gamma)}"
            )
    if report.mismatches:
        logger.warning(f"Defect replay found {len(report.mismatches)} mismatches")
    return report


@dataclass(frozen=True)
class DualCertificate:
    """
    A solution (z, w, alpha) of the dual of the concave-side cycle LP,
    in rotated indexing.

    Attributes:
        side (str): "UB" for cav, "LB" for vex (built on -f and negated back).
        alpha (Fraction): Multiplier of the cycle row.
        z (tuple): Multipliers of y_i <= mu_i.
        w (tuple): Multipliers of y_i >= eta_i.
        objective (Fraction): Dual objective, reported on the requested side.
        feasible (bool): Whether all dual constraints hold.
        context (CycleContext): The construction it belongs to.
    """

    side: str
    alpha: Fraction
    z: Tuple[Fraction, ...]
    w: Tuple[Fraction, ...]
    objective: Fraction
    feasible: bool
    context: CycleContext


def _upper_dual(ctx: CycleContext) -> Tuple[Fraction, List[Fraction], List[Fraction]]:
    a = ctx.a
    n = ctx.n
    z = [ZERO] * n
    w = [ZERO] * n
    if ctx.defects[n] == 0:
        for i in range(n):
            if a[i] > 0:
                z[i] = a[i]
            else:
                w[i] = -a[i]
        return ZERO, z, w
    a_n = a[-1]
    for i in range(n):
        if a[i] > 0:
            z[i] = a[i] - a_n if a_n > 0 else a[i] + a_n
        else:
            w[i] = -a[i] - a_n if a_n > 0 else a_n - a[i]
    return abs(a_n), z, w


def _dual_feasible(ctx: CycleContext, alpha: Fraction, z: Sequence[Fraction], w: Sequence[Fraction]) -> bool:
    if alpha < 0 or any(v < 0 for v in z) or any(v < 0 for v in w):
        return False
    for i, a in enumerate(ctx.a):
        lhs = z[i] - w[i] + (alpha if a > 0 else -alpha)
        if lhs < a:
            return False
    return True


def cycle_dual_certificate(g: WeightedGraph, x: Sequence[object], side: str = "UB") -> DualCertificate:
    """
    The explicit dual solution matching the cycle construction.

    With delta_n > 0 it uses alpha = |a_n| and shifts every z_i or w_i by
    a_n; with delta_n = 0 the McCormick bounds alone suffice (alpha = 0).
    The objective sum mu_i z_i - sum eta_i w_i + A*alpha then equals the
    primal certificate value. The vex side works on -f and negates.

    Raises:
        NotACycle: If g is not a cycle in natural indexing.
        ValueError: If side is not "UB" or "LB".
    """
    if side not in ("UB", "LB"):
        raise ValueError(f"side must be 'UB' or 'LB', got {side!r}")
    target = g if side == "UB" else cycle_graph([-a for a in cycle_weights(g)])
    _, ctx = cycle_construction(target, x)
    alpha, z, w = _upper_dual(ctx)
    objective = (
        sum((m * v for m, v in zip(ctx.mu, z)), ZERO)
        - sum((e * v for e, v in zip(ctx.eta, w)), ZERO)
        + ctx.big_a * alpha
    )
    if side == "LB":
        objective = -objective
    return DualCertificate(
        side=side, alpha=alpha, z=tuple(z), w=tuple(w), objective=objective,
        feasible=_dual_feasible(ctx, alpha, z, w), context=ctx,
    )


# Certificate files


def certificate_to_text(sets: Sequence[IntervalSet]) -> str:
    """Header "n", then one line of "a b" pairs per set ("-" for the empty set)."""
    lines = [str(len(sets))]
    lines.extend(s.to_text() or "-" for s in sets)
    return "\n".join(lines) + "\n"


def certificate_from_text(text: str) -> List[IntervalSet]:
    """
    Raises:
        CertificateError: On a bad header or a wrong number of set lines.
    """
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line and not line.startswith("#")]
    if not lines:
        raise CertificateError("Empty certificate")
    try:
        n = int(lines[0])
    except ValueError as e:
        raise CertificateError(f"Bad certificate header {lines[0]!r}") from e
    body = lines[1:]
    if len(body) != n:
        raise CertificateError(f"Header announces {n} sets, found {len(body)}")
    return [IntervalSet.empty() if line == "-" else IntervalSet.from_text(line) for line in body]


def write_certificate(sets: Sequence[IntervalSet], path: str) -> None:
    try:
        with open(path, "w") as f:
            f.write(certificate_to_text(sets))
    except OSError as e:
        raise CertificateError(f"Cannot write certificate {path}: {str(e)}") from e


def read_certificate(path: str) -> List[IntervalSet]:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise CertificateError(f"Cannot read certificate {path}: {str(e)}") from e
    return certificate_from_text(text)


@dataclass(frozen=True)
class CertificateCheck:
    """The value of a certificate against the exact envelopes at its point."""

    point: PointX
    value: Fraction
    vex: Fraction
    cav: Fraction

    @property
    def holds(self) -> bool:
        return self.vex <= self.value <= self.cav

    @property
    def certifies_vex(self) -> bool:
        return self.value == self.vex

    @property
    def certifies_cav(self) -> bool:
        return self.value == self.cav


def check_certificate(sets: Sequence[IntervalSet], g: WeightedGraph, cap: Optional[int] = None) -> CertificateCheck:
    """
    Compare a certificate with vex and cav at x_i = measure(X_i).

    Raises:
        DimensionMismatch: If the number of sets differs from g.n.
        TooLarge: If g.n exceeds the envelope cap.
    """
    value = certificate_value(sets, g)
    point = point_of(sets)
    result = envelope(g, point, cap=cap)
    check = CertificateCheck(point=point, value=value, vex=result.vex, cav=result.cav)
    if not check.holds:
        logger.warning(f"Certificate value {format_rational(value)} lies outside [vex, cav]")
    return check
