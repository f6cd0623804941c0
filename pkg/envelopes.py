"""
Exact envelopes of bilinear functions and the bounds of their relaxations.

vex[f](x) and cav[f](x) are optima of an LP over convex combinations of the
0/1 vertices of the box; LB_P[f](x) and UB_P[f](x) optimize sum a_ij y_ij
over a constraint system with x fixed. Comparing the two decides whether a
system is an extended formulation of X(f) at a point, and their ratio gives
the gap statistics of the relaxation study.
"""

import csv
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config import get_config
from graph_model import PointX, WeightedGraph, as_point, evaluate, support_vertices, union
from inequalities import ConstraintSystem, edge_objective
from ratsolver import InfeasibleAtX, LpProblem, LpStatus, fix_x_and_solve, solve
from utils import format_rational, format_vector

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
Pattern = Tuple[int, ...]


class EnvelopeError(Exception):
    """Base exception for envelope and relaxation evaluation errors."""

    pass


class TooLarge(EnvelopeError):
    """The vertex LP would exceed the configured size cap."""


class DegenerateGap(EnvelopeError):
    """cav = vex at the point, so the gap ratio is undefined."""


class SharedTooMuch(EnvelopeError):
    """The two functions share more than one variable."""


@dataclass(frozen=True)
class EnvelopeResult:
    """
    Both envelopes at a point, with the convex combinations attaining them.

    Attributes:
        point (tuple): The point x.
        vex (Fraction): Convex envelope value.
        cav (Fraction): Concave envelope value.
        vex_witness (dict): Weights lambda over 0/1 vertices attaining vex.
        cav_witness (dict): Weights lambda over 0/1 vertices attaining cav.
    """

    point: PointX
    vex: Fraction
    cav: Fraction
    vex_witness: Dict[Pattern, Fraction] = field(compare=False)
    cav_witness: Dict[Pattern, Fraction] = field(compare=False)


def _check_cap(g: WeightedGraph, cap: Optional[int]) -> None:
    cap = cap or get_config().envelope_cap
    if g.n > cap:
        raise TooLarge(f"Envelope LP for n={g.n} exceeds the cap of {cap} variables")


def _vertex_lp(g: WeightedGraph, x: PointX, direction: str) -> Tuple[Fraction, Dict[Pattern, Fraction]]:
    # vertices must agree with x wherever x is already 0 or 1
    free = [i for i, v in enumerate(x) if 0 < v < 1]
    base = [1 if v == 1 else 0 for v in x]
    patterns: List[Pattern] = []
    problem = LpProblem(direction=direction)
    for bits in itertools.product((0, 1), repeat=len(free)):
        xi = list(base)
        for k, i in enumerate(free):
            xi[i] = bits[k]
        patterns.append(tuple(xi))
        problem.add_variable("l" + "".join(map(str, xi)))
    problem.add_constraint({j: 1 for j in range(len(patterns))}, "=", 1, "convexity")
    for i in free:
        problem.add_constraint({j: 1 for j, p in enumerate(patterns) if p[i]}, "=", x[i], f"coordinate_{i + 1}")
    problem.set_objective({j: evaluate(g, p) for j, p in enumerate(patterns)})
    solution = solve(problem)
    if solution.status != LpStatus.OPTIMAL:
        raise EnvelopeError(f"Vertex LP ended {solution.status.value}")
    witness = {p: v for p, v in zip(patterns, solution.primal) if v}
    return solution.value, witness


def check_witness(g: WeightedGraph, x: Sequence[Fraction], witness: Dict[Pattern, Fraction], bound: Fraction) -> bool:
    """True if the weights are a convex combination of vertices reproducing (x, bound)."""
    if any(lam < 0 for lam in witness.values()) or sum(witness.values(), ZERO) != 1:
        return False
    for i in range(g.n):
        if sum((lam for xi, lam in witness.items() if xi[i]), ZERO) != x[i]:
            return False
    return sum((lam * evaluate(g, xi) for xi, lam in witness.items()), ZERO) == bound


def vex_exact(g: WeightedGraph, x: Sequence[object], cap: Optional[int] = None) -> Tuple[Fraction, Dict[Pattern, Fraction]]:
    """
    The convex envelope value at x, with a convex combination attaining it.

    Raises:
        TooLarge: If g.n exceeds the envelope cap.
    """
    _check_cap(g, cap)
    return _vertex_lp(g, as_point(x, g.n), "min")


def cav_exact(g: WeightedGraph, x: Sequence[object], cap: Optional[int] = None) -> Tuple[Fraction, Dict[Pattern, Fraction]]:
    """
    The concave envelope value at x, with a convex combination attaining it.

    With only positive weights the value must equal sum a_ij min(x_i, x_j);
    a disagreement is logged and raised.

    Raises:
        TooLarge: If g.n exceeds the envelope cap.
        EnvelopeError: If the positive-weight cross-check fails.
    """
    _check_cap(g, cap)
    point = as_point(x, g.n)
    value, witness = _vertex_lp(g, point, "max")
    if g.edges and all(a > 0 for _, _, a in g.edges):
        expected = sum((a * min(point[i - 1], point[j - 1]) for i, j, a in g.edges), ZERO)
        if expected != value:
            logger.warning(f"cav {format_rational(value)} disagrees with the min formula {format_rational(expected)}")
            raise EnvelopeError("Concave envelope failed the positive-weight cross-check")
    return value, witness


def envelope(g: WeightedGraph, x: Sequence[object], cap: Optional[int] = None) -> EnvelopeResult:
    """Both envelopes at x."""
    point = as_point(x, g.n)
    vex, vex_witness = vex_exact(g, point, cap=cap)
    cav, cav_witness = cav_exact(g, point, cap=cap)
    return EnvelopeResult(point=point, vex=vex, cav=cav, vex_witness=vex_witness, cav_witness=cav_witness)


def lb_relax(sys: ConstraintSystem, g: WeightedGraph, x: Sequence[object]) -> Fraction:
    """
    LB_P[f](x) = min sum a_ij y_ij over the system at fixed x.

    Raises:
        InfeasibleAtX: If x is outside the projection of the system.
    """
    return fix_x_and_solve(sys, x, edge_objective(g), "min").value


def ub_relax(sys: ConstraintSystem, g: WeightedGraph, x: Sequence[object]) -> Fraction:
    """UB_P[f](x) = max sum a_ij y_ij over the system at fixed x."""
    return fix_x_and_solve(sys, x, edge_objective(g), "max").value


def gap_ratio(sys: ConstraintSystem, g: WeightedGraph, x: Sequence[object], env: Optional[EnvelopeResult] = None) -> Fraction:
    """
    (cav - LB_P) / (cav - vex), which is 1 exactly when the lower bound is tight.

    Raises:
        DegenerateGap: If cav = vex at x.
    """
    env = env or envelope(g, x)
    if env.cav == env.vex:
        raise DegenerateGap(f"cav = vex = {format_rational(env.cav)} at x = ({format_vector(env.point)})")
    return (env.cav - lb_relax(sys, g, env.point)) / (env.cav - env.vex)


# Extended formulation checks


@dataclass(frozen=True)
class ExtensionFailure:
    """
    A point where the system's bound differs from the envelope.

    Attributes:
        point (tuple): The sample.
        side (str): "lower", "upper", or "projection" when x has no completion.
        relaxed (Fraction): LB_P or UB_P (None for "projection").
        exact (Fraction): vex or cav.
    """

    point: PointX
    side: str
    relaxed: Optional[Fraction]
    exact: Fraction

    def __str__(self) -> str:
        relaxed = "infeasible" if self.relaxed is None else format_rational(self.relaxed)
        return f"{self.side} bound {relaxed} vs envelope {format_rational(self.exact)} at x = ({format_vector(self.point)})"


@dataclass(frozen=True)
class SampleRecord:
    """
    Envelopes, relaxation bounds and gap ratio at one sample.

    lb and ub are None when x has no completion in the system; ratio is None
    then and when cav = vex.
    """

    point: PointX
    vex: Fraction
    cav: Fraction
    lb: Optional[Fraction]
    ub: Optional[Fraction]
    ratio: Optional[Fraction]

    @property
    def degenerate(self) -> bool:
        return self.cav == self.vex

    @property
    def infeasible(self) -> bool:
        return self.lb is None

    def failures(self) -> List[ExtensionFailure]:
        """Where the relaxation bounds differ from the envelopes."""
        if self.infeasible:
            return [ExtensionFailure(self.point, "projection", None, self.vex)]
        found = []
        if self.lb != self.vex:
            found.append(ExtensionFailure(self.point, "lower", self.lb, self.vex))
        if self.ub != self.cav:
            found.append(ExtensionFailure(self.point, "upper", self.ub, self.cav))
        return found


def _evaluate_one(task: Tuple[ConstraintSystem, WeightedGraph, PointX, Optional[int]]) -> SampleRecord:
    sys, g, point, cap = task
    env = envelope(g, point, cap=cap)
    objective = edge_objective(g)
    try:
        lb = fix_x_and_solve(sys, point, objective, "min").value
        ub = fix_x_and_solve(sys, point, objective, "max").value
    except InfeasibleAtX:
        return SampleRecord(point=point, vex=env.vex, cav=env.cav, lb=None, ub=None, ratio=None)
    ratio = None if env.cav == env.vex else (env.cav - lb) / (env.cav - env.vex)
    return SampleRecord(point=point, vex=env.vex, cav=env.cav, lb=lb, ub=ub, ratio=ratio)


def _iter_records(
    sys: ConstraintSystem,
    g: WeightedGraph,
    samples: Sequence[Sequence[object]],
    jobs: Optional[int],
    cap: Optional[int],
) -> Iterator[SampleRecord]:
    jobs = jobs or get_config().jobs
    tasks = [(sys, g, as_point(s, g.n), cap) for s in samples]
    if jobs > 1 and len(tasks) > 1:
        executor = ProcessPoolExecutor(max_workers=jobs)
        try:
            yield from executor.map(_evaluate_one, tasks)
        finally:
            executor.shutdown(cancel_futures=True)
    else:
        for task in tasks:
            yield _evaluate_one(task)


@dataclass
class ExtensionReport:
    """Result of comparing a system with the envelopes on samples."""

    system: str
    checked: int = 0
    failures: List[ExtensionFailure] = field(default_factory=list)
    records: List[SampleRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def counterexample(self) -> Optional[ExtensionFailure]:
        return self.failures[0] if self.failures else None


def verify_extension(
    g: WeightedGraph,
    sys: ConstraintSystem,
    samples: Sequence[Sequence[object]],
    cap: Optional[int] = None,
    stop_at_first: bool = True,
    jobs: Optional[int] = None,
) -> ExtensionReport:
    """
    Check LB_P = vex and UB_P = cav exactly at every sample.

    Counterexamples are results: the report lists them instead of raising.
    The per-sample records of every checked point are kept on the report.

    Raises:
        TooLarge: If g.n exceeds the envelope cap.
    """
    _check_cap(g, cap)
    report = ExtensionReport(system=sys.name)
    for record in _iter_records(sys, g, samples, jobs, cap):
        report.checked += 1
        report.records.append(record)
        report.failures.extend(record.failures())
        if report.failures and stop_at_first:
            break
    if report.failures:
        logger.info(f"{sys.name}: counterexample {report.failures[0]}")
    else:
        logger.info(f"{sys.name}: exact on {report.checked} samples")
    return report


@dataclass
class CombineReport:
    """Each part and the sum f + g checked on the same samples."""

    shared: Tuple[int, ...]
    parts: Tuple[ExtensionReport, ExtensionReport]
    combined: ExtensionReport

    @property
    def passed(self) -> bool:
        return self.combined.passed and all(part.passed for part in self.parts)


def combine_check(
    f_graph: WeightedGraph,
    f_sys: ConstraintSystem,
    g_graph: WeightedGraph,
    g_sys: ConstraintSystem,
    samples: Sequence[Sequence[object]],
    cap: Optional[int] = None,
) -> CombineReport:
    """
    Verify that intersecting exact systems of two functions sharing at most
    one variable is exact for their sum.

    Raises:
        SharedTooMuch: If the supports share two or more vertices.
    """
    shared = tuple(sorted(support_vertices(f_graph) & support_vertices(g_graph)))
    if len(shared) > 1:
        raise SharedTooMuch(f"The functions share variables {shared}")
    parts = (
        verify_extension(f_graph, f_sys, samples, cap=cap),
        verify_extension(g_graph, g_sys, samples, cap=cap),
    )
    combined = verify_extension(union(f_graph, g_graph), f_sys.merge(g_sys), samples, cap=cap)
    return CombineReport(shared=shared, parts=parts, combined=combined)


# Sampling and statistics


def sample_points(n: int, count: int, seed: int, denominator: Optional[int] = None) -> List[PointX]:
    """Seeded points with coordinates k / denominator, 0 <= k <= denominator."""
    denominator = denominator or get_config().denominator
    rng = np.random.default_rng(seed)
    numerators = rng.integers(0, denominator + 1, size=(count, n))
    return [tuple(Fraction(int(k), denominator) for k in row) for row in numerators]


def evaluate_samples(
    sys: ConstraintSystem,
    g: WeightedGraph,
    samples: Sequence[Sequence[object]],
    jobs: Optional[int] = None,
    cap: Optional[int] = None,
) -> List[SampleRecord]:
    """
    Evaluate every sample, in worker processes when jobs > 1.

    Records come back in sample order regardless of jobs. Samples outside
    the projection of the system are recorded with lb = ub = None.
    """
    _check_cap(g, cap)
    records = list(_iter_records(sys, g, samples, jobs, cap))
    skipped = sum(1 for r in records if r.degenerate)
    if skipped:
        logger.warning(f"{sys.name}: {skipped} of {len(records)} samples have cav = vex")
    infeasible = sum(1 for r in records if r.infeasible)
    if infeasible:
        logger.warning(f"{sys.name}: {infeasible} of {len(records)} samples have no completion")
    return records


def write_samples_csv(records: Sequence[SampleRecord], path: str) -> None:
    """One row per sample: point, vex, cav, lb, ub, ratio (empty when undefined)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["point", "vex", "cav", "lb", "ub", "ratio"])
        for r in records:
            writer.writerow([
                format_vector(r.point),
                format_rational(r.vex),
                format_rational(r.cav),
                "" if r.lb is None else format_rational(r.lb),
                "" if r.ub is None else format_rational(r.ub),
                "" if r.ratio is None else format_rational(r.ratio),
            ])


@dataclass(frozen=True)
class GapStats:
    """
    Aggregated gap ratios of one relaxation class.

    Attributes:
        mu (Fraction): Mean over graphs of the per-graph mean ratio.
        sigma (float): Population standard deviation of the per-graph means.
        c (float): Average number of generating structures per graph.
        graphs (int): Graphs with at least one usable sample.
        samples (int): Usable samples.
        degenerate (int): Samples skipped because cav = vex.
    """

    mu: Fraction
    sigma: float
    c: float
    graphs: int
    samples: int
    degenerate: int


def gap_stats(ratios: Sequence[Sequence[Optional[Fraction]]], sources: Sequence[int]) -> GapStats:
    """
    Two-level aggregation: average within each graph, then across graphs.

    Args:
        ratios: Per graph, the gap ratio of every sample (None when degenerate).
        sources: Per graph, the generator count of the relaxation.

    Raises:
        DegenerateGap: If no graph has a usable sample.
    """
    means: List[Fraction] = []
    used = skipped = 0
    for per_graph in ratios:
        usable = [r for r in per_graph if r is not None]
        skipped += len(per_graph) - len(usable)
        used += len(usable)
        if usable:
            means.append(sum(usable, ZERO) / len(usable))
    if not means:
        raise DegenerateGap("Every sample is degenerate")
    mu = sum(means, ZERO) / len(means)
    sigma = float(np.std(np.array([float(m) for m in means])))
    c = float(np.mean(np.array(sources, dtype=float))) if len(sources) else 0.0
    return GapStats(mu=mu, sigma=sigma, c=c, graphs=len(means), samples=used, degenerate=skipped)
