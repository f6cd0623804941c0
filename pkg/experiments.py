"""
Computational study drivers.

Runs the gap study of the relaxation classes on seeded random graphs, and
builds linear (and convexified) relaxations of quadratic programs with
McCormick and triangle inequalities.
"""

import csv
import logging
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import get_config
from envelopes import GapStats, envelope, gap_stats, sample_points
from graph_model import PointX, enumerate_cliques, erdos_renyi, from_edge_list
from inequalities import (
    CLASS_TAGS,
    BadClass,
    LinearConstraint,
    assemble,
    edge_objective,
    mccormick,
    parse_class_tag,
    relaxation_system,
    triangle,
    x_var,
    y_var,
)
from lpfile import LpFormatError, LpModel, LpRow, write_lp
from ratsolver import LpProblem, LpStatus, fix_x_and_solve, solve
from utils import ProgressBar, format_rational, parse_rational

logger = logging.getLogger(__name__)

ZERO = Fraction(0)


class ExperimentError(Exception):
    """Base exception for study and QP relaxation errors."""

    pass


class StudyConfigError(ExperimentError):
    """The study configuration is incomplete or out of range."""


class MalformedInstance(ExperimentError):
    """A QP instance or instance file is inconsistent."""


class IoFailure(ExperimentError):
    """A relaxation file could not be written."""


# Gap study


@dataclass
class StudyConfig:
    """
    Parameters of one gap study on G(n, p).

    Attributes:
        n (int): Vertices per graph.
        p (float): Edge probability.
        sample_count (int): Sample points per graph (|I|).
        graph_count (int): Random graphs (|F|).
        classes (list): Class tags, e.g. ["M", "MT", "MQ4"].
        seed (int): Master seed for graphs and points.
        denominator (int): Denominator of sample coordinates (None for the configured one).
        weight_sampler (str): "normal", "unit" or "sign".
    """

    n: int
    p: float
    sample_count: int = 100
    graph_count: int = 100
    classes: List[str] = field(default_factory=lambda: list(CLASS_TAGS))
    seed: int = 0
    denominator: Optional[int] = None
    weight_sampler: str = "normal"

    def __post_init__(self):
        self._validate_config()

    def _validate_config(self) -> None:
        """
        Raises:
            StudyConfigError: If a field is out of range or a class tag is unknown.
        """
        if not isinstance(self.n, int) or self.n < 2:
            raise StudyConfigError("n must be an integer of at least 2")
        if not 0 < self.p < 1:
            raise StudyConfigError("p must lie in (0, 1)")
        if self.sample_count < 1 or self.graph_count < 1:
            raise StudyConfigError("sample_count and graph_count must be at least 1")
        if not self.classes:
            raise StudyConfigError("At least one relaxation class is required")
        for tag in self.classes:
            try:
                parse_class_tag(tag)
            except BadClass as e:
                raise StudyConfigError(str(e)) from e
        if self.denominator is not None and self.denominator < 1:
            raise StudyConfigError("denominator must be positive")


def load_study_config(path: str) -> StudyConfig:
    """
    Read a study configuration from TOML (top level or a [study] table).

    Raises:
        StudyConfigError: If the file is unreadable or invalid.
    """
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise StudyConfigError(f"Cannot load study configuration {path}: {str(e)}") from e
    data = data.get("study", data)
    try:
        return StudyConfig(**data)
    except TypeError as e:
        raise StudyConfigError(f"Unexpected study settings in {path}: {str(e)}") from e


@dataclass(frozen=True)
class GapRecord:
    """
    One sample of one graph, with the lower bound of every class.

    Attributes:
        graph (int): Graph index.
        sample (int): Sample index within the graph.
        point (tuple): The sample point.
        vex (Fraction): Convex envelope.
        cav (Fraction): Concave envelope.
        lower (dict): LB_P per class tag.
    """

    graph: int
    sample: int
    point: PointX
    vex: Fraction
    cav: Fraction
    lower: Dict[str, Fraction] = field(compare=False)

    @property
    def degenerate(self) -> bool:
        return self.cav == self.vex

    def gap(self, tag: Optional[str] = None) -> Fraction:
        """cav - LB_P for a class, or cav - vex without one."""
        return self.cav - (self.vex if tag is None else self.lower[tag])

    def ratio(self, tag: str) -> Optional[Fraction]:
        return None if self.degenerate else self.gap(tag) / self.gap()


@dataclass(frozen=True)
class StudyRow:
    """One table line: the class, its aggregated gaps and its generator count."""

    tag: str
    stats: GapStats

    @property
    def mu_minus_one(self) -> Fraction:
        return self.stats.mu - 1

    @property
    def mu_percent(self) -> float:
        return float(self.mu_minus_one) * 100

    @property
    def sigma_percent(self) -> float:
        return self.stats.sigma * 100


@dataclass
class StudyResult:
    config: StudyConfig
    rows: List[StudyRow]
    records: List[GapRecord]
    sources: Dict[str, List[int]]

    def row(self, tag: str) -> StudyRow:
        return next(r for r in self.rows if r.tag == tag)


def _graph_seeds(cfg: StudyConfig) -> List[Tuple[int, int]]:
    rng = np.random.default_rng(cfg.seed)
    draws = rng.integers(0, 2**31 - 1, size=(cfg.graph_count, 2))
    return [(int(a), int(b)) for a, b in draws]


def _study_graph(task: Tuple[StudyConfig, int, int, int]) -> Tuple[List[GapRecord], Dict[str, int]]:
    cfg, index, graph_seed, point_seed = task
    g = erdos_renyi(cfg.n, cfg.p, seed=graph_seed, weight_sampler=cfg.weight_sampler)
    systems = {tag: relaxation_system(g, tag) for tag in cfg.classes}
    sources = {tag: sys.sources for tag, sys in systems.items()}
    points = sample_points(cfg.n, cfg.sample_count, point_seed, cfg.denominator)
    objective = edge_objective(g)
    records = []
    for s, point in enumerate(points):
        env = envelope(g, point)
        if env.cav == env.vex:
            lower = {}
        else:
            lower = {tag: fix_x_and_solve(sys, point, objective, "min").value for tag, sys in systems.items()}
        records.append(GapRecord(graph=index, sample=s, point=point, vex=env.vex, cav=env.cav, lower=lower))
    return records, sources


def run_gap_study(cfg: StudyConfig, jobs: Optional[int] = None, progress: Optional[ProgressBar] = None) -> StudyResult:
    """
    Compute the gap ratio of every class at every sample of every graph.

    Graphs and points are derived from cfg.seed, so equal configurations give
    equal tables whatever the number of worker processes. Samples with
    cav = vex are skipped and counted.

    Raises:
        TooLarge: If cfg.n exceeds the envelope cap.
    """
    jobs = jobs or get_config().jobs
    seeds = _graph_seeds(cfg)
    tasks = [(cfg, index, gs, ps) for index, (gs, ps) in enumerate(seeds)]
    results: List[Tuple[List[GapRecord], Dict[str, int]]] = []
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            for result in executor.map(_study_graph, tasks):
                results.append(result)
                if progress:
                    progress.advance()
    else:
        for task in tasks:
            results.append(_study_graph(task))
            if progress:
                progress.advance()

    records = [r for graph_records, _ in results for r in graph_records]
    sources = {tag: [counts[tag] for _, counts in results] for tag in cfg.classes}
    rows = []
    for tag in cfg.classes:
        per_graph = [[r.ratio(tag) for r in graph_records] for graph_records, _ in results]
        rows.append(StudyRow(tag=tag, stats=gap_stats(per_graph, sources[tag])))
    skipped = sum(1 for r in records if r.degenerate)
    if skipped:
        logger.warning(f"Skipped {skipped} of {len(records)} samples with cav = vex")
    return StudyResult(config=cfg, rows=rows, records=records, sources=sources)


def class_ordering_violations(result: StudyResult, reference: str = "M") -> List[str]:
    """
    Samples breaking gap_X <= gap_P <= gap_reference for some class P.

    Returns an empty list when the reference class was not studied.
    """
    if reference not in result.config.classes:
        return []
    found = []
    for r in result.records:
        if r.degenerate:
            continue
        for tag in result.config.classes:
            if not r.gap() <= r.gap(tag) <= r.gap(reference):
                found.append(f"graph {r.graph} sample {r.sample}: class {tag}")
    return found


def write_table_csv(result: StudyResult, path: str) -> None:
    """Columns: class, mu-1 [%], sigma [%], c, graphs, samples, degenerate."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["class", "mu_minus_1_percent", "sigma_percent", "c", "graphs", "samples", "degenerate"])
        for row in result.rows:
            writer.writerow([
                row.tag,
                f"{row.mu_percent:.2f}",
                f"{row.sigma_percent:.2f}",
                f"{row.stats.c:.1f}",
                row.stats.graphs,
                row.stats.samples,
                row.stats.degenerate,
            ])


def write_table_dat(result: StudyResult, path: str) -> None:
    """Whitespace separated index, class, mean and deviation for error-bar plots."""
    with open(path, "w") as f:
        f.write(f"# n={result.config.n} p={result.config.p} |I|={result.config.sample_count} "
                f"|F|={result.config.graph_count}\n")
        f.write("# index class mu_minus_1_percent sigma_percent\n")
        for k, row in enumerate(result.rows):
            f.write(f"{k} {row.tag} {row.mu_percent:.6f} {row.sigma_percent:.6f}\n")


# Quadratic programs


@dataclass(frozen=True)
class QpForm:
    """
    x^T Q x + c^T x with Q stored by its upper triangle.

    Attributes:
        q (dict): Q_ij for i <= j; the matrix is symmetric.
        c (dict): Linear coefficients by vertex.
        b (Fraction): Right-hand side (None for the objective).
    """

    q: Dict[Tuple[int, int], Fraction] = field(default_factory=dict)
    c: Dict[int, Fraction] = field(default_factory=dict)
    b: Optional[Fraction] = None

    def off_diagonal(self) -> Dict[Tuple[int, int], Fraction]:
        return {(i, j): v for (i, j), v in self.q.items() if i != j and v}

    def diagonal(self) -> Dict[int, Fraction]:
        return {i: v for (i, j), v in self.q.items() if i == j and v}


@dataclass(frozen=True)
class QpInstance:
    """
    min x^T Q0 x + c0^T x s.t. x^T Qk x + ck^T x <= bk, s * sum(x) = s, x in [0,1]^n.

    Attributes:
        n (int): Number of variables.
        objective (QpForm): The k = 0 form.
        constraints (tuple): Forms for k in K, each with b set.
        simplex (int): 1 activates sum(x) = 1.
        name (str): Name used in emitted files.
    """

    n: int
    objective: QpForm
    constraints: Tuple[QpForm, ...] = ()
    simplex: int = 0
    name: str = "qp"

    def __post_init__(self):
        if self.n < 1:
            raise MalformedInstance(f"n must be positive, got {self.n}")
        if self.simplex not in (0, 1):
            raise MalformedInstance(f"Simplex flag must be 0 or 1, got {self.simplex}")
        for k, form in enumerate((self.objective,) + tuple(self.constraints)):
            for i, j in form.q:
                if not 1 <= i <= j <= self.n:
                    raise MalformedInstance(f"Q{k} entry ({i}, {j}) is not an upper-triangle index of 1..{self.n}")
            for i in form.c:
                if not 1 <= i <= self.n:
                    raise MalformedInstance(f"c{k} index {i} is outside 1..{self.n}")
            if k > 0 and form.b is None:
                raise MalformedInstance(f"Constraint {k} has no right-hand side")

    @property
    def forms(self) -> Tuple[QpForm, ...]:
        return (self.objective,) + tuple(self.constraints)


def make_form(entries: Sequence[Tuple[int, int, object]], linear: Sequence[Tuple[int, object]] = (), b: Optional[object] = None) -> QpForm:
    """
    Build a form from (i, j, Q_ij) triples, accepting either triangle.

    Raises:
        MalformedInstance: If (i, j) and (j, i) disagree.
    """
    q: Dict[Tuple[int, int], Fraction] = {}
    for i, j, v in entries:
        key = (min(i, j), max(i, j))
        value = parse_rational(v)
        if key in q and q[key] != value:
            raise MalformedInstance(f"Q is not symmetric at {key}")
        q[key] = value
    c: Dict[int, Fraction] = {}
    for i, v in linear:
        c[i] = c.get(i, ZERO) + parse_rational(v)
    return QpForm(q=q, c=c, b=None if b is None else parse_rational(b))


def qp_from_text(text: str, name: str = "qp") -> QpInstance:
    """
    Parse the instance format: "n K s", then per k = 0..K a block
    "Q<k> <count>" with "i j value" lines, "c<k> <count>" with "i value"
    lines and, for k >= 1, "b<k> value".

    Raises:
        MalformedInstance: On any structural error.
    """
    lines = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    pos = 0

    def take(expected: str) -> List[str]:
        nonlocal pos
        if pos >= len(lines):
            raise MalformedInstance(f"Unexpected end of instance, expected {expected}")
        line = lines[pos]
        pos += 1
        if not line[0].startswith(expected[0]) or line[0][1:] != expected[1:]:
            raise MalformedInstance(f"Expected {expected}, found {line[0]!r}")
        return line

    try:
        if len(lines[0]) != 3:
            raise MalformedInstance("Header must be 'n K s'")
        n, count, simplex = (int(v) for v in lines[0])
        pos = 1
        forms = []
        for k in range(count + 1):
            header = take(f"Q{k}")
            entries = []
            for _ in range(int(header[1])):
                i, j, v = lines[pos]
                pos += 1
                entries.append((int(i), int(j), v))
            header = take(f"c{k}")
            linear = []
            for _ in range(int(header[1])):
                i, v = lines[pos]
                pos += 1
                linear.append((int(i), v))
            b = take(f"b{k}")[1] if k > 0 else None
            forms.append(make_form(entries, linear, b))
        if pos != len(lines):
            raise MalformedInstance(f"Trailing content at line {pos + 1}")
    except MalformedInstance:
        raise
    except (IndexError, ValueError) as e:
        raise MalformedInstance(f"Malformed instance text: {str(e)}") from e
    return QpInstance(n=n, objective=forms[0], constraints=tuple(forms[1:]), simplex=simplex, name=name)


def qp_to_text(inst: QpInstance) -> str:
    lines = [f"{inst.n} {len(inst.constraints)} {inst.simplex}"]
    for k, form in enumerate(inst.forms):
        lines.append(f"Q{k} {len(form.q)}")
        lines.extend(f"{i} {j} {format_rational(v)}" for (i, j), v in sorted(form.q.items()))
        lines.append(f"c{k} {len(form.c)}")
        lines.extend(f"{i} {format_rational(v)}" for i, v in sorted(form.c.items()))
        if k > 0:
            lines.append(f"b{k} {format_rational(form.b)}")
    return "\n".join(lines) + "\n"


def read_qp_instance(path: str) -> QpInstance:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise MalformedInstance(f"Cannot read instance {path}: {str(e)}") from e
    return qp_from_text(text)


def write_qp_instance(inst: QpInstance, path: str) -> None:
    try:
        with open(path, "w") as f:
            f.write(qp_to_text(inst))
    except OSError as e:
        raise IoFailure(f"Cannot write instance {path}: {str(e)}") from e


def _support_graph(inst: QpInstance, convexify: bool) -> Tuple[set, set]:
    """Linearized pairs (loop-free) and linearized loops."""
    pairs, loops = set(), set()
    for form in inst.forms:
        pairs.update(form.off_diagonal())
        for i, v in form.diagonal().items():
            if not convexify or v < 0:
                loops.add(i)
    return pairs, loops


def qp_triangles(inst: QpInstance) -> List[Tuple[int, int, int]]:
    """Triangles of the loop-free support of each Q^k, merged and sorted."""
    found = set()
    for form in inst.forms:
        off = form.off_diagonal()
        if len(off) < 3 or inst.n < 3:
            continue
        g = from_edge_list(inst.n, [(i, j, v) for (i, j), v in off.items()])
        found.update(enumerate_cliques(g, 3, 3))
    return sorted(found)


def _linearized(form: QpForm, convexify: bool) -> Tuple[Dict[str, Fraction], Dict[str, Fraction]]:
    linear: Dict[str, Fraction] = {}
    quadratic: Dict[str, Fraction] = {}
    for (i, j), v in sorted(form.q.items()):
        if not v:
            continue
        if i != j:
            linear[y_var(i, j).name] = 2 * v
        elif convexify and v > 0:
            quadratic[x_var(i).name] = v
        else:
            linear[y_var(i, i).name] = v
    for i, v in sorted(form.c.items()):
        if v:
            name = x_var(i).name
            linear[name] = linear.get(name, ZERO) + v
    return linear, quadratic


def _relaxation_model(inst: QpInstance, convexify: bool, triangles: Optional[Sequence[Tuple[int, int, int]]] = None) -> LpModel:
    pairs, loops = _support_graph(inst, convexify)
    rows: List[LinearConstraint] = []
    for i, j in sorted(pairs):
        rows.extend(mccormick(i, j))
    for i in sorted(loops):
        rows.extend(mccormick(i, i))
    chosen = qp_triangles(inst) if triangles is None else list(triangles)
    for tri in chosen:
        rows.extend(triangle(*tri))
    universe = sorted({y_var(i, j) for i, j in pairs} | {y_var(i, i) for i in loops})
    system = assemble(inst.name, inst.n, universe, rows, len(chosen))
    model = system.to_lp_model(sense="min")
    # McCormick keeps every y in [0, 1]; explicit bounds make the file self-contained
    for ref in universe:
        model.bounds[ref.name] = (ZERO, Fraction(1))

    model.objective, model.objective_quadratic = _linearized(inst.objective, convexify)
    for k, form in enumerate(inst.constraints, start=1):
        linear, quadratic = _linearized(form, convexify)
        model.rows.append(LpRow(name=f"g{k}", linear=linear, sense="<=", rhs=form.b, quadratic=quadratic))
    if inst.simplex:
        model.rows.append(LpRow(name="simplex", linear={x_var(i).name: Fraction(1) for i in range(1, inst.n + 1)},
                                sense="=", rhs=Fraction(1)))
    return model


def qp_linearization_model(inst: QpInstance, triangles: Optional[Sequence[Tuple[int, int, int]]] = None) -> LpModel:
    """The linear relaxation as a named LP model."""
    return _relaxation_model(inst, convexify=False, triangles=triangles)


def qp_convexification_model(inst: QpInstance) -> LpModel:
    """
    The convexified relaxation: positive diagonal terms stay as squares,
    everything else is linearized as in the linear relaxation.
    """
    model = _relaxation_model(inst, convexify=True)
    model.comments.extend([
        "convexified relaxation: Q_ii > 0 kept as x_i^2, all other terms linearized",
        "optimal values satisfy f_L <= f_C <= f (linear, convexified, original)",
    ])
    return model


def build_qp_linearization(inst: QpInstance, triangles: Optional[Sequence[Tuple[int, int, int]]] = None) -> LpProblem:
    """
    The linear relaxation as a solvable problem.

    Objective Q0.y + c0.x; rows Qk.y + ck.x <= bk; McCormick on every
    linearized pair and loop; triangle rows on the loop-free supports (all
    of them unless a subset is given); sum(x) = 1 when the simplex flag is set.
    """
    return LpProblem.from_model(qp_linearization_model(inst, triangles))


def emit_qp_convexification(inst: QpInstance, path: str) -> LpModel:
    """
    Write the convexified relaxation as an LP file with square terms.

    Raises:
        IoFailure: If the file cannot be written.
    """
    model = qp_convexification_model(inst)
    try:
        write_lp(model, path)
    except LpFormatError as e:
        raise IoFailure(str(e)) from e
    return model


@dataclass(frozen=True)
class CurvePoint:
    """The linear relaxation bound with a fraction of the triangle rows."""

    fraction: Fraction
    triangles: int
    bound: Optional[Fraction]
    seconds: float


def _curve_point(task: Tuple[QpInstance, Fraction, List[Tuple[int, int, int]], int]) -> CurvePoint:
    inst, f, subset, total = task
    started = time.perf_counter()
    solution = solve(build_qp_linearization(inst, subset))
    elapsed = time.perf_counter() - started
    bound = solution.value if solution.status == LpStatus.OPTIMAL else None
    logger.debug(f"{inst.name}: {len(subset)} of {total} triangles give {bound}")
    return CurvePoint(fraction=f, triangles=len(subset), bound=bound, seconds=elapsed)


def triangle_sampling_curve(
    inst: QpInstance,
    fractions: Sequence[object],
    seed: int,
    jobs: Optional[int] = None,
) -> List[CurvePoint]:
    """
    Solve the linear relaxation with growing random subsets of triangles.

    A single seeded permutation orders all triangles and each fraction f
    takes its first floor(f * T), so larger fractions contain smaller ones
    and the bound is nondecreasing in f. With jobs > 1 the fractions are
    solved in worker processes; the curve keeps the input order.

    Raises:
        ExperimentError: If a fraction lies outside [0, 1].
    """
    everything = qp_triangles(inst)
    order = np.random.default_rng(seed).permutation(len(everything))
    tasks = []
    for raw in fractions:
        f = parse_rational(raw) if not isinstance(raw, float) else Fraction(raw).limit_denominator(1000)
        if not 0 <= f <= 1:
            raise ExperimentError(f"Fraction {format_rational(f)} is outside [0, 1]")
        count = int(f * len(everything))
        subset = sorted(everything[int(k)] for k in order[:count])
        tasks.append((inst, f, subset, len(everything)))
    jobs = jobs or get_config().jobs
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            return list(executor.map(_curve_point, tasks))
    return [_curve_point(task) for task in tasks]
