"""
Exact rational linear programming.

A dense-tableau primal simplex over Fractions with natively bounded
variables, a Phase I on artificial columns and Bland's rule for both the
entering and the leaving choice. Optimal solutions carry row duals read
from the final tableau, reduced costs, and the dual objective so callers can
check strong duality exactly.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from config import get_config
from graph_model import as_point
from inequalities import ConstraintSystem, VarRef
from lpfile import LpModel, LpRow, read_lp, write_lp

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)

_LOWER, _UPPER, _BASIC = 0, 1, 2


class SolverError(Exception):
    """Base exception for LP errors."""

    pass


class MalformedProblem(SolverError):
    """The problem has inconsistent dimensions, senses or indices."""


class InfeasibleAtX(SolverError):
    """No y completes the fixed x inside the system."""


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpConstraint:
    coeffs: Dict[int, Fraction]
    sense: str
    rhs: Fraction
    name: str


@dataclass
class LpProblem:
    """
    An LP over named variables with rational bounds (None = infinite).

    Variables default to [0, +inf). Build with add_variable, add_constraint
    and set_objective.
    """

    direction: str = "min"
    names: List[str] = field(default_factory=list)
    lower: List[Optional[Fraction]] = field(default_factory=list)
    upper: List[Optional[Fraction]] = field(default_factory=list)
    constraints: List[LpConstraint] = field(default_factory=list)
    objective: Dict[int, Fraction] = field(default_factory=dict)

    @property
    def num_variables(self) -> int:
        return len(self.names)

    def add_variable(self, name: str, lower: Optional[object] = 0, upper: Optional[object] = None) -> int:
        self.names.append(name)
        self.lower.append(None if lower is None else Fraction(lower))
        self.upper.append(None if upper is None else Fraction(upper))
        return len(self.names) - 1

    def add_constraint(self, coeffs: Mapping[int, object], sense: str, rhs: object, name: Optional[str] = None) -> int:
        row = {j: Fraction(c) for j, c in coeffs.items() if c != 0}
        self.constraints.append(LpConstraint(row, sense, Fraction(rhs), name or f"R{len(self.constraints) + 1}"))
        return len(self.constraints) - 1

    def set_objective(self, coeffs: Mapping[int, object], direction: Optional[str] = None) -> None:
        self.objective = {j: Fraction(c) for j, c in coeffs.items() if c != 0}
        if direction is not None:
            self.direction = direction

    def validate(self) -> None:
        """
        Raises:
            MalformedProblem: On bad direction, sense or variable index.
        """
        if self.direction not in ("min", "max"):
            raise MalformedProblem(f"Direction must be 'min' or 'max', got {self.direction!r}")
        n = self.num_variables
        if not (len(self.lower) == len(self.upper) == n):
            raise MalformedProblem("Bound lists do not match the variable count")
        for j in self.objective:
            if not 0 <= j < n:
                raise MalformedProblem(f"Objective references variable {j} of {n}")
        for row in self.constraints:
            if row.sense not in ("<=", ">=", "="):
                raise MalformedProblem(f"Row {row.name} has unknown sense {row.sense!r}")
            for j in row.coeffs:
                if not 0 <= j < n:
                    raise MalformedProblem(f"Row {row.name} references variable {j} of {n}")

    def to_model(self) -> LpModel:
        rows = [
            LpRow(name=row.name, linear={self.names[j]: c for j, c in row.coeffs.items()}, sense=row.sense, rhs=row.rhs)
            for row in self.constraints
        ]
        return LpModel(
            name="problem",
            sense=self.direction,
            objective={self.names[j]: c for j, c in self.objective.items()},
            rows=rows,
            bounds={name: (lo, hi) for name, lo, hi in zip(self.names, self.lower, self.upper)},
        )

    @classmethod
    def from_model(cls, model: LpModel) -> "LpProblem":
        """
        Raises:
            MalformedProblem: If the model has quadratic terms.
        """
        if model.is_quadratic:
            raise MalformedProblem("Quadratic models cannot be solved by the LP kernel")
        problem = cls(direction=model.sense)
        index: Dict[str, int] = {}
        for name in model.variables():
            low, high = model.bounds.get(name, (ZERO, None))
            index[name] = problem.add_variable(name, low, high)
        for row in model.rows:
            problem.add_constraint({index[v]: c for v, c in row.linear.items()}, row.sense, row.rhs, row.name)
        problem.set_objective({index[v]: c for v, c in model.objective.items()})
        return problem


@dataclass(frozen=True)
class LpSolution:
    """
    Result of a solve.

    Attributes:
        status (LpStatus): Optimal, infeasible or unbounded.
        value (Fraction): Optimal objective value (None unless optimal).
        primal (tuple): Variable values.
        dual (tuple): One multiplier per row; nonpositive on <= rows of a
            minimization, so that c = A^T dual + reduced_costs.
        reduced_costs (tuple): c_j - (A^T dual)_j per variable.
        dual_value (Fraction): b^T dual plus reduced costs at their active bounds.
        pivots (int): Number of basis changes and bound flips.
    """

    status: LpStatus
    value: Optional[Fraction] = None
    primal: Tuple[Fraction, ...] = ()
    dual: Tuple[Fraction, ...] = ()
    reduced_costs: Tuple[Fraction, ...] = ()
    dual_value: Optional[Fraction] = None
    pivots: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL


class _Tableau:
    """Bounded-variable tableau over internal columns x' in [0, ub]."""

    def __init__(self, rows: List[List[Fraction]], rhs: List[Fraction], upper: List[Optional[Fraction]]):
        self.m = len(rows)
        self.n = len(upper)
        self.T = rows
        self.upper = upper
        self.beta = list(rhs)
        self.basis: List[int] = []
        self.state = [_LOWER] * self.n
        self.d: List[Fraction] = [ZERO] * self.n
        self.pivots = 0

    def price(self, cost: List[Fraction]) -> None:
        d = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.T[i]
                for k, v in enumerate(row):
                    if v:
                        d[k] -= cb * v
        self.d = d

    def _entering(self) -> Optional[int]:
        for j in range(self.n):
            state = self.state[j]
            dj = self.d[j]
            if state == _LOWER and dj < 0 and (self.upper[j] is None or self.upper[j] > 0):
                return j
            if state == _UPPER and dj > 0:
                return j
        return None

    def _pivot(self, r: int, j: int) -> None:
        prow = self.T[r]
        piv = prow[j]
        if piv != ONE:
            prow = [v / piv if v else ZERO for v in prow]
            self.T[r] = prow
        nz = [k for k, v in enumerate(prow) if v]
        for i, row in enumerate(self.T):
            if i == r:
                continue
            f = row[j]
            if f:
                for k in nz:
                    row[k] -= f * prow[k]
        f = self.d[j]
        if f:
            d = self.d
            for k in nz:
                d[k] -= f * prow[k]

    def iterate(self, max_pivots: Optional[int] = None) -> LpStatus:
        while True:
            j = self._entering()
            if j is None:
                return LpStatus.OPTIMAL
            if max_pivots is not None and self.pivots >= max_pivots:
                raise SolverError(f"Pivot limit {max_pivots} reached")
            direction = 1 if self.state[j] == _LOWER else -1
            theta: Optional[Fraction] = None
            leave_row = None
            leave_state = _LOWER
            for i in range(self.m):
                tij = self.T[i][j]
                if not tij:
                    continue
                delta = -tij if direction == 1 else tij
                b = self.basis[i]
                if delta < 0:
                    limit = self.beta[i] / -delta
                    state = _LOWER
                elif self.upper[b] is not None:
                    limit = (self.upper[b] - self.beta[i]) / delta
                    state = _UPPER
                else:
                    continue
                if theta is None or limit < theta or (limit == theta and b < self.basis[leave_row]):
                    theta, leave_row, leave_state = limit, i, state
            flip = self.upper[j]
            if flip is not None and (theta is None or flip <= theta):
                theta, leave_row = flip, None
            if theta is None:
                return LpStatus.UNBOUNDED
            self.pivots += 1
            for i in range(self.m):
                tij = self.T[i][j]
                if tij:
                    self.beta[i] += (-tij if direction == 1 else tij) * theta
            if leave_row is None:
                self.state[j] = _UPPER if direction == 1 else _LOWER
                continue
            entering_value = theta if direction == 1 else self.upper[j] - theta
            leaving = self.basis[leave_row]
            self.state[leaving] = leave_state
            self.beta[leave_row] = entering_value
            self.basis[leave_row] = j
            self.state[j] = _BASIC
            self._pivot(leave_row, j)


def solve(p: LpProblem, max_pivots: Optional[int] = None) -> LpSolution:
    """
    Solve an LP exactly.

    Args:
        p: The problem.
        max_pivots: Optional safety limit on simplex steps.

    Returns:
        LpSolution: Optimum with duals, or an infeasible/unbounded verdict.

    Raises:
        MalformedProblem: If the problem is inconsistent.
    """
    p.validate()
    n = p.num_variables

    # internal columns x' >= 0: x_j = offset_j + sum(sign * x'_col)
    upper: List[Optional[Fraction]] = []
    cost: List[Fraction] = []
    var_cols: List[List[Tuple[int, int]]] = []
    offset: List[Fraction] = []
    flip = -1 if p.direction == "max" else 1
    for j in range(n):
        low, high = p.lower[j], p.upper[j]
        c = p.objective.get(j, ZERO) * flip
        if low is not None and high is not None and low > high:
            logger.debug(f"Variable {p.names[j]} has crossing bounds")
            return LpSolution(status=LpStatus.INFEASIBLE)
        if low is not None:
            offset.append(low)
            var_cols.append([(len(upper), 1)])
            upper.append(None if high is None else high - low)
            cost.append(c)
        elif high is not None:
            offset.append(high)
            var_cols.append([(len(upper), -1)])
            upper.append(None)
            cost.append(-c)
        else:
            offset.append(ZERO)
            var_cols.append([(len(upper), 1), (len(upper) + 1, -1)])
            upper.extend([None, None])
            cost.extend([c, -c])
    structural = len(upper)

    m = len(p.constraints)
    slack_of: List[Optional[int]] = []
    for row in p.constraints:
        if row.sense == "=":
            slack_of.append(None)
        else:
            slack_of.append(len(upper))
            upper.append(None)
            cost.append(ZERO)
    first_artificial = len(upper)
    total = first_artificial + m

    rows: List[List[Fraction]] = []
    rhs: List[Fraction] = []
    row_sign: List[int] = []
    for r, row in enumerate(p.constraints):
        dense = [ZERO] * total
        b = row.rhs
        for j, a in row.coeffs.items():
            b -= a * offset[j]
            for col, sign in var_cols[j]:
                dense[col] += a if sign == 1 else -a
        if slack_of[r] is not None:
            dense[slack_of[r]] = ONE if row.sense == "<=" else -ONE
        sign = 1
        if b < 0:
            sign = -1
            dense = [-v if v else ZERO for v in dense]
            b = -b
        dense[first_artificial + r] = ONE
        rows.append(dense)
        rhs.append(b)
        row_sign.append(sign)

    upper.extend([None] * m)
    tab = _Tableau(rows, rhs, upper)
    tab.basis = list(range(first_artificial, total))
    for col in tab.basis:
        tab.state[col] = _BASIC

    phase_one_cost = [ZERO] * first_artificial + [ONE] * m
    tab.price(phase_one_cost)
    tab.iterate(max_pivots)
    infeasibility = sum((tab.beta[i] for i, b in enumerate(tab.basis) if b >= first_artificial), ZERO)
    if infeasibility > 0:
        logger.debug(f"Phase I ended with infeasibility {infeasibility} after {tab.pivots} pivots")
        return LpSolution(status=LpStatus.INFEASIBLE, pivots=tab.pivots)

    for col in range(first_artificial, total):
        tab.upper[col] = ZERO
    full_cost = cost + [ZERO] * m
    tab.price(full_cost)
    status = tab.iterate(max_pivots)
    if status == LpStatus.UNBOUNDED:
        logger.debug(f"Unbounded after {tab.pivots} pivots")
        return LpSolution(status=LpStatus.UNBOUNDED, pivots=tab.pivots)

    values = [ZERO] * total
    for col in range(total):
        if tab.state[col] == _UPPER:
            values[col] = tab.upper[col]
    for i, col in enumerate(tab.basis):
        values[col] = tab.beta[i]
    primal = []
    for j in range(n):
        v = offset[j]
        for col, sign in var_cols[j]:
            v += values[col] if sign == 1 else -values[col]
        primal.append(v)
    value = sum((c * primal[j] for j, c in p.objective.items()), ZERO)

    # tableau duals belong to the min form of the sign-normalized rows
    dual = [flip * row_sign[r] * -tab.d[first_artificial + r] for r in range(m)]
    reduced = [p.objective.get(j, ZERO) for j in range(n)]
    for r, row in enumerate(p.constraints):
        if dual[r]:
            for j, a in row.coeffs.items():
                reduced[j] -= dual[r] * a
    dual_value: Optional[Fraction] = sum((row.rhs * dual[r] for r, row in enumerate(p.constraints)), ZERO)
    for j, rc in enumerate(reduced):
        if not rc:
            continue
        at_lower = (rc > 0) == (p.direction == "min")
        bound = p.lower[j] if at_lower else p.upper[j]
        if bound is None:
            dual_value = None
            break
        dual_value += rc * bound

    logger.debug(f"Optimal value {value} after {tab.pivots} pivots ({m} rows, {n} variables)")
    return LpSolution(
        status=LpStatus.OPTIMAL,
        value=value,
        primal=tuple(primal),
        dual=tuple(dual),
        reduced_costs=tuple(reduced),
        dual_value=dual_value,
        pivots=tab.pivots,
    )


# Relaxations at a fixed x


def _scaled_point(x: Sequence[Fraction]) -> Tuple[List[int], int]:
    scale = math.lcm(*(v.denominator for v in x)) if x else 1
    return [int(v * scale) for v in x], scale


def fix_x_and_solve(
    sys: ConstraintSystem,
    x: Sequence[object],
    objective: Mapping[VarRef, object],
    direction: str = "min",
    lazy: Optional[bool] = None,
    batch: Optional[int] = None,
) -> LpSolution:
    """
    Optimize a linear objective over the y variables of a system with x fixed.

    Rows with one y variable become bounds on it; rows without y variables
    are checked directly. With lazy activation the remaining rows enter the
    LP only once violated, and the loop ends when the optimum satisfies every
    row, so the result is exact for the whole system.

    Args:
        sys: The relaxation.
        x: The fixed point, inside [0,1]^n.
        objective: Coefficients on y variables of the universe.
        direction: "min" or "max".
        lazy: Override the configured row activation.
        batch: Override the configured rows per activation round.

    Returns:
        LpSolution: primal follows sys.universe; dual follows sys.constraints.

    Raises:
        InfeasibleAtX: If x lies outside the projection of sys.
        MalformedProblem: If the objective uses a variable outside the universe.
    """
    config = get_config()
    lazy = config.lazy_rows if lazy is None else lazy
    batch = batch or config.lazy_batch
    point = as_point(x, sys.n)
    index = sys.y_index
    for ref in objective:
        if ref not in index:
            raise MalformedProblem(f"Objective variable {ref.name} is not in the universe of {sys.name}")

    scaled_x, x_scale = _scaled_point(point)
    k = len(sys.universe)
    lower: List[Optional[Fraction]] = [None] * k
    upper: List[Optional[Fraction]] = [None] * k
    lower_src: List[Optional[Tuple[int, int]]] = [None] * k
    upper_src: List[Optional[Tuple[int, int]]] = [None] * k
    multi: List[int] = []
    remaining: Dict[int, int] = {}
    for r, row in enumerate(sys.compiled_rows):
        # remaining right-hand side, scaled by x_scale
        rest = row.rhs * x_scale - sum(c * scaled_x[i - 1] for i, c in row.x_terms)
        if not row.y_terms:
            if rest < 0:
                raise InfeasibleAtX(f"{sys.constraints[r].label} fails at x regardless of y")
            continue
        if len(row.y_terms) == 1:
            col, c = row.y_terms[0]
            bound = Fraction(rest, c * x_scale)
            if c > 0:
                if upper[col] is None or bound < upper[col]:
                    upper[col], upper_src[col] = bound, (r, c)
            elif lower[col] is None or bound > lower[col]:
                lower[col], lower_src[col] = bound, (r, c)
            continue
        multi.append(r)
        remaining[r] = rest
    for col in range(k):
        if lower[col] is not None and upper[col] is not None and lower[col] > upper[col]:
            raise InfeasibleAtX(f"Bounds on {sys.universe[col].name} cross at x")

    active: List[int] = [] if lazy else list(multi)
    pending = set(multi) - set(active)
    rounds = 0
    while True:
        rounds += 1
        problem = LpProblem(direction=direction)
        for col, ref in enumerate(sys.universe):
            problem.add_variable(ref.name, lower[col], upper[col])
        for r in active:
            row = sys.compiled_rows[r]
            problem.add_constraint({col: c for col, c in row.y_terms}, "<=", Fraction(remaining[r], x_scale),
                                   sys.constraints[r].label)
        problem.set_objective({index[ref]: c for ref, c in objective.items()})
        solution = solve(problem)
        if solution.status == LpStatus.INFEASIBLE:
            raise InfeasibleAtX(f"{sys.name} has no completion at the given x")
        if solution.status != LpStatus.OPTIMAL or not pending:
            break
        violated = _violated_rows(sys, solution.primal, pending, remaining, x_scale)
        if not violated:
            break
        chosen = violated[:batch]
        active.extend(chosen)
        pending.difference_update(chosen)
        logger.debug(f"{sys.name}: round {rounds} activated {len(chosen)} of {len(violated)} violated rows")

    if solution.status != LpStatus.OPTIMAL:
        return solution

    dual = [ZERO] * len(sys.constraints)
    for position, r in enumerate(active):
        dual[r] = solution.dual[position]
    for col, rc in enumerate(solution.reduced_costs):
        if not rc:
            continue
        at_lower = (rc > 0) == (direction == "min")
        source = lower_src[col] if at_lower else upper_src[col]
        if source is not None:
            r, _ = source
            dual[r] = rc / sys.constraints[r].coeffs[sys.universe[col]]
    return LpSolution(
        status=solution.status,
        value=solution.value,
        primal=solution.primal,
        dual=tuple(dual),
        reduced_costs=solution.reduced_costs,
        dual_value=solution.dual_value,
        pivots=solution.pivots,
    )


def _violated_rows(
    sys: ConstraintSystem,
    y: Sequence[Fraction],
    pending: set,
    remaining: Mapping[int, int],
    x_scale: int,
) -> List[int]:
    y_scale = math.lcm(*(v.denominator for v in y)) if y else 1
    scaled_y = [int(v * y_scale) for v in y]
    found = []
    for r in pending:
        row = sys.compiled_rows[r]
        excess = sum(c * scaled_y[col] for col, c in row.y_terms) * x_scale - remaining[r] * y_scale
        if excess > 0:
            found.append((-excess, r))
    found.sort()
    return [r for _, r in found]


def solution_y(sys: ConstraintSystem, solution: LpSolution) -> Dict[Tuple[int, int], Fraction]:
    """Map an optimal fixed-x solution back to {(i, j): y_ij}."""
    return {ref.pair: value for ref, value in zip(sys.universe, solution.primal)}


def read_problem(path: str) -> LpProblem:
    """Read an LP file into a problem."""
    return LpProblem.from_model(read_lp(path))


def write_problem(p: LpProblem, path: str) -> None:
    """Write a problem as an LP file."""
    write_lp(p.to_model(), path)
