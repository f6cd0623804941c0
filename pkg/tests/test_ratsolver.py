"""
Tests for the exact simplex kernel and fixed-x relaxation solves.
"""

from fractions import Fraction

import pytest

from graph_model import complete_graph, from_edge_list
from inequalities import ConstraintSystem, edge_objective, make_constraint, mccormick, relaxation_system, x_var, y_var
from lpfile import LpModel, LpRow
from ratsolver import (
    InfeasibleAtX,
    LpProblem,
    LpStatus,
    MalformedProblem,
    SolverError,
    fix_x_and_solve,
    read_problem,
    solution_y,
    solve,
    write_problem,
)

HALF = Fraction(1, 2)


def beale_problem(bound_x6: bool = False) -> LpProblem:
    """Beale's LP, which cycles under the textbook pivoting rule."""
    p = LpProblem()
    x4, x5, x6, x7 = (p.add_variable(name, 0, 1 if name == "x6" and bound_x6 else None) for name in ("x4", "x5", "x6", "x7"))
    p.add_constraint({x4: Fraction(1, 4), x5: -60, x6: Fraction(-1, 25), x7: 9}, "<=", 0)
    p.add_constraint({x4: HALF, x5: -90, x6: Fraction(-1, 50), x7: 3}, "<=", 0)
    if not bound_x6:
        p.add_constraint({x6: 1}, "<=", 1)
    p.set_objective({x4: Fraction(-3, 4), x5: 150, x6: Fraction(-1, 50), x7: 6})
    return p


def test_degenerate_lp_terminates():
    """Test Bland's rule reaches the optimum of Beale's example."""
    solution = solve(beale_problem(), max_pivots=100)
    assert solution.is_optimal
    assert solution.value == Fraction(-1, 20)
    assert solution.primal == (Fraction(1, 25), 0, 1, 0)
    assert solution.dual == (0, Fraction(-3, 2), Fraction(-1, 20))
    assert solution.dual_value == solution.value


def test_upper_bound_flip():
    """Test a variable bound replaces the explicit row without changing the optimum."""
    solution = solve(beale_problem(bound_x6=True), max_pivots=100)
    assert solution.value == Fraction(-1, 20)
    assert solution.dual_value == solution.value


def test_maximize_with_duals():
    """Test a maximization and the sign of its multipliers."""
    p = LpProblem(direction="max")
    x = p.add_variable("x")
    y = p.add_variable("y")
    p.add_constraint({x: 1, y: 2}, "<=", 4)
    p.add_constraint({x: 3, y: 1}, "<=", 6)
    p.set_objective({x: 1, y: 1})
    solution = solve(p)
    assert solution.value == Fraction(14, 5)
    assert solution.primal == (Fraction(8, 5), Fraction(6, 5))
    assert solution.dual == (Fraction(2, 5), Fraction(1, 5))
    assert solution.reduced_costs == (0, 0)
    assert solution.dual_value == solution.value


def test_free_and_upper_only_variables():
    """Test free columns, equality rows and variables bounded only above."""
    p = LpProblem()
    x = p.add_variable("x", None, None)
    y = p.add_variable("y")
    p.add_constraint({x: 1, y: -1}, "=", 1)
    p.set_objective({x: 1, y: 1})
    solution = solve(p)
    assert solution.value == 1
    assert solution.primal == (1, 0)

    q = LpProblem(direction="max")
    z = q.add_variable("z", None, 5)
    q.set_objective({z: 2})
    assert solve(q).value == 10


def test_shifted_bounds_and_negative_rows():
    """Test lower-bound offsets and rows needing sign normalization."""
    p = LpProblem()
    x = p.add_variable("x", -3, 3)
    p.add_constraint({x: 1}, ">=", -2)
    p.set_objective({x: 1})
    solution = solve(p)
    assert solution.value == -2
    assert solution.dual_value == -2

    q = LpProblem(direction="max")
    y = q.add_variable("y")
    q.add_constraint({y: -1}, ">=", -4)
    q.set_objective({y: 1})
    flipped = solve(q)
    assert flipped.value == 4
    assert flipped.dual == (-1,)
    assert flipped.dual_value == 4


def test_infeasible_and_unbounded():
    """Test the two non-optimal verdicts."""
    p = LpProblem()
    x = p.add_variable("x")
    p.add_constraint({x: 1}, ">=", 2)
    p.add_constraint({x: 1}, "<=", 1)
    p.set_objective({x: 1})
    infeasible = solve(p)
    assert infeasible.status == LpStatus.INFEASIBLE
    assert infeasible.value is None

    q = LpProblem(direction="max")
    y = q.add_variable("y")
    q.set_objective({y: 1})
    assert solve(q).status == LpStatus.UNBOUNDED

    r = LpProblem()
    r.add_variable("w", 2, 1)
    assert solve(r).status == LpStatus.INFEASIBLE


def test_malformed_problems():
    """Test validation and the pivot limit."""
    p = LpProblem(direction="sideways")
    with pytest.raises(MalformedProblem):
        solve(p)
    q = LpProblem()
    q.add_variable("x")
    q.add_constraint({3: 1}, "<=", 1)
    with pytest.raises(MalformedProblem):
        solve(q)
    with pytest.raises(SolverError):
        solve(beale_problem(), max_pivots=1)
    with pytest.raises(MalformedProblem):
        LpProblem.from_model(LpModel(objective_quadratic={"x": Fraction(1)}))


def test_from_model_defaults_and_file_round_trip(tmp_path):
    """Test LpModel conversion and LP files."""
    model = LpModel(
        sense="max",
        objective={"a": Fraction(1), "b": Fraction(1, 3)},
        rows=[LpRow(name="cap", linear={"a": Fraction(1), "b": Fraction(1)}, sense="<=", rhs=Fraction(3))],
        bounds={"a": (Fraction(0), Fraction(1))},
    )
    problem = LpProblem.from_model(model)
    assert problem.names == ["a", "b"]
    assert problem.upper == [1, None]
    assert solve(problem).value == 1 + Fraction(2, 3)

    path = tmp_path / "p.lp"
    write_problem(problem, str(path))
    again = read_problem(str(path))
    assert solve(again).value == 1 + Fraction(2, 3)


def test_fix_x_on_triangle():
    """Test fixed-x bounds of McCormick and triangle systems on K_3."""
    g = complete_graph(3)
    x = (HALF, HALF, HALF)
    objective = edge_objective(g)
    assert fix_x_and_solve(relaxation_system(g, "M"), x, objective, "min").value == 0
    assert fix_x_and_solve(relaxation_system(g, "M"), x, objective, "max").value == Fraction(3, 2)
    lazy = fix_x_and_solve(relaxation_system(g, "MT"), x, objective, "min", lazy=True, batch=1)
    eager = fix_x_and_solve(relaxation_system(g, "MT"), x, objective, "min", lazy=False)
    assert lazy.value == eager.value == HALF


def test_fix_x_dual_follows_rows():
    """Test multipliers map back to the system rows, bound rows included."""
    g = complete_graph(3)
    system = relaxation_system(g, "MT")
    solution = fix_x_and_solve(system, (HALF, HALF, HALF), edge_objective(g), "min", lazy=False)
    assert len(solution.dual) == len(system)
    t1 = system.labels().index("triangle(1,2,3;T1)")
    assert solution.dual[t1] == -1
    y = solution_y(system, solution)
    assert sum(y.values()) == HALF
    assert system.violations((HALF, HALF, HALF), y) == []


def test_fix_x_errors():
    """Test x without completion and objectives outside the universe."""
    row = make_constraint("custom", (), [(x_var(1), 1), (x_var(2), 1)], 1)
    system = ConstraintSystem("s", 2, (y_var(1, 2),), tuple(mccormick(1, 2)) + (row,))
    with pytest.raises(InfeasibleAtX):
        fix_x_and_solve(system, (1, 1), {y_var(1, 2): 1})
    g = from_edge_list(3, [(1, 2, 1)])
    with pytest.raises(MalformedProblem):
        fix_x_and_solve(relaxation_system(g, "M"), (0, 0, 0), {y_var(2, 3): 1})
