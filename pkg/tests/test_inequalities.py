"""
Tests for inequality families and relaxation systems.
"""

import itertools
from fractions import Fraction

import pytest

from envelopes import lb_relax, sample_points, vex_exact
from graph_model import NotACycle, complete_graph, cycle_graph, kn_minus_graph
from inequalities import (
    BadAlpha,
    BadClass,
    BadIndex,
    EvenD,
    Overlap,
    TooSmall,
    VarRef,
    all_pairs,
    clique,
    clique_envelope_value,
    cut,
    cycle_system,
    cycle_theorem_pair,
    disjoint_cycles_system,
    edge_objective,
    generalized_cut,
    kn_minus_label,
    kn_minus_system,
    mccormick,
    minimality_witness,
    odd_cycle,
    parse_class_tag,
    relaxation_system,
    triangle,
    wheel_inequalities,
    wheel_system,
    x_var,
    y_var,
)


def binary_points(n):
    """Every 0/1 point with y_ij = x_i x_j on all pairs, loops included."""
    for bits in itertools.product((0, 1), repeat=n):
        x = tuple(Fraction(b) for b in bits)
        y = {(i, j): x[i - 1] * x[j - 1] for i in range(1, n + 1) for j in range(i, n + 1)}
        yield x, y


def assert_valid(rows, n):
    for x, y in binary_points(n):
        for row in rows:
            assert row.is_satisfied(x, y), f"{row} fails at {x}"


def test_var_refs():
    """Test canonical variable names and parsing."""
    assert y_var(3, 1) is y_var(1, 3)
    assert y_var(2, 5).name == "y2_5"
    assert VarRef.parse("x4") is x_var(4)
    assert VarRef.parse("y1_2") is y_var(1, 2)


def test_mccormick_rows():
    """Test the four McCormick rows, including the loop case."""
    rows = mccormick(2, 1)
    assert [r.label for r in rows] == [f"mccormick(1,2;M{k})" for k in range(1, 5)]
    assert rows[3].rhs == 1
    assert_valid(rows, 2)
    assert_valid(mccormick(1, 1), 1)


def test_triangle_rows_valid():
    """Test the triangle rows hold at every vertex of the polytope."""
    rows = triangle(3, 1, 2)
    assert len(rows) == 4
    assert_valid(rows, 3)


def test_clique_cut_rows_valid():
    """Test clique, cut and generalized cut rows on a five-vertex set."""
    rows = [clique(range(1, 6), alpha) for alpha in (1, 2, 3)]
    rows += [cut([1], [2, 3]), cut([1, 2], [3, 4, 5]), generalized_cut([1], [2, 3, 4]), generalized_cut([1, 2], [3, 4])]
    assert_valid(rows, 5)
    assert rows[1].rhs == 3


def test_family_errors():
    """Test the named family errors."""
    with pytest.raises(BadAlpha):
        clique([1, 2, 3], 2)
    with pytest.raises(BadAlpha):
        clique([1, 2], 1)
    with pytest.raises(Overlap):
        cut([1, 2], [2, 3])
    with pytest.raises(EvenD):
        odd_cycle([1, 2, 3, 4], [(1, 2), (2, 3)])
    with pytest.raises(NotACycle):
        odd_cycle([1, 2, 1], [(1, 2)])


def test_odd_cycle_valid():
    """Test odd cycle rows for odd D on a five-cycle."""
    C = [1, 2, 3, 4, 5]
    rows = [odd_cycle(C, [(1, 2)]), odd_cycle(C, [(1, 2), (2, 3), (4, 5)]), odd_cycle(C, [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)])]
    assert_valid(rows, 5)


def test_cycle_theorem_pair_parity():
    """Test one row per odd sign class."""
    both = cycle_theorem_pair(cycle_graph([1, 1, 1, -1]))
    assert [r.family for r in both] == ["cycle_1", "cycle_2"]
    assert cycle_theorem_pair(cycle_graph([1, 1, -1, -1])) == []
    only_positive = cycle_theorem_pair(cycle_graph([1, 1, 1, 1, 1]))
    assert [r.family for r in only_positive] == ["cycle_2"]
    literal = cycle_theorem_pair(cycle_graph([1, 1, 1, -1]), semantics="literal")
    assert [r.family for r in literal] == ["cycle_1_literal", "cycle_2_literal"]
    assert_valid(both, 4)


def test_cycle_theorem_pair_requires_cycle():
    """Test non-cycles are rejected."""
    with pytest.raises(NotACycle):
        cycle_theorem_pair(complete_graph(4))


def test_clique_envelope_value():
    """Test the closed form s * sum(x) - C(s+1, 2)."""
    half = Fraction(1, 2)
    assert clique_envelope_value([half, half, half]) == half
    assert clique_envelope_value([Fraction(1)] * 4) == 6
    assert clique_envelope_value([Fraction(0)] * 3) == 0


def test_clique_envelope_matches_oracle():
    """Test the closed form against the vertex LP on unit cliques."""
    x = (Fraction(3, 5), Fraction(3, 10), Fraction(3, 10), Fraction(9, 10), Fraction(2, 5))
    value, _ = vex_exact(complete_graph(5), x)
    assert value == clique_envelope_value(x)


def test_parse_class_tag():
    """Test class tags with and without size subscripts."""
    assert parse_class_tag("MQ4") == ("MQ", 4)
    assert parse_class_tag("MT") == ("MT", None)
    assert parse_class_tag("MO", k=5) == ("MO", 5)
    for bad in ("MX", "MT4", "MQ3"):
        with pytest.raises(BadClass):
            parse_class_tag(bad)
    with pytest.raises(BadClass):
        parse_class_tag("MQ4", k=5)


def test_relaxation_system_sources_on_k4():
    """Test row and generator counts of each class on K_4."""
    g = complete_graph(4)
    m = relaxation_system(g, "M")
    assert (len(m), m.sources) == (24, 6)
    mt = relaxation_system(g, "MT")
    assert (len(mt), mt.sources) == (40, 4)
    mq = relaxation_system(g, "MQ")
    assert (len(mq), mq.sources) == (30, 1)
    mo = relaxation_system(g, "MO")
    assert mo.sources == 3


def test_mq4_sources_count_four_cliques():
    """Test the MQ_4 generator count on K_n is C(n, 4)."""
    assert relaxation_system(complete_graph(6), "MQ4").sources == 15


def test_system_operations():
    """Test without, violations and LP export."""
    g = complete_graph(3)
    system = relaxation_system(g, "MT")
    label = "triangle(1,2,3;T1)"
    smaller = system.without(label)
    assert len(smaller) == len(system) - 1
    with pytest.raises(BadIndex):
        smaller.without(label)

    x = (Fraction(1, 2),) * 3
    y = {pair: Fraction(0) for pair in [(1, 2), (1, 3), (2, 3)]}
    assert [name for name, _ in system.violations(x, y)] == [label]

    model = system.to_lp_model(edge_objective(g))
    assert model.bounds["x1"] == (0, 1)
    assert model.bounds["y1_2"] == (None, None)
    assert model.objective == {"y1_2": 1, "y1_3": 1, "y2_3": 1}


def test_kn_minus_system_rows():
    """Test K_n^- carries 3n-10 special rows beside McCormick."""
    system = kn_minus_system(5)
    assert system.universe == all_pairs(5)
    assert system.families() == {"mccormick": 40, "clique_minus_1": 2, "clique_minus_2": 2, "clique_minus_3": 1}
    assert kn_minus_label(3, 2) in system.labels()
    with pytest.raises(TooSmall):
        kn_minus_system(4)


def test_minimality_witness_symmetric_family():
    """Test the closed-form witness breaks only the dropped row."""
    witness = minimality_witness(5, 3, 2)
    system = kn_minus_system(5)
    reduced = system.without(witness.label)
    assert reduced.violations(witness.x, witness.y) == []
    assert [name for name, _ in system.violations(witness.x, witness.y)] == [witness.label]
    vex, _ = vex_exact(kn_minus_graph(5), witness.x)
    assert witness.z < vex


@pytest.mark.slow
@pytest.mark.parametrize("n", [5, 6])
def test_minimality_witness_searched_families(n):
    """Test LP-certified witnesses for the first two families."""
    for family in (1, 2):
        for s in range(1, n - 2):
            witness = minimality_witness(n, family, s)
            reduced = kn_minus_system(n).without(witness.label)
            assert reduced.violations(witness.x, witness.y) == []
            vex, _ = vex_exact(kn_minus_graph(n), witness.x)
            assert witness.z < vex


def test_minimality_witness_ranges():
    """Test rows outside the family ranges are refused."""
    with pytest.raises(BadIndex):
        minimality_witness(5, 3, 1)
    with pytest.raises(BadIndex):
        minimality_witness(5, 4, 1)


def test_wheel_inequalities():
    """Test the wheel rows are valid and counted by parity."""
    assert len(wheel_inequalities(4)) == 1
    rows = wheel_inequalities(5)
    assert len(rows) == 2
    assert_valid(rows, 6)
    assert len(wheel_system(5)) == 40 + 2
    with pytest.raises(TooSmall):
        wheel_inequalities(3)


def test_cycle_systems():
    """Test natural-index and disjoint cycle systems."""
    g = cycle_graph([1, -1, 1, 1])
    assert len(cycle_system(g)) == 16 + 2
    with pytest.raises(Overlap):
        disjoint_cycles_system(complete_graph(6), [[1, 2, 3], [3, 4, 5]])
    both = disjoint_cycles_system(complete_graph(6), [[1, 2, 3], [4, 5, 6]])
    assert both.sources == 2


def test_literal_cycle_rows_are_not_valid():
    """Test literal vertex classes cut off 0/1 points while junction rows never do."""
    invalid = 0
    for n in (4, 5, 6):
        for signs in itertools.product((1, -1), repeat=n):
            g = cycle_graph(signs)
            assert_valid(cycle_theorem_pair(g), n)
            for row in cycle_theorem_pair(g, semantics="literal"):
                invalid += sum(1 for x, y in binary_points(n) if not row.is_satisfied(x, y))
    assert invalid > 0

    literal = cycle_theorem_pair(cycle_graph([1, 1, 1, -1]), semantics="literal")
    row = next(r for r in literal if r.family == "cycle_2_literal")
    x, y = next((x, y) for x, y in binary_points(4) if x == (0, 1, 0, 1))
    assert row.lhs(x, y) == 2
    assert row.rhs == 1


def test_almost_complete_separation_point():
    """Test a K_5^- point where cliques and cycles give 3/2 but vex is 7/4."""
    g = kn_minus_graph(5)
    x = tuple(Fraction(v) for v in ("1/2", "1/2", "1/2", "3/4", "1/4"))
    weak = relaxation_system(g, "MT").merge(relaxation_system(g, "MQ")).merge(relaxation_system(g, "MO"))
    z = lb_relax(weak, g, x)
    assert z == Fraction(3, 2)
    vex, _ = vex_exact(g, x)
    assert vex == Fraction(7, 4)
    lhs = 2 * sum(x[:4]) + x[4] - z
    assert lhs == Fraction(13, 4)
    assert lhs - 3 == Fraction(1, 4)
    assert lb_relax(kn_minus_system(5), g, x) == vex


@pytest.mark.slow
@pytest.mark.parametrize("n", range(3, 9))
def test_clique_envelope_closed_form_on_random_points(n):
    """Test s * sum(x) - C(s+1, 2) against the vertex LP on unit cliques."""
    g = complete_graph(n)
    for x in sample_points(n, 84, seed=n, denominator=20):
        value, _ = vex_exact(g, x)
        assert value == clique_envelope_value(x), f"x = {x}"
