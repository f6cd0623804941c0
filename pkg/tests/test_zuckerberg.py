"""
Tests for interval-set certificates and the explicit constructions.
"""

from fractions import Fraction

import numpy as np
import pytest

from envelopes import envelope, sample_points, vex_exact
from graph_model import DimensionMismatch, complete_graph, cycle_graph, kn_minus_graph
from intervals import IntervalSet
from zuckerberg import (
    BadPartition,
    BadWeights,
    CertificateError,
    atoms,
    bucket,
    certificate_from_text,
    certificate_to_text,
    certificate_value,
    check_certificate,
    clique_construction,
    cycle_construction,
    cycle_dual_certificate,
    defect_formula_check,
    from_convex_combination,
    kn_minus_layout,
    point_of,
    read_certificate,
    rotation_shift,
    vex_cycle_construction,
    write_certificate,
)

F = Fraction
SIGNED_C8 = [1, -1, 1, -1, -1, 1, 1, 1]
C8_POINT = ("3/5", "1/2", "3/10", "1/2", "2/5", "3/5", "1/2", "3/5")


def test_atoms_sum_to_one():
    """Test atom measures partition [0, 1) and reproduce x."""
    sets = [IntervalSet.span(0, "1/2"), IntervalSet.span("1/4", "3/4"), IntervalSet.empty()]
    found = atoms(sets)
    assert found == {(1, 0, 0): F(1, 4), (1, 1, 0): F(1, 4), (0, 1, 0): F(1, 4), (0, 0, 0): F(1, 4)}
    assert sum(found.values()) == 1
    assert atoms([IntervalSet.empty()] * 3) == {(0, 0, 0): 1}


def test_convex_combination_round_trip():
    """Test sets built from weights give the same weights back."""
    weights = {(1, 1, 0): F(1, 3), (0, 1, 1): F(1, 6), (0, 0, 0): F(1, 2)}
    sets = from_convex_combination(weights)
    assert atoms(sets) == weights
    assert point_of(sets) == (F(1, 3), F(1, 2), F(1, 6))
    assert from_convex_combination({(1, 0): 1}) == [IntervalSet.universe(), IntervalSet.empty()]


def test_convex_combination_errors():
    """Test the weight validation."""
    with pytest.raises(BadWeights):
        from_convex_combination({(1, 0): F(1, 2)})
    with pytest.raises(BadWeights):
        from_convex_combination({(1, 0): F(3, 2), (0, 1): F(-1, 2)})
    with pytest.raises(BadWeights):
        from_convex_combination({(1, 0): F(1, 2), (1,): F(1, 2)})
    with pytest.raises(BadWeights):
        from_convex_combination({})


def test_certificate_value():
    """Test the edge sum of overlaps and its dimension check."""
    g = complete_graph(3)
    sets = [IntervalSet.span(0, "1/2"), IntervalSet.span("1/4", "3/4"), IntervalSet.span("1/2", 1)]
    assert certificate_value(sets, g) == F(1, 4) + 0 + F(1, 4)
    with pytest.raises(DimensionMismatch):
        certificate_value(sets[:2], g)


def test_certificate_lies_between_envelopes():
    """Test any family of sets gives a value in [vex, cav]."""
    g = cycle_graph([2, -1, 1, -3])
    sets = [
        IntervalSet([(0, "1/3"), ("1/2", "3/4")]),
        IntervalSet.span("1/5", "4/5"),
        IntervalSet([("1/10", "1/5"), ("2/3", 1)]),
        IntervalSet.span(0, "1/2"),
    ]
    assert check_certificate(sets, g).holds


def test_clique_construction_on_k5():
    """Test the wrap-around sets certify vex = 2 on the unit five-clique."""
    x = ("3/5", "3/10", "3/10", "9/10", "2/5")
    sets = clique_construction(x)
    assert point_of(sets) == tuple(F(v) for v in x)
    assert certificate_value(sets, complete_graph(5)) == 2
    check = check_certificate(sets, complete_graph(5))
    assert check.certifies_vex


def test_clique_construction_extremes():
    """Test all-ones and small-sum points."""
    assert certificate_value(clique_construction((1, 1, 1, 1)), complete_graph(4)) == 6
    small = clique_construction(("1/4", "1/4", "1/3"))
    assert certificate_value(small, complete_graph(3)) == 0


def test_kn_minus_layout_case_b_is_one():
    """Test the sweep ending at b = 1 and its optimal value."""
    x = ("9/10", "3/5", "1/5", "1/10", "3/5", "2/5")
    layout = kn_minus_layout(x)
    assert layout.b == 1
    assert layout.a == F(4, 5)
    g = kn_minus_graph(6)
    value = certificate_value(layout.sets, g)
    assert value == F(11, 5)
    assert value == vex_exact(g, x)[0]


def test_kn_minus_layout_case_b_below_one():
    """Test the sweep ending with b < 1 and its optimal value."""
    x = ("9/10", "4/5", "1/5", "1/10", "3/5", "2/5")
    layout = kn_minus_layout(x)
    assert layout.b == F(9, 10)
    g = kn_minus_graph(6)
    value = certificate_value(layout.sets, g)
    assert value == F(27, 10)
    assert value == vex_exact(g, x)[0]


def test_kn_minus_layout_sorts_its_input():
    """Test unsorted points are laid out in sorted order and mapped back."""
    x = ("2/5", "3/5", "1/5", "1/2", "1/3", "1/2")
    layout = kn_minus_layout(x)
    assert layout.order[:3] == (2, 4, 1)
    assert point_of(layout.sets) == tuple(F(v) for v in x)
    g = kn_minus_graph(6)
    assert check_certificate(layout.sets, g).certifies_vex


def test_bucket_fill_order():
    """Test reservoirs are emptied in order, leftmost first."""
    parts = [IntervalSet.span(0, "1/5"), IntervalSet.span("1/5", "1/2"), IntervalSet.span("1/2", "9/10"), IntervalSet.span("9/10", 1)]
    assert bucket(*parts, "2/5") == IntervalSet.span(0, "2/5")
    assert bucket(*parts, "1/10") == IntervalSet.span(0, "1/10")
    assert bucket(*parts, 1) == IntervalSet.universe()
    assert bucket(parts[3], parts[2], parts[1], parts[0], "1/5") == IntervalSet([("9/10", 1), ("1/2", "3/5")])


def test_bucket_rejects_non_partitions():
    """Test overlapping and incomplete reservoirs."""
    half = IntervalSet.span(0, "1/2")
    with pytest.raises(BadPartition):
        bucket(half, half, IntervalSet.span("1/2", 1), IntervalSet.empty(), "1/4")
    with pytest.raises(BadPartition):
        bucket(half, IntervalSet.empty(), IntervalSet.empty(), IntervalSet.empty(), "1/4")
    with pytest.raises(CertificateError):
        bucket(half, IntervalSet.span("1/2", 1), IntervalSet.empty(), IntervalSet.empty(), 2)


def test_signed_eight_cycle():
    """Test the construction reaches cav = 23/10 on the signed eight-cycle."""
    g = cycle_graph(SIGNED_C8)
    sets, ctx = cycle_construction(g, C8_POINT)
    assert ctx.shift == 0
    assert ctx.value == F(23, 10)
    assert certificate_value(sets, g) == F(23, 10)
    assert ctx.big_a == F(23, 10)
    assert ctx.defects[8] == F(1, 10)
    assert envelope(g, C8_POINT).cav == F(23, 10)
    report = defect_formula_check(ctx)
    assert report.ok
    assert report.formula_checked


def test_even_negative_edges_have_no_defect():
    """Test an even number of negative edges keeps every defect at zero."""
    g = cycle_graph([2, -1, 3, -1, 2])
    _, ctx = cycle_construction(g, ("1/2", "3/4", "1/3", "2/3", "1/5"))
    assert all(d == 0 for d in ctx.defects.values())
    assert not defect_formula_check(ctx).formula_checked


def test_rotation_puts_smallest_weight_last():
    """Test the rotation rule and the mapping back to original vertices."""
    assert rotation_shift([F(3), F(-1), F(2), F(1)]) == 0
    assert rotation_shift([F(3), F(-1), F(2), F(5)]) == 2
    g = cycle_graph([3, -1, 2, 5])
    x = ("1/2", "1/3", "3/4", "2/5")
    sets, ctx = cycle_construction(g, x)
    assert abs(ctx.a[-1]) == 1
    assert point_of(sets) == tuple(F(v) for v in x)
    assert check_certificate(sets, g).certifies_cav


def test_cycle_constructions_match_envelopes():
    """Test both sides against the vertex LP on random signed cycles."""
    for seed, weights in enumerate([[1, -2, 3, -1, 1], [-1, -1, 2, 1, -3, 2], [1, 1, 1, 1, 1, 1, 1]]):
        g = cycle_graph(weights)
        for x in sample_points(g.n, 4, seed=seed, denominator=12):
            sets, ctx = cycle_construction(g, x)
            assert defect_formula_check(ctx).ok
            env = envelope(g, x)
            assert certificate_value(sets, g) == env.cav
            low_sets, _, low_value = vex_cycle_construction(g, x)
            assert low_value == env.vex == certificate_value(low_sets, g)


def test_dual_certificates():
    """Test the explicit dual solutions are feasible and tight on both sides."""
    g = cycle_graph(SIGNED_C8)
    upper = cycle_dual_certificate(g, C8_POINT)
    assert upper.feasible
    assert upper.alpha == 1
    assert upper.objective == F(23, 10)
    lower = cycle_dual_certificate(g, C8_POINT, side="LB")
    assert lower.feasible
    assert lower.objective == envelope(g, C8_POINT).vex
    with pytest.raises(ValueError):
        cycle_dual_certificate(g, C8_POINT, side="middle")


def test_certificate_text(tmp_path):
    """Test the certificate file format."""
    sets = [IntervalSet([(0, "1/4"), ("1/2", "3/4")]), IntervalSet.empty(), IntervalSet.universe()]
    text = certificate_to_text(sets)
    assert text == "3\n0 1/4  1/2 3/4\n-\n0 1\n"
    assert certificate_from_text(text) == sets
    path = tmp_path / "cert.txt"
    write_certificate(sets, str(path))
    assert read_certificate(str(path)) == sets


def test_certificate_text_errors(tmp_path):
    """Test malformed certificate files."""
    with pytest.raises(CertificateError):
        certificate_from_text("")
    with pytest.raises(CertificateError):
        certificate_from_text("two\n0 1\n")
    with pytest.raises(CertificateError):
        certificate_from_text("2\n0 1\n")
    with pytest.raises(CertificateError):
        read_certificate(str(tmp_path / "missing.txt"))


@pytest.mark.slow
def test_random_cycle_defects_and_duals():
    """Test defect identities and both dual objectives on 1000 random signed cycles."""
    rng = np.random.default_rng(6)
    for k in range(1000):
        n = 4 + k % 7
        signs = rng.choice([-1, 1], size=n)
        weights = [int(s) * int(m) for s, m in zip(signs, rng.integers(1, 6, size=n))]
        g = cycle_graph(weights)
        x = sample_points(n, 1, seed=k, denominator=20)[0]
        sets, ctx = cycle_construction(g, x)
        report = defect_formula_check(ctx)
        assert report.ok, report.mismatches
        upper = cycle_dual_certificate(g, x)
        assert upper.feasible
        assert upper.objective == ctx.value == certificate_value(sets, g)
        _, _, low_value = vex_cycle_construction(g, x)
        lower = cycle_dual_certificate(g, x, side="LB")
        assert lower.feasible
        assert lower.objective == low_value
