"""
Tests for the gap study and the quadratic program relaxations.
"""

from fractions import Fraction

import pytest

from experiments import (
    ExperimentError,
    IoFailure,
    MalformedInstance,
    QpInstance,
    StudyConfig,
    StudyConfigError,
    build_qp_linearization,
    class_ordering_violations,
    emit_qp_convexification,
    load_study_config,
    make_form,
    qp_convexification_model,
    qp_from_text,
    qp_linearization_model,
    qp_to_text,
    qp_triangles,
    read_qp_instance,
    run_gap_study,
    triangle_sampling_curve,
    write_qp_instance,
    write_table_csv,
    write_table_dat,
)
from lpfile import read_lp
from ratsolver import LpStatus, solve

INSTANCE_TEXT = """3 1 1
Q0 5
1 1 2
1 2 1
1 3 1/2
2 2 -1
2 3 -1
c0 1
1 -1
Q1 1
1 2 1
c1 1
3 1
b1 1
"""


@pytest.fixture
def instance():
    """A three-variable instance with one constraint and the simplex row."""
    return qp_from_text(INSTANCE_TEXT, name="small")


@pytest.fixture
def k4_instance():
    """Unit off-diagonal Q0 on four variables, so every triple is a triangle."""
    pairs = [(i, j, 1) for i in range(1, 5) for j in range(i + 1, 5)]
    return QpInstance(n=4, objective=make_form(pairs, [(i, -1) for i in range(1, 5)]), name="k4")


@pytest.fixture
def tiny_study():
    return StudyConfig(n=4, p=0.9, sample_count=3, graph_count=2, classes=["M", "MT"], seed=1,
                       denominator=4, weight_sampler="unit")


def test_study_config_validation():
    """Test the study parameter checks."""
    cfg = StudyConfig(n=6, p=0.5)
    assert cfg.sample_count == 100
    assert cfg.classes == ["M", "MT", "MQ", "MC", "MG", "MO"]
    with pytest.raises(StudyConfigError):
        StudyConfig(n=6, p=1.0)
    with pytest.raises(StudyConfigError):
        StudyConfig(n=6, p=0.5, classes=["MX"])
    with pytest.raises(StudyConfigError):
        StudyConfig(n=6, p=0.5, classes=[])
    with pytest.raises(StudyConfigError):
        StudyConfig(n=6, p=0.5, graph_count=0)


def test_load_study_config(tmp_path):
    """Test TOML files with and without a [study] table."""
    path = tmp_path / "study.toml"
    path.write_text('[study]\nn = 5\np = 0.5\nclasses = ["M", "MQ4"]\nseed = 3\n')
    cfg = load_study_config(str(path))
    assert (cfg.n, cfg.p, cfg.seed) == (5, 0.5, 3)
    assert cfg.classes == ["M", "MQ4"]

    flat = tmp_path / "flat.toml"
    flat.write_text("n = 4\np = 0.3\nsample_count = 2\n")
    assert load_study_config(str(flat)).sample_count == 2

    bad = tmp_path / "bad.toml"
    bad.write_text("n = 4\np = 0.3\ncolour = 'red'\n")
    with pytest.raises(StudyConfigError):
        load_study_config(str(bad))
    with pytest.raises(StudyConfigError):
        load_study_config(str(tmp_path / "missing.toml"))


def test_gap_study_is_deterministic(tiny_study):
    """Test equal seeds give equal tables, and classes keep their order."""
    first = run_gap_study(tiny_study, jobs=1)
    second = run_gap_study(tiny_study, jobs=1)
    assert [r.tag for r in first.rows] == ["M", "MT"]
    assert first.rows == second.rows
    assert len(first.records) == 6
    assert class_ordering_violations(first) == []
    for row in first.rows:
        assert row.stats.samples + row.stats.degenerate == 6
        assert row.mu_minus_one >= 0
    assert first.row("MT").stats.mu <= first.row("M").stats.mu


def test_gap_study_worker_processes(tiny_study):
    """Test the table does not depend on the number of workers."""
    assert run_gap_study(tiny_study, jobs=2).rows == run_gap_study(tiny_study, jobs=1).rows


def test_study_tables(tiny_study, tmp_path):
    """Test the CSV and whitespace table writers."""
    result = run_gap_study(tiny_study, jobs=1)
    csv_path = tmp_path / "table.csv"
    write_table_csv(result, str(csv_path))
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "class,mu_minus_1_percent,sigma_percent,c,graphs,samples,degenerate"
    assert [line.split(",")[0] for line in lines[1:]] == ["M", "MT"]

    dat_path = tmp_path / "table.dat"
    write_table_dat(result, str(dat_path))
    dat = dat_path.read_text().splitlines()
    assert dat[0].startswith("# n=4 p=0.9")
    assert dat[2].split()[:2] == ["0", "M"]


def test_instance_text_round_trip(instance, tmp_path):
    """Test parsing, the canonical text and instance files."""
    assert instance.n == 3
    assert instance.simplex == 1
    assert instance.objective.q[(1, 3)] == Fraction(1, 2)
    assert instance.constraints[0].b == 1
    assert qp_to_text(instance) == INSTANCE_TEXT
    path = tmp_path / "small.qp"
    write_qp_instance(instance, str(path))
    assert read_qp_instance(str(path)) == qp_from_text(INSTANCE_TEXT)


def test_malformed_instances():
    """Test structural errors in instances and forms."""
    with pytest.raises(MalformedInstance):
        make_form([(1, 2, 1), (2, 1, 3)])
    with pytest.raises(MalformedInstance):
        QpInstance(n=2, objective=make_form([(1, 3, 1)]))
    with pytest.raises(MalformedInstance):
        QpInstance(n=2, objective=make_form([]), simplex=2)
    with pytest.raises(MalformedInstance):
        QpInstance(n=2, objective=make_form([]), constraints=(make_form([(1, 2, 1)]),))
    with pytest.raises(MalformedInstance):
        qp_from_text("2 0\nQ0 0\nc0 0\n")
    with pytest.raises(MalformedInstance):
        qp_from_text("2 0 0\nQ0 1\n1 2\nc0 0\n")
    with pytest.raises(MalformedInstance):
        qp_from_text("2 0 0\nQ0 0\nc0 0\nextra line\n")
    with pytest.raises(MalformedInstance):
        read_qp_instance("/nonexistent/instance.qp")


def test_linearization_model(instance):
    """Test objective coefficients and the rows of the linear relaxation."""
    model = qp_linearization_model(instance)
    assert model.objective == {
        "y1_1": 2, "y1_2": 2, "y1_3": 1, "y2_2": -1, "y2_3": -2, "x1": -1,
    }
    names = [row.name for row in model.rows]
    assert sum(1 for name in names if name.startswith("triangle")) == 4
    assert "mccormick(1,1;M1)" in names
    assert "mccormick(2,2;M1)" in names
    assert names[-2:] == ["g1", "simplex"]
    g1 = model.rows[-2]
    assert g1.linear == {"y1_2": 2, "x3": 1}
    assert g1.rhs == 1
    assert model.bounds["y1_2"] == (0, 1)
    assert not model.is_quadratic


def test_linearization_solves(instance):
    """Test the relaxation is a feasible bounded LP."""
    solution = solve(build_qp_linearization(instance))
    assert solution.status == LpStatus.OPTIMAL
    assert solution.dual_value == solution.value


def test_triangles_follow_loop_free_support(instance):
    """Test diagonal entries never create triangles."""
    assert qp_triangles(instance) == [(1, 2, 3)]
    diagonal = QpInstance(n=3, objective=make_form([(1, 1, 1), (2, 2, 1), (3, 3, 1)]))
    assert qp_triangles(diagonal) == []
    assert not any(row.name.startswith("triangle") for row in qp_linearization_model(diagonal).rows)


def test_convexification_keeps_positive_squares(instance):
    """Test Q_ii > 0 stays quadratic while Q_ii < 0 is linearized."""
    model = qp_convexification_model(instance)
    assert model.objective_quadratic == {"x1": 2}
    assert "y1_1" not in model.objective
    assert model.objective["y2_2"] == -1
    names = [row.name for row in model.rows]
    assert "mccormick(1,1;M1)" not in names
    assert "mccormick(2,2;M1)" in names
    assert any("f_L <= f_C <= f" in line for line in model.comments)


def test_convexification_without_positive_diagonal():
    """Test nonpositive diagonals give exactly the linear relaxation."""
    inst = QpInstance(n=3, objective=make_form([(1, 1, -1), (1, 2, 1), (2, 3, "-1/2")], [(3, 2)]))
    convex = qp_convexification_model(inst)
    linear = qp_linearization_model(inst)
    assert not convex.is_quadratic
    assert convex.objective == linear.objective
    assert convex.rows == linear.rows


def test_emitted_file_round_trips(instance, tmp_path):
    """Test the convexified relaxation file parses back to the same model."""
    path = tmp_path / "small_c.lp"
    model = emit_qp_convexification(instance, str(path))
    assert read_lp(str(path)) == model
    with pytest.raises(IoFailure):
        emit_qp_convexification(instance, str(tmp_path / "missing" / "c.lp"))
    with pytest.raises(IoFailure):
        write_qp_instance(instance, str(tmp_path / "missing" / "i.qp"))


def test_triangle_curve_is_monotone(k4_instance):
    """Test nested triangle subsets give nondecreasing lower bounds."""
    curve = triangle_sampling_curve(k4_instance, [0, "1/2", 1], seed=4)
    assert [point.triangles for point in curve] == [0, 2, 4]
    bounds = [point.bound for point in curve]
    assert all(b is not None for b in bounds)
    assert bounds == sorted(bounds)
    again = triangle_sampling_curve(k4_instance, [0, "1/2", 1], seed=4)
    assert [p.bound for p in again] == bounds
    with pytest.raises(ExperimentError):
        triangle_sampling_curve(k4_instance, ["3/2"], seed=4)


def test_triangle_curve_worker_processes(k4_instance):
    """Test worker processes give the same curve in the same order."""
    serial = triangle_sampling_curve(k4_instance, [1, 0, "1/2"], seed=4, jobs=1)
    parallel = triangle_sampling_curve(k4_instance, [1, 0, "1/2"], seed=4, jobs=2)
    assert [(p.fraction, p.triangles, p.bound) for p in parallel] == [(p.fraction, p.triangles, p.bound) for p in serial]
    assert [p.triangles for p in serial] == [4, 0, 2]


@pytest.mark.slow
@pytest.mark.parametrize("p", [0.3, 0.8])
def test_gap_study_on_ten_vertices(p):
    """Test the sandwich ordering and that triangles give the smallest mean gap."""
    cfg = StudyConfig(n=10, p=p, sample_count=20, graph_count=20, seed=0)
    result = run_gap_study(cfg)
    assert class_ordering_violations(result) == []
    mt = result.row("MT").stats.mu
    for tag in ("MQ", "MC", "MG", "MO"):
        assert mt <= result.row(tag).stats.mu
    if p == 0.3:
        assert 0.5 <= result.row("M").mu_percent <= 6.0
