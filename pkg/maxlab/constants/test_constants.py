# ruff: noqa: S101
import math
from unittest.mock import patch

import numpy as np
import pytest

from maxlab.assembly.assembly import assemble_nedelec, assemble_p1
from maxlab.assembly.material import EpsilonSpec
from maxlab.constants.constants import (
    Constants,
    InequalityCheck,
    chain_checks,
    constants_report,
    dirichlet_lambda1,
    interlacing_table,
    map_levels,
    maxwell_lambda,
    neumann_mu2,
)
from maxlab.core.errors import ConfigError, TopologyError
from maxlab.mesh.mesh import DomainSpec, build_rect_mesh
from maxlab.spectral.spectral import eig_gsym

SQUARE = DomainSpec(kind="rect2d")
CUBE = DomainSpec(kind="box3d")
BOX = DomainSpec(kind="box3d", dims=[1, 2, 3])
HOLE = DomainSpec(kind="square_with_hole2d", outer=3, inner=1)


@pytest.fixture(scope="module")
def cube_report():
    return constants_report(CUBE, levels=(2, 4))


@pytest.fixture(scope="module")
def square_report():
    return constants_report(SQUARE, levels=(4, 8))


def test_square_dirichlet():
    series = dirichlet_lambda1(SQUARE, levels=(16,))
    assert 2 * math.pi**2 <= series.values[0] <= 1.02 * 2 * math.pi**2
    assert series.extrapolated == series.values[0]


def test_cube_dirichlet_extrapolates_towards_exact():
    series = dirichlet_lambda1(CUBE, levels=(4, 8))
    exact = 3 * math.pi**2
    assert exact <= series.values[1] <= 1.07 * exact
    assert series.extrapolated == pytest.approx(exact, rel=0.04)
    assert abs(series.extrapolated - exact) < abs(series.values[1] - exact)


def test_weighted_scalar_pencils_scale_exactly():
    doubled = EpsilonSpec(kind="scalar", value=2.0)
    plain = dirichlet_lambda1(SQUARE, levels=(4, 8))
    weighted = dirichlet_lambda1(SQUARE, doubled, levels=(4, 8))
    np.testing.assert_allclose(weighted.values, 2 * np.array(plain.values), rtol=1e-12)
    mu = neumann_mu2(SQUARE, levels=(4,)).values[0]
    assert neumann_mu2(SQUARE, doubled, levels=(4,)).values[0] == pytest.approx(2 * mu, rel=1e-12)


@pytest.mark.parametrize(
    "domain, n, exact",
    [
        (SQUARE, 16, math.pi**2),
        (BOX, 6, math.pi**2 / 9),
        (CUBE, 6, math.pi**2),
    ],
)
def test_neumann_mu2(domain, n, exact):
    value = neumann_mu2(domain, levels=(n,)).values[0]
    assert exact <= value <= 1.05 * exact


def test_cube_tangential_maxwell():
    series, harmonic = maxwell_lambda(CUBE, bc="tangential", levels=(4,))
    assert harmonic == 0
    assert series.values[0] == pytest.approx(2 * math.pi**2, rel=0.15)


def test_box_tangential_maxwell():
    series, harmonic = maxwell_lambda(BOX, bc="tangential", levels=(4,))
    assert harmonic == 0
    assert series.values[0] == pytest.approx(13 * math.pi**2 / 36, rel=0.15)


@pytest.mark.parametrize("bc", ["tangential", "normal"])
def test_hole_has_one_harmonic_field(bc):
    _, harmonic = maxwell_lambda(HOLE, bc=bc, levels=(6, 12))
    assert harmonic == 1


def test_unstable_harmonic_dimension():
    def fake(mesh, material, bc):
        return 10.0, 0 if mesh.n_cells < 50 else 1

    with patch("maxlab.constants.constants.smallest_maxwell_eigenvalue", side_effect=fake):
        with pytest.raises(TopologyError, match="not refinement stable"):
            maxwell_lambda(SQUARE, levels=(2, 8))


@pytest.mark.parametrize("levels", [(), (4, 2), (4, 4)])
def test_levels_must_increase(levels):
    with pytest.raises(ConfigError):
        dirichlet_lambda1(SQUARE, levels=levels)


def test_map_levels_keeps_level_order():
    assert map_levels(lambda n: n * n, [1, 2, 3, 4], jobs=3, progress=True) == [1, 4, 9, 16]


def test_cube_chain(cube_report):
    c = cube_report.constants
    assert [check.status for check in cube_report.checks] == ["passed"] * 6
    assert cube_report.failed_checks() == []
    assert 0 < c.c_p0 < c.c_mt < c.c_mn
    assert c.c_p == pytest.approx(1 / math.pi, rel=0.05)
    assert c.c_mn == pytest.approx(c.c_p, rel=1e-12)
    assert c.diam_over_pi == pytest.approx(math.sqrt(3) / math.pi, rel=1e-12)
    assert c.inv_op_norm == pytest.approx(math.sqrt(c.c_mt**2 + 1), rel=1e-15)
    assert c.c_p0 < c.c_p
    assert (cube_report.d_D, cube_report.d_N) == (0, 0)


def test_cube_gradient_part_is_binding_for_normal_fields(cube_report):
    for record in cube_report.levels:
        assert min(record.mu2_eps, record.lambda_max_n) == record.mu2_eps


def test_maxwell_eigenvalues_lie_between_scalar_ones(cube_report, square_report):
    for report in (cube_report, square_report):
        ext = report.extrapolated
        for value in (ext.lambda_max_t, ext.lambda_max_n):
            assert math.sqrt(ext.mu2) * 0.99 <= math.sqrt(value) <= math.sqrt(ext.lambda1) * 1.01


def test_square_chain(square_report):
    c = square_report.constants
    by_name = {check.name: check for check in square_report.checks}
    for name in ("(i) c_p0 <= c_mt", "(ii) c_mt <= c_mn", "(iii) c_mn = c_p", "(vi) c_p <= diam/pi"):
        assert by_name[name].satisfied is True
    assert c.c_mn == pytest.approx(c.c_p, rel=1e-12)
    assert c.c_p0 == pytest.approx(1 / (math.pi * math.sqrt(2)), rel=0.02)
    assert c.c_mt == pytest.approx(1 / math.pi, rel=0.03)
    assert square_report.levels[0].n == 4
    assert set(square_report.model_dump()["levels"][0]) >= {
        "n", "h", "lambda1", "mu2", "lambda_max_t", "lambda_max_n", "d_D", "d_N"
    }


def test_weighted_cube_bounds():
    report = constants_report(CUBE, EpsilonSpec(kind="scalar", value=2.0), levels=(2, 4))
    c = report.constants
    assert c.eps_lower == pytest.approx(2**-0.5, rel=1e-14)
    assert c.eps_upper == pytest.approx(math.sqrt(2), rel=1e-14)
    status = {check.name: check.status for check in report.checks}
    assert status["(iv) weighted upper bounds"] == "passed"
    assert status["(v) weighted lower bounds"] == "passed"
    assert status["(i) c_p0 <= c_mt"] == "skipped: eps not identity"
    assert status["(iii) c_mn = c_p"] == "skipped: eps not identity"
    assert report.levels[0].lambda1_eps == pytest.approx(2 * report.levels[0].lambda1, rel=1e-12)
    assert any("artifact-defined" in note for note in report.notes)


def test_hole_skips_convex_checks():
    report = constants_report(HOLE, levels=(6, 12))
    assert (report.d_D, report.d_N) == (1, 1)
    status = {check.name: check.status for check in report.checks}
    assert status["(i) c_p0 <= c_mt"] == "passed"
    assert status["(v) weighted lower bounds"] == "passed"
    for name in ("(ii) c_mt <= c_mn", "(iii) c_mn = c_p", "(iv) weighted upper bounds", "(vi) c_p <= diam/pi"):
        assert status[name] == "skipped: nonconvex"
    assert report.failed_checks() == []
    assert any("harmonic" in note for note in report.notes)


def test_report_is_deterministic():
    first = constants_report(SQUARE, levels=(2, 4))
    second = constants_report(SQUARE, levels=(2, 4), jobs=2)
    assert first.model_dump_json() == second.model_dump_json()


def test_single_level_is_not_extrapolated():
    report = constants_report(SQUARE, levels=(4,))
    assert report.extrapolated.lambda1 == report.levels[0].lambda1
    assert any("not extrapolated" in note for note in report.notes)


def test_check_tolerance_boundary():
    assert InequalityCheck.compare("x", 1.0 + 5e-13, 1.0).satisfied
    failed = InequalityCheck.compare("x", 1.0 + 2e-12, 1.0)
    assert failed.satisfied is False
    assert failed.status == "failed"
    assert failed.margin == pytest.approx(-2e-12)


def test_chain_reports_failures_as_data():
    constants = Constants(
        c_p0=0.2,
        c_p=0.3,
        c_mt=0.33,
        c_mn=0.3,
        eps_lower=1.0,
        eps_upper=1.0,
        eps_hat=1.0,
        diam_over_pi=0.5,
        inv_op_norm=math.sqrt(0.33**2 + 1),
        upper_t=0.3,
        upper_n=0.3,
        lower_t=0.2,
        lower_n=0.3,
    )
    checks = {check.name: check for check in chain_checks(constants, convex=True, identity=True)}
    assert checks["(ii) c_mt <= c_mn"].satisfied is False
    assert checks["(iv) weighted upper bounds"].satisfied is False
    assert checks["(i) c_p0 <= c_mt"].satisfied is True


def test_square_duality_of_edge_and_neumann_spectra():
    mesh = build_rect_mesh((1, 1), 8)
    edge = eig_gsym(assemble_nedelec(mesh, bc="tangential"))
    neumann = eig_gsym(assemble_p1(mesh, bc="natural"))
    np.testing.assert_allclose(
        edge.eigenvalues[edge.kernel_dim : edge.kernel_dim + 3], neumann.eigenvalues[1:4], rtol=0.05
    )


@pytest.mark.parametrize("domain, k, levels", [(SQUARE, 3, (8,)), (CUBE, 3, (4,))])
def test_interlacing(domain, k, levels):
    table = interlacing_table(domain, k, levels)
    assert [row.n for row in table.rows] == list(range(1, k + 1))
    assert table.all_satisfied


def test_interlacing_degenerate():
    assert interlacing_table(SQUARE, 0).rows == []
    with pytest.raises(ConfigError):
        interlacing_table(SQUARE, 20, levels=(2,))


def test_interlacing_leaves_out_coarse_levels():
    # the n=2 cube has a single interior vertex
    table = interlacing_table(CUBE, 3, levels=(2, 4))
    assert table.levels == [4]
    assert table.skipped_levels == [2]
    assert len(table.rows) == 3
    assert table.all_satisfied
    with pytest.raises(ConfigError, match="no level"):
        interlacing_table(CUBE, 3, levels=(2,))


def test_file_material_spans_levels(tmp_path):
    # one row per cell of the coarsest level (8 triangles at n=2)
    path = tmp_path / "eps.txt"
    path.write_text("2 0 2\n" * 8)
    tabulated = constants_report(SQUARE, EpsilonSpec(kind="file", path=str(path)), levels=(2, 4))
    scalar = constants_report(SQUARE, EpsilonSpec(kind="scalar", value=2.0), levels=(2, 4))
    for got, want in zip(tabulated.levels, scalar.levels):
        assert got.lambda1_eps == pytest.approx(want.lambda1_eps, rel=1e-12)
        assert got.lambda_max_t == pytest.approx(want.lambda_max_t, rel=1e-12)
    assert tabulated.constants.c_mt == pytest.approx(scalar.constants.c_mt, rel=1e-12)
    series = neumann_mu2(SQUARE, EpsilonSpec(kind="file", path=str(path)), levels=(2, 4))
    assert series.values[1] == pytest.approx(scalar.levels[1].mu2_eps, rel=1e-12)
    table = interlacing_table(SQUARE, 2, levels=(2, 4), eps=EpsilonSpec(kind="file", path=str(path)))
    assert table.levels == [4]
