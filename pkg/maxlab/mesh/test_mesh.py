# ruff: noqa: S101
import math

import numpy as np
import pytest
from pydantic import ValidationError

from maxlab.core.errors import MeshError
from maxlab.mesh.mesh import (
    LOCAL_EDGES,
    LOCAL_FACETS,
    DomainSpec,
    Mesh,
    build_box_mesh,
    build_rect_mesh,
    build_square_with_hole,
    diameter,
    export_mesh,
    import_mesh,
    locate_cells,
    read_mesh_header,
    refine_uniform,
)


@pytest.mark.parametrize("n, vertices, cells", [(1, 8, 6), (2, 27, 48), (3, 64, 162)])
def test_box_counts(n, vertices, cells):
    mesh = build_box_mesh((1, 1, 1), n)
    assert mesh.n_vertices == vertices
    assert mesh.n_cells == cells
    assert mesh.dim == 3


@pytest.mark.parametrize("n, vertices, cells", [(1, 4, 2), (4, 25, 32)])
def test_rect_counts(n, vertices, cells):
    mesh = build_rect_mesh((1, 1), n)
    assert mesh.n_vertices == vertices
    assert mesh.n_cells == cells


@pytest.mark.parametrize(
    "mesh, expected",
    [
        (build_box_mesh((1, 1, 1), 2), math.sqrt(3)),
        (build_box_mesh((1, 2, 3), 1), math.sqrt(14)),
        (build_rect_mesh((2, 1), 1), math.sqrt(5)),
        (build_square_with_hole(3, 1, 3), 3 * math.sqrt(2)),
    ],
)
def test_diameter(mesh, expected):
    assert diameter(mesh) == pytest.approx(expected, rel=1e-14)
    assert mesh.diameter() == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize(
    "spec, n",
    [
        (DomainSpec(kind="box3d", dims=[1, 2, 3]), 3),
        (DomainSpec(kind="box3d"), 4),
        (DomainSpec(kind="rect2d", dims=[2, 1]), 5),
        (DomainSpec(kind="square_with_hole2d", outer=3, inner=1), 6),
    ],
)
def test_volume_sum_matches_domain(spec, n):
    mesh = spec.build(n)
    assert np.all(mesh.volumes > 0)
    assert mesh.volumes.sum() == pytest.approx(spec.volume, rel=1e-13)


def test_edge_orientation_is_global(catalogue_mesh):
    mesh = catalogue_mesh
    assert np.all(mesh.edges[:, 0] < mesh.edges[:, 1])
    local = mesh.cells[:, LOCAL_EDGES[mesh.dim]]
    assert np.array_equal(mesh.edges[mesh.cell_to_edge], np.sort(local, axis=2))
    expected = np.where(local[:, :, 0] < local[:, :, 1], 1, -1)
    assert np.array_equal(mesh.cell_edge_sign, expected)


def test_facets_shared_by_at_most_two_cells(catalogue_mesh):
    mesh = catalogue_mesh
    local = np.sort(mesh.cells[:, LOCAL_FACETS[mesh.dim]], axis=2).reshape(-1, mesh.dim)
    _, counts = np.unique(local, axis=0, return_counts=True)
    assert set(counts.tolist()) == {1, 2}
    assert np.count_nonzero(counts == 1) == mesh.boundary_facets.size


def test_boundary_classification_counts():
    square = build_rect_mesh((1, 1), 4)
    assert square.boundary_edges.size == 16
    assert square.boundary_vertices.size == 16
    cube = build_box_mesh((1, 1, 1), 2)
    assert cube.boundary_facets.size == 48
    assert cube.interior_vertices.tolist() == [13]


@pytest.mark.parametrize(
    "mesh, chi",
    [
        (build_rect_mesh((1, 1), 4), 1),
        (build_box_mesh((1, 1, 1), 2), 1),
        (build_square_with_hole(3, 1, 3), 0),
        (build_square_with_hole(3, 1, 6), 0),
    ],
)
def test_euler_characteristic(mesh, chi):
    assert mesh.euler_characteristic() == chi


def test_square_with_hole_counts():
    coarse = build_square_with_hole(3, 1, 3)
    assert (coarse.n_vertices, coarse.n_edges, coarse.n_cells) == (16, 32, 16)
    fine = build_square_with_hole(3, 1, 6)
    assert (fine.n_vertices, fine.n_edges, fine.n_cells) == (48, 112, 64)


@pytest.mark.parametrize("n", [3, 6, 9])
def test_square_with_hole_topology(n):
    mesh = build_square_with_hole(3, 1, n)
    assert mesh.boundary_components() == 2
    assert mesh.betti_numbers() == (1, 1, 0)
    assert mesh.harmonic_dims() == (1, 1)


def test_convex_domains_have_trivial_topology(unit_square, unit_cube):
    assert unit_square.boundary_components() == 1
    assert unit_square.harmonic_dims() == (0, 0)
    assert unit_cube.betti_numbers() == (1, 0, 0)
    assert unit_cube.harmonic_dims() == (0, 0)


@pytest.mark.parametrize(
    "call",
    [
        lambda: build_square_with_hole(3, 1, 4),
        lambda: build_square_with_hole(3, 3, 3),
        lambda: build_square_with_hole(1, 2, 2),
        lambda: build_box_mesh((1, 1, 1), 0),
        lambda: build_box_mesh((1, -1, 1), 2),
        lambda: build_rect_mesh((1, 1, 1), 2),
    ],
)
def test_builders_reject_bad_input(call):
    with pytest.raises(MeshError):
        call()


def test_refine_square_counts():
    mesh = build_rect_mesh((1, 1), 1)
    once = refine_uniform(mesh)
    assert (once.n_vertices, once.n_cells) == (9, 8)
    twice = refine_uniform(once)
    assert twice.n_cells == 32
    assert twice.volumes.sum() == pytest.approx(1.0, rel=1e-14)


def test_refine_cube_is_conforming():
    mesh = build_box_mesh((1, 1, 1), 1)
    fine = refine_uniform(mesh)
    assert (fine.n_vertices, fine.n_cells) == (27, 48)
    assert fine.boundary_facets.size == 4 * mesh.boundary_facets.size
    assert np.all(fine.volumes > 0)
    assert fine.volumes.sum() == pytest.approx(1.0, rel=1e-14)
    assert fine.euler_characteristic() == 1


def test_refine_is_reproducible():
    mesh = build_box_mesh((1, 2, 3), 1)
    first, second = refine_uniform(mesh), refine_uniform(mesh)
    assert np.array_equal(first.cells, second.cells)
    assert np.array_equal(first.vertices, second.vertices)


@pytest.mark.parametrize(
    "mesh", [build_rect_mesh((1, 1), 2), build_box_mesh((1, 1, 1), 1), build_square_with_hole(3, 1, 3)]
)
def test_refine_keeps_boundary(mesh):
    fine = refine_uniform(mesh)
    nv = mesh.n_vertices
    fine_pairs = {tuple(e) for e in fine.edges[fine.boundary_edges].tolist()}
    for e in mesh.boundary_edges:
        a, b = mesh.edges[e]
        mid = nv + int(e)
        assert mid in set(fine.boundary_vertices.tolist())
        assert (int(a), mid) in fine_pairs
        assert (int(b), mid) in fine_pairs
    assert fine.boundary_edges.size == 2 * mesh.boundary_edges.size + (
        0 if mesh.dim == 2 else 3 * mesh.boundary_facets.size
    )


def test_export_import_round_trip(tmp_path):
    mesh = build_box_mesh((1, 1, 1), 1)
    path = export_mesh(mesh, tmp_path / "cube.mesh")
    again = import_mesh(path)
    assert np.array_equal(again.cells, mesh.cells)
    assert np.array_equal(again.edges, mesh.edges)
    assert np.array_equal(again.vertices, mesh.vertices)
    assert again.provenance == "imported:cube.mesh"


def test_import_reorients_cells(tmp_path):
    path = tmp_path / "tri.mesh"
    path.write_text("# clockwise triangle\n2 3 1\n0 0\n1 0\n0 1\n0 2 1\n")
    mesh = import_mesh(path)
    assert mesh.volumes[0] == pytest.approx(0.5)


def test_import_degenerate_cell(tmp_path):
    path = tmp_path / "flat.mesh"
    path.write_text("2 3 1\n0 0\n1 0\n2 0\n0 1 2\n")
    with pytest.raises(MeshError, match="degenerate"):
        import_mesh(path)


def test_import_disconnected(tmp_path):
    path = tmp_path / "two.mesh"
    lines = ["3 8 2"]
    for shift in (0.0, 5.0):
        lines += [f"{shift} 0 0", f"{shift + 1} 0 0", f"{shift} 1 0", f"{shift} 0 1"]
    lines += ["0 1 2 3", "4 5 6 7"]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MeshError, match="disconnected") as err:
        import_mesh(path)
    assert err.value.operation == "import_mesh"


@pytest.mark.parametrize(
    "text, match",
    [
        ("2 3 1\n0 0\n1 x\n0 1\n0 1 2\n", "tri.mesh:3"),
        ("2 3 1\n0 0\n1 0\n0 1\n", "expected 3 vertex"),
        ("4 1 1\n0 0 0 0\n0\n", "dimension"),
        ("2 3 1\n0 0\n1 0\n0 1\n0 1 7\n", "does not exist"),
    ],
)
def test_import_parse_errors(tmp_path, text, match):
    path = tmp_path / "tri.mesh"
    path.write_text(text)
    with pytest.raises(MeshError, match=match):
        import_mesh(path)


def test_import_missing_file(tmp_path):
    with pytest.raises(MeshError, match="not found"):
        import_mesh(tmp_path / "nope.mesh")


def test_unused_vertex_rejected():
    with pytest.raises(MeshError, match="not used"):
        Mesh.from_arrays([[0, 0], [1, 0], [0, 1], [4, 4]], [[0, 1, 2]])


def test_mesh_arrays_are_read_only(unit_square):
    with pytest.raises(ValueError):
        unit_square.vertices[0, 0] = 3.0


def test_domain_spec_defaults():
    assert DomainSpec(kind="box3d").dims == [1.0, 1.0, 1.0]
    assert DomainSpec(kind="rect2d").convex is True
    assert DomainSpec(kind="square_with_hole2d").convex is False
    assert DomainSpec(kind="square_with_hole2d").dim == 2


@pytest.mark.parametrize(
    "fields",
    [
        {"kind": "square_with_hole2d", "outer": 1, "inner": 2},
        {"kind": "imported"},
        {"kind": "box3d", "dims": [1, 1]},
        {"kind": "rect2d", "n": 0},
    ],
)
def test_domain_spec_validation(fields):
    with pytest.raises(ValidationError):
        DomainSpec(**fields)


def test_domain_spec_imported_levels(tmp_path):
    path = export_mesh(build_rect_mesh((1, 1), 1), tmp_path / "sq.mesh")
    spec = DomainSpec(kind="imported", path=str(path), convex=True)
    assert spec.dim == 2
    assert spec.build(1).n_cells == 2
    assert spec.build(4).n_cells == 32
    with pytest.raises(MeshError, match="power of two"):
        spec.build(3)


def test_mesh_header_shared_by_import_and_domain(tmp_path):
    path = export_mesh(build_box_mesh((1, 1, 1), 1), tmp_path / "cube.mesh")
    assert read_mesh_header(path) == (3, 8, 6)
    assert DomainSpec(kind="imported", path=str(path)).dim == 3


@pytest.mark.parametrize(
    "text, match",
    [("# only a comment\n\n", "empty"), ("2 3\n", "header"), ("7 1 1\n", "dimension")],
)
def test_mesh_header_errors(tmp_path, text, match):
    path = tmp_path / "bad.mesh"
    path.write_text(text)
    with pytest.raises(MeshError, match=match):
        read_mesh_header(path)
    assert DomainSpec(kind="imported", path=str(path)).dim is None


def test_mesh_header_missing_file(tmp_path):
    with pytest.raises(MeshError, match="cannot read"):
        read_mesh_header(tmp_path / "nope.mesh")


def test_locate_cells_finds_parents():
    coarse = build_rect_mesh((1, 1), 2)
    fine = refine_uniform(coarse)
    centroids = fine.vertices[fine.cells].mean(axis=1)
    parents = locate_cells(coarse, centroids)
    # refine_uniform keeps the children of a cell contiguous
    assert np.array_equal(parents, np.repeat(np.arange(coarse.n_cells), 4))


def test_locate_cells_on_the_cube():
    coarse = build_box_mesh((1, 1, 1), 1)
    fine = build_box_mesh((1, 1, 1), 4)
    centroids = fine.vertices[fine.cells].mean(axis=1)
    parents = locate_cells(coarse, centroids)
    corners = coarse.vertices[coarse.cells[parents]]
    assert np.all(corners.min(axis=1) <= centroids + 1e-12)
    assert np.all(corners.max(axis=1) >= centroids - 1e-12)


def test_locate_cells_rejects_outside_points(unit_square):
    with pytest.raises(MeshError, match="outside"):
        locate_cells(unit_square, [[0.5, 0.5], [1.5, 0.5]])
    with pytest.raises(MeshError, match="dimension"):
        locate_cells(unit_square, [[0.5, 0.5, 0.5]])
