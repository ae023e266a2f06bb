"""Simplicial meshes of the test domains.

Meshes are immutable numpy containers. Construction goes through
``Mesh.from_arrays`` which fixes the cell orientation, numbers the edges
lexicographically (low vertex index first) and classifies the boundary.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Annotated, Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, model_validator
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from maxlab.core.errors import MeshError

# Local numbering of the edges and facets of a simplex. Facet i is opposite vertex i.
LOCAL_EDGES = {
    2: np.array([(0, 1), (0, 2), (1, 2)]),
    3: np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
}
LOCAL_FACETS = {
    2: np.array([(1, 2), (0, 2), (0, 1)]),
    3: np.array([(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)]),
}


def _freeze(*arrays: np.ndarray) -> None:
    for arr in arrays:
        arr.setflags(write=False)


def _rows_to_keys(rows: np.ndarray, base: int) -> np.ndarray:
    """Encode sorted vertex pairs as integers; ordering matches lexicographic row order."""
    return rows[:, 0].astype(np.int64) * base + rows[:, 1].astype(np.int64)


@dataclass(frozen=True, eq=False)
class Mesh:
    """A conforming simplicial mesh (triangles in 2D, tetrahedra in 3D).

    Attributes:
        vertices (np.ndarray): Vertex coordinates, shape (n_vertices, dim).
        cells (np.ndarray): Vertex indices per cell, positively oriented, shape (n_cells, dim + 1).
        edges (np.ndarray): Unique edges as (low, high) vertex pairs in lexicographic order.
        cell_to_edge (np.ndarray): Global edge index of every local edge of every cell.
        cell_edge_sign (np.ndarray): +1 where the cell traverses the edge low to high, else -1.
        facets (np.ndarray): Unique facets as sorted vertex tuples.
        boundary_facets (np.ndarray): Indices of facets owned by exactly one cell.
        boundary_vertices (np.ndarray): Sorted indices of vertices on the boundary.
        boundary_edges (np.ndarray): Sorted indices of edges on the boundary.
        provenance (str): Where the mesh came from (generator name or file).
    """

    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    cell_to_edge: np.ndarray
    cell_edge_sign: np.ndarray
    facets: np.ndarray
    boundary_facets: np.ndarray
    boundary_vertices: np.ndarray
    boundary_edges: np.ndarray
    provenance: str

    @classmethod
    def from_arrays(
        cls, vertices: np.ndarray, cells: np.ndarray, provenance: str = "generated"
    ) -> "Mesh":
        """Validate raw arrays and build the full mesh combinatorics.

        Args:
            vertices (np.ndarray): Coordinates, shape (n_vertices, dim) with dim 2 or 3.
            cells (np.ndarray): Vertex indices, shape (n_cells, dim + 1).
            provenance (str): Tag stored on the mesh.

        Returns:
            Mesh: The validated mesh.

        Raises:
            MeshError: On malformed arrays, unused vertices, degenerate cells,
                non-manifold facets or a disconnected cell graph.
        """
        op = "from_arrays"
        vertices = np.array(vertices, dtype=float)
        cells = np.array(cells, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
            raise MeshError("vertices must be an (n, 2) or (n, 3) array", "mesh", op)
        dim = vertices.shape[1]
        nv = vertices.shape[0]
        if cells.ndim != 2 or cells.shape[1] != dim + 1 or cells.shape[0] == 0:
            raise MeshError(f"cells must be a non-empty (n, {dim + 1}) array", "mesh", op)
        if cells.min() < 0 or cells.max() >= nv:
            raise MeshError("cell references a vertex that does not exist", "mesh", op)
        if np.any(np.diff(np.sort(cells, axis=1), axis=1) == 0):
            raise MeshError("cell repeats a vertex", "mesh", op)
        unused = np.setdiff1d(np.arange(nv), cells)
        if unused.size:
            raise MeshError(f"vertex {int(unused[0])} is not used by any cell", "mesh", op)

        # Orientation: swap the last two vertices of negatively oriented cells.
        jac = vertices[cells[:, 1:]] - vertices[cells[:, [0]]]
        det = np.linalg.det(jac)
        span = np.linalg.norm(jac, axis=2).max(axis=1)
        degenerate = np.abs(det) <= 1e-12 * span**dim
        if np.any(degenerate):
            bad = int(np.flatnonzero(degenerate)[0])
            raise MeshError(f"cell {bad} is degenerate (zero volume)", "mesh", op)
        flipped = det < 0
        if np.any(flipped):
            logger.trace(f"Reorienting {int(flipped.sum())} cells")
            cells[flipped, -2:] = cells[flipped, -1:-3:-1]

        # Edges, numbered lexicographically.
        local = cells[:, LOCAL_EDGES[dim]]
        edges, inverse = np.unique(np.sort(local, axis=2).reshape(-1, 2), axis=0, return_inverse=True)
        cell_to_edge = np.asarray(inverse).reshape(cells.shape[0], -1)
        cell_edge_sign = np.where(local[:, :, 0] < local[:, :, 1], 1, -1).astype(np.int8)

        # Facets and how many cells own them.
        local_facets = np.sort(cells[:, LOCAL_FACETS[dim]], axis=2).reshape(-1, dim)
        facets, facet_inverse, owners = np.unique(
            local_facets, axis=0, return_inverse=True, return_counts=True
        )
        facet_inverse = np.asarray(facet_inverse).reshape(-1)
        if owners.max() > 2:
            raise MeshError("facet shared by more than two cells", "mesh", op)
        boundary_facets = np.flatnonzero(owners == 1)

        # Cell adjacency through shared facets.
        incidence = coo_matrix(
            (
                np.ones(facet_inverse.size),
                (np.repeat(np.arange(cells.shape[0]), dim + 1), facet_inverse),
            ),
            shape=(cells.shape[0], facets.shape[0]),
        ).tocsr()
        n_parts, _ = connected_components(incidence @ incidence.T, directed=False)
        if n_parts > 1:
            raise MeshError(f"mesh is disconnected ({n_parts} components)", "mesh", op)

        boundary_vertices = np.unique(facets[boundary_facets])
        bf = facets[boundary_facets]
        if dim == 2:
            bpairs = bf
        else:
            bpairs = np.unique(bf[:, LOCAL_EDGES[2]].reshape(-1, 2), axis=0)
        edge_keys = _rows_to_keys(edges, nv)
        boundary_edges = np.sort(np.searchsorted(edge_keys, _rows_to_keys(bpairs, nv)))

        _freeze(vertices, cells, edges, cell_to_edge, cell_edge_sign, facets)
        _freeze(boundary_facets, boundary_vertices, boundary_edges)
        mesh = cls(
            vertices=vertices,
            cells=cells,
            edges=edges,
            cell_to_edge=cell_to_edge,
            cell_edge_sign=cell_edge_sign,
            facets=facets,
            boundary_facets=boundary_facets,
            boundary_vertices=boundary_vertices,
            boundary_edges=boundary_edges,
            provenance=provenance,
        )
        logger.debug(
            f"Built {dim}D mesh '{provenance}': {nv} vertices, {edges.shape[0]} edges, "
            f"{cells.shape[0]} cells"
        )
        return mesh

    @property
    def dim(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def n_cells(self) -> int:
        return int(self.cells.shape[0])

    @cached_property
    def volumes(self) -> np.ndarray:
        """Cell volumes (areas in 2D)."""
        jac = self.vertices[self.cells[:, 1:]] - self.vertices[self.cells[:, [0]]]
        vol = np.linalg.det(jac) / math.factorial(self.dim)
        _freeze(vol)
        return vol

    @cached_property
    def h(self) -> float:
        """Mesh size: the longest edge."""
        vec = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return float(np.linalg.norm(vec, axis=1).max())

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        inner = np.setdiff1d(np.arange(self.n_vertices), self.boundary_vertices)
        _freeze(inner)
        return inner

    @cached_property
    def interior_edges(self) -> np.ndarray:
        inner = np.setdiff1d(np.arange(self.n_edges), self.boundary_edges)
        _freeze(inner)
        return inner

    def euler_characteristic(self) -> int:
        if self.dim == 2:
            return self.n_vertices - self.n_edges + self.n_cells
        return self.n_vertices - self.n_edges + int(self.facets.shape[0]) - self.n_cells

    def boundary_components(self) -> int:
        """Number of connected components of the boundary."""
        bf = self.facets[self.boundary_facets]
        pairs = bf if self.dim == 2 else bf[:, LOCAL_EDGES[2]].reshape(-1, 2)
        graph = coo_matrix(
            (np.ones(pairs.shape[0]), (pairs[:, 0], pairs[:, 1])),
            shape=(self.n_vertices, self.n_vertices),
        )
        _, labels = connected_components(graph, directed=False)
        return int(np.unique(labels[self.boundary_vertices]).size)

    def betti_numbers(self) -> tuple[int, int, int]:
        """Betti numbers (b0, b1, b2) of the meshed domain."""
        chi = self.euler_characteristic()
        if self.dim == 2:
            return 1, 1 - chi, 0
        b2 = self.boundary_components() - 1
        return 1, 1 + b2 - chi, b2

    def harmonic_dims(self) -> tuple[int, int]:
        """Expected dimensions (d_D, d_N) of the Dirichlet and Neumann harmonic fields."""
        _, b1, b2 = self.betti_numbers()
        if self.dim == 2:
            return b1, b1
        return b2, b1

    def diameter(self) -> float:
        return diameter(self)


def diameter(mesh: Mesh) -> float:
    """Largest distance between two vertices of the mesh.

    For polytopal domains the diameter is attained at vertices, so this is exact
    for every domain the lab can mesh. Only convex hull vertices are compared.
    """
    points = mesh.vertices
    try:
        points = points[ConvexHull(points).vertices]
    except Exception as e:  # qhull refuses flat point sets
        logger.debug(f"Convex hull failed ({e}); comparing all vertices")
    return float(pdist(points).max())


def _check_dims(dims, count: int, op: str) -> tuple[float, ...]:
    dims = tuple(float(x) for x in dims)
    if len(dims) != count:
        raise MeshError(f"expected {count} lengths, got {len(dims)}", "mesh", op)
    if any(not x > 0 for x in dims):
        raise MeshError(f"lengths must be positive, got {dims}", "mesh", op)
    return dims


def _check_n(n: int, op: str) -> int:
    if int(n) != n or n < 1:
        raise MeshError(f"subdivision count must be >= 1, got {n}", "mesh", op)
    return int(n)


def _grid(dims: tuple[float, ...], n: int) -> np.ndarray:
    axes = [np.linspace(0.0, length, n + 1) for length in dims]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(dims))


def build_box_mesh(dims, n: int) -> Mesh:
    """Kuhn triangulation of the box [0, a] x [0, b] x [0, c].

    Every one of the n^3 sub-boxes is split into six tetrahedra sharing the
    diagonal from its lowest to its highest corner, one per axis permutation.
    """
    dims = _check_dims(dims, 3, "build_box_mesh")
    n = _check_n(n, "build_box_mesh")
    m = n + 1
    strides = np.array([m * m, m, 1])
    i, j, k = np.meshgrid(*(np.arange(n),) * 3, indexing="ij")
    base = (i * m * m + j * m + k).reshape(-1)
    tets = []
    for perm in itertools.permutations(range(3)):
        steps = np.cumsum(strides[list(perm)])
        tets.append(np.stack([base, base + steps[0], base + steps[1], base + steps[2]], axis=1))
    cells = np.stack(tets, axis=1).reshape(-1, 4)
    return Mesh.from_arrays(_grid(dims, n), cells, provenance=f"box3d{dims}/n={n}")


def _rect_cells(n: int, keep=None) -> np.ndarray:
    m = n + 1
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.reshape(-1), j.reshape(-1)
    if keep is not None:
        mask = keep(i, j)
        i, j = i[mask], j[mask]
    v00 = i * m + j
    v10, v01, v11 = v00 + m, v00 + 1, v00 + m + 1
    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    return np.stack([lower, upper], axis=1).reshape(-1, 3)


def build_rect_mesh(dims, n: int) -> Mesh:
    """Rectangle [0, a] x [0, b] with every grid square cut along its rising diagonal."""
    dims = _check_dims(dims, 2, "build_rect_mesh")
    n = _check_n(n, "build_rect_mesh")
    return Mesh.from_arrays(_grid(dims, n), _rect_cells(n), provenance=f"rect2d{dims}/n={n}")


def build_square_with_hole(outer: float, inner: float, n: int) -> Mesh:
    """Square [0, outer]^2 with a centred square hole of side ``inner``.

    The hole must be a union of grid squares of the n x n grid.
    """
    op = "build_square_with_hole"
    outer, inner = _check_dims((outer, inner), 2, op)
    n = _check_n(n, op)
    if not inner < outer:
        raise MeshError(f"hole ({inner}) must be smaller than the square ({outer})", "mesh", op)
    h = outer / n
    offset, width = (outer - inner) / 2 / h, inner / h
    if abs(offset - round(offset)) > 1e-9 or abs(width - round(width)) > 1e-9 or round(width) < 1:
        raise MeshError(
            f"hole of side {inner} is not aligned with the {n}x{n} grid of side {outer}", "mesh", op
        )
    lo, hi = round(offset), round(offset) + round(width)
    cells = _rect_cells(n, keep=lambda i, j: ~((lo <= i) & (i < hi) & (lo <= j) & (j < hi)))
    vertices = _grid((outer, outer), n)
    used = np.unique(cells)
    renumber = np.full(vertices.shape[0], -1, dtype=np.int64)
    renumber[used] = np.arange(used.size)
    return Mesh.from_arrays(
        vertices[used], renumber[cells], provenance=f"square_with_hole2d({outer},{inner})/n={n}"
    )


# Octahedron diagonals (pairs of local edge indices) and the equator cycle around each.
_OCTA_SPLITS = (
    ((0, 5), (1, 2, 4, 3)),
    ((1, 4), (0, 2, 5, 3)),
    ((2, 3), (0, 1, 5, 4)),
)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement: bisect every edge.

    Triangles split into four, tetrahedra into eight: four corner tetrahedra plus
    four around the shortest of the three diagonals of the inner octahedron
    (the first one in the order m01-m23, m02-m13, m03-m12 on ties).
    """
    nv = mesh.n_vertices
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mids])
    c = mesh.cells
    m = nv + mesh.cell_to_edge
    if mesh.dim == 2:
        m01, m02, m12 = m.T
        children = [
            (c[:, 0], m01, m02),
            (m01, c[:, 1], m12),
            (m02, m12, c[:, 2]),
            (m01, m12, m02),
        ]
    else:
        m01, m02, m03, m12, m13, m23 = m.T
        children = [
            (c[:, 0], m01, m02, m03),
            (m01, c[:, 1], m12, m13),
            (m02, m12, c[:, 2], m23),
            (m03, m13, m23, c[:, 3]),
        ]
        lengths = np.stack(
            [
                np.linalg.norm(vertices[m[:, a]] - vertices[m[:, b]], axis=1)
                for (a, b), _ in _OCTA_SPLITS
            ],
            axis=1,
        )
        choice = np.argmin(lengths, axis=1)
        for slot in range(4):
            tet = np.zeros((mesh.n_cells, 4), dtype=np.int64)
            for which, ((a, b), ring) in enumerate(_OCTA_SPLITS):
                sel = choice == which
                r0, r1 = ring[slot], ring[(slot + 1) % 4]
                tet[sel] = np.stack([m[sel, a], m[sel, b], m[sel, r0], m[sel, r1]], axis=1)
            children.append(tuple(tet.T))
    cells = np.stack([np.stack(child, axis=1) for child in children], axis=1)
    cells = cells.reshape(-1, mesh.dim + 1)
    logger.trace(f"Refining '{mesh.provenance}' into {cells.shape[0]} cells")
    return Mesh.from_arrays(vertices, cells, provenance=f"{mesh.provenance}+refined")


def locate_cells(mesh: Mesh, points: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Index of the cell of ``mesh`` containing each point.

    Points on a shared facet go to the cell with the largest smallest
    barycentric coordinate. Points outside the mesh raise ``MeshError``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != mesh.dim:
        raise MeshError(
            f"points have dimension {points.shape[1]}, mesh has {mesh.dim}", "mesh", "locate_cells"
        )
    corners = mesh.vertices[mesh.cells]
    origin = corners[:, 0, :]
    inverse = np.linalg.inv(np.transpose(corners[:, 1:, :] - origin[:, None, :], (0, 2, 1)))
    found = np.empty(points.shape[0], dtype=np.int64)
    for start in range(0, points.shape[0], chunk):
        block = points[start : start + chunk]
        local = np.einsum("cij,pcj->pci", inverse, block[:, None, :] - origin[None, :, :])
        bary = np.concatenate([1.0 - local.sum(axis=2, keepdims=True), local], axis=2)
        worst = bary.min(axis=2)
        best = np.argmax(worst, axis=1)
        outside = worst[np.arange(block.shape[0]), best] < -1e-9
        if outside.any():
            point = block[np.flatnonzero(outside)[0]]
            raise MeshError(f"point {point.tolist()} lies outside '{mesh.provenance}'", "mesh", "locate_cells")
        found[start : start + block.shape[0]] = best
    return found


def _content_lines(path: Path):
    """Numbered non-empty lines of an ASCII mesh file, comments removed."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            content = line.split("#", 1)[0].split()
            if content:
                yield lineno, content


def _parse_header(fields: list[str]) -> tuple[int, int, int]:
    if len(fields) != 3:
        raise ValueError("header must be 'dim n_vertices n_cells'")
    dim, nv, nc = (int(x) for x in fields)
    if dim not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dim}")
    return dim, nv, nc


def read_mesh_header(path: str | Path) -> tuple[int, int, int]:
    """``(dim, n_vertices, n_cells)`` from the header of an ASCII mesh file."""
    path = Path(path)
    try:
        lineno, fields = next(_content_lines(path), (None, None))
        if fields is None:
            raise MeshError(f"'{path}' is empty", "mesh", "read_mesh_header")
        return _parse_header(fields)
    except OSError as e:
        raise MeshError(f"cannot read '{path}': {e}", "mesh", "read_mesh_header") from e
    except ValueError as e:
        raise MeshError(f"{path}:{lineno}: {e}", "mesh", "read_mesh_header") from e


def import_mesh(path: str | Path) -> Mesh:
    """Read a mesh from the ASCII format written by ``export_mesh``.

    The format is a header ``dim n_vertices n_cells`` followed by one line of
    coordinates per vertex and one line of 0-based vertex indices per cell.
    Everything after ``#`` on a line is ignored.
    """
    op = "import_mesh"
    path = Path(path)
    if not path.is_file():
        raise MeshError(f"mesh file '{path}' not found", "mesh", op)
    rows = list(_content_lines(path))
    if not rows:
        raise MeshError(f"'{path}' is empty", "mesh", op)
    try:
        lineno, header = rows[0]
        dim, nv, nc = _parse_header(header)
        if len(rows) != 1 + nv + nc:
            raise ValueError(f"expected {nv} vertex and {nc} cell lines, found {len(rows) - 1}")
        vertices = np.empty((nv, dim))
        cells = np.empty((nc, dim + 1), dtype=np.int64)
        for idx, (lineno, fields) in enumerate(rows[1 : 1 + nv]):
            if len(fields) != dim:
                raise ValueError(f"vertex line needs {dim} coordinates")
            vertices[idx] = [float(x) for x in fields]
        for idx, (lineno, fields) in enumerate(rows[1 + nv :]):
            if len(fields) != dim + 1:
                raise ValueError(f"cell line needs {dim + 1} vertex indices")
            cells[idx] = [int(x) for x in fields]
    except ValueError as e:
        logger.error(f"Cannot parse '{path}' at line {lineno}: {e}")
        raise MeshError(f"{path}:{lineno}: {e}", "mesh", op) from e
    try:
        return Mesh.from_arrays(vertices, cells, provenance=f"imported:{path.name}")
    except MeshError as e:
        raise MeshError(e.message, "mesh", op) from e


def export_mesh(mesh: Mesh, path: str | Path) -> Path:
    """Write ``mesh`` in the ASCII format read by ``import_mesh``."""
    path = Path(path)
    lines = [f"# {mesh.provenance}", f"{mesh.dim} {mesh.n_vertices} {mesh.n_cells}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in mesh.vertices]
    lines += [" ".join(str(int(v)) for v in row) for row in mesh.cells]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Wrote mesh '{mesh.provenance}' to '{path}'")
    return path


class DomainSpec(BaseModel):
    """Description of a test domain, buildable at any subdivision level."""

    kind: Annotated[
        Literal["box3d", "rect2d", "square_with_hole2d", "imported"],
        Field(description="Which domain of the catalogue to mesh."),
    ]
    dims: Annotated[
        list[float] | None,
        Field(default=None, description="Side lengths: 3 for box3d, 2 for rect2d (unit sides if omitted)."),
    ]
    outer: Annotated[
        float, Field(default=3.0, gt=0, description="Outer side of square_with_hole2d.")
    ]
    inner: Annotated[
        float, Field(default=1.0, gt=0, description="Hole side of square_with_hole2d.")
    ]
    n: Annotated[int, Field(default=1, ge=1, description="Default subdivisions per axis.")]
    path: Annotated[
        str | None, Field(default=None, description="ASCII mesh file for imported domains.")
    ]
    convex: Annotated[
        bool | None,
        Field(default=None, description="Whether the domain is convex; imported meshes default to False."),
    ]

    @model_validator(mode="after")
    def _check_kind(self) -> "DomainSpec":
        if self.kind in ("box3d", "rect2d"):
            count = 3 if self.kind == "box3d" else 2
            if self.dims is None:
                self.dims = [1.0] * count
            if len(self.dims) != count or any(not x > 0 for x in self.dims):
                raise ValueError(f"{self.kind} needs {count} positive lengths, got {self.dims}")
        if self.kind == "square_with_hole2d" and not self.inner < self.outer:
            raise ValueError("square_with_hole2d requires inner < outer")
        if self.kind == "imported" and not self.path:
            raise ValueError("imported domains need a mesh path")
        if self.convex is None:
            self.convex = self.kind in ("box3d", "rect2d")
        return self

    @property
    def dim(self) -> int | None:
        """Spatial dimension; for imported meshes read from the file header (None if unreadable)."""
        if self.kind == "box3d":
            return 3
        if self.kind != "imported":
            return 2
        try:
            return read_mesh_header(self.path)[0]
        except MeshError:
            return None

    @property
    def label(self) -> str:
        if self.kind == "square_with_hole2d":
            return f"square_with_hole2d(outer={self.outer:g}, inner={self.inner:g})"
        if self.kind == "imported":
            return f"imported({Path(self.path).name})"
        return f"{self.kind}({', '.join(f'{x:g}' for x in self.dims)})"

    @property
    def volume(self) -> float | None:
        """Analytic measure of the domain, when known."""
        if self.kind in ("box3d", "rect2d"):
            return float(np.prod(self.dims))
        if self.kind == "square_with_hole2d":
            return self.outer**2 - self.inner**2
        return None

    def build(self, n: int | None = None) -> Mesh:
        """Mesh the domain with ``n`` subdivisions per axis.

        Imported meshes are refined ``log2(n)`` times, so ``n`` must be a power of two.
        """
        n = self.n if n is None else n
        if self.kind == "box3d":
            return build_box_mesh(self.dims, n)
        if self.kind == "rect2d":
            return build_rect_mesh(self.dims, n)
        if self.kind == "square_with_hole2d":
            return build_square_with_hole(self.outer, self.inner, n)
        times = int(round(math.log2(n))) if n >= 1 else -1
        if times < 0 or 2**times != n:
            raise MeshError(f"imported level must be a power of two, got {n}", "mesh", "build")
        mesh = import_mesh(self.path)
        for _ in range(times):
            mesh = refine_uniform(mesh)
        return mesh
