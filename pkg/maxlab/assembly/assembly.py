"""Assembly of the discrete bilinear forms.

Scalar forms use P1 hat functions, vector-potential forms use lowest-order
Whitney edge elements. The material is constant per cell, so every element
integral below is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from loguru import logger
from scipy.sparse import coo_matrix, csr_matrix

from maxlab.assembly.material import MaterialField
from maxlab.core.errors import AssemblyError
from maxlab.mesh.mesh import LOCAL_EDGES, Mesh


class BoundaryCondition(StrEnum):
    """Essential (traces removed) or natural (all dofs kept) boundary condition."""

    ESSENTIAL = "essential"
    NATURAL = "natural"

    @classmethod
    def parse(cls, value: "str | BoundaryCondition") -> "BoundaryCondition":
        """Accept the names used for the scalar and the edge problems alike."""
        aliases = {
            "essential": cls.ESSENTIAL,
            "dirichlet": cls.ESSENTIAL,
            "tangential": cls.ESSENTIAL,
            "natural": cls.NATURAL,
            "neumann": cls.NATURAL,
            "normal": cls.NATURAL,
            "none": cls.NATURAL,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise AssemblyError(f"unknown boundary condition '{value}'", "assembly", "parse") from None


class SpaceKind(StrEnum):
    SCALAR_P1 = "ScalarP1"
    EDGE = "Edge"
    VECTOR_P1 = "VectorP1"


@dataclass(frozen=True, eq=False)
class DofMap:
    """Which global dofs of a space are free under a boundary condition.

    Attributes:
        space (SpaceKind): The finite element space.
        bc (BoundaryCondition): The boundary condition applied.
        free (np.ndarray): Strictly increasing indices of the free dofs.
        total (int): Number of dofs before restriction.
    """

    space: SpaceKind
    bc: BoundaryCondition
    free: np.ndarray
    total: int

    @property
    def size(self) -> int:
        return int(self.free.size)

    def extend(self, values: np.ndarray) -> np.ndarray:
        """Embed free-dof values in the full space, zero on constrained dofs."""
        full = np.zeros(self.total)
        full[self.free] = values
        return full

    def restrict(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[self.free]


@dataclass(frozen=True, eq=False)
class Pencil:
    """A stiffness/mass pair on the free dofs of a space."""

    A: csr_matrix
    B: csr_matrix
    dofmap: DofMap
    label: str

    def __post_init__(self):
        n = self.dofmap.size
        if self.A.shape != (n, n) or self.B.shape != (n, n):
            raise AssemblyError(
                f"pencil '{self.label}' has shapes {self.A.shape}, {self.B.shape} for {n} dofs",
                "assembly",
                "Pencil",
            )

    @property
    def size(self) -> int:
        return self.dofmap.size


def barycentric_gradients(mesh: Mesh) -> np.ndarray:
    """Gradients of the barycentric coordinates, shape (n_cells, d + 1, d)."""
    jac = mesh.vertices[mesh.cells[:, 1:]] - mesh.vertices[mesh.cells[:, [0]]]
    grads = np.empty((mesh.n_cells, mesh.dim + 1, mesh.dim))
    grads[:, 1:] = np.swapaxes(np.linalg.inv(jac), 1, 2)
    grads[:, 0] = -grads[:, 1:].sum(axis=1)
    return grads


def _simplex_mass(mesh: Mesh) -> np.ndarray:
    """Integrals of products of barycentric coordinates per cell, shape (n_cells, d + 1, d + 1)."""
    d = mesh.dim
    base = (np.ones((d + 1, d + 1)) + np.eye(d + 1)) / ((d + 1) * (d + 2))
    return mesh.volumes[:, None, None] * base


def _scatter(local: np.ndarray, dofs: np.ndarray, size: int) -> csr_matrix:
    """Sum cell matrices into a global matrix; the result is symmetrized exactly."""
    k = dofs.shape[1]
    rows = np.repeat(dofs[:, :, None], k, axis=2)
    cols = np.repeat(dofs[:, None, :], k, axis=1)
    mat = coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())), shape=(size, size)).tocsr()
    return ((mat + mat.T) * 0.5).tocsr()


def _restrict(mat: csr_matrix, free: np.ndarray) -> csr_matrix:
    return mat[free][:, free].tocsr()


def _material(mesh: Mesh, eps: MaterialField | None, op: str) -> MaterialField:
    if eps is None:
        return MaterialField.identity(mesh.n_cells, mesh.dim)
    if eps.dim != mesh.dim or eps.n_cells != mesh.n_cells:
        raise AssemblyError(
            f"material is {eps.dim}D on {eps.n_cells} cells, mesh is {mesh.dim}D on {mesh.n_cells} cells",
            "assembly",
            op,
        )
    return eps


def vertex_dofmap(mesh: Mesh, bc: BoundaryCondition) -> DofMap:
    free = mesh.interior_vertices if bc is BoundaryCondition.ESSENTIAL else np.arange(mesh.n_vertices)
    return DofMap(SpaceKind.SCALAR_P1, bc, free, mesh.n_vertices)


def edge_dofmap(mesh: Mesh, bc: BoundaryCondition) -> DofMap:
    free = mesh.interior_edges if bc is BoundaryCondition.ESSENTIAL else np.arange(mesh.n_edges)
    return DofMap(SpaceKind.EDGE, bc, free, mesh.n_edges)


def assemble_p1(
    mesh: Mesh, eps: MaterialField | None = None, bc: str | BoundaryCondition = "essential"
) -> Pencil:
    """Weighted P1 Laplacian: A = (eps grad u, grad v), B = (u, v).

    Args:
        mesh (Mesh): The mesh.
        eps (MaterialField | None): Cellwise material, identity when omitted.
        bc (str | BoundaryCondition): ``essential`` keeps interior vertices only.

    Returns:
        Pencil: Stiffness and mass on the free vertices.
    """
    bc = BoundaryCondition.parse(bc)
    eps = _material(mesh, eps, "assemble_p1")
    grads = barycentric_gradients(mesh)
    stiff = np.einsum("cai,cij,cbj->cab", grads, eps.matrices, grads) * mesh.volumes[:, None, None]
    dofmap = vertex_dofmap(mesh, bc)
    A = _scatter(stiff, mesh.cells, mesh.n_vertices)
    B = _scatter(_simplex_mass(mesh), mesh.cells, mesh.n_vertices)
    logger.trace(f"Assembled P1 pencil ({bc}) with {dofmap.size} dofs")
    return Pencil(_restrict(A, dofmap.free), _restrict(B, dofmap.free), dofmap, f"p1/{bc}")


def _edge_locals(mesh: Mesh, eps: MaterialField) -> tuple[np.ndarray, np.ndarray]:
    """Cell curl-curl and weighted mass matrices of the Whitney basis."""
    grads = barycentric_gradients(mesh)
    vol = mesh.volumes
    i, j = LOCAL_EDGES[mesh.dim].T
    if mesh.dim == 3:
        rot = 2.0 * np.cross(grads[:, i], grads[:, j])
        stiff = np.einsum("cai,cbi->cab", rot, rot) * vol[:, None, None]
    else:
        rot = 2.0 * (grads[:, i, 0] * grads[:, j, 1] - grads[:, i, 1] * grads[:, j, 0])
        stiff = rot[:, :, None] * rot[:, None, :] * vol[:, None, None]

    # w_ij = l_i grad l_j - l_j grad l_i, so (eps w_a, w_b) expands into four terms
    # of (l_p, l_q) times (eps grad l_r, grad l_s).
    lam = _simplex_mass(mesh)
    weighted = np.einsum("cpi,cij,cqj->cpq", grads, eps.matrices, grads)

    def pick(arr, rows, cols):
        return arr[:, rows[:, None], cols[None, :]]

    mass = (
        pick(lam, i, i) * pick(weighted, j, j)
        - pick(lam, i, j) * pick(weighted, j, i)
        - pick(lam, j, i) * pick(weighted, i, j)
        + pick(lam, j, j) * pick(weighted, i, i)
    )
    sign = mesh.cell_edge_sign.astype(float)
    flip = sign[:, :, None] * sign[:, None, :]
    return stiff * flip, mass * flip


def assemble_nedelec(
    mesh: Mesh, eps: MaterialField | None = None, bc: str | BoundaryCondition = "essential"
) -> Pencil:
    """Edge-element Maxwell pencil: A = (rot u, rot v), B = (eps u, v).

    In 2D the rotation is the scalar rot. ``essential`` (tangential) removes the
    boundary edges, ``natural`` keeps every edge.
    """
    bc = BoundaryCondition.parse(bc)
    eps = _material(mesh, eps, "assemble_nedelec")
    stiff, mass = _edge_locals(mesh, eps)
    dofmap = edge_dofmap(mesh, bc)
    A = _scatter(stiff, mesh.cell_to_edge, mesh.n_edges)
    B = _scatter(mass, mesh.cell_to_edge, mesh.n_edges)
    logger.trace(f"Assembled edge pencil ({bc}) with {dofmap.size} dofs")
    return Pencil(_restrict(A, dofmap.free), _restrict(B, dofmap.free), dofmap, f"edge/{bc}")


def discrete_gradient(mesh: Mesh, bc: str | BoundaryCondition = "natural") -> csr_matrix:
    """Edge-by-vertex incidence: +1 at the head (high index), -1 at the tail.

    Rows and columns are restricted to the free edges and vertices of ``bc``.
    """
    bc = BoundaryCondition.parse(bc)
    ne = mesh.n_edges
    rows = np.repeat(np.arange(ne), 2)
    data = np.tile([-1.0, 1.0], ne)
    grad = coo_matrix((data, (rows, mesh.edges.ravel())), shape=(ne, mesh.n_vertices)).tocsr()
    edges, vertices = edge_dofmap(mesh, bc), vertex_dofmap(mesh, bc)
    return grad[edges.free][:, vertices.free].tocsr()


def gradient_rank(mesh: Mesh, bc: str | BoundaryCondition) -> int:
    """Rank of the restricted discrete gradient of a connected mesh."""
    if BoundaryCondition.parse(bc) is BoundaryCondition.ESSENTIAL:
        return int(mesh.interior_vertices.size)
    return mesh.n_vertices - 1


def assemble_vector_p1_forms(
    mesh: Mesh, bc: str | BoundaryCondition = "essential"
) -> tuple[Pencil, Pencil]:
    """The two stiffness forms of vector P1 fields with zero boundary values.

    Returns ``(grad, rotdiv)`` pencils whose A are (grad E : grad F) and
    (rot E, rot F) + (div E, div F), sharing the componentwise P1 mass.
    Dofs are ordered component-major: component c of vertex v is c * n_vertices + v.
    """
    bc = BoundaryCondition.parse(bc)
    if bc is not BoundaryCondition.ESSENTIAL:
        raise AssemblyError(
            "the vector P1 identity needs zero boundary values", "assembly", "assemble_vector_p1_forms"
        )
    d, nv = mesh.dim, mesh.n_vertices
    grads = barycentric_gradients(mesh)
    vol = mesh.volumes[:, None, None]
    eye = np.eye(d)

    scalar = np.einsum("cai,cbi->cab", grads, grads) * vol
    grad_local = np.einsum("xy,cab->cxayb", eye, scalar).reshape(mesh.n_cells, d * (d + 1), d * (d + 1))
    mass_local = np.einsum("xy,cab->cxayb", eye, _simplex_mass(mesh)).reshape(grad_local.shape)

    div = np.swapaxes(grads, 1, 2).reshape(mesh.n_cells, -1)
    if d == 3:
        rot = np.concatenate([np.cross(grads, eye[c]) for c in range(d)], axis=1)
        rot_part = np.einsum("cai,cbi->cab", rot, rot)
    else:
        rot = np.concatenate([-grads[:, :, 1], grads[:, :, 0]], axis=1)
        rot_part = rot[:, :, None] * rot[:, None, :]
    rotdiv_local = (rot_part + div[:, :, None] * div[:, None, :]) * vol

    dofs = np.concatenate([c * nv + mesh.cells for c in range(d)], axis=1)
    free = np.concatenate([c * nv + mesh.interior_vertices for c in range(d)])
    dofmap = DofMap(SpaceKind.VECTOR_P1, bc, free, d * nv)
    mass = _restrict(_scatter(mass_local, dofs, d * nv), free)
    grad_pencil = Pencil(_restrict(_scatter(grad_local, dofs, d * nv), free), mass, dofmap, "vp1/grad")
    rotdiv_pencil = Pencil(
        _restrict(_scatter(rotdiv_local, dofs, d * nv), free), mass, dofmap, "vp1/rotdiv"
    )
    return grad_pencil, rotdiv_pencil


def _cell_coefficients(mesh: Mesh, dofs: np.ndarray) -> np.ndarray:
    dofs = np.asarray(dofs, dtype=float)
    if dofs.shape != (mesh.n_edges,):
        raise AssemblyError(
            f"expected {mesh.n_edges} edge values, got shape {dofs.shape}", "assembly", "edge_field"
        )
    return dofs[mesh.cell_to_edge] * mesh.cell_edge_sign


def edge_field_on_cells(mesh: Mesh, dofs: np.ndarray, at: str = "centroid") -> np.ndarray:
    """Evaluate a Whitney field given by all edge dofs.

    Args:
        mesh (Mesh): The mesh.
        dofs (np.ndarray): One value per edge (unrestricted).
        at (str): ``centroid`` gives shape (n_cells, d); ``vertices`` gives the
            cell-local vertex values, shape (n_cells, d + 1, d).
    """
    coeff = _cell_coefficients(mesh, dofs)
    grads = barycentric_gradients(mesh)
    i, j = LOCAL_EDGES[mesh.dim].T
    if at == "centroid":
        return np.einsum("ca,cai->ci", coeff, grads[:, j] - grads[:, i]) / (mesh.dim + 1)
    if at != "vertices":
        raise AssemblyError(f"unknown evaluation point '{at}'", "assembly", "edge_field_on_cells")
    values = np.zeros((mesh.n_cells, mesh.dim + 1, mesh.dim))
    for a, (p, q) in enumerate(zip(i, j)):
        values[:, p] += coeff[:, a, None] * grads[:, q]
        values[:, q] -= coeff[:, a, None] * grads[:, p]
    return values


def cell_rot(mesh: Mesh, dofs: np.ndarray) -> np.ndarray:
    """Cellwise rot of a Whitney field: scalar per cell in 2D, vector in 3D."""
    coeff = _cell_coefficients(mesh, dofs)
    grads = barycentric_gradients(mesh)
    i, j = LOCAL_EDGES[mesh.dim].T
    if mesh.dim == 3:
        return 2.0 * np.einsum("ca,cai->ci", coeff, np.cross(grads[:, i], grads[:, j]))
    rot = grads[:, i, 0] * grads[:, j, 1] - grads[:, i, 1] * grads[:, j, 0]
    return 2.0 * np.einsum("ca,ca->c", coeff, rot)


def cell_divergence(mesh: Mesh, vertex_values: np.ndarray) -> np.ndarray:
    """Divergence of the affine field with the given cell-local vertex values."""
    return np.einsum("cai,cai->c", barycentric_gradients(mesh), vertex_values)
