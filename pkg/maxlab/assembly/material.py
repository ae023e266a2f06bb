"""Cellwise-constant material tensors (the permittivity-like weight eps)."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from maxlab.core.errors import AssemblyError, MaterialError, MeshError
from maxlab.mesh.mesh import Mesh, locate_cells

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _upper_to_full(entries: np.ndarray, dim: int) -> np.ndarray:
    """Expand row-major upper-triangle entries (..., d(d+1)/2) to symmetric matrices (..., d, d)."""
    rows, cols = np.triu_indices(dim)
    full = np.zeros(entries.shape[:-1] + (dim, dim))
    full[..., rows, cols] = entries
    full[..., cols, rows] = entries
    return full


@dataclass(frozen=True, eq=False)
class MaterialField:
    """Symmetric positive definite matrix per cell.

    Attributes:
        matrices (np.ndarray): Shape (n_cells, d, d).
    """

    matrices: np.ndarray

    def __post_init__(self):
        mats = np.array(self.matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or mats.shape[1] not in (2, 3):
            raise MaterialError(
                f"expected (n_cells, d, d) matrices with d in (2, 3), got {mats.shape}",
                "assembly",
                "MaterialField",
            )
        scale = max(1.0, float(np.abs(mats).max()))
        asym = np.abs(mats - np.swapaxes(mats, 1, 2)).max(axis=(1, 2))
        if np.any(asym > 1e-14 * scale):
            cell = int(np.argmax(asym))
            raise MaterialError(f"matrix of cell {cell} is not symmetric", "assembly", "MaterialField")
        smallest = np.linalg.eigvalsh(mats)[:, 0]
        if np.any(smallest <= 0):
            cell = int(np.argmin(smallest))
            raise MaterialError(
                f"matrix of cell {cell} is not positive definite (eigenvalue {smallest[cell]:.3g})",
                "assembly",
                "MaterialField",
            )
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)

    @property
    def dim(self) -> int:
        return int(self.matrices.shape[1])

    @property
    def n_cells(self) -> int:
        return int(self.matrices.shape[0])

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrices, np.broadcast_to(np.eye(self.dim), self.matrices.shape)))

    @classmethod
    def constant(cls, n_cells: int, matrix) -> "MaterialField":
        matrix = np.asarray(matrix, dtype=float)
        return cls(np.repeat(matrix[None, :, :], n_cells, axis=0))

    @classmethod
    def identity(cls, n_cells: int, dim: int) -> "MaterialField":
        return cls.constant(n_cells, np.eye(dim))

    @classmethod
    def scalar(cls, n_cells: int, dim: int, value: float) -> "MaterialField":
        return cls.constant(n_cells, value * np.eye(dim))

    @classmethod
    def diagonal(cls, n_cells: int, entries) -> "MaterialField":
        return cls.constant(n_cells, np.diag(np.asarray(entries, dtype=float)))

    @classmethod
    def table(cls, entries, dim: int) -> "MaterialField":
        """Per-cell upper-triangle entries, shape (n_cells, d(d+1)/2)."""
        entries = np.asarray(entries, dtype=float)
        width = dim * (dim + 1) // 2
        if entries.ndim != 2 or entries.shape[1] != width:
            raise MaterialError(
                f"per-cell table needs {width} entries per row, got shape {entries.shape}",
                "assembly",
                "MaterialField.table",
            )
        return cls(_upper_to_full(entries, dim))

    @classmethod
    def from_function(cls, mesh: Mesh, func: Callable[[np.ndarray], object]) -> "MaterialField":
        """Sample a closed-form material at the cell centroids.

        ``func`` receives one centroid and returns a scalar or a (d, d) matrix.
        """
        centroids = mesh.vertices[mesh.cells].mean(axis=1)
        mats = []
        for point in centroids:
            value = np.asarray(func(point), dtype=float)
            mats.append(value * np.eye(mesh.dim) if value.ndim == 0 else value)
        return cls(np.stack(mats))

    def scaled(self, factor: float) -> "MaterialField":
        return MaterialField(self.matrices * factor)


class EpsBounds(BaseModel):
    """Uniform bounds with eps_lower^-2 <= x^T eps x <= eps_upper^2 for unit x."""

    model_config = ConfigDict(frozen=True)

    eps_lower: float
    eps_upper: float
    eps_hat: float


def eps_bounds(field: MaterialField) -> EpsBounds:
    """Compute eps_lower, eps_upper and eps_hat = max of both."""
    eigs = np.linalg.eigvalsh(field.matrices)
    lower = float(eigs[:, 0].min()) ** -0.5
    upper = float(eigs[:, -1].max()) ** 0.5
    return EpsBounds(eps_lower=lower, eps_upper=upper, eps_hat=max(lower, upper))


def eps_R(field: MaterialField) -> MaterialField:
    """The rotated material -R eps R of the planar reduction."""
    if field.dim != 2:
        raise AssemblyError("the rotated material only exists in 2D", "assembly", "eps_R")
    return MaterialField(-np.einsum("ij,cjk,kl->cil", ROTATION, field.matrices, ROTATION))


def rotate_2d(data: np.ndarray, mesh: Mesh | None = None) -> np.ndarray:
    """Apply the quarter turn R = [[0, 1], [-1, 0]] pointwise.

    Args:
        data (np.ndarray): Vectors with a trailing axis of length 2, or, when
            ``mesh`` is given, the edge dofs of a Whitney field on that mesh.
        mesh (Mesh | None): Mesh of an edge field; the field is evaluated at the
            cell centroids before rotating.

    Returns:
        np.ndarray: Rotated vectors, same shape as the (evaluated) input.
    """
    if mesh is not None:
        if mesh.dim != 2:
            raise AssemblyError("rotation is only defined for 2D meshes", "assembly", "rotate_2d")
        from maxlab.assembly.assembly import edge_field_on_cells

        data = edge_field_on_cells(mesh, data)
    data = np.asarray(data, dtype=float)
    if data.shape[-1] != 2:
        raise AssemblyError(f"expected 2D vectors, got trailing axis {data.shape[-1]}", "assembly", "rotate_2d")
    return data @ ROTATION.T


def read_material_file(path: str | Path, mesh: Mesh) -> MaterialField:
    """Read one line of upper-triangle entries per cell."""
    path = Path(path)
    if not path.is_file():
        raise MaterialError(f"material file '{path}' not found", "assembly", "read_material_file")
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        content = line.split("#", 1)[0].split()
        if content:
            try:
                rows.append([float(x) for x in content])
            except ValueError as e:
                raise MaterialError(f"{path}: {e}", "assembly", "read_material_file") from e
    if len(rows) != mesh.n_cells:
        raise MaterialError(
            f"{path} has {len(rows)} rows for a mesh with {mesh.n_cells} cells",
            "assembly",
            "read_material_file",
        )
    logger.debug(f"Read {len(rows)} material rows from '{path}'")
    try:
        return MaterialField.table(np.array(rows), mesh.dim)
    except ValueError as e:
        raise MaterialError(f"{path}: ragged rows", "assembly", "read_material_file") from e


def transfer_material(field: MaterialField, base: Mesh, mesh: Mesh) -> MaterialField:
    """Carry a material given on ``base`` to another mesh of the same domain.

    Each cell of ``mesh`` takes the matrix of the base cell holding its centroid,
    which on a refinement of ``base`` is its parent.
    """
    if field.n_cells != base.n_cells:
        raise MaterialError(
            f"material has {field.n_cells} cells, base mesh has {base.n_cells}", "assembly", "transfer_material"
        )
    centroids = mesh.vertices[mesh.cells].mean(axis=1)
    try:
        parents = locate_cells(base, centroids)
    except MeshError as e:
        raise MaterialError(
            f"'{mesh.provenance}' does not cover the same domain as '{base.provenance}': {e.message}",
            "assembly",
            "transfer_material",
        ) from e
    return MaterialField(field.matrices[parents])


class EpsilonSpec(BaseModel):
    """How to build the material field on any mesh of a domain."""

    kind: Annotated[
        Literal["identity", "scalar", "diag", "matrix", "file"],
        Field(default="identity", description="Kind of material."),
    ]
    value: Annotated[
        float | None, Field(default=None, gt=0, description="Factor of the identity for kind 'scalar'.")
    ]
    entries: Annotated[
        list[float] | None,
        Field(
            default=None,
            description="Diagonal entries ('diag') or row-major upper triangle ('matrix').",
        ),
    ]
    path: Annotated[
        str | None, Field(default=None, description="Per-cell table of upper-triangle entries ('file').")
    ]

    @model_validator(mode="after")
    def _check_kind(self) -> "EpsilonSpec":
        if self.kind == "scalar" and self.value is None:
            raise ValueError("scalar material needs 'value'")
        if self.kind == "diag" and (not self.entries or len(self.entries) not in (2, 3)):
            raise ValueError("diag material needs 2 or 3 entries")
        if self.kind == "matrix" and (not self.entries or len(self.entries) not in (3, 6)):
            raise ValueError("matrix material needs 3 (2D) or 6 (3D) upper-triangle entries")
        if self.kind == "file" and not self.path:
            raise ValueError("file material needs 'path'")
        return self

    @property
    def dim(self) -> int | None:
        """Dimension implied by the entries, None when any dimension fits."""
        if self.kind == "diag":
            return len(self.entries)
        if self.kind == "matrix":
            return 2 if len(self.entries) == 3 else 3
        return None

    @property
    def label(self) -> str:
        if self.kind == "scalar":
            return f"{self.value:g}*identity"
        if self.kind in ("diag", "matrix"):
            return f"{self.kind}({', '.join(f'{x:g}' for x in self.entries)})"
        if self.kind == "file":
            return f"file({Path(self.path).name})"
        return "identity"

    def material(self, mesh: Mesh, base: Mesh | None = None) -> MaterialField:
        """The material field on ``mesh``.

        A file material lists one row per cell of ``base`` (the coarsest level of a
        run, ``mesh`` itself when omitted); finer levels inherit the row of the base
        cell that contains them.
        """
        if self.dim is not None and self.dim != mesh.dim:
            raise MaterialError(
                f"{self.label} is {self.dim}D but the mesh is {mesh.dim}D", "assembly", "material"
            )
        if self.kind == "identity":
            return MaterialField.identity(mesh.n_cells, mesh.dim)
        if self.kind == "scalar":
            return MaterialField.scalar(mesh.n_cells, mesh.dim, self.value)
        if self.kind == "diag":
            return MaterialField.diagonal(mesh.n_cells, self.entries)
        if self.kind == "matrix":
            return MaterialField.constant(mesh.n_cells, _upper_to_full(np.array(self.entries), mesh.dim))
        if base is None or base is mesh:
            return read_material_file(self.path, mesh)
        return transfer_material(read_material_file(self.path, base), base, mesh)
