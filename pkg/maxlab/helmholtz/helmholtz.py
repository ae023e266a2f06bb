"""Discrete Helmholtz decompositions of edge-element fields.

A field E on the free edges of a boundary condition splits ε-orthogonally into
a discrete gradient G phi, a discrete harmonic field and an ε-solenoidal
remainder. phi solves the weighted Poisson problem (ε grad phi, grad psi) =
(ε E, grad psi) in the scalar space matching the boundary condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger
from pydantic import BaseModel
from scipy.linalg import eigh
from scipy.sparse.linalg import factorized

from maxlab.assembly.assembly import (
    BoundaryCondition,
    assemble_nedelec,
    assemble_p1,
    cell_divergence,
    cell_rot,
    discrete_gradient,
    edge_field_on_cells,
    gradient_rank,
)
from maxlab.assembly.material import EpsilonSpec, MaterialField, eps_bounds, rotate_2d
from maxlab.core.errors import AssemblyError, HarmonicBasisError, SolverError
from maxlab.mesh.mesh import DomainSpec, Mesh
from maxlab.spectral.spectral import eig_gsym, split_kernel

IRROTATIONAL_TOLERANCE = 1e-9
RECONSTRUCTION_LIMIT = 1e-12
ORTHOGONALITY_LIMIT = 1e-10


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Parts of a field, all on the free edges of the boundary condition.

    Attributes:
        field (np.ndarray): The decomposed field.
        gradient (np.ndarray): G phi.
        harmonic (np.ndarray): Projection onto the discrete harmonic fields.
        solenoidal (np.ndarray): The remainder.
        potential (np.ndarray): phi on the free vertices.
        cross_terms (dict[str, float]): |(a, b)_eps| of each pair of parts,
            relative to ||field||_eps^2.
        reconstruction (float): max |field - sum of parts| relative to max |field|.
    """

    field: np.ndarray
    gradient: np.ndarray
    harmonic: np.ndarray
    solenoidal: np.ndarray
    potential: np.ndarray
    cross_terms: dict[str, float]
    reconstruction: float

    @property
    def max_cross_term(self) -> float:
        return max(self.cross_terms.values(), default=0.0)


class HelmholtzSolver:
    """Decomposes fields on one mesh, material and boundary condition.

    The edge pencil, the restricted gradient and the factorization of G^T B G are
    computed once and only read afterwards, so one solver can serve many fields
    from several threads.

    Args:
        mesh (Mesh): The mesh.
        eps (MaterialField | None): Material, identity when omitted.
        bc (str | BoundaryCondition): ``tangential`` or ``normal``.
        harmonic (list[np.ndarray] | None): B-orthonormal harmonic fields; needed
            when the mesh topology allows harmonic fields for ``bc``.
    """

    def __init__(
        self,
        mesh: Mesh,
        eps: MaterialField | None = None,
        bc: str | BoundaryCondition = "tangential",
        harmonic: list[np.ndarray] | None = None,
    ):
        self.mesh = mesh
        self.eps = eps
        self.bc = BoundaryCondition.parse(bc)
        self.pencil = assemble_nedelec(mesh, eps, self.bc)
        self.gradient = discrete_gradient(mesh, self.bc)
        self.expected_harmonic = mesh.harmonic_dims()[0 if self.bc is BoundaryCondition.ESSENTIAL else 1]

        stiffness = (self.gradient.T @ self.pencil.B @ self.gradient).tocsc()
        # Natural bc: pin the first vertex, the constants are in the kernel.
        self._pinned = self.bc is BoundaryCondition.NATURAL
        if self._pinned:
            stiffness = stiffness[1:, :][:, 1:]
            self._vertex_mass = assemble_p1(mesh, bc=self.bc).B
        try:
            self._solve = factorized(stiffness.tocsc())
        except RuntimeError as e:
            logger.error(f"Scalar Poisson matrix of {mesh.provenance} ({self.bc}) is singular")
            raise SolverError(f"singular scalar solve: {e}", "helmholtz", "HelmholtzSolver") from e

        self.harmonic = np.zeros((self.pencil.size, 0))
        if harmonic is not None and len(harmonic) > 0:
            self.harmonic = np.column_stack(harmonic)
            if self.harmonic.shape[0] != self.pencil.size:
                raise HarmonicBasisError(
                    f"harmonic vectors have {self.harmonic.shape[0]} entries, the edge space has {self.pencil.size}",
                    "helmholtz",
                    "HelmholtzSolver",
                )
        self._has_basis = harmonic is not None
        logger.debug(
            f"Helmholtz solver on {mesh.provenance} ({self.bc}): {self.pencil.size} edges, "
            f"{self.gradient.shape[1]} vertices, {self.harmonic.shape[1]} harmonic fields"
        )

    @classmethod
    def with_harmonic_basis(
        cls, mesh: Mesh, eps: MaterialField | None = None, bc: str | BoundaryCondition = "tangential"
    ) -> "HelmholtzSolver":
        """A solver whose harmonic basis is computed from the edge-pencil kernel."""
        solver = cls(mesh, eps, bc)
        basis = harmonic_basis(mesh, eps, bc, solver=solver)
        solver.harmonic = np.column_stack(basis) if basis else np.zeros((solver.pencil.size, 0))
        solver._has_basis = True
        return solver

    @property
    def size(self) -> int:
        return self.pencil.size

    def potential(self, fields: np.ndarray) -> np.ndarray:
        """phi for one field (vector) or many (columns)."""
        rhs = self.gradient.T @ (self.pencil.B @ fields)
        if not self._pinned:
            return self._solve_columns(rhs)
        phi = np.zeros_like(rhs)
        phi[1:] = self._solve_columns(rhs[1:])
        mass = self._vertex_mass
        ones = np.ones(mass.shape[0])
        mean = (ones @ (mass @ phi)) / (ones @ (mass @ ones))
        return phi - mean

    def _solve_columns(self, rhs: np.ndarray) -> np.ndarray:
        if rhs.ndim == 1:
            return self._solve(rhs)
        return np.column_stack([self._solve(column) for column in rhs.T])

    def project_out_gradients(self, fields: np.ndarray) -> np.ndarray:
        return fields - self.gradient @ self.potential(fields)

    def decompose(self, field: np.ndarray) -> Decomposition:
        """Split ``field`` (free edge dofs) into gradient, harmonic and solenoidal parts.

        Raises:
            HarmonicBasisError: If the topology allows harmonic fields but no
                basis was supplied.
        """
        field = np.asarray(field, dtype=float)
        if field.shape != (self.size,):
            raise AssemblyError(
                f"expected {self.size} free edge values, got shape {field.shape}", "helmholtz", "decompose"
            )
        if self.expected_harmonic > 0 and not self._has_basis:
            logger.error(f"{self.mesh.provenance} has {self.expected_harmonic} harmonic fields and no basis")
            raise HarmonicBasisError(
                f"{self.expected_harmonic} harmonic fields are possible for bc '{self.bc}' but no basis was "
                "given; use HelmholtzSolver.with_harmonic_basis",
                "helmholtz",
                "decompose",
            )
        B = self.pencil.B
        phi = self.potential(field)
        grad = self.gradient @ phi
        coefficients = self.harmonic.T @ (B @ (field - grad))
        harm = self.harmonic @ coefficients
        sol = field - grad - harm

        energy = float(field @ (B @ field))
        scale = energy if energy > 0 else 1.0
        cross = {
            "gradient_harmonic": abs(float(grad @ (B @ harm))) / scale,
            "gradient_solenoidal": abs(float(grad @ (B @ sol))) / scale,
            "harmonic_solenoidal": abs(float(harm @ (B @ sol))) / scale,
        }
        size = float(np.abs(field).max(initial=0.0))
        reconstruction = float(np.abs(field - grad - harm - sol).max(initial=0.0)) / (size if size > 0 else 1.0)
        return Decomposition(field, grad, harm, sol, phi, cross, reconstruction)


def decompose(
    mesh: Mesh,
    eps: MaterialField | None,
    bc: str | BoundaryCondition,
    field: np.ndarray,
    harmonic: list[np.ndarray] | None = None,
) -> Decomposition:
    """One-off decomposition; build a HelmholtzSolver to reuse the factorization."""
    return HelmholtzSolver(mesh, eps, bc, harmonic).decompose(field)


def harmonic_basis(
    mesh: Mesh,
    eps: MaterialField | None = None,
    bc: str | BoundaryCondition = "tangential",
    solver: HelmholtzSolver | None = None,
) -> list[np.ndarray]:
    """B-orthonormal basis of the edge-pencil kernel that is ε-orthogonal to the gradients.

    Raises:
        SpectralGapError: If the kernel is not separated from the spectrum.
    """
    bc = BoundaryCondition.parse(bc)
    solver = solver or HelmholtzSolver(mesh, eps, bc)
    result = eig_gsym(solver.pencil)
    split = split_kernel(result, gradient_rank(mesh, bc))
    dim = max(split.surplus, 0)
    if dim != solver.expected_harmonic:
        logger.warning(
            f"{mesh.provenance} ({bc}): {dim} harmonic fields in the spectrum, topology predicts "
            f"{solver.expected_harmonic}"
        )
    if dim == 0:
        return []

    kernel = solver.project_out_gradients(result.eigenvectors[:, : split.kernel_dim])
    gram = kernel.T @ (solver.pencil.B @ kernel)
    values, vectors = eigh(0.5 * (gram + gram.T))
    basis = kernel @ (vectors[:, -dim:] / np.sqrt(values[-dim:]))
    logger.debug(f"Harmonic basis of {mesh.provenance} ({bc}): Gram eigenvalues {values[-dim:]}")
    return [basis[:, i] for i in range(dim)]


class IrrotationalEstimate(BaseModel):
    """||E||_eps against the weak divergence norm of E = G u for the first scalar eigenvector."""

    bc: str
    eigenvalue: float
    lhs: float
    rhs: float
    ratio: float
    bound: float
    margin: float
    satisfied: bool
    identity_residual: float


def _first_pair(pencil, bc: BoundaryCondition) -> tuple[float, np.ndarray]:
    result = eig_gsym(pencil)
    index = split_kernel(result, 1).kernel_dim if bc is BoundaryCondition.NATURAL else 0
    return float(result.eigenvalues[index]), result.eigenvectors[:, index]


def verify_irrotational_estimate(
    mesh: Mesh, eps: MaterialField | None = None, bc: str | BoundaryCondition = "essential"
) -> IrrotationalEstimate:
    """Check ||G u||_eps <= eps_lower * c ||div_h(eps G u)|| for the first scalar eigenvector u.

    The divergence is the weak one, M^-1 G^T B_eps E against the P1 mass M, and c
    is the Friedrichs (essential) or Poincare (natural) constant of the
    unweighted pencil. With E = G u the ratio is 1 / sqrt(lambda).
    """
    bc = BoundaryCondition.parse(bc)
    scalar = assemble_p1(mesh, eps, bc)
    eigenvalue, u = _first_pair(scalar, bc)
    G = discrete_gradient(mesh, bc)
    B = assemble_nedelec(mesh, eps, bc).B

    E = G @ u
    energy = float(E @ (B @ E))
    weak_div = G.T @ (B @ E)
    div_norm = float(np.sqrt(weak_div @ factorized(scalar.B.tocsc())(weak_div)))
    lhs = float(np.sqrt(energy))
    ratio = lhs / div_norm

    plain, _ = _first_pair(assemble_p1(mesh, None, bc), bc)
    lower = 1.0 if eps is None else eps_bounds(eps).eps_lower
    bound = lower / np.sqrt(plain)
    satisfied = bool(ratio <= bound * (1.0 + IRROTATIONAL_TOLERANCE))
    residual = abs(energy - eigenvalue * float(u @ (scalar.B @ u))) / eigenvalue
    logger.debug(f"Irrotational estimate ({bc}): ratio {ratio:.10g}, bound {bound:.10g}")
    return IrrotationalEstimate(
        bc=str(bc),
        eigenvalue=eigenvalue,
        lhs=lhs,
        rhs=div_norm,
        ratio=ratio,
        bound=float(bound),
        margin=float(bound - ratio),
        satisfied=satisfied,
        identity_residual=residual,
    )


def rotation_identity_residual(mesh: Mesh, field: np.ndarray) -> float:
    """max over cells of |div(R E) - rot E| for a 2D edge field given on all edges."""
    if mesh.dim != 2:
        raise AssemblyError("the rotation identity is planar", "helmholtz", "rotation_identity_residual")
    values = edge_field_on_cells(mesh, field, at="vertices")
    return float(np.abs(cell_divergence(mesh, rotate_2d(values)) - cell_rot(mesh, field)).max())


class HelmholtzSummary(BaseModel):
    """Property-suite maxima for one boundary condition."""

    bc: str
    samples: int
    dofs: int
    gradient_rank: int
    harmonic_dim: int
    solenoidal_dim: int
    max_reconstruction: float
    max_cross_term: float
    idempotence: float
    irrotational: IrrotationalEstimate


class HelmholtzChecks(BaseModel):
    domain: str
    epsilon: str
    n: int
    seed: int
    summaries: list[HelmholtzSummary]
    rotation_residual: float | None = None
    notes: list[str] = []

    def failed_checks(self) -> list[str]:
        failed = []
        for s in self.summaries:
            if not s.max_reconstruction <= RECONSTRUCTION_LIMIT:
                failed.append(f"helmholtz {s.bc}: reconstruction")
            if not s.max_cross_term <= ORTHOGONALITY_LIMIT:
                failed.append(f"helmholtz {s.bc}: orthogonality")
            if not s.irrotational.satisfied:
                failed.append(f"helmholtz {s.bc}: irrotational estimate")
        if self.rotation_residual is not None and not self.rotation_residual <= ORTHOGONALITY_LIMIT:
            failed.append("helmholtz: rotation identity")
        return failed


def _summary(mesh: Mesh, material: MaterialField | None, bc: str, samples: int, seed: int) -> HelmholtzSummary:
    solver = HelmholtzSolver.with_harmonic_basis(mesh, material, bc)
    rng = np.random.default_rng(seed)
    reconstruction, cross = 0.0, 0.0
    first = None
    for _ in range(samples):
        parts = solver.decompose(rng.standard_normal(solver.size))
        first = first or parts
        reconstruction = max(reconstruction, parts.reconstruction)
        cross = max(cross, parts.max_cross_term)
    idempotence = 0.0
    if first is not None:
        again = solver.decompose(first.gradient)
        scale = max(float(np.abs(first.gradient).max(initial=0.0)), 1e-300)
        idempotence = float(np.abs(again.gradient - first.gradient).max(initial=0.0)) / scale
    rank = gradient_rank(mesh, bc)
    harmonic = solver.harmonic.shape[1]
    return HelmholtzSummary(
        bc=str(solver.bc),
        samples=samples,
        dofs=solver.size,
        gradient_rank=rank,
        harmonic_dim=harmonic,
        solenoidal_dim=solver.size - rank - harmonic,
        max_reconstruction=reconstruction,
        max_cross_term=cross,
        idempotence=idempotence,
        irrotational=verify_irrotational_estimate(mesh, material, bc),
    )


def helmholtz_checks(
    domain: DomainSpec,
    eps: EpsilonSpec | None = None,
    n: int = 4,
    samples: int = 100,
    seed: int = 0,
    base_level: int | None = None,
) -> HelmholtzChecks:
    """Decompose ``samples`` seeded random fields for both boundary conditions and report the worst residuals.

    A file material is read on the mesh of ``base_level`` (``n`` when omitted).
    """
    eps = eps or EpsilonSpec()
    mesh = domain.build(n)
    base = domain.build(base_level) if eps.kind == "file" and base_level not in (None, n) else None
    field = eps.material(mesh, base)
    material = None if field.is_identity else field
    logger.info(f"Helmholtz checks on {domain.label} (n={n}, {samples} fields per bc)")
    summaries = [_summary(mesh, material, bc, samples, seed) for bc in ("tangential", "normal")]
    notes = [
        "the irrotational estimate uses the weak divergence M^-1 G^T B_eps E against the P1 mass M"
    ]
    rotation = None
    if mesh.dim == 2:
        rotation = rotation_identity_residual(mesh, np.random.default_rng(seed).standard_normal(mesh.n_edges))
        notes.append(
            "the rotation identity is checked cellwise as div(R E) = rot E on the piecewise linear "
            "evaluation of E, since R E of an edge field is not an edge field"
        )
    logger.success(f"Helmholtz checks on {domain.label} finished")
    return HelmholtzChecks(
        domain=domain.label,
        epsilon=eps.label,
        n=n,
        seed=seed,
        summaries=summaries,
        rotation_residual=rotation,
        notes=notes,
    )
