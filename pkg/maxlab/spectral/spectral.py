"""Dense generalized eigenproblems, kernel classification and Richardson extrapolation."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict
from scipy.linalg import LinAlgError, eigh, solve_triangular
from scipy.linalg.lapack import dpotrf
from scipy.optimize import brentq

from maxlab.assembly.assembly import Pencil
from maxlab.core.errors import SolverError, SpectralGapError

RESIDUAL_LIMIT = 1e-9
KERNEL_RELATIVE = 1e-8
KERNEL_ABSOLUTE = 1e-10
GAP_FACTOR = 100.0


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Full spectrum of a pencil.

    Attributes:
        eigenvalues (np.ndarray): Ascending eigenvalues.
        eigenvectors (np.ndarray): B-orthonormal eigenvectors, one per column.
        label (str): Label of the solved pencil.
        kernel_tolerance (float): Eigenvalues below this count as kernel.
        kernel_dim (int): Number of eigenvalues below ``kernel_tolerance``.
        max_residual (float): Largest relative residual over all pairs.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    label: str
    kernel_tolerance: float
    kernel_dim: int
    max_residual: float

    @property
    def size(self) -> int:
        return int(self.eigenvalues.size)


class KernelSplit(BaseModel):
    """Kernel count of a spectrum against the count the complex predicts."""

    model_config = ConfigDict(frozen=True)

    kernel_dim: int
    expected: int
    surplus: int
    smallest_nonzero: float
    tolerance: float


class RichardsonResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    observed_order: float | None
    assumed_order: float
    levels: int


def kernel_tolerance(eigenvalues: np.ndarray) -> float:
    """Relative to the median eigenvalue magnitude, floored at an absolute value."""
    if eigenvalues.size == 0:
        return KERNEL_ABSOLUTE
    return max(KERNEL_RELATIVE * float(np.median(np.abs(eigenvalues))), KERNEL_ABSOLUTE)


def _cholesky(B: np.ndarray, label: str) -> np.ndarray:
    factor, info = dpotrf(B, lower=1, clean=1)
    if info > 0:
        logger.error(f"Mass matrix of '{label}' is not positive definite at dof {info - 1}")
        raise SolverError(
            f"Cholesky factorization of the mass matrix of '{label}' failed at dof {info - 1}",
            "spectral",
            "eig_gsym",
        )
    if info < 0:
        raise SolverError(f"invalid argument {-info} passed to the Cholesky routine", "spectral", "eig_gsym")
    return factor


def eig_gsym(pencil: Pencil) -> SpectralResult:
    """Solve A v = lambda B v for the whole spectrum.

    B = L L^T is factored, the standard problem L^-1 A L^-T y = lambda y is
    solved with a symmetric eigensolver and v = L^-T y.

    Args:
        pencil (Pencil): Symmetric stiffness and positive definite mass.

    Returns:
        SpectralResult: Ascending eigenvalues with B-orthonormal eigenvectors.

    Raises:
        SolverError: If the mass is not positive definite (the message names the
            dof) or the reduced problem does not converge.
    """
    if pencil.size == 0:
        raise SolverError(f"pencil '{pencil.label}' has no free dofs", "spectral", "eig_gsym")
    A = pencil.A.toarray()
    B = pencil.B.toarray()
    logger.debug(f"Solving '{pencil.label}' densely with {pencil.size} dofs")

    L = _cholesky(B, pencil.label)
    reduced = solve_triangular(L, solve_triangular(L, A, lower=True).T, lower=True)
    reduced = 0.5 * (reduced + reduced.T)
    try:
        values, vectors = eigh(reduced)
    except LinAlgError as e:
        logger.error(f"Symmetric eigensolver failed on '{pencil.label}'")
        raise SolverError(f"eigensolver did not converge: {e}", "spectral", "eig_gsym") from e
    vectors = solve_triangular(L.T, vectors, lower=False)

    Bv = B @ vectors
    residual = np.linalg.norm(A @ vectors - Bv * values, axis=0)
    residual /= np.maximum(np.abs(values), 1.0) * np.linalg.norm(Bv, axis=0)
    max_residual = float(residual.max())
    if max_residual > RESIDUAL_LIMIT:
        logger.warning(f"Largest eigenpair residual of '{pencil.label}' is {max_residual:.2e}")

    tol = kernel_tolerance(values)
    kernel_dim = int(np.count_nonzero(values < tol))
    logger.trace(f"'{pencil.label}': lambda_min={values[0]:.6g}, kernel {kernel_dim} below {tol:.2e}")
    return SpectralResult(values, vectors, pencil.label, tol, kernel_dim, max_residual)


def split_kernel(result: SpectralResult, expected_kernel_dim: int) -> KernelSplit:
    """Separate the kernel from the rest of the spectrum.

    Args:
        result (SpectralResult): A solved pencil.
        expected_kernel_dim (int): Kernel size predicted by the gradient rank
            (plus any harmonic fields the caller anticipates).

    Returns:
        KernelSplit: Detected and expected counts and the first eigenvalue above
        the kernel tolerance.

    Raises:
        SpectralGapError: If the whole spectrum is kernel, or the first retained
            eigenvalue is not a factor 100 above the largest kernel eigenvalue.
    """
    values = result.eigenvalues
    k = result.kernel_dim
    if k == result.size:
        logger.error(f"Every eigenvalue of '{result.label}' is below {result.kernel_tolerance:.2e}")
        raise SpectralGapError(
            f"'{result.label}' has no eigenvalue above the kernel tolerance", "spectral", "split_kernel"
        )
    smallest = float(values[k])
    if k > 0:
        largest_kernel = float(np.abs(values[:k]).max())
        if smallest < GAP_FACTOR * largest_kernel:
            logger.error(f"No spectral gap in '{result.label}': {largest_kernel:.3e} vs {smallest:.3e}")
            raise SpectralGapError(
                f"'{result.label}': smallest retained eigenvalue {smallest:.6g} is within a factor "
                f"{GAP_FACTOR:g} of the kernel eigenvalue {largest_kernel:.3g}; refine the mesh or "
                "check the expected kernel",
                "spectral",
                "split_kernel",
            )
    surplus = k - expected_kernel_dim
    if surplus < 0:
        logger.warning(
            f"'{result.label}' shows {k} kernel eigenvalues, the gradient count predicts {expected_kernel_dim}"
        )
    elif surplus > 0:
        logger.debug(f"'{result.label}' has {surplus} kernel vectors beyond the gradients")
    return KernelSplit(
        kernel_dim=k,
        expected=expected_kernel_dim,
        surplus=surplus,
        smallest_nonzero=smallest,
        tolerance=result.kernel_tolerance,
    )


def _observed_order(h: np.ndarray, values: np.ndarray) -> float | None:
    """Order p with (v1 - v2) / (v2 - v3) = (h1^p - h2^p) / (h2^p - h3^p)."""
    (h1, h2, h3), (v1, v2, v3) = h, values
    if v2 == v3 or v1 == v2:
        return None
    ratio = (v1 - v2) / (v2 - v3)

    def mismatch(p):
        return (h1**p - h2**p) / (h2**p - h3**p) - ratio

    low, high = 0.05, 20.0
    if mismatch(low) * mismatch(high) > 0:
        logger.debug(f"No observed order for error ratio {ratio:.4g}")
        return None
    return float(brentq(mismatch, low, high, xtol=1e-12))


def richardson_extrapolate(
    h: Sequence[float], values: Sequence[float], order: float = 2.0
) -> RichardsonResult:
    """Extrapolate a sequence of eigenvalues to zero mesh size.

    Args:
        h (Sequence[float]): Strictly decreasing mesh sizes.
        values (Sequence[float]): Eigenvalue per mesh size.
        order (float): Assumed convergence order.

    Returns:
        RichardsonResult: The limit from the two finest levels and, with three
        or more levels, the order observed on the three finest.
    """
    h = np.asarray(h, dtype=float)
    values = np.asarray(values, dtype=float)
    if h.shape != values.shape or h.ndim != 1:
        raise SolverError(
            f"need one value per mesh size, got {h.shape} and {values.shape}", "spectral", "richardson_extrapolate"
        )
    if h.size < 2:
        raise SolverError("Richardson extrapolation needs at least 2 levels", "spectral", "richardson_extrapolate")
    if np.any(np.diff(h) >= 0) or np.any(h <= 0):
        raise SolverError(
            f"mesh sizes must be positive and strictly decreasing, got {h.tolist()}",
            "spectral",
            "richardson_extrapolate",
        )
    factor = (h[-2] / h[-1]) ** order
    value = values[-1] + (values[-1] - values[-2]) / (factor - 1.0)
    observed = _observed_order(h[-3:], values[-3:]) if h.size >= 3 else None
    return RichardsonResult(value=float(value), observed_order=observed, assumed_order=order, levels=int(h.size))
