"""Poincare, Friedrichs and Maxwell constants across refinement levels.

The Maxwell constants follow the orthogonal splitting of a field into a
discrete gradient and an ε-solenoidal remainder. The gradient part is bounded
by the weighted scalar pencils, the remainder by the smallest nonzero eigenvalue
of the edge pencil, and each constant is the worse of the two.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from functools import partial
from typing import Literal, TypeVar

from loguru import logger
from pydantic import BaseModel, Field
from tqdm import tqdm

from maxlab.assembly.assembly import BoundaryCondition, assemble_nedelec, assemble_p1, gradient_rank
from maxlab.assembly.material import EpsBounds, EpsilonSpec, MaterialField, eps_bounds
from maxlab.core.errors import ConfigError, LabError, TopologyError
from maxlab.mesh.mesh import DomainSpec, Mesh
from maxlab.spectral.spectral import eig_gsym, richardson_extrapolate, split_kernel

STRUCTURAL_TOLERANCE = 1e-12
DISCRETIZATION_TOLERANCE = 0.02

T = TypeVar("T")

Status = Literal["passed", "failed", "skipped: nonconvex", "skipped: eps not identity"]


class LevelSeries(BaseModel):
    """One eigenvalue followed across refinement levels."""

    levels: list[int]
    h: list[float]
    values: list[float]
    extrapolated: float
    observed_order: float | None = None


class LevelRecord(BaseModel):
    """Raw eigenvalues of one refinement level (units 1/length^2)."""

    n: int
    h: float
    lambda1: float
    mu2: float
    lambda_max_t: float
    lambda_max_n: float
    d_D: int
    d_N: int
    lambda1_eps: float
    mu2_eps: float


class Extrapolated(BaseModel):
    lambda1: float
    mu2: float
    lambda_max_t: float
    lambda_max_n: float
    lambda1_eps: float
    mu2_eps: float
    observed_orders: dict[str, float | None] = Field(default_factory=dict)


class Constants(BaseModel):
    """Constants in length units, the material bounds and the derived bounds."""

    c_p0: float
    c_p: float
    c_mt: float
    c_mn: float
    eps_lower: float
    eps_upper: float
    eps_hat: float
    diam_over_pi: float
    inv_op_norm: float
    upper_t: float
    upper_n: float
    lower_t: float
    lower_n: float


class InequalityCheck(BaseModel):
    """lhs <= rhs, satisfied when lhs <= rhs + tolerance * |rhs|.

    ``satisfied`` is None for a skipped check.
    """

    name: str
    lhs: float
    rhs: float
    satisfied: bool | None
    margin: float
    tolerance: float
    status: Status

    @classmethod
    def compare(cls, name: str, lhs: float, rhs: float, tolerance: float = STRUCTURAL_TOLERANCE) -> "InequalityCheck":
        satisfied = lhs <= rhs + tolerance * abs(rhs)
        return cls(
            name=name,
            lhs=lhs,
            rhs=rhs,
            satisfied=satisfied,
            margin=rhs - lhs,
            tolerance=tolerance,
            status="passed" if satisfied else "failed",
        )

    @classmethod
    def skipped(cls, name: str, lhs: float, rhs: float, tolerance: float, status: Status) -> "InequalityCheck":
        return cls(name=name, lhs=lhs, rhs=rhs, satisfied=None, margin=rhs - lhs, tolerance=tolerance, status=status)


class ConstantsReport(BaseModel):
    domain: str
    epsilon: str
    dim: int
    convex: bool
    levels: list[LevelRecord]
    extrapolated: Extrapolated
    constants: Constants
    d_D: int
    d_N: int
    checks: list[InequalityCheck]
    notes: list[str] = Field(default_factory=list)

    def failed_checks(self) -> list[str]:
        return [check.name for check in self.checks if check.satisfied is False]


class InterlacingRow(BaseModel):
    n: int
    lambda_n: float
    mu_next: float
    satisfied: bool


class InterlacingTable(BaseModel):
    domain: str
    epsilon: str
    k: int
    levels: list[int]
    rows: list[InterlacingRow]
    skipped_levels: list[int] = []

    @property
    def all_satisfied(self) -> bool:
        return all(row.satisfied for row in self.rows)


@dataclass(frozen=True)
class _LevelOutcome:
    record: LevelRecord
    bounds: EpsBounds
    diameter: float


def map_levels(
    func: Callable[[int], T], levels: Sequence[int], jobs: int = 1, progress: bool = False, desc: str = "levels"
) -> list[T]:
    """Run ``func`` for every level on a bounded thread pool; results come back in level order."""
    results: dict[int, T] = {}
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        futures = {executor.submit(func, n): n for n in levels}
        for future in tqdm(as_completed(futures), total=len(futures), desc=desc, disable=not progress):
            n = futures[future]
            try:
                results[n] = future.result()
            except LabError as e:
                logger.error(f"Level n={n} failed: {e}")
                raise
    return [results[n] for n in levels]


def _base_mesh(domain: DomainSpec, eps: EpsilonSpec | None, levels: Sequence[int]) -> Mesh | None:
    """The mesh a file material is tabulated on: the coarsest level of the run."""
    if eps is None or eps.kind != "file":
        return None
    return domain.build(levels[0])


def _material(mesh: Mesh, eps: EpsilonSpec | None, base: Mesh | None = None) -> MaterialField | None:
    if eps is None or eps.kind == "identity":
        return None
    return eps.material(mesh, base)


def first_dirichlet_eigenvalue(mesh: Mesh, material: MaterialField | None = None) -> float:
    return float(eig_gsym(assemble_p1(mesh, material, "essential")).eigenvalues[0])


def second_neumann_eigenvalue(mesh: Mesh, material: MaterialField | None = None) -> float:
    """First eigenvalue above the constants of the natural-bc P1 pencil."""
    split = split_kernel(eig_gsym(assemble_p1(mesh, material, "natural")), 1)
    if split.kernel_dim != 1:
        logger.error(f"Neumann pencil on {mesh.provenance} has a {split.kernel_dim}-dimensional kernel")
        raise TopologyError(
            f"the Neumann pencil must have only the constants as kernel, found {split.kernel_dim}",
            "constants",
            "neumann_mu2",
        )
    return split.smallest_nonzero


def smallest_maxwell_eigenvalue(
    mesh: Mesh, material: MaterialField | None, bc: str | BoundaryCondition
) -> tuple[float, int]:
    """Smallest nonzero edge-pencil eigenvalue and the number of harmonic fields.

    The harmonic count is the kernel size beyond the gradients of the bc.
    """
    result = eig_gsym(assemble_nedelec(mesh, material, bc))
    split = split_kernel(result, gradient_rank(mesh, bc))
    if split.surplus < 0:
        raise TopologyError(
            f"edge pencil '{result.label}' has {split.kernel_dim} kernel vectors, fewer than the "
            f"{split.expected} discrete gradients",
            "constants",
            "maxwell_lambda",
        )
    return split.smallest_nonzero, split.surplus


def _series(levels: Sequence[int], h: Sequence[float], values: Sequence[float]) -> LevelSeries:
    if len(levels) == 1:
        return LevelSeries(levels=list(levels), h=list(h), values=list(values), extrapolated=values[0])
    rich = richardson_extrapolate(h, values)
    return LevelSeries(
        levels=list(levels),
        h=list(h),
        values=list(values),
        extrapolated=rich.value,
        observed_order=rich.observed_order,
    )


def _check_levels(levels: Sequence[int], operation: str) -> list[int]:
    levels = list(levels)
    if not levels:
        raise ConfigError("at least one refinement level is needed", "constants", operation)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ConfigError(f"levels must be strictly increasing, got {levels}", "constants", operation)
    return levels


def _scalar_series(
    domain: DomainSpec,
    eps: EpsilonSpec | None,
    levels: Sequence[int],
    solve: Callable[[Mesh, MaterialField | None], float],
    operation: str,
    jobs: int,
) -> LevelSeries:
    levels = _check_levels(levels, operation)
    base = _base_mesh(domain, eps, levels)

    def at_level(n: int) -> tuple[float, float]:
        mesh = domain.build(n)
        return mesh.h, solve(mesh, _material(mesh, eps, base))

    pairs = map_levels(at_level, levels, jobs=jobs, desc=operation)
    return _series(levels, [h for h, _ in pairs], [v for _, v in pairs])


def dirichlet_lambda1(
    domain: DomainSpec, eps: EpsilonSpec | None = None, levels: Sequence[int] = (4,), jobs: int = 1
) -> LevelSeries:
    """First Dirichlet eigenvalue of the (weighted) P1 pencil per level, extrapolated."""
    return _scalar_series(domain, eps, levels, first_dirichlet_eigenvalue, "dirichlet_lambda1", jobs)


def neumann_mu2(
    domain: DomainSpec, eps: EpsilonSpec | None = None, levels: Sequence[int] = (4,), jobs: int = 1
) -> LevelSeries:
    """Second Neumann eigenvalue of the (weighted) P1 pencil per level, extrapolated."""
    return _scalar_series(domain, eps, levels, second_neumann_eigenvalue, "neumann_mu2", jobs)


def _stable_harmonic(values: Sequence[int], levels: Sequence[int], label: str, operation: str) -> int:
    if len(set(values)) > 1:
        logger.error(f"Harmonic dimension of {label} changes across levels: {list(values)}")
        raise TopologyError(
            f"harmonic dimension of {label} is not refinement stable: "
            + ", ".join(f"n={n}: {d}" for n, d in zip(levels, values)),
            "constants",
            operation,
        )
    return values[0]


def maxwell_lambda(
    domain: DomainSpec,
    eps: EpsilonSpec | None = None,
    bc: str | BoundaryCondition = "tangential",
    levels: Sequence[int] = (4,),
    jobs: int = 1,
) -> tuple[LevelSeries, int]:
    """Smallest nonzero Maxwell eigenvalue per level and the stable harmonic dimension.

    Raises:
        TopologyError: If the harmonic dimension differs between levels.
    """
    bc = BoundaryCondition.parse(bc)
    levels = _check_levels(levels, "maxwell_lambda")
    base = _base_mesh(domain, eps, levels)

    def at_level(n: int) -> tuple[float, float, int]:
        mesh = domain.build(n)
        value, harmonic = smallest_maxwell_eigenvalue(mesh, _material(mesh, eps, base), bc)
        return mesh.h, value, harmonic

    triples = map_levels(at_level, levels, jobs=jobs, desc="maxwell_lambda")
    harmonic = _stable_harmonic([t[2] for t in triples], levels, f"{domain.label} ({bc})", "maxwell_lambda")
    return _series(levels, [t[0] for t in triples], [t[1] for t in triples]), harmonic


def _level_outcome(domain: DomainSpec, eps: EpsilonSpec, base: Mesh | None, n: int) -> _LevelOutcome:
    mesh = domain.build(n)
    logger.info(f"Level n={n}: {mesh.n_vertices} vertices, {mesh.n_edges} edges, {mesh.n_cells} cells")
    material = eps.material(mesh, base)
    weighted = None if material.is_identity else material

    lambda1 = first_dirichlet_eigenvalue(mesh)
    mu2 = second_neumann_eigenvalue(mesh)
    lambda1_eps = lambda1 if weighted is None else first_dirichlet_eigenvalue(mesh, weighted)
    mu2_eps = mu2 if weighted is None else second_neumann_eigenvalue(mesh, weighted)
    lambda_max_t, d_D = smallest_maxwell_eigenvalue(mesh, weighted, BoundaryCondition.ESSENTIAL)
    lambda_max_n, d_N = smallest_maxwell_eigenvalue(mesh, weighted, BoundaryCondition.NATURAL)

    expected = mesh.harmonic_dims()
    if (d_D, d_N) != expected:
        logger.warning(
            f"Level n={n}: spectral harmonic dimensions {(d_D, d_N)} differ from the topological count {expected}"
        )
    record = LevelRecord(
        n=n,
        h=mesh.h,
        lambda1=lambda1,
        mu2=mu2,
        lambda_max_t=lambda_max_t,
        lambda_max_n=lambda_max_n,
        d_D=d_D,
        d_N=d_N,
        lambda1_eps=lambda1_eps,
        mu2_eps=mu2_eps,
    )
    logger.debug(f"Level n={n}: {record.model_dump()}")
    return _LevelOutcome(record, eps_bounds(material), mesh.diameter())


def _extrapolate(records: list[LevelRecord]) -> Extrapolated:
    keys = ("lambda1", "mu2", "lambda_max_t", "lambda_max_n", "lambda1_eps", "mu2_eps")
    levels = [r.n for r in records]
    h = [r.h for r in records]
    values, orders = {}, {}
    for key in keys:
        series = _series(levels, h, [getattr(r, key) for r in records])
        values[key] = series.extrapolated
        orders[key] = series.observed_order
    return Extrapolated(**values, observed_orders=orders)


def sharp_bounds(c_p0: float, c_p: float, bounds: EpsBounds, dim: int) -> dict[str, float]:
    """Upper and lower bounds of the Maxwell constants in terms of the scalar ones."""
    lo, up, hat = bounds.eps_lower, bounds.eps_upper, bounds.eps_hat
    return {
        "upper_t": max(lo * c_p0, up * c_p),
        "upper_n": max(lo * c_p, up * c_p0) if dim == 2 else hat * c_p,
        "lower_t": c_p0 / (lo * up**2),
        "lower_n": c_p / (lo * up**2),
    }


def chain_checks(constants: Constants, convex: bool, identity: bool) -> list[InequalityCheck]:
    """The inequality chain, its weighted bounds and the diameter bound."""
    c = constants
    structural, discrete = STRUCTURAL_TOLERANCE, DISCRETIZATION_TOLERANCE

    def gated(name, lhs, rhs, tolerance, need_convex=False, need_identity=False):
        if need_convex and not convex:
            return InequalityCheck.skipped(name, lhs, rhs, tolerance, "skipped: nonconvex")
        if need_identity and not identity:
            return InequalityCheck.skipped(name, lhs, rhs, tolerance, "skipped: eps not identity")
        return InequalityCheck.compare(name, lhs, rhs, tolerance)

    upper = max(
        c.c_mn / (c.eps_hat * c.c_p),
        c.c_mt / max(c.eps_lower * c.c_p0, c.eps_upper * c.c_p),
    )
    lower = max(
        (c.c_p0 / c.eps_hat**3) / c.c_mt,
        (c.c_p / c.eps_hat**3) / c.c_mn,
    )
    return [
        gated("(i) c_p0 <= c_mt", c.c_p0, c.c_mt, structural, need_identity=True),
        gated("(ii) c_mt <= c_mn", c.c_mt, c.c_mn, discrete, need_convex=True, need_identity=True),
        gated(
            "(iii) c_mn = c_p",
            max(c.c_mn / c.c_p, c.c_p / c.c_mn),
            1.0,
            discrete,
            need_convex=True,
            need_identity=True,
        ),
        gated("(iv) weighted upper bounds", upper, 1.0, discrete, need_convex=True),
        gated("(v) weighted lower bounds", lower, 1.0, structural),
        gated("(vi) c_p <= diam/pi", c.c_p, c.diam_over_pi, structural, need_convex=True),
    ]


def constants_report(
    domain: DomainSpec,
    eps: EpsilonSpec | None = None,
    levels: Sequence[int] = (2, 4),
    jobs: int = 1,
    progress: bool = False,
) -> ConstantsReport:
    """Compute every constant on a domain and check the inequality chain.

    Args:
        domain (DomainSpec): The domain and its convexity.
        eps (EpsilonSpec | None): The material, identity when omitted.
        levels (Sequence[int]): Strictly increasing refinement levels.
        jobs (int): Number of levels computed at once.
        progress (bool): Show a progress bar over the levels.

    Returns:
        ConstantsReport: Per-level eigenvalues, extrapolated values, constants
        and checks. Failed checks are data, they do not raise.
    """
    eps = eps or EpsilonSpec()
    levels = _check_levels(levels, "constants_report")
    logger.info(f"Computing constants on {domain.label} with eps={eps.label} at levels {levels}")

    base = _base_mesh(domain, eps, levels)
    outcomes = map_levels(partial(_level_outcome, domain, eps, base), levels, jobs=jobs, progress=progress)
    records = [o.record for o in outcomes]
    d_D = _stable_harmonic([r.d_D for r in records], levels, f"{domain.label} (tangential)", "constants_report")
    d_N = _stable_harmonic([r.d_N for r in records], levels, f"{domain.label} (normal)", "constants_report")

    ext = _extrapolate(records)
    bounds = outcomes[-1].bounds
    c_p0 = 1.0 / math.sqrt(ext.lambda1)
    c_p = 1.0 / math.sqrt(ext.mu2)
    c_mt = 1.0 / math.sqrt(min(ext.lambda1_eps, ext.lambda_max_t))
    c_mn = 1.0 / math.sqrt(min(ext.mu2_eps, ext.lambda_max_n))
    constants = Constants(
        c_p0=c_p0,
        c_p=c_p,
        c_mt=c_mt,
        c_mn=c_mn,
        eps_lower=bounds.eps_lower,
        eps_upper=bounds.eps_upper,
        eps_hat=bounds.eps_hat,
        diam_over_pi=outcomes[-1].diameter / math.pi,
        inv_op_norm=math.sqrt(c_mt**2 + 1.0),
        **sharp_bounds(c_p0, c_p, bounds, domain.dim),
    )

    identity = eps.kind == "identity"
    notes = []
    if not identity:
        notes.append(
            "lambda1_eps and mu2_eps are artifact-defined: the smallest quotient ||div_h(eps E)||^2 / "
            "||E||_eps^2 over discrete gradients, with the weak divergence taken against the P1 mass; "
            "it equals the first eigenvalue of the weighted scalar pencil"
        )
    if d_D or d_N:
        notes.append(
            f"Maxwell constants are computed on the complement of the harmonic fields (d_D={d_D}, d_N={d_N})"
        )
    if len(levels) == 1:
        notes.append("single refinement level: values are not extrapolated")

    report = ConstantsReport(
        domain=domain.label,
        epsilon=eps.label,
        dim=domain.dim,
        convex=domain.convex,
        levels=records,
        extrapolated=ext,
        constants=constants,
        d_D=d_D,
        d_N=d_N,
        checks=chain_checks(constants, domain.convex, identity),
        notes=notes,
    )
    failed = report.failed_checks()
    if failed:
        logger.warning(f"Failed checks on {domain.label}: {', '.join(failed)}")
    else:
        logger.success(f"All applicable checks passed on {domain.label}")
    return report


def interlacing_table(
    domain: DomainSpec,
    k: int,
    levels: Sequence[int] = (4,),
    eps: EpsilonSpec | None = None,
    jobs: int = 1,
) -> InterlacingTable:
    """Pairs (lambda_n, mu_{n+1}) for n = 1..k at extrapolated values, flagged mu_{n+1} <= lambda_n."""
    eps = eps or EpsilonSpec()
    if k < 0:
        raise ConfigError(f"k must be non-negative, got {k}", "constants", "interlacing_table")
    levels = _check_levels(levels, "interlacing_table")
    if k == 0:
        return InterlacingTable(domain=domain.label, epsilon=eps.label, k=0, levels=levels, rows=[])

    base = _base_mesh(domain, eps, levels)

    def at_level(n: int):
        mesh = domain.build(n)
        # the essential pencil has one dof per interior vertex
        if mesh.interior_vertices.size < k:
            logger.warning(
                f"Level n={n} has {mesh.interior_vertices.size} Dirichlet dofs, fewer than k={k}; "
                "left out of the interlacing table"
            )
            return None
        material = _material(mesh, eps, base)
        dirichlet = eig_gsym(assemble_p1(mesh, material, "essential")).eigenvalues
        neumann = eig_gsym(assemble_p1(mesh, material, "natural")).eigenvalues
        return mesh.h, dirichlet[:k], neumann[1 : k + 1]

    per_level = map_levels(at_level, levels, jobs=jobs, desc="interlacing")
    used = [(n, p) for n, p in zip(levels, per_level) if p is not None]
    skipped = [n for n, p in zip(levels, per_level) if p is None]
    if not used:
        raise ConfigError(
            f"no level of {levels} has k={k} Dirichlet dofs", "constants", "interlacing_table"
        )
    kept = [n for n, _ in used]
    h = [p[0] for _, p in used]
    rows = []
    for i in range(k):
        lam = _series(kept, h, [float(p[1][i]) for _, p in used]).extrapolated
        mu = _series(kept, h, [float(p[2][i]) for _, p in used]).extrapolated
        rows.append(InterlacingRow(n=i + 1, lambda_n=lam, mu_next=mu, satisfied=mu <= lam))
    return InterlacingTable(
        domain=domain.label, epsilon=eps.label, k=k, levels=kept, rows=rows, skipped_levels=skipped
    )
