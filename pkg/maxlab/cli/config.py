"""Run configuration for the batch runner."""

import os
from pathlib import Path
from typing import Annotated, Literal

from loguru import logger
from pydantic import BaseModel, Field, field_validator, model_validator

from maxlab.assembly.material import EpsilonSpec
from maxlab.mesh.mesh import DomainSpec

DEFAULT_MAX_DOFS = 5000


class OutputConfig(BaseModel):
    """Where the reports go."""

    json_path: Annotated[
        str | None, Field(default=None, description="Path of the JSON report, not written when unset.")
    ]
    csv_path: Annotated[
        str | None, Field(default=None, description="Path of the CSV projection of the level table.")
    ]
    console: Annotated[bool, Field(default=True, description="Print a summary to the terminal.")]


class RunConfig(BaseModel):
    """One batch run: a domain, a material, refinement levels and the tasks to compute."""

    domain: DomainSpec
    epsilon: Annotated[EpsilonSpec, Field(default_factory=EpsilonSpec, description="The material.")]
    levels: Annotated[
        list[int], Field(default=[2, 4], description="Strictly increasing subdivision counts.")
    ]
    tasks: Annotated[
        list[str],
        Field(default=["constants"], description="Tasks to run in order: constants, helmholtz, interlacing."),
    ]
    interlacing_k: Annotated[int, Field(default=3, ge=0, description="Number of interlacing pairs.")]
    samples: Annotated[int, Field(default=100, ge=1, description="Random fields per boundary condition.")]
    seed: Annotated[int, Field(default=0, ge=0, description="Seed of the Helmholtz property suite.")]
    helmholtz_level: Annotated[
        int | None,
        Field(default=None, ge=1, description="Level of the Helmholtz suite, the coarsest level when unset."),
    ]
    jobs: Annotated[int, Field(default=1, ge=1, description="Levels computed concurrently.")]
    progress: Annotated[bool, Field(default=False, description="Show progress bars.")]
    max_dofs: Annotated[
        int, Field(default=DEFAULT_MAX_DOFS, ge=1, description="Dense solver budget in edge dofs per level.")
    ]
    output: Annotated[OutputConfig, Field(default_factory=OutputConfig)]

    @field_validator("levels")
    @classmethod
    def _increasing(cls, levels: list[int]) -> list[int]:
        if not levels:
            raise ValueError("levels must not be empty")
        if any(n < 1 for n in levels):
            raise ValueError(f"levels must be positive, got {levels}")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"levels must be strictly increasing, got {levels}")
        return levels

    @field_validator("tasks")
    @classmethod
    def _tasks(cls, tasks: list[str]) -> list[str]:
        if not tasks:
            raise ValueError("at least one task is required")
        if len(set(tasks)) != len(tasks):
            raise ValueError(f"tasks are listed twice: {tasks}")
        return tasks

    @model_validator(mode="after")
    def _material_fits_domain(self) -> "RunConfig":
        domain_dim, eps_dim = self.domain.dim, self.epsilon.dim
        if domain_dim is not None and eps_dim is not None and domain_dim != eps_dim:
            raise ValueError(f"epsilon {self.epsilon.label} is {eps_dim}D but {self.domain.label} is {domain_dim}D")
        return self

    @property
    def suite_level(self) -> int:
        return self.helmholtz_level or self.levels[0]

    def settings(self) -> dict:
        """Flat view handed to plugin config models: run fields plus the output fields."""
        data = self.model_dump()
        data.update(data.pop("output"))
        return data


class Diagnostic(BaseModel):
    """A finding of the dry-run validation."""

    severity: Literal["warning", "error"]
    message: str
    level: int | None = None


def env_jobs() -> int | None:
    """``MAXLAB_JOBS`` as a positive int, 1 when it is set but invalid, None when unset."""
    raw = os.environ.get("MAXLAB_JOBS")
    if raw is None:
        return None
    try:
        jobs = int(raw)
    except ValueError:
        jobs = 0
    if jobs < 1:
        logger.warning(f"Ignoring MAXLAB_JOBS={raw!r}, using 1 job")
        return 1
    return jobs


def missing_files(config: RunConfig) -> list[str]:
    """Input files named by the config that do not exist."""
    paths = []
    if config.domain.kind == "imported":
        paths.append(("mesh", config.domain.path))
    if config.epsilon.kind == "file":
        paths.append(("material", config.epsilon.path))
    return [f"{what} file {path} not found" for what, path in paths if not Path(path).is_file()]
