from typing import TYPE_CHECKING, Annotated

from pydantic import BaseModel, Field

from maxlab.assembly.material import EpsilonSpec
from maxlab.core.plugins import Result
from maxlab.handlers.general_handler import hookimpl
from maxlab.helmholtz.helmholtz import helmholtz_checks
from maxlab.mesh.mesh import DomainSpec

if TYPE_CHECKING:
    from maxlab.cli.config import RunConfig


class HelmholtzTask:
    """Runs the seeded Helmholtz property suite on one level."""

    task_name = "helmholtz"

    def __init__(self):
        pass

    @hookimpl
    def grab_config(self):
        class HelmholtzConfig(BaseModel):
            """Configuration for the Helmholtz task."""

            domain: DomainSpec
            epsilon: Annotated[EpsilonSpec, Field(default_factory=EpsilonSpec)]
            levels: Annotated[list[int], Field(default=[2, 4])]
            helmholtz_level: Annotated[
                int | None, Field(default=None, description="Level of the suite, the coarsest when unset.")
            ]
            samples: Annotated[int, Field(default=100, ge=1, description="Random fields per boundary condition.")]
            seed: Annotated[int, Field(default=0, ge=0, description="Seed of the random fields.")]

        return HelmholtzConfig

    @hookimpl
    def set_data(self, model: BaseModel):
        self.model = model

    @hookimpl
    def run_task(self, task: str, config: "RunConfig") -> Result | None:
        if task != self.task_name:
            return None
        m = self.model
        n = m.helmholtz_level or m.levels[0]
        checks = helmholtz_checks(
            m.domain, m.epsilon, n=n, samples=m.samples, seed=m.seed, base_level=m.levels[0]
        )
        lines = [f"{checks.domain}, eps={checks.epsilon}, n={checks.n}, seed={checks.seed}"]
        for s in checks.summaries:
            lines.append(
                f"{s.bc}: {s.samples} fields, reconstruction {s.max_reconstruction:.2e}, "
                f"orthogonality {s.max_cross_term:.2e}, harmonic dim {s.harmonic_dim}"
            )
        lines += [f"note: {note}" for note in checks.notes]
        return Result(
            relates_to=checks.domain,
            result_name=self.task_name,
            result_description="Seeded Helmholtz decomposition property suite",
            details={"helmholtz_checks": checks.model_dump()},
            formatted="\n".join(lines),
            failed_checks=checks.failed_checks(),
        )
