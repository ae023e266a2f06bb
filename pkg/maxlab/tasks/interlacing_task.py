from typing import TYPE_CHECKING, Annotated

from pydantic import BaseModel, Field

from maxlab.assembly.material import EpsilonSpec
from maxlab.constants.constants import interlacing_table
from maxlab.core.plugins import Result
from maxlab.handlers.general_handler import hookimpl
from maxlab.mesh.mesh import DomainSpec

if TYPE_CHECKING:
    from maxlab.cli.config import RunConfig


class InterlacingTask:
    """Tabulates Dirichlet against shifted Neumann eigenvalues."""

    task_name = "interlacing"

    def __init__(self):
        pass

    @hookimpl
    def grab_config(self):
        class InterlacingConfig(BaseModel):
            domain: DomainSpec
            epsilon: Annotated[EpsilonSpec, Field(default_factory=EpsilonSpec)]
            levels: Annotated[list[int], Field(default=[2, 4])]
            interlacing_k: Annotated[int, Field(default=3, ge=0, description="Number of pairs.")]
            jobs: Annotated[int, Field(default=1, ge=1)]

        return InterlacingConfig

    @hookimpl
    def set_data(self, model: BaseModel):
        self.model = model

    @hookimpl
    def run_task(self, task: str, config: "RunConfig") -> Result | None:
        if task != self.task_name:
            return None
        m = self.model
        table = interlacing_table(m.domain, m.interlacing_k, m.levels, m.epsilon, jobs=m.jobs)
        lines = [
            f"n={row.n}: mu_{row.n + 1}={row.mu_next:.6g} <= lambda_{row.n}={row.lambda_n:.6g} {row.satisfied}"
            for row in table.rows
        ]
        if table.skipped_levels:
            lines.append(f"levels {table.skipped_levels} have fewer than k={table.k} Dirichlet dofs and were left out")
        return Result(
            relates_to=table.domain,
            result_name=self.task_name,
            result_description="Interlacing of Dirichlet and Neumann eigenvalues",
            details={"interlacing": table.model_dump()},
            formatted="\n".join(lines),
            failed_checks=[f"interlacing n={row.n}" for row in table.rows if not row.satisfied],
        )
