from typing import TYPE_CHECKING, Annotated

from loguru import logger
from pydantic import BaseModel, Field

from maxlab.assembly.material import EpsilonSpec
from maxlab.constants.constants import ConstantsReport, constants_report
from maxlab.core.plugins import Result
from maxlab.handlers.general_handler import hookimpl
from maxlab.mesh.mesh import DomainSpec

if TYPE_CHECKING:
    from maxlab.cli.config import RunConfig


def format_report(report: ConstantsReport) -> str:
    """Plain text summary of a constants report."""
    c = report.constants
    lines = [
        f"{report.domain}, eps={report.epsilon}, levels {[r.n for r in report.levels]}",
        f"c_p0={c.c_p0:.6g} c_p={c.c_p:.6g} c_mt={c.c_mt:.6g} c_mn={c.c_mn:.6g} diam/pi={c.diam_over_pi:.6g}",
        f"harmonic fields: d_D={report.d_D} d_N={report.d_N}",
    ]
    lines += [f"{check.name}: {check.status}" for check in report.checks]
    return "\n".join(lines)


class ConstantsTask:
    """Computes the Poincare, Friedrichs and Maxwell constants and checks their chain."""

    task_name = "constants"

    def __init__(self):
        pass

    @hookimpl
    def grab_config(self):
        """
        Return the plugin's configuration
        """

        class ConstantsConfig(BaseModel):
            """Configuration for the constants task."""

            domain: DomainSpec
            epsilon: Annotated[EpsilonSpec, Field(default_factory=EpsilonSpec)]
            levels: Annotated[list[int], Field(default=[2, 4], description="Refinement levels.")]
            jobs: Annotated[int, Field(default=1, ge=1, description="Levels computed at once.")]
            progress: Annotated[bool, Field(default=False, description="Show a progress bar.")]

        return ConstantsConfig

    @hookimpl
    def set_data(self, model: BaseModel):
        """
        Set the data for the plugin based on the model.
        """
        self.model = model

    @hookimpl
    def activate(self):
        logger.debug(f"Constants task ready for {self.model.domain.label} at levels {self.model.levels}")

    @hookimpl
    def run_task(self, task: str, config: "RunConfig") -> Result | None:
        if task != self.task_name:
            return None
        m = self.model
        report = constants_report(m.domain, m.epsilon, m.levels, jobs=m.jobs, progress=m.progress)
        return Result(
            relates_to=report.domain,
            result_name=self.task_name,
            result_description="Poincare, Friedrichs and Maxwell constants with the inequality chain",
            details=report.model_dump(),
            formatted=format_report(report),
            failed_checks=report.failed_checks(),
        )
