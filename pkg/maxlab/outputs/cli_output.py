from typing import TYPE_CHECKING, Annotated

from pydantic import BaseModel, Field
from rich.pretty import Pretty
from rich.table import Table

from maxlab.cli.console import console
from maxlab.core.plugins import Result
from maxlab.handlers.general_handler import hookimpl

if TYPE_CHECKING:
    from maxlab.cli.config import RunConfig

STATUS_STYLE = {"passed": "green", "failed": "bold red"}


def constants_table(details: dict) -> Table:
    table = Table(title="Constants")
    table.add_column("name")
    table.add_column("value", justify="right")
    for name, value in details["constants"].items():
        table.add_row(name, f"{value:.8g}")
    return table


def checks_table(details: dict) -> Table:
    table = Table(title="Inequality checks")
    for column in ("check", "lhs", "rhs", "margin", "status"):
        table.add_column(column)
    for check in details["checks"]:
        style = STATUS_STYLE.get(check["status"], "yellow")
        table.add_row(
            check["name"],
            f"{check['lhs']:.8g}",
            f"{check['rhs']:.8g}",
            f"{check['margin']:.3g}",
            f"[{style}]{check['status']}[/{style}]",
        )
    return table


class CLIOutput:
    """Plugin for printing a summary of the run to the terminal."""

    def __init__(self):
        pass

    @hookimpl
    def grab_config(self):
        class CLIConfig(BaseModel):
            console: Annotated[bool, Field(default=True, description="Print a summary to the terminal.")]

        return CLIConfig

    @hookimpl
    def set_data(self, model: BaseModel):
        self.model = model

    @hookimpl
    def process_results(self, results: list[Result], config: "RunConfig"):
        """
        Prints the results of every task.

        Args:
            results (list[Result]): The results of the tasks.
            config (RunConfig): The run configuration.
        """
        if not self.model.console:
            return
        console.rule(f"maxlab: {config.domain.label}, eps={config.epsilon.label}")
        for result in results:
            console.rule(f"[bold cyan]{result.result_name}[/bold cyan]")
            if result.result_name == "constants":
                console.print(constants_table(result.details))
                console.print(checks_table(result.details))
                for note in result.details.get("notes", []):
                    console.print(f"[dim]note: {note}[/dim]")
            else:
                console.print(Pretty(result.details))
            if result.failed_checks:
                console.print(f"[bold red]Failed checks:[/bold red] {result.failed_checks}")
        console.rule()
