import json
import os
from typing import TYPE_CHECKING, Annotated

from loguru import logger
from pydantic import BaseModel, Field

from maxlab.core.errors import ConfigError
from maxlab.core.plugins import Result
from maxlab.handlers.general_handler import hookimpl

if TYPE_CHECKING:
    from maxlab.cli.config import RunConfig


def report_document(results: list[Result], config: "RunConfig") -> dict:
    """The JSON report: run identity, then the details of every task in task order."""
    document = {
        "domain": config.domain.label,
        "epsilon": config.epsilon.label,
        "tasks": [result.result_name for result in results],
    }
    for result in results:
        document.update(result.details)
    document["failed_checks"] = [name for result in results for name in result.failed_checks]
    return document


class JSONFileOutput:
    """
    Plugin for writing the run report to a JSON file.
    """

    def __init__(self):
        pass

    @hookimpl
    def grab_config(self):
        """
        Return the plugin's configuration
        """

        class JSONFileConfig(BaseModel):
            """Configuration for the JSON report."""

            json_path: Annotated[
                str | None,
                Field(default=None, description="The file to write the report to."),
            ]

        return JSONFileConfig

    @hookimpl
    def activate(self):
        """
        Create the folder of the report if needed.
        """
        if self.model.json_path:
            folder = os.path.dirname(self.model.json_path)
            if folder and not os.path.exists(folder):
                try:
                    os.makedirs(folder)
                except OSError as e:
                    logger.error(f"Cannot create the report folder {folder}")
                    raise ConfigError(f"cannot create {folder}: {e}", "outputs", "json_file") from e

    @hookimpl
    def set_data(self, model: BaseModel):
        """
        Set the data for the plugin based on the model.
        """
        self.model = model

    @hookimpl
    def process_results(self, results: list[Result], config: "RunConfig"):
        """
        Writes the merged report as one JSON file.

        Args:
            results (list[Result]): The results of the tasks, in task order.
            config (RunConfig): The run configuration.
        """
        path = self.model.json_path
        if not path:
            logger.debug("No JSON report requested")
            return
        logger.info(f"Writing JSON report to '{path}'")
        try:
            text = json.dumps(report_document(results, config), indent=2)
            with open(path, "w", encoding="utf-8") as f:
                f.write(text + "\n")
        except TypeError as e:
            logger.error(f"Failed to serialize the report to JSON: {e}")
            raise ConfigError(f"report is not serializable: {e}", "outputs", "json_file") from e
        except OSError as e:
            logger.error(f"IO error while writing to '{path}': {e}")
            raise ConfigError(f"cannot write {path}: {e}", "outputs", "json_file") from e
        logger.success(f"JSON report written to '{path}'")
