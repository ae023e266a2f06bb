import csv
import os
from typing import TYPE_CHECKING, Annotated

from loguru import logger
from pydantic import BaseModel, Field

from maxlab.core.errors import ConfigError
from maxlab.core.plugins import Result
from maxlab.handlers.general_handler import hookimpl

if TYPE_CHECKING:
    from maxlab.cli.config import RunConfig

COLUMNS = [
    "n",
    "h",
    "lambda1",
    "mu2",
    "lambda_max_t",
    "lambda_max_n",
    "lambda1_eps",
    "mu2_eps",
    "d_D",
    "d_N",
]


def _cell(value) -> str:
    # repr keeps every digit, so the CSV carries the JSON numbers exactly
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def level_rows(details: dict) -> list[list[str]]:
    """One row per level plus an ``extrapolated`` row, taken from a constants report."""
    rows = [[_cell(record.get(column)) for column in COLUMNS] for record in details["levels"]]
    ext = details["extrapolated"]
    rows.append(["extrapolated", ""] + [_cell(ext.get(column)) for column in COLUMNS[2:8]] + ["", ""])
    return rows


class CSVFileOutput:
    """Writes the per-level table of the constants task as CSV."""

    def __init__(self):
        pass

    @hookimpl
    def grab_config(self):
        class CSVFileConfig(BaseModel):
            """Configuration for the CSV table."""

            csv_path: Annotated[
                str | None,
                Field(default=None, description="The file to write the level table to."),
            ]

        return CSVFileConfig

    @hookimpl
    def activate(self):
        if self.model.csv_path:
            folder = os.path.dirname(self.model.csv_path)
            if folder and not os.path.exists(folder):
                try:
                    os.makedirs(folder)
                except OSError as e:
                    logger.error(f"Cannot create the CSV folder {folder}")
                    raise ConfigError(f"cannot create {folder}: {e}", "outputs", "csv_file") from e

    @hookimpl
    def set_data(self, model: BaseModel):
        self.model = model

    @hookimpl
    def process_results(self, results: list[Result], config: "RunConfig"):
        path = self.model.csv_path
        if not path:
            return
        constants = [result for result in results if result.result_name == "constants"]
        if not constants:
            logger.warning(f"No constants task in this run, '{path}' is not written")
            return
        logger.info(f"Writing level table to '{path}'")
        try:
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(COLUMNS)
                writer.writerows(level_rows(constants[0].details))
        except OSError as e:
            logger.error(f"IO error while writing to '{path}': {e}")
            raise ConfigError(f"cannot write {path}: {e}", "outputs", "csv_file") from e
