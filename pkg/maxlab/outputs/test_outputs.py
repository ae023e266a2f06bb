# ruff: noqa: S101
import csv
import json
import os
from unittest.mock import patch

import pytest
from pydantic import BaseModel

from maxlab.cli.config import RunConfig
from maxlab.constants.constants import constants_report
from maxlab.core.errors import ConfigError
from maxlab.core.plugins import Result
from maxlab.mesh.mesh import DomainSpec
from maxlab.outputs.cli_output import CLIOutput
from maxlab.outputs.csv_file import COLUMNS, CSVFileOutput
from maxlab.outputs.json_file import JSONFileOutput, report_document

CONFIG = RunConfig.model_validate({"domain": {"kind": "rect2d"}, "levels": [2]})


@pytest.fixture(scope="module")
def results():
    report = constants_report(DomainSpec(kind="rect2d"), levels=(2,))
    return [
        Result(
            relates_to=report.domain,
            result_name="constants",
            result_description="constants",
            details=report.model_dump(),
            formatted="",
        ),
        Result(
            relates_to=report.domain,
            result_name="interlacing",
            result_description="interlacing",
            details={"interlacing": {"k": 0, "rows": []}},
            formatted="",
            failed_checks=["interlacing n=1"],
        ),
    ]


@pytest.fixture
def json_plugin():
    return JSONFileOutput()


def test_grab_config(json_plugin):
    conf = json_plugin.grab_config()()
    assert conf.json_path is None


def test_report_document_merges_in_task_order(results):
    document = report_document(results, CONFIG)
    assert list(document)[:3] == ["domain", "epsilon", "tasks"]
    assert document["tasks"] == ["constants", "interlacing"]
    assert document["levels"][0]["n"] == 2
    assert document["interlacing"] == {"k": 0, "rows": []}
    assert list(document)[-1] == "failed_checks"
    assert document["failed_checks"] == ["interlacing n=1"]


def test_activate_creates_folder(json_plugin, tmp_path):
    class MockModel(BaseModel):
        json_path: str = str(tmp_path / "nested" / "report.json")

    json_plugin.set_data(MockModel())
    json_plugin.activate()
    assert os.path.isdir(tmp_path / "nested")


@pytest.mark.parametrize("plugin, field", [(JSONFileOutput, "json_path"), (CSVFileOutput, "csv_path")])
def test_activate_reports_folder_errors(plugin, field, tmp_path, loguru_caplog):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    output = plugin()
    output.set_data(output.grab_config()(**{field: str(blocker / "nested" / "report")}))
    with pytest.raises(ConfigError, match="cannot create") as err:
        output.activate()
    assert err.value.exit_code == 4
    assert isinstance(err.value.__cause__, OSError)
    assert "Cannot create" in loguru_caplog.text


def test_json_report_is_written(json_plugin, results, tmp_path):
    path = tmp_path / "report.json"

    class MockModel(BaseModel):
        json_path: str = str(path)

    json_plugin.set_data(MockModel())
    json_plugin.process_results(results, CONFIG)
    text = path.read_text(encoding="utf-8")
    assert json.loads(text) == report_document(results, CONFIG)
    assert text.endswith("}\n")
    assert '\n  "domain": "rect2d(1, 1)"' in text


def test_json_report_is_optional(json_plugin, results, tmp_path, loguru_caplog):
    class MockModel(BaseModel):
        json_path: str | None = None

    json_plugin.set_data(MockModel())
    json_plugin.process_results(results, CONFIG)
    assert os.listdir(tmp_path) == []
    assert "No JSON report requested" in loguru_caplog.text


def test_json_io_error(json_plugin, results, tmp_path, loguru_caplog):
    class MockModel(BaseModel):
        json_path: str = str(tmp_path / "report.json")

    json_plugin.set_data(MockModel())
    with patch("builtins.open", side_effect=OSError("disk full")):
        with pytest.raises(ConfigError, match="disk full"):
            json_plugin.process_results(results, CONFIG)
    assert "IO error" in loguru_caplog.text


def test_csv_projects_the_level_table(results, tmp_path):
    path = tmp_path / "levels.csv"
    plugin = CSVFileOutput()
    plugin.set_data(plugin.grab_config()(csv_path=str(path)))
    plugin.process_results(results, CONFIG)
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == COLUMNS
    level = results[0].details["levels"][0]
    assert int(rows[0]["n"]) == level["n"]
    for column in ("h", "lambda1", "mu2", "lambda_max_t", "lambda_max_n"):
        assert float(rows[0][column]) == level[column]
    assert rows[-1]["n"] == "extrapolated"
    assert float(rows[-1]["mu2"]) == results[0].details["extrapolated"]["mu2"]


def test_csv_needs_constants(results, tmp_path, loguru_caplog):
    path = tmp_path / "levels.csv"
    plugin = CSVFileOutput()
    plugin.set_data(plugin.grab_config()(csv_path=str(path)))
    plugin.process_results(results[1:], CONFIG)
    assert not path.exists()
    assert "No constants task" in loguru_caplog.text


def test_cli_output(results):
    plugin = CLIOutput()
    plugin.set_data(plugin.grab_config()())
    with patch("maxlab.outputs.cli_output.console") as console:
        plugin.process_results(results, CONFIG)
    console.rule.assert_any_call("maxlab: rect2d(1, 1), eps=identity")
    for result in results:
        console.rule.assert_any_call(f"[bold cyan]{result.result_name}[/bold cyan]")
    console.rule.assert_called_with()
    console.print.assert_any_call("[bold red]Failed checks:[/bold red] ['interlacing n=1']")


def test_cli_output_can_be_silenced(results):
    plugin = CLIOutput()
    plugin.set_data(plugin.grab_config()(console=False))
    with patch("maxlab.outputs.cli_output.console") as console:
        plugin.process_results(results, CONFIG)
    console.rule.assert_not_called()
