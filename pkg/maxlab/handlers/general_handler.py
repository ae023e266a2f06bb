from importlib.metadata import entry_points
from typing import TYPE_CHECKING, Any

from loguru import logger
from pluggy import HookimplMarker, HookspecMarker, PluginManager
from pydantic import ValidationError

from maxlab.core.errors import ConfigError

if TYPE_CHECKING:
    from maxlab.cli.config import RunConfig
    from maxlab.core.plugins import Result

PROJECT = "maxlab"
ENTRY_POINT_GROUP = "maxlab.plugins"

hookspec = HookspecMarker(PROJECT)
hookimpl = HookimplMarker(PROJECT)


class TaskSpec:
    """Base contract for tasks.
    A task computes one part of the report from the run configuration."""

    @hookspec(firstresult=True)
    def run_task(self, task: str, config: "RunConfig") -> "Result | None":
        """Run ``task`` if this plugin owns it, otherwise return None."""


class OutputSpec:
    """Base contract for outputs.
    Outputs write or show the results of every task."""

    @hookspec
    def process_results(self, results: list["Result"], config: "RunConfig") -> None:
        """Output the results of the run."""


def builtin_plugins() -> dict[str, Any]:
    """The plugins shipped with maxlab, by registration name."""
    from maxlab.outputs.cli_output import CLIOutput
    from maxlab.outputs.csv_file import CSVFileOutput
    from maxlab.outputs.json_file import JSONFileOutput
    from maxlab.tasks.constants_task import ConstantsTask
    from maxlab.tasks.helmholtz_task import HelmholtzTask
    from maxlab.tasks.interlacing_task import InterlacingTask

    return {
        "constants": ConstantsTask(),
        "helmholtz": HelmholtzTask(),
        "interlacing": InterlacingTask(),
        "json_file": JSONFileOutput(),
        "csv_file": CSVFileOutput(),
        "cli": CLIOutput(),
    }


class GeneralHandler:
    """Registers the plugins of a run, runs its tasks and hands the results to the outputs."""

    def __init__(self, config: "RunConfig", load_entrypoints: bool = True):
        self.config = config
        self.manager = PluginManager(PROJECT)
        self.manager.add_hookspecs(TaskSpec)
        self.manager.add_hookspecs(OutputSpec)
        for name, plugin in builtin_plugins().items():
            self.register(plugin, name)
        if load_entrypoints:
            self._load_entrypoints()

    def _load_entrypoints(self):
        for ep in entry_points(group=ENTRY_POINT_GROUP):
            if self.manager.get_plugin(ep.name) is not None:
                continue
            logger.debug(f"Loading plugin {ep.name} from {ep.value}")
            try:
                plugin = ep.load()()
            except Exception as e:
                logger.error(f"Could not load plugin {ep.name}: {e}")
                raise ConfigError(f"plugin {ep.name} failed to load: {e}", "handlers", "load_plugins") from e
            self.register(plugin, ep.name)

    def register(self, plugin: Any, name: str) -> None:
        """Configure ``plugin`` from the run config and add it to the manager."""
        grab_config = getattr(plugin, "grab_config", None)
        if grab_config is not None:
            try:
                model = grab_config().model_validate(self.config.settings())
            except ValidationError as e:
                logger.error(f"Invalid configuration for plugin {name}: {e}")
                raise ConfigError(f"invalid configuration for plugin {name}", "handlers", "register") from e
            plugin.set_data(model)
        activate = getattr(plugin, "activate", None)
        if activate is not None:
            activate()
        self.manager.register(plugin, name=name)
        logger.trace(f"Registered plugin {name}")

    @property
    def task_names(self) -> list[str]:
        return [
            plugin.task_name
            for _, plugin in self.manager.list_name_plugin()
            if getattr(plugin, "task_name", None) is not None
        ]

    def run(self) -> list["Result"]:
        """Run the configured tasks in order, then every output plugin. Returns the results."""
        unknown = [task for task in self.config.tasks if task not in self.task_names]
        if unknown:
            raise ConfigError(
                f"unknown tasks {unknown}, available: {sorted(self.task_names)}", "handlers", "run"
            )
        results = []
        for task in self.config.tasks:
            logger.info(f"Running task {task}")
            result = self.manager.hook.run_task(task=task, config=self.config)
            results.append(result)
            if result.failed_checks:
                logger.warning(f"Task {task} has failed checks: {', '.join(result.failed_checks)}")
            else:
                logger.success(f"Task {task} finished")
        self.manager.hook.process_results(results=results, config=self.config)
        return results
