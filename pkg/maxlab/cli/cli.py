"""Command line batch runner.

Reads a JSON run configuration, runs the requested tasks and writes the
reports. Exit codes: 0 when every check holds, 2 when a check failed, 3 on a
computation error and 4 on a configuration or mesh error.
"""

import argparse
import sys
from pathlib import Path

from loguru import logger
from pydantic import ValidationError
from rich.table import Table

from maxlab.cli.config import Diagnostic, RunConfig, env_jobs, missing_files
from maxlab.cli.console import console
from maxlab.core.errors import ConfigError, LabError
from maxlab.handlers.general_handler import GeneralHandler
from maxlab.mesh.mesh import DomainSpec

EXIT_OK = 0
EXIT_CHECKS_FAILED = 2
EXIT_CONFIG = ConfigError.exit_code
WARN_FRACTION = 0.8


def estimate_dofs(domain: DomainSpec, n: int) -> tuple[int, int]:
    """(vertex count, edge count) of level ``n``; closed form for boxes and rectangles."""
    if domain.kind == "rect2d":
        return (n + 1) ** 2, 3 * n**2 + 2 * n
    if domain.kind == "box3d":
        return (n + 1) ** 3, 3 * n * (n + 1) ** 2 + 3 * n**2 * (n + 1) + n**3
    mesh = domain.build(n)
    return mesh.n_vertices, mesh.n_edges


def interior_vertex_count(domain: DomainSpec, n: int) -> int:
    """Dofs of the essential P1 space at level ``n``; closed form for boxes and rectangles."""
    if domain.kind == "rect2d":
        return (n - 1) ** 2
    if domain.kind == "box3d":
        return (n - 1) ** 3
    return int(domain.build(n).interior_vertices.size)


def validate(config: RunConfig, max_dofs: int | None = None) -> list[Diagnostic]:
    """Dry run: check inputs and per-level sizes against the dense solver budget without assembling."""
    budget = max_dofs or config.max_dofs
    diagnostics = [Diagnostic(severity="error", message=message) for message in missing_files(config)]
    if diagnostics:
        return diagnostics

    levels = set(config.levels)
    if "helmholtz" in config.tasks:
        levels.add(config.suite_level)
    interior = {}
    for n in sorted(levels):
        try:
            vertices, edges = estimate_dofs(config.domain, n)
            interior[n] = interior_vertex_count(config.domain, n)
        except LabError as e:
            diagnostics.append(Diagnostic(severity="error", message=str(e), level=n))
            continue
        logger.info(f"Level n={n}: {vertices} vertex dofs, {edges} edge dofs")
        if interior[n] == 0:
            diagnostics.append(
                Diagnostic(
                    severity="error",
                    message=f"level n={n} has no interior vertex, the Dirichlet problem is empty",
                    level=n,
                )
            )
        if edges > budget:
            diagnostics.append(
                Diagnostic(
                    severity="error",
                    message=f"level n={n} has {edges} edge dofs, above the dense solver budget {budget}",
                    level=n,
                )
            )
        elif edges > WARN_FRACTION * budget:
            diagnostics.append(
                Diagnostic(
                    severity="warning",
                    message=f"level n={n} has {edges} edge dofs, close to the dense solver budget {budget}",
                    level=n,
                )
            )

    k = config.interlacing_k
    if "interlacing" in config.tasks and k > 0:
        coarse = [n for n in config.levels if n in interior and 0 < interior[n] < k]
        usable = [n for n in config.levels if interior.get(n, 0) >= k]
        for n in coarse:
            diagnostics.append(
                Diagnostic(
                    severity="warning" if usable else "error",
                    message=f"level n={n} has {interior[n]} Dirichlet dofs, fewer than interlacing_k={k}; "
                    + ("it is left out of the interlacing table" if usable else "no level can be tabulated"),
                    level=n,
                )
            )
    return diagnostics


def run(config: RunConfig, max_dofs: int | None = None) -> int:
    """Run every task of ``config`` and write the reports; returns the exit code."""
    diagnostics = validate(config, max_dofs)
    for d in diagnostics:
        (logger.error if d.severity == "error" else logger.warning)(d.message)
    if any(d.severity == "error" for d in diagnostics):
        return EXIT_CONFIG

    try:
        results = GeneralHandler(config).run()
    except LabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code

    failed = [name for result in results for name in result.failed_checks]
    if failed:
        logger.warning(f"{len(failed)} checks failed: {', '.join(failed)}")
        return EXIT_CHECKS_FAILED
    logger.success("All checks passed")
    return EXIT_OK


def load_config(path: str) -> RunConfig:
    """Parse a JSON run configuration."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"Cannot read config {path}: {e}")
        raise ConfigError(f"cannot read {path}: {e}", "cli", "load_config") from e
    try:
        return RunConfig.model_validate_json(text)
    except ValidationError as e:
        logger.error(f"Invalid config {path}:\n{e}")
        raise ConfigError(f"invalid config {path}", "cli", "load_config") from e


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Config with the command line flags applied; flags win over the file."""
    data = config.model_dump()
    if args.out_json is not None:
        data["output"]["json_path"] = args.out_json
    if args.out_csv is not None:
        data["output"]["csv_path"] = args.out_csv
    if args.max_dofs is not None:
        data["max_dofs"] = args.max_dofs
    jobs = args.jobs if args.jobs is not None else env_jobs()
    if jobs is not None:
        data["jobs"] = jobs
    if args.progress:
        data["progress"] = True
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        logger.error(f"Invalid command line overrides:\n{e}")
        raise ConfigError("invalid command line overrides", "cli", "apply_overrides") from e


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def add_args() -> argparse.ArgumentParser:
    """Add arguments to the parser."""
    parser = argparse.ArgumentParser(
        prog="maxlab", description="Compute Poincare, Friedrichs and Maxwell constants on a domain."
    )
    parser.add_argument("--config", required=True, help="JSON run configuration.")
    parser.add_argument("--out-json", default=None, help="Write the JSON report here.")
    parser.add_argument("--out-csv", default=None, help="Write the per-level CSV table here.")
    parser.add_argument("--max-dofs", type=_positive_int, default=None, help="Edge dof budget per level.")
    parser.add_argument("--validate", action="store_true", help="Only check the config and the level sizes.")
    parser.add_argument(
        "--jobs", type=_positive_int, default=None, help="Levels computed at once (default: MAXLAB_JOBS or 1)."
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"],
        type=str.upper,
        help="Log level of the stderr sink.",
    )
    parser.add_argument("--progress", action="store_true", help="Show progress bars over levels.")
    return parser


def configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level, format="<level>{level: <8}</level> | {name}:{function} - {message}")


def print_diagnostics(diagnostics: list[Diagnostic]) -> None:
    if not diagnostics:
        console.print("[green]Configuration is valid.[/green]")
        return
    table = Table(title="Diagnostics")
    table.add_column("severity")
    table.add_column("level")
    table.add_column("message")
    for d in diagnostics:
        style = "red" if d.severity == "error" else "yellow"
        table.add_row(f"[{style}]{d.severity}[/{style}]", "" if d.level is None else str(d.level), d.message)
    console.print(table)


def main(argv: list[str] | None = None) -> int:
    args = add_args().parse_args(argv)
    configure_logging(args.log_level)
    try:
        config = apply_overrides(load_config(args.config), args)
    except LabError as e:
        return e.exit_code

    if args.validate:
        diagnostics = validate(config)
        print_diagnostics(diagnostics)
        return EXIT_CONFIG if any(d.severity == "error" for d in diagnostics) else EXIT_OK
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
