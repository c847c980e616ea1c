"""
cli

Command-line front end of growth_isrp.

Commands:
    catalog    List the catalog (rich table, JSON or DOT).
    simulate   Draw a trajectory panel from a catalog model.
    isrp       ISRP profile of a data file, or Monte-Carlo replication of a simulation plan.
    fit        Least-squares fit of a catalog model, or of a rate form to the RGR profile
               (also writing the individual RGR profiles).
    select     Two-stage model identification.
    bootstrap  Row-bootstrap comparison of catalog models.
    profile    Size profiles of a catalog model, optionally swept over one parameter.

Every command writes its files to a staging directory and moves them into the output
directory only once it has succeeded. Errors print a single line "error[Name]: message" on
standard error and exit with 2 (configuration), 3 (data) or 4 (numerical failure).

Dependencies:
    - rich: console tables and the logging handler.
    - python-dotenv (through growth_isrp.config): environment defaults.
"""
import argparse
import logging
import os
import shutil
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Sequence, TextIO

import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from growth_isrp.config import Settings, load_settings
from growth_isrp.datasets import read_panel, write_json, write_rows, write_series, write_wide
from growth_isrp.errors import ConfigError, DataError, GrowthIsrpError, NonPositiveValue
from growth_isrp.growth_models import (
    catalog,
    export_catalog_json,
    get_spec,
    grid_times,
    parse_model_id,
    size_profile,
    sweep,
)
from growth_isrp.isrp import isrp_profile, series_to_rows
from growth_isrp.model_types import FitResult, ModelId, Parent, TrajectoryPanel
from growth_isrp.nls import CandidateTemplate, FitProblem, ModelCurve, Params, bootstrap_select, initial_guess, nls_fit
from growth_isrp.report import ReportRenderer
from growth_isrp.selection import (
    RateForm,
    default_forms,
    detect_variation,
    fit_rate_form,
    moving_average,
    rgr_matrix,
    rgr_series,
    select_model,
)
from growth_isrp.simulation import koopman_matrix, replicate_isrp, simulate

logger = logging.getLogger("growth_isrp")

OWID_SMOOTH_WINDOW = 5
SUMMARY_COLUMNS = [
    "j", "t_j", "count", "failures", "mean", "variance", "skewness",
    "q025", "q25", "q50", "q75", "q975", "delta_variance",
]


class OutputStage:
    """Collects output files in a staging directory and commits them together."""

    def __init__(self, output_dir: str):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.output_dir))
        self.files: list[str] = []

    @contextmanager
    def open(self, name: str) -> Iterator[TextIO]:
        self.files.append(name)
        with open(self.staging / name, "w", encoding="utf-8", newline="\n") as handle:
            yield handle

    def commit(self) -> list[Path]:
        written: list[Path] = []
        for name in self.files:
            target = self.output_dir / name
            os.replace(self.staging / name, target)
            logger.info("wrote %s", target)
            written.append(target)
        self.discard()
        return written

    def discard(self) -> None:
        shutil.rmtree(self.staging, ignore_errors=True)


def _parse_params(items: Sequence[str] | None) -> dict[str, float] | None:
    if not items:
        return None
    params: dict[str, float] = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"parameter '{item}' is not of the form name=value")
        try:
            params[name.strip()] = float(value)
        except ValueError as e:
            raise ConfigError(f"parameter '{name}' has a non-numeric value '{value}'") from e
    return params


def _parse_candidate(text: str) -> tuple[ModelId, Params]:
    """'parent/variation' optionally followed by ':name=value,...' for fixed parameters."""
    model_text, _, fixed_text = text.partition(":")
    fixed = _parse_params([f for f in fixed_text.split(",") if f]) or {}
    return parse_model_id(model_text), fixed


def _parent(settings: Settings) -> Parent:
    try:
        return Parent(settings.parent)
    except ValueError as e:
        raise ConfigError(f"unknown parent '{settings.parent}'") from e


def _rate_forms(settings: Settings) -> list[RateForm]:
    if not settings.forms:
        return default_forms(settings.include_periodic)
    try:
        return [RateForm(f) for f in settings.forms]
    except ValueError as e:
        raise ConfigError(f"unknown rate form in {settings.forms}") from e


class GrowthIsrpCli:
    """
    Argument parsing and command dispatch.

    Attributes:
        console (Console): Standard-output console for tables.
        err_console (Console): Standard-error console for logs and error lines.
        renderer (ReportRenderer): Template renderer.
    """

    def __init__(self) -> None:
        self.console = Console()
        self.err_console = Console(stderr=True)
        self.renderer = ReportRenderer()
        self.parser = self._build_parser()

    def _build_parser(self) -> argparse.ArgumentParser:
        base = argparse.ArgumentParser(add_help=False)
        base.add_argument("-c", "--config", help="TOML or JSON settings file.")
        base.add_argument("-o", "--output-dir", dest="output_dir", help="Directory for output files.")
        base.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR.")

        common = argparse.ArgumentParser(add_help=False, parents=[base])
        common.add_argument("--seed", type=int, help="Master seed (default from GROWTH_ISRP_SEED).")
        common.add_argument("--threads", type=int, help="Worker threads.")
        common.add_argument("--format", dest="formats", action="append", help="Output format; repeatable.")
        common.add_argument("--svg", action="store_true", default=None, help="Also write SVG plots.")

        data = argparse.ArgumentParser(add_help=False)
        data.add_argument("-i", "--input", help="Data file.")
        data.add_argument("--layout", help="wide, long, series or owid.")
        data.add_argument("--time-column", dest="time_column")
        data.add_argument("--value-column", dest="value_column")
        data.add_argument("--location", help="Country of an OWID table.")
        data.add_argument("--smooth-window", dest="smooth_window", type=int, help="Centred moving average.")

        model = argparse.ArgumentParser(add_help=False)
        model.add_argument("-m", "--model", help="Catalog entry as parent/variation.")
        model.add_argument("-p", "--param", dest="param", action="append", help="name=value; repeatable.")

        grid = argparse.ArgumentParser(add_help=False)
        grid.add_argument("--t0", type=float)
        grid.add_argument("--h", type=float)
        grid.add_argument("--q", type=int)

        sim = argparse.ArgumentParser(add_help=False)
        sim.add_argument("-n", type=int, dest="n", help="Trajectories per dataset.")
        sim.add_argument("--sigma2", type=float)
        sim.add_argument("--rho", type=float)
        sim.add_argument("--replications", type=int)

        parser = argparse.ArgumentParser(
            prog="growth-isrp",
            description="Interval-specific rate parameters and model selection for growth curves.",
        )
        sub = parser.add_subparsers(dest="command", required=True, help="Available commands")

        p = sub.add_parser("catalog", parents=[base], help="List the growth-model catalog")
        p.add_argument("--format", dest="catalog_format", choices=("table", "json", "dot"), default="table")
        p.add_argument("--all", dest="all_models", action="store_true", help="Include parents and extra entries.")

        sub.add_parser("simulate", parents=[common, model, grid, sim], help="Simulate a trajectory panel")

        p = sub.add_parser("isrp", parents=[common, data, model, grid, sim], help="ISRP profile or replication study")
        p.add_argument("--parent")
        p.add_argument("--target", choices=("r", "K"))
        p.add_argument("--theta", type=float)

        p = sub.add_parser("fit", parents=[common, data, model], help="Fit a catalog model to mean sizes")
        p.add_argument("--free", help="Comma-separated parameters to estimate.")
        p.add_argument("--rate-form", dest="rate_form", help="Fit this rate form to the RGR profile instead.")

        p = sub.add_parser("select", parents=[common, data], help="Two-stage model identification")
        p.add_argument("--parent")
        p.add_argument("--theta", type=float)
        p.add_argument("--forms", help="Comma-separated rate forms.")
        p.add_argument("--include-periodic", dest="include_periodic", action="store_true", default=None)
        p.add_argument("--early-only", dest="early_only", action="store_true", default=None)

        p = sub.add_parser("bootstrap", parents=[common, data], help="Bootstrap model comparison")
        p.add_argument("--candidates", help="Comma-separated parent/variation[:name=value] entries.", nargs="+")
        p.add_argument("-B", type=int, dest="B", help="Bootstrap replicates.")

        p = sub.add_parser("profile", parents=[common, model, grid], help="Size profiles of a catalog model")
        p.add_argument("--sweep-param", dest="sweep_param")
        p.add_argument("--sweep-values", dest="sweep_values", help="Comma-separated values.")
        return parser

    def parse_arguments(self, argv: Sequence[str] | None = None) -> argparse.Namespace:
        return self.parser.parse_args(argv)

    def settings_from(self, args: argparse.Namespace) -> Settings:
        """Flag values override the config file, which overrides the environment."""
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "param", "all_models", "catalog_format")}
        for name in ("t0", "h", "q"):
            flags.pop(name, None)
        grid = {name: getattr(args, name) for name in ("t0", "h", "q") if getattr(args, name, None) is not None}
        overrides: dict[str, Any] = {k: v for k, v in flags.items() if v is not None}
        if isinstance(overrides.get("candidates"), list):
            overrides["candidates"] = [c for item in overrides["candidates"] for c in item.split(",") if c]
        params = _parse_params(getattr(args, "param", None))
        if params:
            overrides["params"] = params
        settings = load_settings(args.config, overrides)
        if grid:
            settings.grid = {**settings.grid, **grid}
        return settings

    def configure_logging(self, level: str) -> None:
        logging.basicConfig(
            level=level,
            format="%(message)s",
            handlers=[RichHandler(console=self.err_console, show_path=False)],
            force=True,
        )

    def print_error(self, error: BaseException) -> None:
        self.err_console.print(
            f"error[{type(error).__name__}]: {error}", markup=False, highlight=False, soft_wrap=True
        )

    def run(self, args: argparse.Namespace) -> int:
        settings = self.settings_from(args)
        self.configure_logging(settings.log_level)
        handler = getattr(self, f"cmd_{args.command}")
        if args.command == "catalog":
            return handler(settings, args.all_models, args.catalog_format)
        stage = OutputStage(settings.output_dir)
        try:
            handler(settings, stage)
        except BaseException:
            stage.discard()
            raise
        stage.commit()
        return 0

    # data helpers

    def load_data(self, settings: Settings) -> TrajectoryPanel:
        if settings.input is None:
            raise ConfigError("this command needs --input")
        columns = {"time_column": settings.time_column, "value_column": settings.value_column,
                   "id_column": settings.id_column}
        if settings.layout == "owid":
            if settings.location is None:
                raise ConfigError("the owid layout needs --location")
            columns["location"] = settings.location
            if settings.value_column == "x":
                columns["value_column"] = "total_cases"
        panel = read_panel(settings.input, settings.layout, **columns)
        window = settings.smooth_window
        if window is None and settings.layout == "owid":
            window = OWID_SMOOTH_WINDOW
        if window and window > 1:
            smoothed = [moving_average(panel["times"], row, window) for row in panel["values"]]
            panel = {"ids": panel["ids"], "times": smoothed[0][0], "values": np.array([s[1] for s in smoothed])}
        return panel

    def _fit_table(self, title: str, result: FitResult) -> Table:
        table = Table(title=title)
        table.add_column("Parameter")
        table.add_column("Estimate", justify="right")
        table.add_column("Std. error", justify="right")
        for name in result["free"]:
            table.add_row(name, f"{result['estimates'][name]:.6g}", f"{result['stderr'][name]:.3g}")  # type: ignore[literal-required]
        table.caption = f"RSS {result['rss']:.6g}  RMSE {result['rmse']:.6g}  AIC {result['aic']:.4f}"
        return table

    # commands

    def cmd_catalog(self, settings: Settings, all_models: bool, fmt: str) -> int:
        entries = catalog(include_all=all_models)
        if fmt == "table":
            table = Table(title="Growth-model catalog")
            for column in ("Ref", "Model", "Parent", "Variation", "Form", "Closed form"):
                table.add_column(column)
            for e in entries:
                table.add_row(e["table_ref"], e["label"], e["parent"], e["variation"], e["form"],
                              "yes" if e["has_closed_form"] else "no")
            self.console.print(table)
            return 0
        stage = OutputStage(settings.output_dir)
        try:
            with stage.open(f"catalog.{fmt}") as handle:
                if fmt == "json":
                    handle.write(export_catalog_json(all_models))
                else:
                    handle.write(self.renderer.catalog_dot(entries))
        except BaseException:
            stage.discard()
            raise
        stage.commit()
        return 0

    def cmd_simulate(self, settings: Settings, stage: OutputStage) -> None:
        plan = settings.plan()
        data = simulate(plan)
        times = grid_times(plan["grid"])
        with stage.open("trajectories.csv") as handle:
            write_wide(handle, {"ids": [str(i + 1) for i in range(plan["n"])], "times": times, "values": data})
        with stage.open("plan.json") as handle:
            write_json(handle, {**plan, "model": str(plan["model"])})

    def cmd_isrp(self, settings: Settings, stage: OutputStage) -> None:
        if settings.replications > 1:
            self._isrp_replications(settings, stage)
            return
        panel = self.load_data(settings)
        parent = _parent(settings)
        cov = settings.supplied_koopman()
        sigma = None if cov is None else koopman_matrix(cov, len(panel["times"]))
        series = isrp_profile(panel["values"], panel["times"], parent, settings.target,  # type: ignore[arg-type]
                              settings.theta, sigma)
        rows = series_to_rows(series)
        if "csv" in settings.formats:
            with stage.open("isrp.csv") as handle:
                write_rows(handle, ["j", "t_j", "estimate", "variance", "ci_lo", "ci_hi", "status"], rows)
        if "json" in settings.formats:
            with stage.open("isrp.json") as handle:
                write_json(handle, series)
        if settings.svg:
            ok = [r for r in rows if r["estimate"] is not None]
            with stage.open("isrp.svg") as handle:
                handle.write(self.renderer.line_plot_svg(
                    {settings.target: ([r["t_j"] for r in ok], [r["estimate"] for r in ok])},  # type: ignore[misc]
                    f"ISRP profile of {settings.target} ({parent})", "t", settings.target,
                ))

    def _isrp_replications(self, settings: Settings, stage: OutputStage) -> None:
        plan = settings.plan()
        summaries, estimates = replicate_isrp(plan, settings.target, settings.threads)  # type: ignore[arg-type]
        with stage.open("isrp_summary.csv") as handle:
            write_rows(handle, SUMMARY_COLUMNS, summaries)
        with stage.open("isrp_replicates.csv") as handle:
            write_rows(handle, ["replicate", "j", "estimate"], (
                (k + 1, j + 1, None if np.isnan(v) else float(v))
                for k, row in enumerate(estimates) for j, v in enumerate(row)
            ))
        if "json" in settings.formats:
            with stage.open("isrp_summary.json") as handle:
                write_json(handle, {"plan": {**plan, "model": str(plan["model"])}, "target": settings.target,
                                    "summaries": summaries})
        if settings.svg:
            with stage.open("isrp_boxplot.svg") as handle:
                handle.write(self.renderer.box_plot_svg(
                    summaries, f"{plan['replications']} replicates of {settings.target}", settings.target
                ))

    def cmd_fit(self, settings: Settings, stage: OutputStage) -> None:
        panel = self.load_data(settings)
        t = panel["times"]
        y = panel["values"].mean(axis=0)
        if settings.rate_form:
            try:
                form = RateForm(settings.rate_form)
            except ValueError as e:
                raise ConfigError(f"unknown rate form '{settings.rate_form}'") from e
            t, y = rgr_series(t, y)
            if settings.params:
                result = nls_fit(FitProblem(form.curve, t, y, dict(settings.params), tuple(settings.free)))
            else:
                fitted = fit_rate_form(form, t, y)
                if fitted["result"] is None:
                    raise DataError(f"{form.curve.label} could not be fitted to the RGR profile")
                result = fitted["result"]
            curve = form.curve
            self._write_individual_rgr(panel, stage)
        else:
            if not settings.model:
                raise ConfigError("fit needs --model or --rate-form")
            model = parse_model_id(settings.model)
            init = {**initial_guess(model, t, y), **settings.params}
            curve = ModelCurve(model)
            result = nls_fit(FitProblem(curve, t, y, init, tuple(settings.free)))
        fitted_values = curve(np.asarray(t), dict(result["estimates"]))  # type: ignore[arg-type]
        self.console.print(self._fit_table(curve.label, result))
        with stage.open("fit.json") as handle:
            write_json(handle, {"curve": curve.label, **result})
        with stage.open("fitted.csv") as handle:
            write_rows(handle, ["t", "observed", "fitted"], zip(t, y, fitted_values))
        if settings.svg:
            with stage.open("fit.svg") as handle:
                handle.write(self.renderer.line_plot_svg(
                    {"observed": (t, y), "fitted": (t, fitted_values)}, curve.label
                ))

    def _write_individual_rgr(self, panel: TrajectoryPanel, stage: OutputStage) -> None:
        try:
            midpoints, profiles = rgr_matrix(panel["values"], panel["times"])
        except NonPositiveValue as e:
            logger.warning("individual RGR profiles skipped: %s", e)
            return
        with stage.open("rgr.csv") as handle:
            write_wide(handle, {"ids": panel["ids"], "times": midpoints, "values": profiles})

    def cmd_select(self, settings: Settings, stage: OutputStage) -> None:
        panel = self.load_data(settings)
        parent = _parent(settings)
        isrp_stage = detect_variation(panel["values"], panel["times"], parent, _rate_forms(settings),
                                      settings.theta, settings.early_only, settings.threads)
        report = select_model(panel["values"], panel["times"], parent, isrp_stage, settings.theta, settings.threads)
        text = self.renderer.selection_text(report)
        self.console.print(text, markup=False, highlight=False)
        with stage.open("selection.json") as handle:
            write_json(handle, report)
        with stage.open("selection.txt") as handle:
            handle.write(text)
        with stage.open("isrp_profile.csv") as handle:
            write_rows(handle, ["t_j", "estimate"], zip(isrp_stage.t, isrp_stage.r))
        t = panel["times"]
        y = panel["values"].mean(axis=0)
        fitted: dict[str, Any] = {}
        for entry in report["model_stage"]:
            if entry["result"] is not None:
                model = parse_model_id(entry["key"].split(",")[0])
                fitted[entry["label"]] = size_profile_at(model, dict(entry["result"]["estimates"]), t)
        with stage.open("model_fits.csv") as handle:
            write_rows(handle, ["t", "observed", *fitted], zip(t, y, *fitted.values()))
        if settings.svg:
            with stage.open("selection.svg") as handle:
                handle.write(self.renderer.line_plot_svg(
                    {"observed": (t, y), **{k: (t, v) for k, v in fitted.items()}}, f"Models under {parent}"
                ))

    def cmd_bootstrap(self, settings: Settings, stage: OutputStage) -> None:
        if len(settings.candidates) < 1:
            raise ConfigError("bootstrap needs --candidates")
        panel = self.load_data(settings)
        t = panel["times"]
        y = panel["values"].mean(axis=0)
        templates: list[CandidateTemplate] = []
        for text in settings.candidates:
            model, fixed = _parse_candidate(text)
            spec = get_spec(model)
            init = {**initial_guess(model, t, y), **settings.params, **fixed}
            label = spec.label + "".join(f", {k}={v:g}" for k, v in fixed.items())
            free = tuple(n for n in spec.params if n not in fixed)
            templates.append(CandidateTemplate(ModelCurve(model, label), init, free))
        report = bootstrap_select(panel["values"], t, templates, settings.B, settings.seed, settings.threads)
        table = Table(title=f"Bootstrap wins over B={report['B']}")
        table.add_column("Candidate")
        table.add_column("Wins", justify="right")
        for label in report["labels"]:
            table.add_row(label, str(report["wins"][label]))
        self.console.print(table)
        with stage.open("bootstrap.json") as handle:
            write_json(handle, report)
        with stage.open("bootstrap_aic.csv") as handle:
            write_rows(handle, ["replicate", *report["labels"]], (
                [b + 1, *(report["aic_samples"][label][b] for label in report["labels"])] for b in range(report["B"])
            ))

    def cmd_profile(self, settings: Settings, stage: OutputStage) -> None:
        if not settings.model:
            raise ConfigError("profile needs --model")
        model = parse_model_id(settings.model)
        grid = settings.time_grid()
        times = grid_times(grid)
        params: Any = dict(settings.params)
        if settings.sweep_param:
            profiles = sweep(model, params, grid, settings.sweep_param, settings.sweep_values)
            columns = {f"{settings.sweep_param}={v:g}": p for v, p in profiles.items()}
        else:
            columns = {"x": size_profile(model, params, grid)}
        with stage.open("profile.csv") as handle:
            if settings.sweep_param:
                write_rows(handle, ["t", *columns], zip(times, *columns.values()))
            else:
                write_series(handle, times, columns["x"])
        if settings.svg:
            with stage.open("profile.svg") as handle:
                handle.write(self.renderer.line_plot_svg(
                    {k: (times, v) for k, v in columns.items()}, get_spec(model).label
                ))


def size_profile_at(model: ModelId, params: Params, times: np.ndarray) -> np.ndarray:
    """Fitted size curve of a catalog entry at arbitrary times."""
    return ModelCurve(model)(np.asarray(times, dtype=np.float64), params)


def main(argv: Sequence[str] | None = None) -> None:
    cli = GrowthIsrpCli()
    args = cli.parse_arguments(argv)
    code = 0
    try:
        code = cli.run(args)
    except GrowthIsrpError as e:
        cli.print_error(e)
        code = e.exit_code
    except OSError as e:
        cli.print_error(e)
        code = ConfigError.exit_code
    except KeyboardInterrupt:
        cli.err_console.print("Operation cancelled by user.")
        code = 130
    except Exception as e:  # pylint: disable=broad-exception-caught
        logger.debug("unexpected failure", exc_info=True)
        cli.print_error(e)
        code = 4
    finally:
        logging.shutdown()
    sys.exit(code)


if __name__ == "__main__":
    main()
