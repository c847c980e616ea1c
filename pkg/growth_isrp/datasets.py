"""
datasets

Readers and writers for the file formats the pipeline consumes and produces.

Layouts:
    wide:   header "id,t0,t1,...", one row per individual.
    long:   columns (id, t, x), one row per observation.
    series: columns (t, x), a single trajectory.
    owid:   Our World in Data country table; one location, cumulative column by date.

All time grids must be uniform within 1e-9 relative. Floats are written with repr so files
round-trip exactly and re-runs are byte-identical.

Dependencies:
    - pandas: CSV parsing, the long-to-wide pivot, OWID dates and CSV output.
    - numpy: trajectory matrices.

Usage:
    from growth_isrp.datasets import read_wide

    panel = read_wide("trajectories.csv")
    panel["values"].shape  # (n, q)
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, TextIO

import numpy as np
import pandas as pd

from growth_isrp.errors import ConfigError, DataError, DimensionMismatch, NonUniformGrid
from growth_isrp.model_types import FloatArray, TrajectoryPanel

logger = logging.getLogger(__name__)

GRID_TOLERANCE = 1e-9


def uniform_step(times: Sequence[float] | FloatArray) -> float:
    """
    Step of a uniform time grid.

    Raises:
        DimensionMismatch: If fewer than two times are given.
        NonUniformGrid: If the spacing varies by more than 1e-9 relative or is not positive.
    """
    grid = np.asarray(times, dtype=np.float64)
    if grid.size < 2:
        raise DimensionMismatch("a time grid needs at least two points")
    gaps = np.diff(grid)
    h = float(gaps[0])
    if h <= 0.0 or not np.allclose(gaps, h, rtol=GRID_TOLERANCE, atol=0.0):
        raise NonUniformGrid(f"time points are not equally spaced (steps from {gaps.min():.6g} to {gaps.max():.6g})")
    return h


def _read_csv(path: str | Path) -> pd.DataFrame:
    """
    Every cell as text; fields missing from short rows become "".

    Raises:
        ConfigError: If the file does not exist.
        DataError: If the file is empty or not UTF-8.
        DimensionMismatch: If a row has more fields than the header.
    """
    if not Path(path).is_file():
        raise ConfigError(f"input file '{path}' does not exist")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise DataError(f"'{path}' is empty") from e
    except pd.errors.ParserError as e:
        raise DimensionMismatch(f"'{path}': {e}") from e
    except UnicodeDecodeError as e:
        raise DataError(f"'{path}' is not UTF-8 text") from e
    return frame.fillna("")


def _require(frame: pd.DataFrame, names: Sequence[str], kind: str) -> None:
    for name in names:
        if name not in frame.columns:
            raise DataError(f"{kind} has no column '{name}'")


def _numeric(frame: pd.DataFrame) -> FloatArray:
    """
    Cells parsed with Python float semantics, so repr-written values come back bit for bit.

    Raises:
        DataError: On an empty, non-numeric or non-finite cell.
    """
    cells = frame.map(str.strip)
    blank = cells.eq("").to_numpy()
    if blank.any():
        row = int(np.argwhere(blank)[0][0])
        raise DataError(f"data row {row + 1}: missing value")
    try:
        values = cells.to_numpy(dtype=np.float64)
    except ValueError as e:
        bad = cells.apply(pd.to_numeric, errors="coerce").isna().to_numpy()
        row, column = (int(i) for i in np.argwhere(bad)[0])
        raise DataError(f"data row {row + 1}: '{cells.iat[row, column]}' is not a number") from e
    if not np.all(np.isfinite(values)):
        raise DataError("values must be finite")
    return values


def _panel(ids: list[str], times: FloatArray, values: FloatArray) -> TrajectoryPanel:
    if values.shape[0] == 0:
        raise DataError("no trajectories found")
    uniform_step(times)
    return {"ids": ids, "times": np.asarray(times, dtype=np.float64), "values": np.asarray(values, dtype=np.float64)}


def read_wide(path: str | Path) -> TrajectoryPanel:
    """Read a wide CSV: first column id, remaining columns numeric times."""
    frame = _read_csv(path)
    if frame.shape[1] < 3:
        raise DataError("wide CSV needs an id column and at least two time columns")
    try:
        times = np.array([float(label) for label in frame.columns[1:]], dtype=np.float64)
    except ValueError as e:
        raise DataError(f"header: time labels must be numbers ({e})") from e
    return _panel(frame.iloc[:, 0].tolist(), times, _numeric(frame.iloc[:, 1:]))


def read_long(path: str | Path, id_column: str = "id", time_column: str = "t",
              value_column: str = "x") -> TrajectoryPanel:
    """
    Read a long CSV with one observation per row and pivot it to one row per individual.

    Individuals keep their order of first appearance; columns are sorted by time.

    Raises:
        DataError: If a column is missing, an observation is repeated or an individual lacks
            an observation time.
    """
    frame = _read_csv(path)
    _require(frame, (id_column, time_column, value_column), "long CSV")
    numbers = _numeric(frame[[time_column, value_column]])
    observations = pd.DataFrame({"id": frame[id_column], "t": numbers[:, 0], "x": numbers[:, 1]})
    repeated = observations.duplicated(["id", "t"])
    if repeated.any():
        first = observations[repeated].iloc[0]
        raise DataError(f"individual '{first['id']}' has two observations at t={first['t']:g}")
    wide = observations.pivot(index="id", columns="t", values="x").reindex(pd.unique(observations["id"]))
    incomplete = wide.index[wide.isna().any(axis=1).to_numpy()]
    if len(incomplete):
        raise DataError(f"individual '{incomplete[0]}' is missing observations on the common grid")
    return _panel([str(i) for i in wide.index], wide.columns.to_numpy(dtype=np.float64),
                  wide.to_numpy(dtype=np.float64))


def read_series(path: str | Path, time_column: str = "t", value_column: str = "x") -> TrajectoryPanel:
    """Read a single (t, x) series as a one-row panel, sorted by time."""
    frame = _read_csv(path)
    _require(frame, (time_column, value_column), "series CSV")
    pairs = pd.DataFrame(_numeric(frame[[time_column, value_column]]), columns=["t", "x"])
    pairs = pairs.sort_values("t", kind="stable")
    return _panel(["series"], pairs["t"].to_numpy(), pairs[["x"]].to_numpy().T)


def read_owid(path: str | Path, location: str, value_column: str = "total_cases") -> TrajectoryPanel:
    """
    Read one location of an Our World in Data table as a daily series.

    Time is counted in days from the first date with a value. Rows with an empty value are
    skipped; the remaining dates must be consecutive.

    Raises:
        DataError: If the location is absent or a date is malformed.
        NonUniformGrid: If the remaining dates have gaps.
    """
    frame = _read_csv(path)
    _require(frame, ("location", "date", value_column), "OWID table")
    rows = frame[(frame["location"] == location) & (frame[value_column].str.strip() != "")]
    if rows.empty:
        raise DataError(f"no '{value_column}' values for location '{location}'")
    try:
        dates = pd.to_datetime(rows["date"].str.strip(), format="%Y-%m-%d")
    except ValueError as e:
        raise DataError(f"bad date in the '{location}' rows: {e}") from e
    series = pd.Series(_numeric(rows[[value_column]])[:, 0], index=pd.DatetimeIndex(dates)).sort_index()
    days = (series.index - series.index[0]).days.to_numpy(dtype=np.float64)
    logger.info("read %d days of %s for %s", len(series), value_column, location)
    return _panel([location], days, series.to_numpy()[np.newaxis, :])


def read_panel(path: str | Path, layout: str, **columns: str) -> TrajectoryPanel:
    """
    Dispatch to the reader of a layout.

    Raises:
        ConfigError: On an unknown layout or a missing OWID location.
    """
    match layout:
        case "wide":
            return read_wide(path)
        case "long":
            return read_long(path, columns.get("id_column", "id"), columns.get("time_column", "t"),
                             columns.get("value_column", "x"))
        case "series":
            return read_series(path, columns.get("time_column", "t"), columns.get("value_column", "x"))
        case "owid":
            if "location" not in columns:
                raise ConfigError("the owid layout needs a location")
            return read_owid(path, columns["location"], columns.get("value_column", "total_cases"))
        case _:
            raise ConfigError(f"unknown data layout '{layout}'")


def format_value(value: Any) -> str:
    """CSV cell text: repr for floats, empty for None."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_rows(handle: TextIO, header: Sequence[str], rows: Iterable[Mapping[str, Any] | Sequence[Any]]) -> None:
    """CSV with a header line and "\\n" line endings; cells go through format_value."""
    cells = [
        [format_value(v) for v in ([row.get(h) for h in header] if isinstance(row, Mapping) else row)]
        for row in rows
    ]
    frame = pd.DataFrame(cells, columns=list(header), dtype=object)
    frame.to_csv(handle, index=False, lineterminator="\n")


def write_wide(handle: TextIO, panel: TrajectoryPanel) -> None:
    header = ["id"] + [format_value(t) for t in panel["times"]]
    write_rows(handle, header, ([i, *row] for i, row in zip(panel["ids"], panel["values"])))


def write_series(handle: TextIO, times: Sequence[float] | FloatArray, values: Sequence[float] | FloatArray,
                 value_column: str = "x") -> None:
    write_rows(handle, ["t", value_column], zip(times, values))


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def write_json(handle: TextIO, payload: Any) -> None:
    """JSON with numpy values converted and non-finite floats written as null."""
    json.dump(_plain(payload), handle, indent=2)
    handle.write("\n")
