"""
Test cases for the datasets module

The datasets module reads trajectory panels from wide, long, single-series and OWID files and
writes CSV and JSON outputs.

The tests in this module cover the following scenarios:
1. Each reader returns ids, uniform times and an n x q matrix.
2. Non-numeric or missing cells, over-long rows, missing columns, repeated observations and bad
   dates are reported as data errors.
3. Non-uniform grids raise NonUniformGrid; missing files raise ConfigError.
4. Written files round-trip floats exactly and JSON drops non-finite values to null.
"""
import io
import json

import numpy as np
import pytest

from growth_isrp.datasets import (
    format_value,
    read_long,
    read_owid,
    read_panel,
    read_series,
    read_wide,
    uniform_step,
    write_json,
    write_rows,
    write_wide,
)
from growth_isrp.errors import ConfigError, DataError, DimensionMismatch, NonUniformGrid


@pytest.fixture(name="write_file")
def write_file_fixture(tmp_path):
    """
    Fixture returning a helper that writes text to a file under tmp_path
    """
    def write(name: str, text: str):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return write


def test_uniform_step():
    assert uniform_step([1.0, 1.5, 2.0]) == 0.5
    with pytest.raises(NonUniformGrid):
        uniform_step([0.0, 1.0, 3.0])
    with pytest.raises(NonUniformGrid):
        uniform_step([2.0, 1.0, 0.0])
    with pytest.raises(DimensionMismatch):
        uniform_step([1.0])


def test_read_wide(write_file):
    path = write_file("wide.csv", "id,1,2,3\na,1.0,2.0,4.0\nb,1.5,2.5,4.5\n")
    panel = read_wide(path)
    assert panel["ids"] == ["a", "b"]
    np.testing.assert_array_equal(panel["times"], [1.0, 2.0, 3.0])
    assert panel["values"].shape == (2, 3)
    assert panel["values"][1, 2] == 4.5


def test_read_wide_errors(write_file):
    with pytest.raises(DataError):
        read_wide(write_file("bad.csv", "id,1,2\na,1.0,oops\n"))
    with pytest.raises(DataError):
        read_wide(write_file("short.csv", "id,1,2\na,1.0\n"))
    with pytest.raises(DimensionMismatch):
        read_wide(write_file("ragged.csv", "id,1,2\na,1.0,2.0\nb,1.0,2.0,3.0\n"))
    with pytest.raises(DataError):
        read_wide(write_file("header.csv", "id,1,two\na,1.0,2.0\n"))
    with pytest.raises(DataError):
        read_wide(write_file("blank.csv", ""))
    with pytest.raises(NonUniformGrid):
        read_wide(write_file("grid.csv", "id,1,2,4\na,1.0,2.0,3.0\n"))
    with pytest.raises(DataError):
        read_wide(write_file("empty.csv", "id,1,2\n"))


def test_read_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_wide(tmp_path / "absent.csv")


def test_read_long(write_file):
    path = write_file("long.csv", "id,t,x\na,0,1\nb,0,2\na,1,3\nb,1,4\na,2,5\nb,2,6\n")
    panel = read_long(path)
    assert panel["ids"] == ["a", "b"]
    np.testing.assert_array_equal(panel["values"], [[1.0, 3.0, 5.0], [2.0, 4.0, 6.0]])


def test_read_long_missing_observation(write_file):
    path = write_file("long.csv", "id,t,x\na,0,1\nb,0,2\na,1,3\n")
    with pytest.raises(DataError):
        read_long(path)


def test_read_long_repeated_observation(write_file):
    path = write_file("long.csv", "id,t,x\na,0,1\na,1,2\na,1,3\n")
    with pytest.raises(DataError):
        read_long(path)


def test_read_long_orders_individuals_and_times(write_file):
    path = write_file("long.csv", "person,day,w\nz,1,3\na,1,4\nz,0,1\na,0,2\nz,2,5\na,2,6\n")
    panel = read_long(path, "person", "day", "w")
    assert panel["ids"] == ["z", "a"]
    np.testing.assert_array_equal(panel["times"], [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(panel["values"], [[1.0, 3.0, 5.0], [2.0, 4.0, 6.0]])


def test_read_series_sorts_by_time(write_file):
    path = write_file("series.csv", "t,size\n2,30\n0,10\n1,20\n")
    panel = read_series(path, value_column="size")
    np.testing.assert_array_equal(panel["times"], [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(panel["values"], [[10.0, 20.0, 30.0]])


def test_read_series_missing_column(write_file):
    with pytest.raises(DataError):
        read_series(write_file("series.csv", "t,y\n0,1\n"))


def test_read_owid(write_file):
    text = (
        "location,date,total_cases\n"
        "Germany,2020-03-01,\n"
        "Germany,2020-03-02,10\n"
        "France,2020-03-02,99\n"
        "Germany,2020-03-03,15\n"
        "Germany,2020-03-04,22\n"
    )
    panel = read_owid(write_file("owid.csv", text), "Germany")
    assert panel["ids"] == ["Germany"]
    np.testing.assert_array_equal(panel["times"], [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(panel["values"], [[10.0, 15.0, 22.0]])


def test_read_owid_errors(write_file):
    path = write_file("owid.csv", "location,date,total_cases\nGermany,2020-03-01,1\nGermany,2020-03-03,2\n"
                                  "Germany,2020-03-04,3\n")
    with pytest.raises(NonUniformGrid):
        read_owid(path, "Germany")
    with pytest.raises(DataError):
        read_owid(path, "Italy")
    bad_date = write_file("dates.csv", "location,date,total_cases\nGermany,2020-13-01,1\n")
    with pytest.raises(DataError):
        read_owid(bad_date, "Germany")


def test_read_panel_dispatch(write_file):
    path = write_file("series.csv", "t,x\n0,1\n1,2\n2,3\n")
    assert read_panel(path, "series")["values"].shape == (1, 3)
    with pytest.raises(ConfigError):
        read_panel(path, "parquet")
    with pytest.raises(ConfigError):
        read_panel(path, "owid")


@pytest.mark.parametrize(
    "value, text",
    [(None, ""), (0.1, "0.1"), (np.float64(1 / 3), repr(1 / 3)), (True, "true"), (np.int64(4), "4"), ("a", "a")],
)
def test_format_value(value, text):
    assert format_value(value) == text


def test_wide_round_trip(tmp_path):
    panel = {"ids": ["1", "2"], "times": np.array([1.0, 2.0, 3.0]),
             "values": np.array([[0.1, 1 / 3, 2.0], [1e-17, 5.0, 7.25]])}
    path = tmp_path / "out.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        write_wide(handle, panel)
    back = read_wide(path)
    assert back["ids"] == ["1", "2"]
    np.testing.assert_array_equal(back["values"], panel["values"])


def test_write_rows_mappings():
    handle = io.StringIO()
    write_rows(handle, ["j", "estimate"], [{"j": 1, "estimate": 0.5}, {"j": 2, "estimate": None}])
    assert handle.getvalue() == "j,estimate\n1,0.5\n2,\n"


def test_write_json_non_finite():
    handle = io.StringIO()
    write_json(handle, {"a": np.float64("nan"), "b": [1.0, float("inf")], "c": np.array([1, 2]),
                        "d": np.int32(3)})
    assert json.loads(handle.getvalue()) == {"a": None, "b": [1.0, None], "c": [1, 2], "d": 3}
