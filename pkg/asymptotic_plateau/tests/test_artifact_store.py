import json

import numpy as np
import pandas as pd

from tool_kit.artifact_store import dumps_report, read_json, write_csv, write_json


def test_report_bytes_do_not_depend_on_key_order():
    assert dumps_report({"b": 1, "a": 2}) == dumps_report({"a": 2, "b": 1})


def test_numpy_and_non_finite_values_are_plain_json():
    payload = json.loads(dumps_report({"x": np.float64(np.nan), "y": np.arange(3), "z": np.bool_(True),
                                       "w": -np.inf}))
    assert payload == {"w": "-inf", "x": "nan", "y": [0, 1, 2], "z": True}


def test_json_written_into_new_directories(tmp_path):
    path = tmp_path / "a" / "b" / "report.json"
    write_json(str(path), {"passed": True})
    assert read_json(str(path)) == {"passed": True}


def test_csv_keeps_the_columns(tmp_path):
    path = write_csv(str(tmp_path / "rows.csv"), pd.DataFrame({"ratio": [1.5, 2.0], "gap": [-0.1, 0.2]}))
    assert list(pd.read_csv(path).columns) == ["ratio", "gap"]
