import json

import numpy as np
import pytest

from src.utils.output import (
    RunOutputs,
    csv_text,
    format_number,
    json_text,
    round_floats,
    table_text,
)
from src.utils.path_safety import OutputPathError


def test_number_format_is_fixed():
    assert format_number(0.1 + 0.2) == "0.3"
    assert format_number(1.0 / 3.0) == "0.333333333"
    assert format_number(123456789012.0) == "1.23456789e+11"


def test_round_floats_handles_numpy_and_nesting():
    payload = {"a": np.float64(1.0 / 3.0), "b": [np.int64(2), 0.1 + 0.2], "c": None}
    assert round_floats(payload) == {"a": 0.333333333, "b": [2, 0.3], "c": None}


def test_csv_text():
    text = csv_text(("x", "y"), [np.array([0.0, 1.0]), np.array([2.5, 1e-12])])
    assert text == "x,y\n0,2.5\n1,1e-12\n"
    with pytest.raises(ValueError, match="differ in length"):
        csv_text(("x", "y"), [np.zeros(2), np.zeros(3)])


def test_table_text_keeps_labels():
    assert table_text(("name", "value"), [["p", 0.5], ["q", ""]]) == "name,value\np,0.5\nq,\n"


def test_json_text_is_sorted_and_stable():
    text = json_text({"b": 1.0 / 3.0, "a": 1})
    assert text.endswith("\n")
    assert list(json.loads(text)) == ["a", "b"]
    assert json_text({"b": 1.0 / 3.0, "a": 1}) == text


class TestRunOutputs:
    def test_commit_moves_every_file(self, tmp_path):
        outputs = RunOutputs(tmp_path / "run")
        outputs.write_csv("a.csv", ("x",), [np.array([1.0])])
        outputs.write_json("b.json", {"k": 1})
        assert not (tmp_path / "run" / "a.csv").exists()
        written = outputs.commit()
        assert [path.name for path in written] == ["a.csv", "b.json"]
        assert sorted(p.name for p in (tmp_path / "run").iterdir()) == ["a.csv", "b.json"]

    def test_discard_leaves_nothing(self, tmp_path):
        outputs = RunOutputs(tmp_path / "run")
        outputs.write_text("a.txt", "data")
        outputs.discard()
        assert list((tmp_path / "run").iterdir()) == []

    def test_rejects_nested_names(self, tmp_path):
        outputs = RunOutputs(tmp_path / "run")
        with pytest.raises(OutputPathError):
            outputs.write_text("../escape.txt", "x")
        with pytest.raises(OutputPathError):
            outputs.write_text(".hidden", "x")
        outputs.discard()
