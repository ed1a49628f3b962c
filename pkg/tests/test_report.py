import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from betalike.report import fmt_float, to_json, write_atomic


def test_fmt_float_cases():
    assert fmt_float(1) == "1.0"
    assert fmt_float(-0.0) == "-0.0"
    assert fmt_float(1e20) == "1e+20"
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(math.nan) == "NaN"
    assert fmt_float(-math.inf) == "-Infinity"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_float_round_trips(x):
    assert float(fmt_float(x)) == x
    assert json.loads(fmt_float(x)) == x


def test_to_json_types_and_layout():
    text = to_json({"a": np.float64(2.0), "b": [np.int64(3), True, None], "c": (0.5,),
                    "d": {}, "e": np.array([1.5])})
    assert text.endswith("}\n")
    assert json.loads(text) == {"a": 2.0, "b": [3, True, None], "c": [0.5], "d": {},
                                "e": [1.5]}
    assert '"a": 2.0' in text and '"b": [\n    3,' in text
    assert to_json([1.0], indent=None) == "[1.0]\n"


def test_write_atomic_replaces_and_cleans_up(tmp_path):
    path = tmp_path / "out.json"
    write_atomic(path, "first")
    write_atomic(path, "second")
    assert path.read_text() == "second"
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]
