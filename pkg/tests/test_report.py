import json
import math

import numpy as np
import pytest

from relsemi.errors import InvalidInput
from relsemi.report import (
    atomic_write,
    line_chart,
    render_csv,
    render_json,
    sanitize,
    vector_from_json,
    vector_to_json,
    write_chart,
    write_csv,
    write_json,
)


def test_atomic_write_creates_dirs(tmp_path):
    target = tmp_path / "a" / "b" / "out.txt"
    atomic_write(str(target), "payload\n")
    assert target.read_text() == "payload\n"
    # no stray temp files
    assert [p.name for p in (tmp_path / "a" / "b").iterdir()] == ["out.txt"]
    atomic_write(str(target), "second\n")
    assert target.read_text() == "second\n"


def test_csv_schema_and_rows():
    text = render_csv(["a", "b"], [[1, 2.5], [True, float("nan")]])
    lines = text.splitlines()
    assert lines[0] == "# schema: a, b"
    assert lines[1] == "a,b"
    assert lines[2] == "1,2.5"
    assert lines[3] == "true,nan"
    assert text.endswith("\n")
    custom = render_csv(["a"], [], schema="custom words")
    assert custom.splitlines()[0] == "# schema: custom words"


def test_csv_rejects_ragged_rows():
    with pytest.raises(InvalidInput):
        render_csv(["a", "b"], [[1]])


def test_csv_complex_format():
    text = render_csv(["z"], [[1 + 2j], [1 - 2j]])
    assert "1.0+2.0j" in text and "1.0-2.0j" in text


def test_sanitize_special_values():
    obj = {
        "inf": math.inf,
        "ninf": -math.inf,
        "nan": math.nan,
        "z": 1 + 2j,
        "arr": np.array([1.0, 2.0]),
        "nested": [np.int64(3), np.float64(0.5), np.bool_(True)],
    }
    s = sanitize(obj)
    assert s["inf"] == "inf" and s["ninf"] == "-inf" and s["nan"] == "nan"
    assert s["z"] == {"re": 1.0, "im": 2.0}
    assert s["arr"] == [1.0, 2.0]
    assert s["nested"] == [3, 0.5, True]
    json.dumps(s)  # strict-JSON safe


def test_json_deterministic_and_sorted():
    a = render_json({"b": 1, "a": [np.float64(2.0)]})
    b = render_json({"a": [2.0], "b": 1})
    assert a == b
    assert a.index('"a"') < a.index('"b"')


def test_write_helpers_round_trip(tmp_path):
    p = tmp_path / "v.json"
    write_json(str(p), {"x": 1})
    assert json.loads(p.read_text()) == {"x": 1}
    c = tmp_path / "t.csv"
    write_csv(str(c), ["a"], [[1]])
    assert c.read_text().splitlines()[-1] == "1"


def test_vector_json_round_trip():
    z = np.array([1.0 + 2.0j, -0.5 + 0.0j])
    back = vector_from_json(vector_to_json(z))
    assert np.array_equal(back, z)
    r = np.array([1.0, 2.0])
    back_r = vector_from_json(vector_to_json(r))
    assert back_r.dtype.kind == "f"
    assert np.array_equal(back_r, r)
    with pytest.raises(InvalidInput):
        vector_from_json({"values_imag": [1.0]})
    with pytest.raises(InvalidInput):
        vector_from_json({"values_real": [1.0], "values_imag": [1.0, 2.0]})


def _series_path(svg):
    # the first palette color marks the data path of series 0
    seg = svg[svg.index('stroke="#1f77b4"'):]
    start = svg.rindex('<path d="', 0, svg.index('stroke="#1f77b4"'))
    d = svg[start + len('<path d="'):]
    return d[:d.index('"')]


def test_line_chart_structure():
    svg = line_chart([("err", [1, 2, 3], [0.1, 0.05, 0.01])],
                     "decay", "n", "error")
    assert svg.startswith("<svg")
    assert "decay" in svg and "err" in svg
    assert _series_path(svg).count("L") == 2  # 3 points = move + 2 segments
    with pytest.raises(InvalidInput):
        line_chart([], "t", "x", "y")


def test_line_chart_log_drops_nonpositive():
    svg = line_chart([("s", [1, 2, 3], [1.0, 0.0, 0.1])],
                     "t", "x", "y", log_y=True)
    # the zero point is dropped, leaving a single segment
    assert _series_path(svg).count("L") == 1


def test_write_chart_deterministic(tmp_path):
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    series = [("s", [1.0, 2.0], [3.0, 1.5])]
    write_chart(str(p1), series, "t", "x", "y")
    write_chart(str(p2), series, "t", "x", "y")
    assert p1.read_bytes() == p2.read_bytes()
