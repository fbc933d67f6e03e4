import json

import numpy as np
import pytest

from udwqc import io


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, -2.5e-17, 1e300, 550292.4567):
        assert float(io.fmt(x)) == x
    assert io.fmt(np.float64(0.1)) == "0.1"
    assert io.fmt(np.int64(3)) == "3" and io.fmt(True) == "1"


def test_csv_text():
    assert io.csv_text(("a", "b"), [(1, 0.5), (2, 1e-20)]) == "a,b\n1,0.5\n2,1e-20\n"


def test_grid_csv():
    g = np.arange(6, dtype=float).reshape(2, 3)
    text = io.grid_csv_text(g, {"nx": 3, "ny": 2})
    assert text.splitlines() == ["# nx=3 ny=2", "0.0,1.0,2.0", "3.0,4.0,5.0"]


def test_pgm_layout_and_scale():
    g = np.array([[0.0, 1.0], [2.0, 4.0]])
    data = io.pgm_bytes(g)
    assert data.startswith(b"P5\n2 2\n65535\n")
    # first stored row is the top of the device (largest y)
    body = np.frombuffer(data.split(b"\n", 3)[3], dtype=">u2")
    assert body.tolist() == [32768, 65535, 0, 16384]
    np.testing.assert_array_equal(io.read_pgm(data), [[0, 16384], [32768, 65535]])
    with pytest.raises(ValueError):
        io.pgm_bytes(-g)


def test_signed_pgm():
    g = np.array([[-1.0, 0.0, 1.0]])
    assert io.read_pgm(io.signed_pgm_bytes(g)).tolist() == [[1, 32768, 65535]]
    assert io.read_pgm(io.signed_pgm_bytes(np.zeros((1, 2)))).tolist() == [[32768, 32768]]


def test_atomic_write_leaves_no_temp(tmp_path):
    p = io.atomic_write(tmp_path / "sub" / "x.txt", "hello")
    assert p.read_text() == "hello"
    assert [f.name for f in p.parent.iterdir()] == ["x.txt"]


def test_json(tmp_path):
    p = io.write_json(tmp_path / "r.json", {"b": 1, "a": [0.5]})
    assert json.loads(p.read_text()) == {"a": [0.5], "b": 1}
