"""VF3 round trips and validation."""

import json

import numpy as np
import pytest

import eulerize as ez
from eulerize import read_vf3, write_vf3
from eulerize.errors import ToolError


def test_round_trip_bit_identical(tmp_path, rng):
    g = ez.Grid3(7, 5.0)
    fields = [
        ez.ScalarField0(g, rng.standard_normal((7, 7, 7))),
        ez.VectorField(g, rng.standard_normal((3, 7, 7, 7))),
        ez.OneForm(g, rng.standard_normal((3, 7, 7, 7))),
        ez.TwoForm(g, rng.standard_normal((3, 7, 7, 7))),
        ez.ThreeForm(g, rng.standard_normal((7, 7, 7))),
    ]
    for i, f in enumerate(fields):
        p = tmp_path / f"f{i}.vf3"
        write_vf3(str(p), f)
        back = read_vf3(str(p))
        assert type(back) is type(f)
        assert back.grid == f.grid
        assert np.array_equal(back.values, f.values)
        # writing again produces identical bytes
        p2 = tmp_path / f"g{i}.vf3"
        write_vf3(str(p2), back)
        assert p.read_bytes() == p2.read_bytes()


def test_payload_length_validated(tmp_path, rng):
    g = ez.Grid3(4)
    p = tmp_path / "f.vf3"
    write_vf3(str(p), ez.ScalarField0(g, rng.standard_normal((4, 4, 4))))
    data = p.read_bytes()
    p.write_bytes(data[:-8])
    with pytest.raises(ToolError) as ei:
        read_vf3(str(p))
    assert ei.value.code == "bad-vf3"


def test_manifest_validated(tmp_path):
    p = tmp_path / "f.vf3"
    p.write_bytes(json.dumps({"n": 2, "L": 1.0, "kind": "nope",
                              "order": "k-fastest",
                              "dtype": "float64-little-endian"}).encode()
                  + b"\n" + b"\0" * (8 * 8))
    with pytest.raises(ToolError):
        read_vf3(str(p))
    p.write_bytes(b"not json\n" + b"\0" * 64)
    with pytest.raises(ToolError):
        read_vf3(str(p))
