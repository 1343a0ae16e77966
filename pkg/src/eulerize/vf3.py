"""VF3 field files: a one-line JSON manifest followed by raw float64 bytes.

Layout of a .vf3 file:

    {"n": 32, "L": 6.283185307179586, "kind": "vector",
     "order": "k-fastest", "dtype": "float64-little-endian"}\n
    <n^3 * ncomp little-endian float64>

The payload is component-major: each component block is the full grid in
C order over (i, j, k) with k fastest.  The reader validates the byte
length exactly and rejects unknown kinds, so round trips are bit-exact.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import ToolError
from .grid import Grid3, OneForm, ScalarField0, ThreeForm, TwoForm, VectorField

_KIND_TO_TYPE = {
    "scalar": (ScalarField0, 1),
    "vector": (VectorField, 3),
    "oneform": (OneForm, 3),
    "twoform": (TwoForm, 3),
    "threeform": (ThreeForm, 1),
    "metric6": (None, 6),  # symmetric 3x3 per point, order xx,yy,zz,xy,xz,yz
}
_TYPE_TO_KIND = {
    ScalarField0: "scalar",
    VectorField: "vector",
    OneForm: "oneform",
    TwoForm: "twoform",
    ThreeForm: "threeform",
}


def kind_of(field) -> str:
    try:
        return _TYPE_TO_KIND[type(field)]
    except KeyError:
        raise ToolError("bad-field", f"no VF3 kind for {type(field).__name__}")


def write_atomic(path: str, data: bytes) -> None:
    """Write bytes to path via a temp file + rename in the same directory."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_vf3(path: str, field, kind: str | None = None) -> None:
    """Serialize a grid field (or a raw (c,n,n,n)/(n,n,n) array pair)."""
    if kind is None:
        kind = kind_of(field)
    grid, values = field.grid, field.values
    ncomp = _KIND_TO_TYPE[kind][1]
    flat = values[None] if values.ndim == 3 else values
    if flat.shape[0] != ncomp:
        raise ToolError("bad-field", f"kind {kind} wants {ncomp} components, got {flat.shape[0]}")
    manifest = {
        "n": grid.n,
        "L": grid.L,
        "kind": kind,
        "order": "k-fastest",
        "dtype": "float64-little-endian",
    }
    payload = np.ascontiguousarray(flat, dtype="<f8").tobytes()
    write_atomic(path, json.dumps(manifest).encode() + b"\n" + payload)


def read_vf3(path: str):
    """Read a .vf3 file back into the matching field object.

    For kind "metric6" returns (Grid3, values(6,n,n,n)) since there is no
    dedicated field class for it here.
    """
    with open(path, "rb") as f:
        header = f.readline()
        payload = f.read()
    try:
        manifest = json.loads(header.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ToolError("bad-vf3", f"unreadable manifest in {path}: {e}")
    for key in ("n", "L", "kind", "order", "dtype"):
        if key not in manifest:
            raise ToolError("bad-vf3", f"manifest missing key {key!r}")
    if manifest["kind"] not in _KIND_TO_TYPE:
        raise ToolError("bad-vf3", f"unknown kind {manifest['kind']!r}")
    if manifest["order"] != "k-fastest" or manifest["dtype"] != "float64-little-endian":
        raise ToolError("bad-vf3", "unsupported order/dtype")
    n = int(manifest["n"])
    cls, ncomp = _KIND_TO_TYPE[manifest["kind"]]
    want = 8 * ncomp * n ** 3
    if len(payload) != want:
        raise ToolError("bad-vf3", f"payload length {len(payload)} != expected {want}")
    grid = Grid3(n, float(manifest["L"]))
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    values = values.reshape((ncomp, n, n, n)) if ncomp > 1 else values.reshape((n, n, n))
    if cls is None:
        return grid, values
    return cls(grid, values)
