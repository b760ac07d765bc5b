"""Snapshot persistence: one JSON header line, then the potential as raw
little-endian float64, row-major in (i_u, j_1, j_2, j_3).  Round trips are
bit-exact."""
from __future__ import annotations

import json

import numpy as np

SNAPSHOT_VERSION = 1


def write_snapshot(path, t, phi, chart, params, norm_mode, c1=None):
    header = {
        "version": SNAPSHOT_VERSION,
        "t": float(t),
        "grid": {"N_u": chart.N_u, "N_f": chart.N_f, "y0": chart.y0},
        "matrix": [int(chart.structure.M[i, j]) for i in range(3) for j in range(3)],
        "params": {"a": float(params.a[0]), "b": float(params.b[0])},
        "norm_mode": norm_mode,
        "c1": None if c1 is None else float(c1),
    }
    data = np.ascontiguousarray(phi, dtype="<f8")
    expected = chart.N_u * chart.N_f**3
    if data.size != expected:
        raise ValueError(f"phi has {data.size} values, grid wants {expected}")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(data.tobytes())


def read_snapshot(path):
    """Return (header dict, phi array shaped to the grid)."""
    with open(path, "rb") as fh:
        line = fh.readline()
        header = json.loads(line.decode("utf-8"))
        raw = fh.read()
    if header.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {header.get('version')!r}")
    n_u = header["grid"]["N_u"]
    n_f = header["grid"]["N_f"]
    phi = np.frombuffer(raw, dtype="<f8")
    expected = n_u * n_f**3
    if phi.size != expected:
        raise ValueError(f"snapshot holds {phi.size} values, header wants {expected}")
    return header, phi.reshape(n_u, n_f, n_f, n_f).copy()
