"""Binary checkpoint format tests.

Covers:
- exact coefficient roundtrips for all ranks
- the state triple (two field files plus a JSON sidecar)
- corruption detection: magic, version, rank code, truncation
"""

import json
import os
import struct

import numpy as np
import pytest

from coneflow.checkpoint import (
    read_field,
    read_state,
    state_paths,
    write_field,
    write_state,
)
from coneflow.dynamics import FlowState
from coneflow.errors import FieldError
from coneflow.random_fields import random_field
from coneflow.spectral import SpectralGrid


@pytest.mark.parametrize("rank", ["scalar", "vector", "tensor"])
def test_field_roundtrip_bitexact(tmp_path, rng, rank):
    grid = SpectralGrid(8, box_scale=1.25, pad_factor=1.5)
    f = random_field(grid, rank, rng)
    path = str(tmp_path / "f.field")
    write_field(path, f)
    g = read_field(path)
    assert g.grid == grid
    assert g.rank == rank
    assert np.array_equal(g.coeffs, f.coeffs)


def test_state_roundtrip(tmp_path, rng):
    grid = SpectralGrid(8, box_scale=1.0, pad_factor=2.0)
    u = random_field(grid, "vector", rng)
    E = random_field(grid, "tensor", rng)
    st = FlowState(u, E, t=0.375, mu=0.7)
    write_state(str(tmp_path), st, "snap")
    back = read_state(str(tmp_path), "snap")
    assert back.t == 0.375
    assert back.mu == 0.7
    assert np.array_equal(back.u.coeffs, u.coeffs)
    assert np.array_equal(back.E.coeffs, E.coeffs)


def test_state_paths_layout(tmp_path, rng):
    paths = state_paths(str(tmp_path), "init")
    assert os.path.basename(paths["u"]) == "u_init.field"
    assert os.path.basename(paths["E"]) == "E_init.field"
    assert os.path.basename(paths["meta"]) == "state_init.json"


def test_sidecar_metadata(tmp_path, rng):
    grid = SpectralGrid(8)
    st = FlowState(random_field(grid, "vector", rng),
                   random_field(grid, "tensor", rng), t=1.5, mu=2.0)
    write_state(str(tmp_path), st, "x")
    with open(state_paths(str(tmp_path), "x")["meta"]) as fh:
        meta = json.load(fh)
    assert meta["t"] == 1.5
    assert meta["mu"] == 2.0
    assert meta["n"] == 8


def test_bad_magic_rejected(tmp_path, rng):
    grid = SpectralGrid(8)
    path = str(tmp_path / "f.field")
    write_field(path, random_field(grid, "scalar", rng))
    raw = bytearray(open(path, "rb").read())
    raw[0] ^= 0xFF
    open(path, "wb").write(bytes(raw))
    with pytest.raises(FieldError):
        read_field(path)


def test_bad_version_rejected(tmp_path, rng):
    grid = SpectralGrid(8)
    path = str(tmp_path / "f.field")
    write_field(path, random_field(grid, "scalar", rng))
    raw = bytearray(open(path, "rb").read())
    # the version field is the first u32 after the 12-byte magic
    struct.pack_into("<I", raw, 12, 999)
    open(path, "wb").write(bytes(raw))
    with pytest.raises(FieldError):
        read_field(path)


def test_truncated_payload_rejected(tmp_path, rng):
    grid = SpectralGrid(8)
    path = str(tmp_path / "f.field")
    write_field(path, random_field(grid, "vector", rng))
    raw = open(path, "rb").read()
    open(path, "wb").write(raw[:-16])
    with pytest.raises(FieldError):
        read_field(path)
