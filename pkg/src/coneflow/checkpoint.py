"""Byte-exact binary checkpoints for spectral fields and flow states.

Layout (little-endian):
  bytes 0..11   magic b"CONEFLOWCKPT"
  uint32        format version (1)
  uint32        n (modes per dimension)
  float64       box scale L
  float64       pad factor
  uint32        rank code (0 scalar, 1 vector, 2 tensor)
  uint32        complex value count
  float64[2*count]  interleaved re/im in C order

States are stored as one file per field plus a JSON sidecar carrying
the time, viscosity, and grid parameters.  Round trips are bit-exact.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .errors import FieldError
from .spectral import SpectralField, SpectralGrid

_MAGIC = b"CONEFLOWCKPT"
_VERSION = 1
_RANK_CODE = {"scalar": 0, "vector": 1, "tensor": 2}
_CODE_RANK = {v: k for k, v in _RANK_CODE.items()}
_LEAD = {"scalar": (), "vector": (3,), "tensor": (3, 3)}


def write_field(path: str, field: SpectralField) -> None:
    grid = field.grid
    c = np.ascontiguousarray(field.coeffs, dtype=np.complex128)
    header = _MAGIC + struct.pack(
        "<IIddII", _VERSION, grid.n, grid.box_scale, grid.pad_factor,
        _RANK_CODE[field.rank], c.size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(c.tobytes("C"))


def read_field(path: str) -> SpectralField:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise FieldError(f"{path}: not a field checkpoint")
        version, n, L, pad, code, count = struct.unpack(
            "<IIddII", fh.read(struct.calcsize("<IIddII")))
        if version != _VERSION:
            raise FieldError(f"{path}: unsupported version {version}")
        if code not in _CODE_RANK:
            raise FieldError(f"{path}: unknown rank code {code}")
        rank = _CODE_RANK[code]
        shape = _LEAD[rank] + (n, n, n)
        expect = int(np.prod(shape))
        if count != expect:
            raise FieldError(
                f"{path}: count {count} does not match rank {rank} at n={n}")
        raw = fh.read(16 * count)
        if len(raw) != 16 * count:
            raise FieldError(f"{path}: truncated payload")
    data = np.frombuffer(raw, dtype="<c16").reshape(shape)
    return SpectralField(SpectralGrid(n, L, pad), data.astype(np.complex128))


def state_paths(directory: str, label: str) -> dict:
    return {
        "u": os.path.join(directory, f"u_{label}.field"),
        "E": os.path.join(directory, f"E_{label}.field"),
        "meta": os.path.join(directory, f"state_{label}.json"),
    }


def write_state(directory: str, state, label: str) -> dict:
    """Write u, E, and a JSON sidecar; returns the paths used."""
    os.makedirs(directory, exist_ok=True)
    paths = state_paths(directory, label)
    write_field(paths["u"], state.u)
    write_field(paths["E"], state.E)
    grid = state.grid
    meta = {
        "label": label,
        "t": state.t,
        "mu": state.mu,
        "n": grid.n,
        "box_scale": grid.box_scale,
        "pad_factor": grid.pad_factor,
    }
    with open(paths["meta"], "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return paths


def read_state(directory: str, label: str):
    from .dynamics import FlowState

    paths = state_paths(directory, label)
    with open(paths["meta"]) as fh:
        meta = json.load(fh)
    u = read_field(paths["u"])
    E = read_field(paths["E"])
    return FlowState(u, E, t=float(meta["t"]), mu=float(meta["mu"]))
