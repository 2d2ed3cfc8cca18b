"""Binary snapshot files and series directories.

Layout (all little-endian):

    magic   5 bytes  b"DDNS1"
    version u16
    dim     u8
    n       u32 per axis (dim values)
    count   u8       number of payload arrays
    time    f64
    mu      f64
    flags   u32      bit0 has_pressure, bit1 has_force, bit2 divfree_certified

followed by ``count`` row-major f64 arrays in the order rho, u_1..u_d,
[p], [f_1..f_d]. A series is a directory of one-snapshot files plus a JSON
manifest; the format is streaming-friendly and survives partial failures.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidStateError, SnapshotFormatError
from .grid import Field, TorusGrid
from .spectral import divergence_defect
from .state import DIV_TOL, SolutionState

MAGIC = b"DDNS1"
VERSION = 1

FLAG_PRESSURE = 1
FLAG_FORCE = 2
FLAG_DIVFREE = 4


def write_snapshot(path, state: SolutionState) -> None:
    path = Path(path)
    g = state.grid
    d = g.dim
    arrays = [state.rho.values] + [state.u.values[i] for i in range(d)]
    flags = 0
    if state.p is not None:
        flags |= FLAG_PRESSURE
        arrays.append(state.p.values)
    if state.f_ext is not None:
        flags |= FLAG_FORCE
        arrays.extend(state.f_ext.values[i] for i in range(d))
    if divergence_defect(state.u) <= DIV_TOL:
        flags |= FLAG_DIVFREE
    header = struct.pack(
        f"<5sHB{d}IBddI", MAGIC, VERSION, d, *([g.n] * d), len(arrays), state.t, state.mu, flags
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_snapshot(path, validate: bool = True) -> SolutionState:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:5] != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {raw[:5]!r}")
    (version,) = struct.unpack_from("<H", raw, 5)
    if version != VERSION:
        raise SnapshotFormatError(f"{path}: unsupported format version {version}")
    (d,) = struct.unpack_from("<B", raw, 7)
    if d not in (1, 2, 3):
        raise SnapshotFormatError(f"{path}: bad dimension {d}")
    ns = struct.unpack_from(f"<{d}I", raw, 8)
    off = 8 + 4 * d
    count, t, mu, flags = struct.unpack_from("<BddI", raw, off)
    off += struct.calcsize("<BddI")
    if len(set(ns)) != 1:
        raise SnapshotFormatError(f"{path}: axes must have equal length, got {ns}")
    grid = TorusGrid(d, ns[0])
    npts = ns[0] ** d
    has_p = bool(flags & FLAG_PRESSURE)
    has_f = bool(flags & FLAG_FORCE)
    expected = 1 + d + (1 if has_p else 0) + (d if has_f else 0)
    if count != expected:
        raise SnapshotFormatError(f"{path}: component count {count} != {expected} implied by flags")
    need = off + count * npts * 8
    if len(raw) != need:
        raise SnapshotFormatError(f"{path}: payload length {len(raw) - off} != {need - off}")
    arrays = []
    for i in range(count):
        a = np.frombuffer(raw, dtype="<f8", count=npts, offset=off + i * npts * 8)
        if not np.isfinite(a).all():
            raise SnapshotFormatError(f"{path}: non-finite values in payload array {i}")
        arrays.append(a.reshape(grid.shape).astype(np.float64))
    rho = Field(grid, arrays[0])
    u = Field(grid, np.stack(arrays[1:1 + d]))
    idx = 1 + d
    p = None
    if has_p:
        p = Field(grid, arrays[idx])
        idx += 1
    f_ext = Field(grid, np.stack(arrays[idx:idx + d])) if has_f else None
    state = SolutionState(rho, u, p, f_ext, t, mu)
    if validate:
        if state.rho_lo <= 0.0:
            raise InvalidStateError(
                f"{path}: density reaches {state.rho_lo:.3e}; snapshots must satisfy "
                "0 < rho_lo <= rho <= rho_hi everywhere")
        if flags & FLAG_DIVFREE:
            state.validate()
    return state


def write_series(directory, states: list[SolutionState], manifest: dict) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    entries = []
    for i, s in enumerate(states):
        name = f"snapshot_{i:06d}.ddns"
        write_snapshot(directory / name, s)
        paths.append(directory / name)
        entries.append({"file": name, "t": s.t})
    payload = dict(manifest)
    payload["snapshots"] = entries
    (directory / "manifest.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    return paths


def read_series(directory, validate: bool = True) -> tuple[list[SolutionState], dict]:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise SnapshotFormatError(f"{directory}: missing manifest.json")
    manifest = json.loads(manifest_path.read_text())
    states = [read_snapshot(directory / e["file"], validate=validate)
              for e in manifest.get("snapshots", [])]
    return states, manifest
