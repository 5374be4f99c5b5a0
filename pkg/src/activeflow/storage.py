"""Snapshot, checkpoint, and diagnostics persistence.

Snapshot files are a single JSON header line followed by the raw contiguous
float64 payload (little-endian, row-major i1, i2, i_theta), trivially
parseable from any language. Checkpoints reuse the snapshot format with the
config hash and step index in the header.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .diagnostics import DiagnosticsRecord
from .errors import CheckpointMismatch, ParseError
from .grid import Field3, GridSpec, Params

FORMAT_VERSION = 1


def max_threads() -> int:
    """Parallelism cap from ACTIVEFLOW_THREADS (defaults to 1)."""
    raw = os.environ.get("ACTIVEFLOW_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _header(f: Field3, time: float, step: int, params: Params, extra=None) -> dict:
    header = {
        "format_version": FORMAT_VERSION,
        "n_x": f.grid.n_x,
        "n_theta": f.grid.n_theta,
        "time": time,
        "step": step,
        "params": {
            "pe": params.pe,
            "de": params.de,
            "dt": params.dt,
            "dealias": params.dealias,
        },
        "byte_order": "little-endian",
        "element_type": "float64",
        "layout": "row-major i1,i2,itheta",
    }
    if extra:
        header.update(extra)
    return header


def write_snapshot(
    path: str, f: Field3, time: float, step: int, params: Params, extra=None
) -> None:
    header = _header(f, time, step, params, extra)
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode())
        fh.write(b"\n")
        fh.write(payload)


def read_snapshot(path: str) -> tuple[Field3, dict]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed snapshot header") from exc
    grid = GridSpec(header["n_x"], header["n_theta"])
    expected = 8 * grid.n_x * grid.n_x * grid.n_theta
    if len(payload) != expected:
        raise ParseError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(grid.shape)
    return Field3(grid=grid, values=values), header


class SnapshotWriter:
    """File writer; runs on a dedicated worker when ACTIVEFLOW_THREADS >= 2.

    Fields are immutable, so handing them to a background thread is safe.
    close() drains pending writes.
    """

    def __init__(self):
        self._pool = ThreadPoolExecutor(max_workers=1) if max_threads() >= 2 else None
        self._pending = []

    def submit(self, path, f, time, step, params, extra=None):
        if self._pool is None:
            write_snapshot(path, f, time, step, params, extra)
        else:
            self._pending.append(
                self._pool.submit(write_snapshot, path, f, time, step, params, extra)
            )

    def close(self):
        for fut in self._pending:
            fut.result()
        if self._pool is not None:
            self._pool.shutdown(wait=True)


# --- checkpoints ----------------------------------------------------------------

CHECKPOINT_NAME = "checkpoint.bin"


def write_checkpoint(
    out_dir: str, f: Field3, time: float, step: int, params: Params, config_hash: str
) -> None:
    tmp = os.path.join(out_dir, CHECKPOINT_NAME + ".tmp")
    write_snapshot(
        tmp, f, time, step, params, extra={"checkpoint": True, "config_hash": config_hash}
    )
    os.replace(tmp, os.path.join(out_dir, CHECKPOINT_NAME))


def load_checkpoint(out_dir: str, config_hash: str):
    """Return (field, time, step) or None; refuse on config-hash mismatch."""
    path = os.path.join(out_dir, CHECKPOINT_NAME)
    if not os.path.exists(path):
        return None
    f, header = read_snapshot(path)
    stored = header.get("config_hash")
    if stored != config_hash:
        raise CheckpointMismatch(
            f"checkpoint in {out_dir} was written by a different config "
            f"(hash {stored} != {config_hash}); refusing to resume"
        )
    return f, float(header["time"]), int(header["step"])


# --- diagnostics CSV --------------------------------------------------------------

def csv_header(k_max: int) -> str:
    base = "t,mass,l2_to_const,linf,rho_min,rho_max,grad_l2,spectral_tail"
    lps = ",".join(f"lp_{k}" for k in range(k_max + 1))
    return f"{base},{lps}"


def csv_row(record: DiagnosticsRecord) -> str:
    cells = [
        record.t,
        record.mass,
        record.l2_to_const,
        record.linf,
        record.rho_min,
        record.rho_max,
        record.grad_l2,
        record.spectral_tail,
        *record.lp_ladder,
    ]
    return ",".join(repr(float(c)) for c in cells)


def read_csv(path: str) -> list[dict]:
    """Parse a diagnostics CSV back into one dict per row."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    names = lines[0].split(",")
    return [
        {name: float(cell) for name, cell in zip(names, line.split(","))}
        for line in lines[1:]
    ]
