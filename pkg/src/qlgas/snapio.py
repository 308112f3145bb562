"""Snapshot and diagnostics serialization.

Snapshot layout: one ASCII header line of tab-separated metadata
(magic, endianness marker, step, time, dims, extents, ell) terminated by a
newline, then the raw payload: for every site, in site-major order, the 16
multiplet components as (re, im) float64 pairs; after all multiplet data,
the 4 potential components per site as float64.  Floats in the header use
17 significant digits so values round trip exactly.
"""

import os

import numpy as np

from .engine import Diagnostics, LatticeConfig, LatticeState
from .errors import SnapshotError, TruncatedSnapshotError

MAGIC = "qlgs1"

DIAG_COLUMNS = (
    "step",
    "time",
    "norm",
    "norm_drift",
    "continuity_residual",
    "london_residual",
    "equilibrium_residual",
    "ml_antihermiticity",
)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def snapshot_path(output_dir: str, step: int) -> str:
    return os.path.join(output_dir, f"snap_{step}.bin")


def write_snapshot(state: LatticeState, path: str) -> None:
    cfg = state.config
    header = "\t".join(
        [
            MAGIC,
            "little",
            f"step={state.step_index}",
            f"time={_fmt(state.time)}",
            f"dims={cfg.dims}",
            "extents=" + ",".join(str(n) for n in cfg.extents),
            f"ell={_fmt(cfg.ell)}",
        ]
    )
    n_sites = int(np.prod(cfg.extents))
    psi_pairs = np.empty((n_sites, 16, 2), dtype="<f8")
    flat = state.psi16.reshape(n_sites, 16)
    psi_pairs[..., 0] = flat.real
    psi_pairs[..., 1] = flat.imag
    a_flat = np.ascontiguousarray(state.A.reshape(n_sites, 4), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii") + b"\n")
        fh.write(psi_pairs.tobytes())
        fh.write(a_flat.tobytes())


def _parse_header(line: bytes, path: str) -> dict:
    try:
        fields = line.decode("ascii").rstrip("\n").split("\t")
    except UnicodeDecodeError as err:
        raise SnapshotError(f"{path}: undecodable header") from err
    if not fields or fields[0] != MAGIC:
        raise SnapshotError(f"{path}: bad magic, not a snapshot file")
    if len(fields) < 7 or fields[1] not in ("little", "big"):
        raise SnapshotError(f"{path}: malformed header")
    meta = {"endian": fields[1]}
    for item in fields[2:]:
        key, _, val = item.partition("=")
        meta[key] = val
    try:
        meta["step"] = int(meta["step"])
        meta["time"] = float(meta["time"])
        meta["dims"] = int(meta["dims"])
        meta["extents"] = tuple(int(t) for t in meta["extents"].split(","))
        meta["ell"] = float(meta["ell"])
    except (KeyError, ValueError) as err:
        raise SnapshotError(f"{path}: malformed header field: {err}") from err
    return meta


def read_snapshot(path: str, cfg: LatticeConfig) -> LatticeState:
    """Read a snapshot; the payload must match `cfg`'s geometry exactly."""
    with open(path, "rb") as fh:
        header = fh.readline()
        payload = fh.read()
    meta = _parse_header(header, path)
    if meta["dims"] != cfg.dims or meta["extents"] != tuple(cfg.extents):
        raise SnapshotError(
            f"{path}: geometry mismatch: file has dims={meta['dims']} "
            f"extents={meta['extents']}, config has dims={cfg.dims} "
            f"extents={tuple(cfg.extents)}"
        )
    dt = "<f8" if meta["endian"] == "little" else ">f8"
    n_sites = int(np.prod(cfg.extents))
    need = n_sites * 16 * 2 * 8 + n_sites * 4 * 8
    if len(payload) < need:
        raise TruncatedSnapshotError(
            f"{path}: payload has {len(payload)} bytes, need {need}"
        )
    if len(payload) > need:
        raise SnapshotError(f"{path}: {len(payload) - need} trailing bytes")
    psi_raw = np.frombuffer(payload[: n_sites * 256], dtype=dt).reshape(n_sites, 16, 2)
    a_raw = np.frombuffer(payload[n_sites * 256 :], dtype=dt).reshape(n_sites, 4)
    psi = (psi_raw[..., 0] + 1j * psi_raw[..., 1]).reshape(tuple(cfg.extents) + (16,))
    state = LatticeState(
        config=cfg,
        psi16=psi,
        A=a_raw.astype("=f8").reshape(tuple(cfg.extents) + (4,)),
        step_index=meta["step"],
        time=meta["time"],
    )
    return state


def write_diagnostics(diag: Diagnostics, path: str) -> None:
    rows = zip(
        diag.steps,
        diag.times,
        diag.norms,
        diag.norm_drifts,
        diag.continuity_residuals,
        diag.london_residuals,
        diag.equilibrium_residuals,
        diag.ml_antihermiticities,
    )
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(DIAG_COLUMNS) + "\n")
        for step_i, *vals in rows:
            fh.write(",".join([str(step_i)] + [_fmt(v) for v in vals]) + "\n")
