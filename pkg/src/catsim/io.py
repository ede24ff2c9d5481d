"""File formats: trace dumps, mode and quadrature CSVs, density-matrix JSON, Wigner CSV."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .fock import WignerGrid
from .herald import ModeFunction
from .tracegen import HomodyneTrace, QuadratureDataset

_FMT = "%.17g"


def _trace_header(trace, seed):
    return {
        "sample_rate": float(trace.sample_rate),
        "n_samples": int(trace.samples.shape[-1]),
        "n_traces": int(np.atleast_2d(trace.samples).shape[0]),
        "lo_phase": float(trace.lo_phase_deg),
        "trigger_index": int(trace.trigger_index),
        "seed": seed,
    }


def write_traces_binary(path, trace, seed=None):
    """JSON header line, then little-endian float32 samples (row-major, one trace per row)."""
    header = _trace_header(trace, seed)
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.atleast_2d(trace.samples).astype("<f4").tobytes())


def _trace_from(header, data):
    n = int(header["n_samples"])
    if data.size % n:
        raise InputError(f"sample count {data.size} is not a multiple of n_samples={n}")
    return HomodyneTrace(
        samples=data.reshape(-1, n).astype(float),
        sample_rate=float(header["sample_rate"]),
        lo_phase_deg=float(header["lo_phase"]),
        trigger_index=int(header.get("trigger_index", 0)),
    )


def read_traces_binary(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        data = np.frombuffer(fh.read(), dtype="<f4")
    return _trace_from(header, data), header


def write_traces_csv(path, trace, seed=None):
    header = _trace_header(trace, seed)
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        np.savetxt(fh, np.atleast_2d(trace.samples), delimiter=",", fmt=_FMT)


def read_traces_csv(path):
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise InputError(f"{path}: missing '# {{json header}}' line")
        header = json.loads(first[1:])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return _trace_from(header, data.ravel()), header


def read_traces(path):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_traces_csv(path)
    return read_traces_binary(path)


def write_mode_csv(path, mode):
    np.savetxt(path, np.column_stack([mode.t, mode.amplitudes]), delimiter=",", fmt=_FMT,
               header="t_seconds,amplitude", comments="")


def read_mode_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ModeFunction(t=data[:, 0], amplitudes=data[:, 1])


def write_quadratures_csv(path, dataset):
    np.savetxt(path, np.column_stack([dataset.theta_deg, dataset.x]), delimiter=",", fmt=_FMT,
               header="theta_deg,x", comments="")


def read_quadratures_csv(path):
    with open(path) as fh:
        head = fh.readline().strip().replace(" ", "")
        if head != "theta_deg,x":
            raise InputError(f"{path}: expected header 'theta_deg,x', got {head!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return QuadratureDataset(data[:, 0], data[:, 1])


def density_matrix_to_json(rho):
    rho = np.asarray(rho, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in rho]


def write_density_matrix_json(path, rho):
    with open(path, "w") as fh:
        json.dump(density_matrix_to_json(rho), fh)


def read_density_matrix_json(path):
    with open(path) as fh:
        arr = np.array(json.load(fh), dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise InputError(f"{path}: expected a square matrix of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def write_wigner_csv(path, grid):
    X, P = np.meshgrid(grid.x, grid.p)
    np.savetxt(path, np.column_stack([X.ravel(), P.ravel(), grid.values.ravel()]),
               delimiter=",", fmt=_FMT, header="x,p,W", comments="")


def read_wigner_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x = np.unique(data[:, 0])
    p = np.unique(data[:, 1])
    return WignerGrid(x=x, p=p, values=data[:, 2].reshape(len(p), len(x)))


def write_rows_csv(path, rows, fieldnames=None):
    rows = list(rows)
    fieldnames = fieldnames or list(rows[0])
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def read_rows_csv(path):
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
