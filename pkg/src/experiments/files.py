"""
Output Files

Deterministic JSON and CSV writers, trace and field serialization, gnuplot
style plot data, and the per-run manifest. Payload files never carry
timestamps; only manifest.json does.
"""

import csv
import io
import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from src import __version__
from src.errors import ArgumentError
from src.geometry.modal import KGrid, ModalField
from src.solvers.forward import NeumannTrace, TimeGrid

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
TRACE_HEADER = ("k_index", "t_index", "re", "im")
SWEEP_HEADER = ("delta", "kappa", "err", "bound", "ratio")
PLOT_HEADER = "# log10_kappa log10_err log10_bound"


def plain(value):
    """Convert numpy scalars/arrays to JSON types; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(key): plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return [plain(item) for item in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def canonical_json(payload):
    return json.dumps(plain(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def format_float(value):
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def _csv_text(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buffer.getvalue()


class OutputWriter:
    """
    Writes run outputs into one directory and remembers every file.

    Attributes:
        root (Path): Output directory, created on first use
        written (list): Relative names of files written so far
    """

    def __init__(self, root):
        self.root = Path(root)
        self.written = []

    def _path(self, name):
        self.root.mkdir(parents=True, exist_ok=True)
        return self.root / name

    def write_text(self, name, text):
        path = self._path(name)
        path.write_text(text, encoding="utf-8")
        if name not in self.written:
            self.written.append(name)
        logger.debug("wrote %s", path)
        return path

    def write_json(self, name, payload):
        return self.write_text(name, canonical_json(payload))

    def write_csv(self, name, header, rows):
        return self.write_text(name, _csv_text(header, rows))

    def write_manifest(self, subcommand, config_hash, started, finished=None):
        finished = finished or datetime.now(timezone.utc)
        manifest = {
            "subcommand": subcommand,
            "config_hash": config_hash,
            "version": __version__,
            "started_utc": started.isoformat(),
            "finished_utc": finished.isoformat(),
            "files": sorted(self.written),
        }
        path = self._path(MANIFEST_NAME)
        path.write_text(canonical_json(manifest), encoding="utf-8")
        return path


def write_trace(writer, stem, trace):
    """Trace as <stem>.csv (k_index, t_index, re, im) plus a <stem>.json sidecar."""
    rows = []
    for j in range(trace.kgrid.n_k):
        for i in range(trace.timegrid.n_t + 1):
            value = trace.values[i, j]
            rows.append((j, i, float(value.real), float(value.imag)))
    writer.write_csv(f"{stem}.csv", TRACE_HEADER, rows)
    sidecar = {
        "T": trace.timegrid.T,
        "n_t": trace.timegrid.n_t,
        "k_max": trace.kgrid.k_max,
        "n_k": trace.kgrid.n_k,
        "provenance": dict(trace.provenance),
    }
    writer.write_json(f"{stem}.json", sidecar)


def read_trace(csv_path):
    """Inverse of write_trace; the sidecar sits next to the CSV with a .json suffix."""
    csv_path = Path(csv_path)
    sidecar = json.loads(csv_path.with_suffix(".json").read_text(encoding="utf-8"))
    tg = TimeGrid(T=sidecar["T"], n_t=sidecar["n_t"])
    kgrid = KGrid(k_max=sidecar["k_max"], n_k=sidecar["n_k"])
    values = np.zeros((tg.n_t + 1, kgrid.n_k), dtype=complex)
    seen = 0
    with csv_path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != TRACE_HEADER:
            raise ArgumentError(f"{csv_path}: expected header {','.join(TRACE_HEADER)}")
        for row in reader:
            j, i = int(row[0]), int(row[1])
            values[i, j] = complex(float(row[2]), float(row[3]))
            seen += 1
    if seen != values.size:
        raise ArgumentError(f"{csv_path}: expected {values.size} rows, found {seen}")
    return NeumannTrace(kgrid, tg, values, sidecar.get("provenance") or {"kind": "clean"})


def write_field(writer, name, f):
    writer.write_json(name, f.to_dict())


def read_field(path):
    return ModalField.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def emit_plot_data(writer, records, name="sweep_plot.dat"):
    """
    Whitespace-separated columns log10(kappa) log10(err) log10(bound), sorted
    by kappa; records without a positive kappa, err and bound are left out.
    """
    lines = [PLOT_HEADER]
    usable = [r for r in records if r.kappa > 0 and r.err > 0 and math.isfinite(r.bound) and r.bound > 0]
    for r in sorted(usable, key=lambda r: r.kappa):
        lines.append(" ".join(format_float(math.log10(v)) for v in (r.kappa, r.err, r.bound)))
    return writer.write_text(name, "\n".join(lines) + "\n")
