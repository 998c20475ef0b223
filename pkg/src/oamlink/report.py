"""Results report: JSON document and per-table CSV files.

JSON layout (top-level keys, in order)::

    toolkit, version, scenario, mode, seed, generated_at,
    metrics            {name: {"raw": M, "net": M}}  M = {value, sigma, resamples, dropped}
    density_matrices   {name: {"raw": {"real": [[..]], "imag": [[..]]}, "net": ...}}
    records            [{group, setting, duration_s, expected, sampled, accidental, raw, net, clamped}]
    tables             {name: {"columns": [...], "rows": [[...]]}}
    config             the config document as run (after CLI overrides)

``generated_at`` is the only field that differs between two runs of the
same config; equality ignores it. CSV output writes one ``<table>.csv``
per entry of ``tables`` with the listed columns as header.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ValidationError
from .metrics import MetricWithError
from .quantum import DensityMatrix

FORMATS = ("json", "csv")


@dataclass(eq=False)
class ResultsReport:
    scenario: str
    mode: str
    seed: int
    config: dict
    metrics: dict = field(default_factory=dict)
    density_matrices: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    version: str = __version__
    generated_at: str = ""

    def metric(self, name: str, kind: str = "raw") -> MetricWithError:
        return self.metrics[name][kind]

    def to_dict(self) -> dict:
        return {
            "toolkit": "oamlink",
            "version": self.version,
            "scenario": self.scenario,
            "mode": self.mode,
            "seed": self.seed,
            "generated_at": self.generated_at,
            "metrics": {
                name: {kind: m.as_dict() for kind, m in pair.items()} for name, pair in self.metrics.items()
            },
            "density_matrices": {
                name: {kind: _matrix_to_dict(r) for kind, r in pair.items()}
                for name, pair in self.density_matrices.items()
            },
            "records": [dict(r) for r in self.records],
            "tables": {name: {"columns": list(t["columns"]), "rows": [list(r) for r in t["rows"]]}
                       for name, t in self.tables.items()},
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ResultsReport":
        return cls(
            scenario=doc["scenario"],
            mode=doc["mode"],
            seed=doc["seed"],
            config=doc["config"],
            metrics={
                name: {kind: MetricWithError(**m) for kind, m in pair.items()}
                for name, pair in doc["metrics"].items()
            },
            density_matrices={
                name: {kind: _matrix_from_dict(m) for kind, m in pair.items()}
                for name, pair in doc["density_matrices"].items()
            },
            records=list(doc["records"]),
            tables=doc["tables"],
            version=doc["version"],
            generated_at=doc.get("generated_at", ""),
        )

    def comparable(self) -> dict:
        d = self.to_dict()
        d.pop("generated_at")
        return d

    def __eq__(self, other):
        if not isinstance(other, ResultsReport):
            return NotImplemented
        return self.comparable() == other.comparable()


def _matrix_to_dict(rho: DensityMatrix) -> dict:
    m = rho.entries
    return {"real": m.real.tolist(), "imag": m.imag.tolist()}


def _matrix_from_dict(d: dict) -> DensityMatrix:
    return DensityMatrix(np.asarray(d["real"]) + 1j * np.asarray(d["imag"]))


def emit_json(r: ResultsReport) -> bytes:
    return (json.dumps(r.to_dict(), indent=2, allow_nan=False) + "\n").encode()


def emit_csv(r: ResultsReport) -> dict:
    """``{file name: bytes}``, one CSV per table."""
    out = {}
    for name, table in r.tables.items():
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table["columns"])
        for row in table["rows"]:
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        out[f"{name}.csv"] = buf.getvalue().encode()
    return out


def emit_report(r: ResultsReport, format: str = "json"):
    """JSON bytes, or a ``{file name: bytes}`` mapping for CSV."""
    if format == "json":
        return emit_json(r)
    if format == "csv":
        return emit_csv(r)
    raise ValidationError(f"unknown report format {format!r}; expected one of {FORMATS}")


def parse_report(data) -> ResultsReport:
    if isinstance(data, bytes):
        data = data.decode()
    return ResultsReport.from_dict(json.loads(data))


def write_report(r: ResultsReport, out_dir, format: str = "json") -> list:
    """Write the report under ``out_dir``; returns the written paths."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create output directory {out_dir}: {exc.strerror}") from exc
    payload = emit_report(r, format)
    files = {f"{r.scenario}.json": payload} if format == "json" else payload
    written = []
    for name, content in files.items():
        path = out_dir / name
        try:
            path.write_bytes(content)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
        written.append(path)
    return written
