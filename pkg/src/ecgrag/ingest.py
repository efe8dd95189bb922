"""Loading and lead standardization for raw ECG recordings.

Two portable on-disk formats are supported:

* ``csv`` -- first line is the comma-separated lead names, each following
  line holds one sample per lead. The sampling rate is not part of the file
  and must be supplied by the caller (CLI flag or manifest).
* ``rawbin`` -- ``<record_id>.f32`` (lead-major float32 little-endian)
  next to a ``<record_id>.json`` manifest with fields
  ``{record_id, leads, fs, n_samples}``. Round-trips bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateLeadError,
    MalformedFileError,
    MissingLeadError,
    NonFiniteSampleError,
    UnknownLeadError,
)

#: Canonical 12-lead order every record is standardized to.
CANONICAL_LEADS = ("I", "II", "III", "aVL", "aVR", "aVF",
                   "V1", "V2", "V3", "V4", "V5", "V6")

# Case-insensitive alias table ("AVL" == "aVL"); dataset exports disagree on
# casing, so resolution always goes through lowercase.
_LEAD_BY_LOWER = {name.lower(): name for name in CANONICAL_LEADS}


def canonical_lead_name(name: str) -> str:
    """Resolve a lead name (any casing, surrounding whitespace) to canonical form."""
    key = name.strip().lower()
    if key not in _LEAD_BY_LOWER:
        raise UnknownLeadError(f"unknown lead name: {name!r}")
    return _LEAD_BY_LOWER[key]


@dataclass
class EcgRecord:
    """A multi-lead ECG: ``data[i]`` is the signal of ``leads[i]`` in mV."""

    leads: list[str]
    data: np.ndarray  # [n_leads, n_samples], millivolts
    fs: float
    record_id: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise MalformedFileError(
                f"record {self.record_id!r}: data must be 2-D [n_leads, n_samples]")
        if self.data.shape[0] != len(self.leads):
            raise MalformedFileError(
                f"record {self.record_id!r}: {len(self.leads)} lead names but "
                f"{self.data.shape[0]} signal rows")
        if len(set(self.leads)) != len(self.leads):
            raise DuplicateLeadError(
                f"record {self.record_id!r}: duplicate lead names in {self.leads}")
        if not self.fs > 0:
            raise MalformedFileError(f"record {self.record_id!r}: fs must be > 0")
        if not np.isfinite(self.data).all():
            raise NonFiniteSampleError(
                f"record {self.record_id!r}: NaN/Inf sample values")

    @property
    def n_leads(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs


def load_record(path: str | Path, format: str, fs: float | None = None) -> EcgRecord:
    """Load one recording from ``path`` in the declared ``format``.

    ``fs`` is required for ``csv`` (the file does not carry it); for
    ``rawbin`` it comes from the manifest and the argument is ignored.
    """
    path = Path(path)
    if format == "csv":
        return _load_csv(path, fs)
    if format == "rawbin":
        return _load_rawbin(path)
    raise MalformedFileError(f"unknown ingestion format: {format!r}")


def _load_csv(path: Path, fs: float | None) -> EcgRecord:
    if fs is None or not fs > 0:
        raise MalformedFileError(f"{path}: csv format requires a sampling rate")
    try:
        text = path.read_text()
    except OSError as exc:
        raise MalformedFileError(f"{path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise MalformedFileError(f"{path}: need a header line and at least one sample")
    leads = [canonical_lead_name(c) for c in lines[0].split(",")]
    if len(set(leads)) != len(leads):
        raise DuplicateLeadError(f"{path}: duplicate lead in header")
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(leads):
            raise MalformedFileError(
                f"{path}: line {i} has {len(cells)} cells, expected {len(leads)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise MalformedFileError(f"{path}: line {i}: {exc}") from exc
    data = np.asarray(rows, dtype=np.float64).T  # sample-major file -> lead-major
    if not np.isfinite(data).all():
        raise NonFiniteSampleError(f"{path}: NaN/Inf sample values")
    return EcgRecord(leads=leads, data=data, fs=float(fs), record_id=path.stem)


def _rawbin_paths(path: Path) -> tuple[Path, Path]:
    """Accept the ``.f32``, the ``.json``, or the bare stem."""
    if path.suffix == ".f32":
        return path, path.with_suffix(".json")
    if path.suffix == ".json":
        return path.with_suffix(".f32"), path
    return path.with_suffix(".f32"), path.with_suffix(".json")


def _load_rawbin(path: Path) -> EcgRecord:
    f32_path, manifest_path = _rawbin_paths(path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFileError(f"{manifest_path}: {exc}") from exc
    try:
        leads = [canonical_lead_name(c) for c in manifest["leads"]]
        fs = float(manifest["fs"])
        n_samples = int(manifest["n_samples"])
        record_id = str(manifest["record_id"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFileError(f"{manifest_path}: bad manifest: {exc}") from exc
    try:
        raw = np.fromfile(f32_path, dtype="<f4")
    except OSError as exc:
        raise MalformedFileError(f"{f32_path}: {exc}") from exc
    if raw.size != len(leads) * n_samples:
        raise MalformedFileError(
            f"{f32_path}: {raw.size} floats, manifest says "
            f"{len(leads)}x{n_samples}")
    data = raw.reshape(len(leads), n_samples)
    if not np.isfinite(data).all():
        raise NonFiniteSampleError(f"{f32_path}: NaN/Inf sample values")
    extra = {k: v for k, v in manifest.items()
             if k not in ("record_id", "leads", "fs", "n_samples")}
    return EcgRecord(leads=leads, data=data, fs=fs, record_id=record_id, meta=extra)


def save_record(record: EcgRecord, out_dir: str | Path, **manifest_extra) -> Path:
    """Write ``record`` in rawbin format; returns the manifest path.

    Data is stored as little-endian float32, lead-major, so a save/load
    round-trip of float32 data is bit-exact.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    f32_path = out_dir / f"{record.record_id}.f32"
    manifest_path = out_dir / f"{record.record_id}.json"
    record.data.astype("<f4").tofile(f32_path)
    manifest = {
        "record_id": record.record_id,
        "leads": list(record.leads),
        "fs": record.fs,
        "n_samples": record.n_samples,
    }
    manifest.update(manifest_extra)
    manifest_path.write_text(json.dumps(manifest, indent=1) + "\n")
    return manifest_path


def standardize_leads(record: EcgRecord, fill_missing: bool = False) -> EcgRecord:
    """Permute leads into :data:`CANONICAL_LEADS` order.

    Missing leads are a hard error unless ``fill_missing`` is set, in which
    case they become zero rows (silent imputation would corrupt retrieval,
    so it is opt-in). Idempotent, and pure row permutation otherwise.
    """
    resolved = [canonical_lead_name(name) for name in record.leads]
    if len(set(resolved)) != len(resolved):
        raise DuplicateLeadError(
            f"record {record.record_id!r}: duplicate lead after alias resolution")
    row_of = {name: i for i, name in enumerate(resolved)}
    missing = [name for name in CANONICAL_LEADS if name not in row_of]
    if missing and not fill_missing:
        raise MissingLeadError(
            f"record {record.record_id!r}: missing leads {missing} "
            "(pass fill_missing=True to zero-fill)")
    data = np.zeros((len(CANONICAL_LEADS), record.n_samples), dtype=np.float64)
    for i, name in enumerate(CANONICAL_LEADS):
        if name in row_of:
            data[i] = record.data[row_of[name]]
    return replace(record, leads=list(CANONICAL_LEADS), data=data)
