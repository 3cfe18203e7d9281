"""
File formats for traces, spectra, tuning curves and reports.

Traces are CSV with a versioned header and `# key=value` metadata lines;
floats are written with repr so a written trace reads back bit-exactly.
Every file is written atomically: a temporary file in the target directory
is renamed over the destination.
"""

import csv
import dataclasses
import io
import json
import logging
import os
import tempfile
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from config import Config
from src.errors import DomainError
from src.modes import ModeLine
from src.spectroscopy import TraceMetadata, TransmissionTrace
from src.tuning import TuningPoint

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRACE_COLUMNS = ("frequency_THz", "transmission")
_METADATA_FIELDS = tuple(f.name for f in dataclasses.fields(TraceMetadata) if f.name != "extra")
_INTEGER_FIELDS = {"seed"}


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Write text to a file through a temporary file and rename.

    Args:
        path: Destination; parent directories are created

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug("Wrote %s", path)
    return path


def _csv_text(header_lines: Sequence[str], columns: Sequence[str], rows) -> str:
    buffer = io.StringIO()
    for line in header_lines:
        buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buffer.getvalue()


def format_trace_csv(trace: TransmissionTrace) -> str:
    """Render a trace in the versioned trace format."""
    header = [Config.TRACE_HEADER]
    meta = trace.metadata
    for name in _METADATA_FIELDS:
        value = getattr(meta, name)
        if value is None:
            continue
        header.append(f"# {name}={repr(float(value)) if isinstance(value, float) else value}")
    for key in sorted(meta.extra):
        header.append(f"# {key}={meta.extra[key]}")
    rows = ((repr(float(f)), repr(float(t)))
            for f, t in zip(trace.frequencies, trace.transmission))
    return _csv_text(header, TRACE_COLUMNS, rows)


def write_trace_csv(path: PathLike, trace: TransmissionTrace) -> Path:
    return atomic_write_text(path, format_trace_csv(trace))


def _parse_metadata_value(name: str, text: str):
    return int(text) if name in _INTEGER_FIELDS else float(text)


def _read_lines(path: Path) -> List[str]:
    try:
        with path.open("r", encoding="utf-8") as handle:
            return handle.read().splitlines()
    except UnicodeDecodeError as e:
        raise DomainError(f"{path}: not a UTF-8 text file (byte {e.start}: {e.reason})")


def read_trace_csv(path: PathLike) -> TransmissionTrace:
    """
    Read a trace written by write_trace_csv, or real data in the same format.

    Raises:
        FileNotFoundError: If the file does not exist
        DomainError: If the file is not UTF-8 text or the header, metadata or
            rows are malformed
    """
    path = Path(path)
    lines = _read_lines(path)
    if not lines or lines[0].strip() != Config.TRACE_HEADER:
        raise DomainError(f"{path}: line 1: expected '{Config.TRACE_HEADER}'")

    metadata = TraceMetadata()
    index = 1
    while index < len(lines) and lines[index].startswith("#"):
        entry = lines[index][1:].strip()
        if "=" not in entry:
            raise DomainError(f"{path}: line {index + 1}: metadata must be 'key=value'")
        key, value = (part.strip() for part in entry.split("=", 1))
        if key in _METADATA_FIELDS:
            try:
                setattr(metadata, key, _parse_metadata_value(key, value))
            except ValueError:
                raise DomainError(f"{path}: line {index + 1}: bad value for '{key}': {value!r}")
        else:
            metadata.extra[key] = value
        index += 1

    if index >= len(lines) or tuple(c.strip() for c in lines[index].split(",")) != TRACE_COLUMNS:
        raise DomainError(f"{path}: line {index + 1}: expected column header "
                          f"'{','.join(TRACE_COLUMNS)}'")
    frequencies, transmission = [], []
    for number, text in enumerate(lines[index + 1:], start=index + 2):
        try:
            row = next(csv.reader([text]), [])
            if not row:
                continue
            f, t = row
            frequencies.append(float(f))
            transmission.append(float(t))
        except (ValueError, csv.Error):
            raise DomainError(f"{path}: line {number}: expected two numbers, got {text!r}")
    return TransmissionTrace(np.array(frequencies), np.array(transmission), metadata)


def read_frequency_column(path: PathLike) -> List[float]:
    """
    Dip centres (THz) from a trace file or a CSV with a frequency_THz column.

    Raises:
        DomainError: If the file is not UTF-8 text, has no frequency_THz column
            or holds a non-numeric frequency
    """
    path = Path(path)
    rows = [line for line in _read_lines(path) if line and not line.startswith("#")]
    reader = csv.DictReader(rows)
    try:
        fieldnames = reader.fieldnames
    except csv.Error as e:
        raise DomainError(f"{path}: {e}")
    if fieldnames is None or "frequency_THz" not in fieldnames:
        raise DomainError(f"{path}: no 'frequency_THz' column")
    try:
        return [float(row["frequency_THz"]) for row in reader]
    except (ValueError, TypeError, csv.Error) as e:
        raise DomainError(f"{path}: {e}")


def is_trace_file(path: PathLike) -> bool:
    with Path(path).open("rb") as handle:
        return handle.readline().strip() == Config.TRACE_HEADER.encode("utf-8")


def write_spectrum_csv(path: PathLike, lines: Sequence[ModeLine]) -> Path:
    """CSV with columns q,l,m,pol,frequency_THz,Q,depth."""
    rows = ((line.mode.radial_order_q, line.mode.angular_l, line.mode.azimuthal_m,
             line.mode.polarization.value, repr(float(line.frequency)),
             repr(float(line.loaded_Q)), repr(float(line.dip_depth)))
            for line in lines)
    return atomic_write_text(path, _csv_text([], Config.SPECTRUM_COLUMNS, rows))


def write_tuning_csv(path: PathLike, points: Sequence[TuningPoint]) -> Path:
    """CSV with columns voltage_V,shift_TE_GHz,shift_TM_GHz."""
    rows = ((repr(float(p.voltage)), repr(float(p.shift_TE)), repr(float(p.shift_TM)))
            for p in points)
    return atomic_write_text(path, _csv_text([], Config.TUNING_COLUMNS, rows))


def to_jsonable(value: Any) -> Any:
    """Convert dataclasses, enums, numpy values and tuples into JSON types."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: PathLike, data: Dict[str, Any]) -> Path:
    """Deterministic JSON: sorted keys, fixed indent, trailing newline."""
    text = json.dumps(to_jsonable(data), indent=2, sort_keys=True, allow_nan=True)
    return atomic_write_text(path, text + "\n")


def read_json(path: PathLike) -> Dict[str, Any]:
    with Path(path).open("r", encoding="utf-8") as handle:
        return json.load(handle)
