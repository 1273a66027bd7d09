"""Signal file I/O and experiment-result CSV emission.

Signals round-trip losslessly through csv (one value per line, repr
formatting) and f64-raw; wav-pcm16 quantizes to 16-bit steps.  Result files
start with comment headers carrying the tool version, the full configuration
echo, and the master seed, so a run can be reproduced byte-for-byte from its
own output (the timestamp line excepted).
"""

from __future__ import annotations

import json
import wave
from pathlib import Path

import numpy as np

from .experiments import ExperimentResult

__all__ = [
    "SignalParseError",
    "SIGNAL_FORMATS",
    "read_signal",
    "write_signal",
    "write_result_csv",
    "read_result_header",
]

SIGNAL_FORMATS = ("csv", "wav-pcm16", "f64-raw")


class SignalParseError(ValueError):
    """Malformed signal file; ``offset`` is the byte position of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def write_signal(path, x, format: str = "csv", fs: int = 16000) -> None:
    x = np.asarray(x, dtype=float).ravel()
    path = Path(path)
    if format == "csv":
        path.write_text("".join(f"{v!r}\n" for v in x.tolist()))
    elif format == "f64-raw":
        x.astype("<f8").tofile(path)
    elif format == "wav-pcm16":
        q = np.clip(np.rint(x * 32767.0), -32768, 32767).astype("<i2")
        with wave.open(str(path), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(int(fs))
            w.writeframes(q.tobytes())
    else:
        raise ValueError(f"unknown format {format!r}; expected one of {SIGNAL_FORMATS}")


def read_signal(path, format: str = "csv") -> np.ndarray:
    path = Path(path)
    if format == "csv":
        values = []
        offset = 0
        with open(path, "rb") as f:
            for raw in f:
                line = raw.decode("ascii", errors="replace").strip()
                if line and not line.startswith("#"):
                    try:
                        values.append(float(line))
                    except ValueError:
                        raise SignalParseError(f"unparseable value {line!r}", offset) from None
                offset += len(raw)
        return np.array(values)
    if format == "f64-raw":
        data = path.read_bytes()
        if len(data) % 8 != 0:
            raise SignalParseError("raw f64 file size is not a multiple of 8", len(data) - len(data) % 8)
        return np.frombuffer(data, dtype="<f8").copy()
    if format == "wav-pcm16":
        try:
            with wave.open(str(path), "rb") as w:
                if w.getsampwidth() != 2 or w.getnchannels() != 1:
                    raise SignalParseError("expected mono 16-bit PCM", 0)
                frames = w.readframes(w.getnframes())
        except wave.Error as exc:
            raise SignalParseError(f"invalid wav file: {exc}", 0) from None
        return np.frombuffer(frames, dtype="<i2").astype(float) / 32767.0
    raise ValueError(f"unknown format {format!r}; expected one of {SIGNAL_FORMATS}")


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_table(path: Path, rows: list, meta: dict, timestamp: str | None) -> None:
    lines = [f"# isosparse {meta.get('version', '?')}"]
    if timestamp is not None:
        lines.append(f"# timestamp: {timestamp}")
    lines.append(f"# seed: {meta.get('seed')}")
    lines.append(f"# config: {json.dumps(meta.get('config', {}), sort_keys=True)}")
    if rows:
        columns = list(rows[0].keys())
        for row in rows[1:]:
            for key in row:
                if key not in columns:
                    columns.append(key)
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_format_cell(row[c]) if c in row else "" for c in columns))
    path.write_text("\n".join(lines) + "\n")


def write_result_csv(path, result: ExperimentResult, timestamp: str | None = None) -> Path:
    """Write per-trial rows to ``path`` and aggregates to a .summary.csv sibling.

    Returns the summary path.  With ``timestamp=None`` the header omits the
    timestamp line entirely, making reruns byte-identical.
    """
    path = Path(path)
    _write_table(path, result.rows, result.meta, timestamp)
    summary_path = path.with_suffix("") if path.suffix == ".csv" else path
    summary_path = Path(str(summary_path) + ".summary.csv")
    _write_table(summary_path, result.summary, result.meta, timestamp)
    return summary_path


def read_result_header(path) -> dict:
    """Parse the comment header of a result file back into a dict."""
    out: dict = {}
    with open(path, "r") as f:
        for line in f:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("isosparse "):
                out["version"] = body.split(" ", 1)[1]
            elif body.startswith("timestamp:"):
                out["timestamp"] = body.split(":", 1)[1].strip()
            elif body.startswith("seed:"):
                out["seed"] = int(body.split(":", 1)[1].strip())
            elif body.startswith("config:"):
                out["config"] = json.loads(body.split(":", 1)[1].strip())
    return out
