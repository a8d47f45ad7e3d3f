"""Output writers and run manifests.

Floats are written with ``repr`` (shortest round-trip decimal), so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from pathlib import Path
from typing import Iterable, Sequence

SCHEMA_VERSION = 1


def fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    if hasattr(x, "item"):  # numpy scalar
        return fmt(x.item())
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> Path:
    """CSV with ``# key: value`` comment lines before the header (units, bin edges)."""
    path = Path(path)
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path) -> tuple[list[str], list[list[str]], list[str]]:
    comments, rows, header = [], [], None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return header or [], rows, comments


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def write_jsonl(path, records: Iterable[dict]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(_clean(r), sort_keys=False, allow_nan=False) + "\n")
    return path


def read_jsonl(path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line]


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Manifest:
    """Run manifest: written when a run starts and finalized when it ends.

    Schema (JSON object): ``schema`` (int), ``config`` (the run config),
    ``code_version`` (str), ``started``/``finished`` (UTC ISO timestamps),
    ``status`` ("running" | "ok" | "failed"), ``error`` (str or null),
    ``outputs`` (file name -> sha256 hex digest).
    """

    def __init__(self, out_dir, config: dict, code_version: str):
        self.path = Path(out_dir) / "manifest.json"
        self.data = {
            "schema": SCHEMA_VERSION,
            "config": config,
            "code_version": code_version,
            "started": _now(),
            "finished": None,
            "status": "running",
            "error": None,
            "outputs": {},
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        write_json(self.path, self.data)

    def finalize(self, outputs: Sequence[Path], status: str = "ok", error: str | None = None) -> None:
        self.data["outputs"] = {Path(p).name: sha256(p) for p in outputs if Path(p).exists()}
        self.data["finished"] = _now()
        self.data["status"] = status
        self.data["error"] = error
        write_json(self.path, self.data)


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
