"""
Report envelopes, canonical JSON and content-addressed output files.

The canonical form drops ``metadata`` (timestamps and the hash itself), sorts
keys and uses compact separators, so identical runs give identical bytes.
Non-finite numbers never reach a report: they are written as "n/a".
"""

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from .domain import NOT_APPLICABLE, BoundReport
from .logger import logger

log = logger.create("kernbound", __file__)

TOOL_NAME = "kernbound"
HASH_PREFIX = 16
CSV_HEADER = ("p", "family", "form", "r", "value")

try:
    TOOL_VERSION = version(TOOL_NAME)
except PackageNotFoundError:
    TOOL_VERSION = "0.1.0"


def sanitize(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return sanitize(value.model_dump(mode="json"))
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return sanitize(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else NOT_APPLICABLE
    return value


def canonical_json(payload: Dict[str, Any]) -> str:
    return json.dumps(sanitize(payload), sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


@dataclass(frozen=True)
class Report:
    command: str
    config: Dict[str, Any]
    seed: Optional[int]
    result: Any
    created_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    @property
    def envelope(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "tool": {"name": TOOL_NAME, "version": TOOL_VERSION},
            "config": self.config,
            "seed": self.seed,
            "result": self.result,
        }

    @property
    def canonical(self) -> str:
        return canonical_json(self.envelope)

    @property
    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical.encode("utf-8")).hexdigest()

    def document(self) -> Dict[str, Any]:
        doc = sanitize(self.envelope)
        doc["metadata"] = {"created_at": self.created_at, "content_hash": self.content_hash}
        return doc

    def to_json(self) -> str:
        return json.dumps(self.document(), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)


def _target(out: str, command: str, digest: str, suffix: str) -> Path:
    base = Path(out)
    tag = digest[:HASH_PREFIX]
    if base.suffix:
        return base.with_name(f"{base.stem}-{tag}{suffix}")
    return base / f"{command}-{tag}{suffix}"


def _write_once(target: Path, text: str) -> Path:
    target.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(target, "x", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except FileExistsError:
        log.info("Report already present, leaving it untouched", {"path": str(target)})
        return target
    log.info("Wrote report", {"path": str(target)})
    return target


def write_report(report: Report, out: str) -> Path:
    """Write ``<stem>-<hash16>.json`` (or ``<command>-<hash16>.json`` inside a directory); never overwrites."""
    return _write_once(_target(out, report.command, report.content_hash, ".json"), report.to_json() + "\n")


def sweep_csv(rows: Sequence[BoundReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        value = NOT_APPLICABLE if row.value is None else repr(float(row.value))
        writer.writerow([row.p, row.family.value, row.form, "" if row.r is None else row.r, value])
    return buffer.getvalue()


def write_csv(rows: Sequence[BoundReport], report: Report, out: str) -> Path:
    return _write_once(_target(out, report.command, report.content_hash, ".csv"), sweep_csv(rows))


def rows_payload(rows: Sequence[BoundReport]) -> List[Dict[str, Any]]:
    return [row.model_dump(mode="json") for row in rows]
