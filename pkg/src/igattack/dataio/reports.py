"""Campaign report persistence: one JSON object per line, one line per campaign.

Floats are written with their shortest round-trip representation, keys are
sorted, and absent statistics are ``null``, so identical campaigns produce
byte-identical files and records reload bit-exactly.
"""
from __future__ import annotations

import json
import math

REPORT_FORMAT = "igattack-report"
REPORT_VERSION = 1


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps_record(record: dict) -> str:
    rec = dict(record)
    rec.setdefault("format", REPORT_FORMAT)
    rec.setdefault("format_version", REPORT_VERSION)
    return json.dumps(_clean(rec), sort_keys=True, separators=(",", ":"), allow_nan=False)


def loads_record(line: str) -> dict:
    rec = json.loads(line)
    if rec.get("format") != REPORT_FORMAT:
        raise ValueError("line is not an igattack report record")
    if rec.get("format_version") != REPORT_VERSION:
        raise ValueError(f"unsupported report format_version {rec.get('format_version')!r}")
    return rec


def write_records(path, records, append: bool = False) -> None:
    with open(path, "a" if append else "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_record(rec) + "\n")


def read_records(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [loads_record(line) for line in fh if line.strip()]
