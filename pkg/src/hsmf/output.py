"""Deterministic, locale-independent serialization for CSV/JSON artifacts."""

from __future__ import annotations

import hashlib
import io
import json
import math


def fmt(x) -> str:
    """Fixed 17-significant-digit decimal formatting (round-trips doubles)."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int,)):
        return str(x)
    xf = float(x)
    if math.isnan(xf):
        return "nan"
    if math.isinf(xf):
        return "inf" if xf > 0 else "-inf"
    return f"{xf:.17g}"


def json_bytes(obj) -> bytes:
    """Canonical JSON: sorted keys, fixed separators, newline-terminated."""
    return (json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n").encode("ascii")


def config_hash(obj) -> str:
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(payload.encode("ascii")).hexdigest()[:12]


def meta_line(version: str, cfg_hash: str, seed: int) -> str:
    return f"# hsmf {version} config={cfg_hash} seed={seed}"


def csv_bytes(columns, rows, meta: str) -> bytes:
    """CSV with a leading comment line; every cell must already be a string."""
    buf = io.StringIO()
    buf.write(meta + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    return buf.getvalue().encode("ascii")
