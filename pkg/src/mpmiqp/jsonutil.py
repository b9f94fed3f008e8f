"""Canonical JSON serialization shared by instance and model files.

Rules: keys sorted, two-space indentation, LF line endings, UTF-8 bytes,
floats rendered as the shortest decimal that round-trips the 64-bit value
(Python's repr), non-finite numbers rejected.  Identical objects therefore
serialize to identical bytes on every run.
"""

from __future__ import annotations

import json

__all__ = ["canonical_json_bytes", "canonical_json_text"]


def canonical_json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def canonical_json_bytes(obj) -> bytes:
    return canonical_json_text(obj).encode("utf-8")
