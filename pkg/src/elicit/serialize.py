"""Canonical JSON for session files and replay hashing.

Floats are serialized as decimal strings (their shortest round-trip repr) so
session files hash identically across platforms; ints and other scalars pass
through.  Infinite support bounds become "inf"/"-inf" strings.
"""

from __future__ import annotations

import hashlib
import json
import math


def stringify_numbers(obj):
    """Recursively convert every float to its repr string."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            raise ValueError("NaN is not representable in a session file")
        return repr(obj)
    if isinstance(obj, dict):
        return {str(k): stringify_numbers(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [stringify_numbers(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return stringify_numbers(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__} into a session file")


def canonical_json(obj) -> str:
    return json.dumps(stringify_numbers(obj), sort_keys=True, separators=(",", ":"))


def state_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def parse_float(v) -> float:
    """Read back a decimal-string (or plain) number."""
    return float(v)


def parse_optional_float(v):
    return None if v is None else float(v)
