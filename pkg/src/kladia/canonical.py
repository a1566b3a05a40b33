"""Canonical serialization and content hashing.

Every hashed artifact (ledger snapshots, cycle records, policy reports)
serializes through the same canonical form: UTF-8 JSON, lexicographically
sorted keys, no insignificant whitespace, scaled decimals rendered as
strings with exactly 9 fractional digits. Hash is SHA-256, lowercase hex.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_bytes(payload: Any) -> bytes:
    return json.dumps(
        payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def content_hash(payload: Any) -> str:
    return sha256_hex(canonical_bytes(payload))
