"""Content digests used for chain linkage, prompt hashes, and stable ids."""

from __future__ import annotations

import hashlib


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def short_digest(text: str, length: int = 16) -> str:
    return sha256_hex(text)[:length]
