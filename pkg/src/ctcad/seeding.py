"""Deterministic seed derivation for nested random streams.

Every stochastic stage (per-fold projections, per-fold SMOTE, bootstrap
resampling, per-case phantom noise) needs its own independent stream that is
reproducible across processes and platforms.  Python's builtin ``hash`` is
salted per interpreter, so child seeds are derived from a SHA-256 digest of
the parent seed and a sequence of domain parts instead.
"""

from __future__ import annotations

import hashlib


def derive_seed(root: int, *parts: int | str) -> int:
    """Derive a 63-bit child seed from ``root`` and a path of parts.

    The same (root, parts) pair always maps to the same child seed; distinct
    paths are independent for all practical purposes.
    """
    h = hashlib.sha256()
    h.update(str(int(root)).encode("ascii"))
    for part in parts:
        h.update(b"/")
        h.update(str(part).encode("utf-8"))
    # keep it positive and within numpy's accepted seed range
    return int.from_bytes(h.digest()[:8], "little") >> 1
