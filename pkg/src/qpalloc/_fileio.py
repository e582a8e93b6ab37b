"""Atomic file writes: write to a sibling temp file, then rename.

A failed write never leaves a partial output at the target path; the
OS-level cause is wrapped in OutputIOError so the CLI can classify it.
"""

from __future__ import annotations

import os

from .errors import OutputIOError


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    target = os.fspath(path)
    tmp = target + ".tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise OutputIOError(f"cannot write {target}: {exc}") from exc


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("ascii"))
