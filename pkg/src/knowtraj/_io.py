"""Atomic file output shared by the exporters and the CLI."""

from __future__ import annotations

import contextlib
import os
import tempfile
from pathlib import Path
from typing import IO, Iterator, Mapping


@contextlib.contextmanager
def atomic_write(path: str | os.PathLike, newline: str | None = "\n") -> Iterator[IO[str]]:
    """Write to a temp file next to ``path`` and rename it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def header_line(meta: Mapping[str, object] | None) -> str:
    """``# key=value ...`` comment line used at the top of TSV/CSV artifacts."""
    if not meta:
        return ""
    return "# " + " ".join(f"{k}={meta[k]}" for k in sorted(meta)) + "\n"
