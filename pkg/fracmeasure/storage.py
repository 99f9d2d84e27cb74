"""Output path handling."""

from __future__ import annotations

from pathlib import Path


def resolve_output(path: str | Path) -> Path:
    """Absolute path for ``path`` (relative paths are taken from the working directory)."""

    target = Path(path).expanduser()
    if not target.is_absolute():
        target = Path.cwd() / target
    return target


def ensure_parent(path: str | Path) -> Path:
    """Resolve ``path`` and create its parent directory."""

    target = resolve_output(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    return target


def write_text(path: str | Path, text: str) -> Path:
    target = ensure_parent(path)
    with target.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    return target


def write_bytes(path: str | Path, data: bytes) -> Path:
    target = ensure_parent(path)
    target.write_bytes(data)
    return target
