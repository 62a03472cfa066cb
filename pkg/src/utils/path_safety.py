from __future__ import annotations

from pathlib import Path


class OutputPathError(ValueError):
    """Raised when an output directory fails validation."""


def ensure_output_dir(candidate: str | Path) -> Path:
    """Validate an output directory, create it if needed and return it resolved.

    The helper rejects null bytes, refuses to write through symbolic links and
    refuses a path that already exists as a regular file.

    Args:
        candidate: User-provided output directory.

    Returns:
        The fully resolved absolute directory path.

    Raises:
        OutputPathError: If the path is unusable as an output directory.
    """
    if isinstance(candidate, str):
        if "\x00" in candidate:
            raise OutputPathError("Output path contains null byte, which is disallowed.")
    elif not isinstance(candidate, Path):
        raise OutputPathError("Invalid path type. Must be str or Path.")

    expanded = Path(candidate).expanduser()
    preliminary = expanded if expanded.is_absolute() else Path.cwd() / expanded

    # Disallow symlinks in the provided path or any existing parent
    current = preliminary
    while True:
        if current.is_symlink():
            raise OutputPathError(f"Output path cannot include symbolic links: {candidate}")
        if current == current.parent:
            break
        current = current.parent

    resolved = preliminary.resolve(strict=False)
    if resolved.exists() and not resolved.is_dir():
        raise OutputPathError(f"Output path must be a directory: {resolved}")

    try:
        resolved.mkdir(parents=True, exist_ok=True)
    except OSError as exc:  # pragma: no cover - unexpected I/O failure
        raise OutputPathError(
            f"Unable to create output directory {resolved}: {exc.strerror or exc}"
        ) from exc
    return resolved


__all__ = ["OutputPathError", "ensure_output_dir"]
