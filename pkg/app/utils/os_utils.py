from pathlib import Path
from typing import Any, Iterable, NamedTuple
import json
import os
import tempfile

from errors import InputIOError, ParseError


class JsonlRecord(NamedTuple):
    line: int
    data: Any


def read_bytes(path: str | Path) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise InputIOError(f"cannot read {path}: {e.strerror or e}", path=str(path)) from e


def read_text(path: str | Path) -> str:
    data = read_bytes(path)
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"{path} is not UTF-8: {e}", path=str(path)) from e


def load_jsonl(path: str | Path) -> list[JsonlRecord]:
    """One record per non-blank line, each tagged with its 1-based line number."""
    records: list[JsonlRecord] = []
    for line_no, line in enumerate(read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(JsonlRecord(line_no, json.loads(line)))
        except json.JSONDecodeError as e:
            raise ParseError(
                f"invalid JSON: {e.msg}", path=str(path), line=line_no, column=e.colno
            ) from e
    return records


def load_json(path: str | Path) -> Any:
    try:
        return json.loads(read_text(path))
    except json.JSONDecodeError as e:
        raise ParseError(
            f"invalid JSON: {e.msg}", path=str(path), line=e.lineno, column=e.colno
        ) from e


def dumps_line(obj: Any) -> str:
    # NaN and inf have no JSON spelling
    return json.dumps(obj, ensure_ascii=False, allow_nan=False)


def dumps_jsonl(records: Iterable[Any]) -> bytes:
    return "".join(dumps_line(r) + "\n" for r in records).encode("utf-8")


def dumps_document(obj: Any) -> bytes:
    return (json.dumps(obj, ensure_ascii=False, allow_nan=False, indent=2) + "\n").encode(
        "utf-8"
    )


def _write_temp(target: Path, data: bytes) -> str:
    # Create a temporary file next to the target so the rename stays on one filesystem
    with tempfile.NamedTemporaryFile(
        dir=target.parent, prefix=f".{target.name}.", suffix=".tmp", delete=False
    ) as temp_file:
        temp_file.write(data)
        temp_file.flush()
        os.fsync(temp_file.fileno())
        temp_file_name = temp_file.name
    return temp_file_name


def _backup(target: Path) -> str:
    # Reserve a name next to the target, then move the current file onto it
    fd, backup_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".bak")
    os.close(fd)
    try:
        os.replace(target, backup_name)
    except OSError:
        os.unlink(backup_name)
        raise
    return backup_name


def atomic_write_many(outputs: dict[Path, bytes]) -> None:
    """
    Write every output to a temp file first, then rename them into place.

    A failure while staging leaves no target touched. A failure during the
    renames moves the already renamed targets back: files that existed get
    their previous contents, new files are removed.
    """
    staged: list[tuple[str, Path]] = []
    backups: dict[Path, str | None] = {}
    try:
        for target, data in outputs.items():
            target = Path(target)
            target.parent.mkdir(parents=True, exist_ok=True)
            staged.append((_write_temp(target, data), target))
        try:
            for temp_name, target in staged:
                backups[target] = _backup(target) if target.exists() else None
                os.replace(temp_name, target)
        except OSError:
            _restore(backups)
            raise
    except OSError as e:
        raise InputIOError(f"cannot write output: {e.strerror or e}") from e
    finally:
        leftovers = [temp_name for temp_name, _ in staged]
        leftovers += [b for b in backups.values() if b is not None]
        for name in leftovers:
            if os.path.exists(name):
                os.unlink(name)


def _restore(backups: dict[Path, str | None]) -> None:
    for target, backup_name in reversed(list(backups.items())):
        try:
            if backup_name is None:
                if target.exists():
                    target.unlink()
            elif os.path.exists(backup_name):
                os.replace(backup_name, target)
        except OSError:
            continue
