"""
Versioned CSV Artifacts
Every CSV written by the harness starts with a schema header line
"# schema=<name> version=<n>"; readers refuse versions they do not know.
"""

import re
from pathlib import Path
from typing import Optional, Tuple, Union

import pandas as pd

from .errors import SchemaVersionError

SCHEMA_VERSION = 1
_HEADER = re.compile(r"^# schema=(?P<name>[A-Za-z0-9_\-]+) version=(?P<version>\d+)$")


def schema_header(schema: str, version: int = SCHEMA_VERSION) -> str:
    return f"# schema={schema} version={version}"


def write_frame(frame: pd.DataFrame, path: Union[str, Path], schema: str) -> Path:
    """
    Write a DataFrame as CSV below a schema header line.

    Args:
        frame: Data to write (the index is not written)
        path: Destination file
        schema: Schema name recorded in the header

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(schema_header(schema) + "\n")
        frame.to_csv(fh, index=False, lineterminator="\n")
    return path


def parse_header(line: str) -> Tuple[str, int]:
    match = _HEADER.match(line.rstrip("\r\n"))
    if match is None:
        raise SchemaVersionError(f"Missing schema header, found {line.strip()!r}")
    return match.group("name"), int(match.group("version"))


def read_frame(path: Union[str, Path], schema: Optional[str] = None) -> pd.DataFrame:
    """
    Read a CSV written by write_frame.

    Args:
        path: Source file
        schema: Expected schema name, or None to accept any

    Returns:
        DataFrame without the header line
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        name, version = parse_header(fh.readline())
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(f"{path}: unsupported schema version {version} (expected {SCHEMA_VERSION})")
        if schema is not None and name != schema:
            raise SchemaVersionError(f"{path}: schema {name!r} where {schema!r} was expected")
        return pd.read_csv(fh)
