"""Versioned CSV schemas shared with the experiment pipeline.

Every series file starts with a `# schema=<id>` comment line; the
renderer refuses anything whose id does not match the version it was
built against.
"""

from __future__ import annotations

from pathlib import Path

SUPPORTED = {
    "fig2-samples": "kavg.fig2.v1",
    "density": "kavg.density.v1",
    "fig4": "kavg.fig4.v1",
    "fig5": "kavg.fig5.v1",
    "poc": "kavg.poc.v1",
    "w2": "kavg.w2.v1",
    "continuous": "kavg.continuous.v1",
    "continuous-mc": "kavg.continuous-mc.v1",
}


class SchemaError(ValueError):
    """Input CSV is missing, empty, or carries an unsupported schema id."""


def read_series(path: str | Path, kind: str) -> tuple[list[str], list[list[str]]]:
    """Read (header columns, data rows) after verifying the schema line."""
    expected = SUPPORTED[kind]
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: not found (expected schema {expected})")
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# schema="):
        raise SchemaError(f"{path}: missing schema line (expected schema {expected})")
    got = lines[0][len("# schema="):].strip()
    if got != expected:
        raise SchemaError(f"{path}: schema {got!r}, renderer supports {expected!r}")
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    if len(body) < 2:
        raise SchemaError(f"{path}: no data rows (schema {expected})")
    header = body[0].split(",")
    rows = [ln.split(",") for ln in body[1:]]
    return header, rows


def column(header: list[str], rows: list[list[str]], name: str) -> list[str]:
    i = header.index(name)
    return [r[i] for r in rows]
