"""Artifact IO: deterministic JSON, content hashes, stage directory keys."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel

from .errors import MissingArtifactError

STAGE_KEY_LENGTH = 12


def to_jsonable(payload: Any) -> Any:
    """Plain JSON types; non-finite floats become null."""
    if isinstance(payload, BaseModel):
        return to_jsonable(payload.model_dump(mode="json"))
    if isinstance(payload, float) and not math.isfinite(payload):
        return None
    if isinstance(payload, (list, tuple)):
        return [to_jsonable(item) for item in payload]
    if isinstance(payload, dict):
        return {str(key): to_jsonable(value) for key, value in payload.items()}
    return payload


def dumps(payload: Any) -> str:
    """Sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path | str, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload), encoding="utf-8")
    return path


def write_frame(path: Path | str, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def read_json(path: Path | str, produced_by: str) -> Any:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(
            f"ARTIFACT MISSING: {path} does not exist; run '{produced_by}' first."
        )
    return json.loads(path.read_text(encoding="utf-8"))


def sha256_file(path: Path | str) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def stage_key(stage: str, upstream: str, settings: Any) -> str:
    """Hash of (stage, upstream key, settings) cut to ``STAGE_KEY_LENGTH`` hex digits."""
    material = dumps({"stage": stage, "upstream": upstream, "settings": settings})
    return sha256_text(material)[:STAGE_KEY_LENGTH]


__all__ = [
    "STAGE_KEY_LENGTH",
    "to_jsonable",
    "dumps",
    "write_json",
    "read_json",
    "sha256_file",
    "sha256_text",
    "stage_key",
]
