"""Run manifest recording what each stage consumed and produced."""

from __future__ import annotations

import hashlib
from datetime import UTC, datetime
from enum import Enum
from pathlib import Path

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..errors import StageError

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1


class Stage(str, Enum):
    INGEST = "ingest"
    IMPUTE = "impute"
    STRATIFY = "stratify"
    PAIR = "pair"
    QUERY = "query"
    SCORE = "score"
    ESTIMATE = "estimate"
    EVALUATE = "evaluate"
    SIMULATE = "simulate"


def utc_now() -> datetime:
    return datetime.now(UTC)


def file_digest(path: Path) -> str:
    """sha256 of a file's bytes."""

    sha = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            sha.update(chunk)
    return sha.hexdigest()


class StageRecord(BaseModel):
    stage: Stage
    digest: str
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)
    started_at: datetime
    finished_at: datetime

    model_config = ConfigDict(extra="forbid")

    def outputs_present(self, out_dir: Path) -> bool:
        return all((out_dir / name).exists() for name in self.outputs)


class RunManifest(BaseModel):
    """`manifest.json` in the run directory.

    Output paths are relative to the run directory; `inputs` maps every consumed file to its
    sha256 so a stage can be replayed from the manifest and the inputs alone.
    """

    version: int = MANIFEST_VERSION
    config_digest: str
    seed: int
    provider_kind: str
    created_at: datetime = Field(default_factory=utc_now)
    updated_at: datetime = Field(default_factory=utc_now)
    stages: dict[Stage, StageRecord] = Field(default_factory=dict)

    model_config = ConfigDict(extra="forbid")

    @classmethod
    def load(cls, out_dir: Path) -> RunManifest | None:
        path = out_dir / MANIFEST_NAME
        if not path.exists():
            return None
        try:
            return cls.model_validate_json(path.read_text(encoding="utf-8"))
        except ValidationError as exc:
            raise StageError(f"unreadable manifest {path}: {exc}", stage="manifest") from exc

    def save(self, out_dir: Path) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / MANIFEST_NAME
        self.updated_at = utc_now()
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        tmp.replace(path)
        logger.debug(f"Manifest written to {path}")
        return path

    def record(self, entry: StageRecord) -> None:
        self.stages[entry.stage] = entry

    def is_current(self, stage: Stage, digest: str, out_dir: Path) -> bool:
        entry = self.stages.get(stage)
        return entry is not None and entry.digest == digest and entry.outputs_present(out_dir)
