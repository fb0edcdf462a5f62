"""Append-only JSONL cache of prompts and responses."""

from __future__ import annotations

import asyncio
import hashlib
from datetime import UTC, datetime
from pathlib import Path

from loguru import logger
from pydantic import BaseModel, Field, ValidationError


def prompt_digest(*parts: str) -> str:
    digest = hashlib.sha256()
    for part in parts:
        digest.update(part.encode())
        digest.update(b"\x00")
    return digest.hexdigest()


class CacheRecord(BaseModel):
    """One provider response; `key` is the digest of (model, system prompt, user prompt)."""

    key: str
    prompt_digest: str
    model: str
    attempt: int = Field(ge=1)
    prompt: str
    response: str
    timestamp: datetime = Field(default_factory=lambda: datetime.now(UTC))


class ResponseCache:
    """Responses looked up by (key, attempt); writes are serialized and flushed per record."""

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._records: dict[tuple[str, int], CacheRecord] = {}
        self._lock = asyncio.Lock()
        self.hits = 0
        self.writes = 0
        if self.path is not None and self.path.exists():
            self._load(self.path)

    def _load(self, path: Path) -> None:
        skipped = 0
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                record = CacheRecord.model_validate_json(line)
            except ValidationError:
                skipped += 1
                continue
            self._records.setdefault((record.key, record.attempt), record)
        if skipped:
            logger.warning(f"Skipped {skipped} malformed line(s) in response cache {path}")
        logger.debug(f"Loaded {len(self._records)} cached responses from {path}")

    def __len__(self) -> int:
        return len(self._records)

    def get(self, key: str, attempt: int) -> CacheRecord | None:
        record = self._records.get((key, attempt))
        if record is not None:
            self.hits += 1
        return record

    async def put(self, record: CacheRecord) -> None:
        async with self._lock:
            if (record.key, record.attempt) in self._records:
                return
            self._records[(record.key, record.attempt)] = record
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as handle:
                    handle.write(record.model_dump_json() + "\n")
            self.writes += 1
