"""Persistence for construction stages: schema, digest, round-trip.

A stage file is a single JSON document holding one completed stage of
either construction: the full potential recipe tree (integer block
structure plus scalar shifts, never materialized value arrays), the
stage's interval family when one exists, the chosen parameters, the
verification report, and an echo of the run configuration.  Floats are
written with shortest round-trip representation, so load(save(x))
reproduces x bit for bit, and a content digest over the canonical
serialization detects tampering.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .construct_a import StageRecordA
from .construct_b import DiscontinuityReport, StageRecordB
from .errors import LimperError

#: Format version written into every stage file.
SCHEMA_VERSION = 1


def _canonical_bytes(payload: dict) -> bytes:
    """Canonical serialization used for both the digest and the file."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def compute_digest(payload: dict) -> str:
    """Hex digest of the canonical payload without its digest field."""
    stripped = {k: v for k, v in payload.items() if k != "digest"}
    return hashlib.sha256(_canonical_bytes(stripped)).hexdigest()


@dataclass(frozen=True)
class StageFile:
    """One persisted stage plus enough context to re-verify it.

    ``construction`` is "A" or "B"; ``record`` is the matching stage
    record; ``params`` carries run-level scalars that the record itself
    does not (for "B" the original unnormalized potential and epsilon,
    needed to resume bit-exactly); ``config_echo`` is the flat
    key=value mapping the run was started with; ``summary`` optionally
    embeds the final discontinuity report on the last stage.
    """

    construction: str
    stage: int
    record: StageRecordA | StageRecordB
    params: dict
    config_echo: dict
    summary: DiscontinuityReport | None = None

    def __post_init__(self) -> None:
        if self.construction not in ("A", "B"):
            raise ValueError(f"construction must be A or B, got {self.construction!r}")
        expected = StageRecordA if self.construction == "A" else StageRecordB
        if not isinstance(self.record, expected):
            raise TypeError(
                f"construction {self.construction} requires {expected.__name__}"
            )

    def to_jsonable(self) -> dict:
        payload = {
            "schema": SCHEMA_VERSION,
            "construction": self.construction,
            "stage": self.stage,
            "record": self.record.to_jsonable(),
            "params": self.params,
            "config_echo": self.config_echo,
            "summary": None if self.summary is None else self.summary.to_jsonable(),
        }
        payload["digest"] = compute_digest(payload)
        return payload

    @staticmethod
    def from_jsonable(payload: dict) -> "StageFile":
        if payload.get("schema") != SCHEMA_VERSION:
            raise LimperError(
                f"unsupported stage-file schema {payload.get('schema')!r}"
            )
        tag = payload["construction"]
        record_cls = StageRecordA if tag == "A" else StageRecordB
        summary = payload.get("summary")
        return StageFile(
            construction=tag,
            stage=int(payload["stage"]),
            record=record_cls.from_jsonable(payload["record"]),
            params=dict(payload.get("params", {})),
            config_echo=dict(payload.get("config_echo", {})),
            summary=None
            if summary is None
            else DiscontinuityReport.from_jsonable(summary),
        )


def digest_ok(payload: dict) -> bool:
    """Whether the stored digest matches recomputation."""
    return payload.get("digest") == compute_digest(payload)


def save_stage(stage: StageFile, path: str | Path) -> None:
    """Write one stage file; indented for human readability."""
    payload = stage.to_jsonable()
    text = json.dumps(payload, sort_keys=True, indent=1)
    Path(path).write_text(text + "\n")


def load_stage(path: str | Path) -> StageFile:
    """Read a stage file back, rejecting digest mismatches."""
    payload = load_payload(path)
    if not digest_ok(payload):
        raise LimperError(f"stage file {path} fails its digest check")
    return StageFile.from_jsonable(payload)


def load_payload(path: str | Path) -> dict:
    """Raw payload of a stage file, without digest enforcement."""
    return json.loads(Path(path).read_text())
