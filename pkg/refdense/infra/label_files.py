# refdense/infra/label_files.py
"""label_files.py
어휘 JSON · 라벨 NDJSON 파일 어댑터.

라벨 파일은 시퀀스당 한 줄: ``{"id": ..., "T": ..., "active": [[t, c], ...]}``
분해 라벨 파일은 ``{"id", "T", "ent": [[t, e], ...], "mot": [[t, m], ...]}``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Tuple

import pydantic

from refdense.domain.errors import SchemaError
from refdense.domain.labels import DenseLabelGrid, SubLabelGrids
from refdense.dto.vocabulary_dto import ActionVocabulary, VocabularyFile, build_vocabulary

LabelRecord = Tuple[str, DenseLabelGrid]


# ───────────────────── 어휘 ─────────────────────
def load_vocabulary(path: str | Path) -> ActionVocabulary:
    """어휘 파일을 읽어 검증된 ``ActionVocabulary`` 를 반환한다.

    Raises:
        SchemaError: JSON/스키마 위반, 중복 이름, 매달린 참조.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        spec = VocabularyFile.model_validate(raw)
    except (json.JSONDecodeError, pydantic.ValidationError) as exc:
        raise SchemaError(f"invalid vocabulary file {path}: {exc}") from exc
    return build_vocabulary(spec)


def save_vocabulary(path: str | Path, vocab: ActionVocabulary) -> None:
    payload = vocab.to_file().model_dump(exclude_none=True)
    Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


# ───────────────────── 라벨 ─────────────────────
def read_labels(path: str | Path, n_classes: int) -> List[LabelRecord]:
    """라벨 NDJSON 을 ``[(id, grid), ...]`` 로 읽는다(파일 순서 유지)."""
    records: List[LabelRecord] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            seq_id, T, active = str(rec["id"]), int(rec["T"]), rec["active"]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}:{lineno}: bad label record ({exc})") from exc
        records.append((seq_id, DenseLabelGrid.from_active(T, n_classes, active)))
    return records


def index_labels(path: str | Path, n_classes: int) -> Dict[str, DenseLabelGrid]:
    out: Dict[str, DenseLabelGrid] = {}
    for seq_id, grid in read_labels(path, n_classes):
        if seq_id in out:
            raise SchemaError(f"duplicate sequence id '{seq_id}' in {path}")
        out[seq_id] = grid
    return out


def label_line(seq_id: str, grid: DenseLabelGrid) -> str:
    return json.dumps({"id": seq_id, "T": grid.T, "active": grid.to_active()}, separators=(",", ":"))


def write_labels(path: str | Path, records: List[LabelRecord]) -> None:
    Path(path).write_text("".join(label_line(i, g) + "\n" for i, g in records), encoding="utf-8")


def write_sublabels(path: str | Path, records: List[Tuple[str, SubLabelGrids]]) -> None:
    lines = [
        json.dumps(
            {"id": seq_id, "T": sub.entity.T, "ent": sub.entity.to_active(), "mot": sub.motion.to_active()},
            separators=(",", ":"),
        )
        for seq_id, sub in records
    ]
    Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8")
