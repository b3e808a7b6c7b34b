"""dataset_dto.py
특징 데이터셋 매니페스트 스키마.

``manifest.json`` 은 데이터 디렉터리 기준 상대 경로만 담는다.
"""

from __future__ import annotations

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field


# ────────────────────────── 시퀀스 항목 ────────────────────────────
class ManifestEntry(BaseModel):
    """시퀀스 하나의 파일 위치."""

    id: str = Field(min_length=1)
    split: Literal["train", "test"] = "train"
    features: str            # blob 경로, 텐서 이름 "F"
    frame_features: str      # blob 경로, 텐서 이름 "Fimg"
    labels: str              # 라벨 NDJSON 경로


class DatasetManifest(BaseModel):
    """``{"sequences": [...], "text_table", "vocabulary", ...}``"""

    sequences: List[ManifestEntry] = Field(default_factory=list)
    text_table: str
    vocabulary: str
    prompts: Dict[str, List[str]] = Field(default_factory=dict)
    hashes: Dict[str, str] = Field(default_factory=dict, description="상대 경로 → sha256")
    synth_spec: Optional[Dict] = None
