# refdense/domain/features.py
"""features.py
고정 인코더 출력(세그먼트/프레임 특징)과 텍스트 임베딩 테이블 타입.

- ``VideoSequence`` : (F, 𝔽, Y) 불변 삼중쌍. 생성 시 T 정렬·유한성 검사.
- ``TextEmbeddingTable`` : 행 단위 L2 정규화된 u^ent, u^mot 와 프롬프트 문자열.
- ``crop_for_training`` : 학습용 연속 구간 무작위 추출. 평가 경로는 자르지 않는다.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from refdense.domain.errors import AlignmentError, ConfigurationError, SchemaError, ValidationError
from refdense.domain.labels import DenseLabelGrid


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class VideoSequence:
    """세그먼트 특징 F(T×D), 프레임 특징 𝔽(T×𝔻), 라벨 Y(T×C)."""

    seq_id: str
    features: np.ndarray
    frame_features: np.ndarray
    labels: DenseLabelGrid

    def __post_init__(self):
        F = np.asarray(self.features)
        G = np.asarray(self.frame_features)
        if F.ndim != 2 or G.ndim != 2:
            raise AlignmentError(f"sequence '{self.seq_id}': features must be 2-D")
        if not (F.shape[0] == G.shape[0] == self.labels.T):
            raise AlignmentError(
                f"sequence '{self.seq_id}': T mismatch "
                f"(F={F.shape[0]}, frame={G.shape[0]}, labels={self.labels.T})"
            )
        if F.shape[0] < 1:
            raise AlignmentError(f"sequence '{self.seq_id}': empty sequence")
        if not (np.isfinite(F).all() and np.isfinite(G).all()):
            raise ValidationError(f"sequence '{self.seq_id}': non-finite feature value")
        object.__setattr__(self, "features", _frozen(F))
        object.__setattr__(self, "frame_features", _frozen(G))

    @property
    def T(self) -> int:
        return self.features.shape[0]

    def window(self, start: int, length: int) -> "VideoSequence":
        return VideoSequence(
            seq_id=self.seq_id,
            features=self.features[start : start + length],
            frame_features=self.frame_features[start : start + length],
            labels=self.labels.window(start, length),
        )


@dataclass(frozen=True)
class TextEmbeddingTable:
    """family("ent"/"mot") → (C^φ × D_txt) 단위 노름 행렬."""

    tables: Dict[str, np.ndarray]
    prompts: Dict[str, List[str]] = field(default_factory=dict)

    def __post_init__(self):
        normed = {}
        for fam, u in self.tables.items():
            u = np.asarray(u, dtype=np.float64)
            if u.ndim != 2:
                raise SchemaError(f"text table '{fam}' must be 2-D")
            norms = np.linalg.norm(u, axis=1, keepdims=True)
            if (norms == 0).any() or not np.isfinite(u).all():
                raise SchemaError(f"text table '{fam}' has a zero or non-finite row")
            normed[fam] = _frozen(u / norms)
        object.__setattr__(self, "tables", normed)

    def family(self, family: str) -> np.ndarray:
        return self.tables[family]

    def dim(self, family: str) -> int:
        return self.tables[family].shape[1]


def crop_for_training(seq: VideoSequence, T_train: int, rng: np.random.Generator) -> VideoSequence:
    """길이 min(T_train, T) 의 연속 구간을 균등 무작위 시작점으로 잘라낸다."""
    if T_train < 1:
        raise ConfigurationError(f"T_train must be >= 1, got {T_train}")
    length = min(T_train, seq.T)
    if length == seq.T:
        return seq
    start = int(rng.integers(0, seq.T - length + 1))
    return seq.window(start, length)
