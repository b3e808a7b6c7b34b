# refdense/domain/dataset.py
"""dataset.py
생성기가 만들고 파일 기록기·메모리 제공자가 소비하는 합성 데이터셋 묶음.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from refdense.domain.features import TextEmbeddingTable, VideoSequence
from refdense.dto.synth_spec_dto import SynthSpec
from refdense.dto.vocabulary_dto import ActionVocabulary


@dataclass(frozen=True)
class SynthDataset:
    """생성 결과 묶음."""

    spec: SynthSpec
    vocabulary: ActionVocabulary
    train: List[VideoSequence]
    test: List[VideoSequence]
    text_table: TextEmbeddingTable
    entity_prototypes: np.ndarray
    motion_prototypes: np.ndarray
    instance_rate: float

    @property
    def sequences(self) -> List[VideoSequence]:
        return list(self.train) + list(self.test)

    def split_pairs(self) -> List[Tuple[str, VideoSequence]]:
        """(split, sequence) 목록. 파일 출력 순서를 고정한다."""
        return [("train", s) for s in self.train] + [("test", s) for s in self.test]
