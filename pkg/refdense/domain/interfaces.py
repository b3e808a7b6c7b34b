# refdense/domain/interfaces.py

"""interfaces.py
학습·평가 서비스가 의존하는 포트 정의.

- ``FeatureProviderIF`` : 고정 인코더 출력 공급. ``FileFeatureStore``(디렉터리)와 ``SyntheticProvider``(메모리).
- ``PredictorIF``       : 시퀀스 → T×C 확률. 평가기는 모델과 라벨 오라클을 같은 경로로 채점한다.
- ``CheckpointStoreIF`` : 설정 헤더 + 파라미터 blob 입출력. ``CheckpointStore`` 가 구현한다.

서비스는 데이터 공급자와 예측기를 이 모듈의 타입으로 받는다.
"""

from abc import abstractmethod
from pathlib import Path
from typing import List, Literal, Protocol

import numpy as np

from refdense.domain.features import TextEmbeddingTable, VideoSequence
from refdense.dto.vocabulary_dto import ActionVocabulary

# 공용 타입 -------------------------------------------------------------
Split = Literal["train", "test"]


class FeatureProviderIF(Protocol):
    """고정 인코더 출력(파일 또는 합성) → 시퀀스·텍스트 테이블."""

    vocabulary: ActionVocabulary

    @abstractmethod
    def sequences(self, split: Split) -> List[VideoSequence]: ...

    @abstractmethod
    def text_table(self) -> TextEmbeddingTable: ...


class PredictorIF(Protocol):
    """시퀀스 하나에 대해 T×C 행동 확률을 반환."""

    @abstractmethod
    def predict(self, seq: VideoSequence) -> np.ndarray: ...


class CheckpointStoreIF(Protocol):
    """모델 설정 헤더 + 파라미터 blob 저장소(Port)."""

    @abstractmethod
    def save(self, path: Path, model) -> str: ...

    @abstractmethod
    def load(self, path: Path, vocabulary: ActionVocabulary): ...
