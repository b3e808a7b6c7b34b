# refdense/service/evaluator.py
"""evaluator.py
전체 길이 시퀀스 예측과 평가 보고서 생성.

- ``ModelPredictor`` : 체크포인트 모델 → (T, C) 확률 (자르지 않음, 2^M padding 후 절단)
- ``LabelOracle``    : 분류기를 우회해 정답 라벨을 그대로 내는 하네스 자가 점검용 예측기
- ``evaluate``       : PredictorIF + 시퀀스 목록 → EvalReport
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import torch

from refdense.domain.features import VideoSequence
from refdense.domain.interfaces import FeatureProviderIF, PredictorIF, Split
from refdense.dto.config_dto import EvalOptions
from refdense.dto.report_dto import EvalReport
from refdense.infra.checkpoint_store import CheckpointStore
from refdense.model.networks import DenseDetector, ForwardOutput
from refdense.numeric.ops import as_tensor
from refdense.service.metrics import evaluate_predictions

logger = logging.getLogger("refdense.evaluator")


class ModelPredictor(PredictorIF):
    """학습된 네트워크 예측기. 파라미터는 읽기 전용으로만 사용한다."""

    def __init__(self, model: DenseDetector):
        self.model = model

    def forward(self, seq: VideoSequence) -> ForwardOutput:
        with torch.no_grad():
            return self.model.forward_padded(as_tensor(seq.features), as_tensor(seq.frame_features))

    def predict(self, seq: VideoSequence) -> np.ndarray:
        return self.forward(seq).probs.numpy().copy()


class LabelOracle(PredictorIF):
    """seq_id → 정답 라벨 조회로 완벽한 예측을 낸다."""

    def __init__(self, labels: Dict[str, np.ndarray] | None = None):
        self.labels = labels

    def predict(self, seq: VideoSequence) -> np.ndarray:
        if self.labels is not None and seq.seq_id in self.labels:
            return np.asarray(self.labels[seq.seq_id], dtype=np.float64)
        return seq.labels.bits.astype(np.float64)


def predict_all(predictor: PredictorIF, sequences: Sequence[VideoSequence], threads: int = 1) -> List[np.ndarray]:
    """시퀀스 순서대로 예측한다. threads > 1 이면 시퀀스 단위 병렬."""
    if threads > 1 and len(sequences) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(predictor.predict, sequences))
    return [predictor.predict(s) for s in sequences]


def evaluate(
    predictor: PredictorIF,
    sequences: Sequence[VideoSequence],
    class_names: List[str],
    opts: EvalOptions | None = None,
    threads: int = 1,
) -> EvalReport:
    """전체 길이 예측 후 per-frame mAP · action-conditional 지표를 계산한다."""
    preds = predict_all(predictor, sequences, threads)
    labels = [s.labels.bits for s in sequences]
    report = evaluate_predictions(preds, labels, class_names, opts)
    logger.info(
        "[Evaluator] %d sequences, mAP=%s",
        report.n_sequences,
        "-" if report.mAP is None else f"{100 * report.mAP:.1f}",
    )
    return report


def evaluate_checkpoint(
    path: str | Path,
    provider: FeatureProviderIF,
    split: Split = "test",
    opts: EvalOptions | None = None,
    threads: int = 1,
) -> EvalReport:
    """체크포인트를 읽어 provider 의 split 을 평가한다."""
    model = CheckpointStore().load(Path(path), provider.vocabulary)
    return evaluate(ModelPredictor(model), provider.sequences(split), provider.vocabulary.actions, opts, threads)
