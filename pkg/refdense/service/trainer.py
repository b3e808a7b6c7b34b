# refdense/service/trainer.py
"""trainer.py
결정적 미니배치 학습 루프.

흐름
====
1. seed 로 파라미터 초기화, 학습 시퀀스 뒤 ``validation_fraction`` 을 검증용으로 분리
2. 에폭마다 seed 셔플 → 배치 → 시퀀스별 무작위 crop
3. 배치 항목마다 순전파·손실·그래디언트(선택적으로 스레드 병렬), 항목 순서대로 평균
4. ``adam_step`` (lr = ``lr_at_epoch``), NDJSON 스텝 로그
5. 에폭 끝 검증 mAP 로 best 선택, 종료 시 final / best 체크포인트 저장

손실이나 그래디언트가 유한하지 않으면 직전 파라미터를 ``last.ckpt`` 로 남기고
``DivergenceError`` 로 중단한다.
"""

from __future__ import annotations

import copy
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import torch
from pydantic import BaseModel
from tqdm import tqdm

from refdense.domain.errors import ConfigurationError, DivergenceError
from refdense.domain.features import TextEmbeddingTable, VideoSequence, crop_for_training
from refdense.domain.interfaces import FeatureProviderIF
from refdense.domain.labels import decompose_labels
from refdense.dto.config_dto import ModelConfig, ModelDims, TrainConfig, apply_flags
from refdense.dto.report_dto import LossBreakdown, StepLogRecord
from refdense.dto.vocabulary_dto import ActionVocabulary
from refdense.infra.checkpoint_store import CheckpointStore
from refdense.infra.step_log import NdjsonWriter
from refdense.model.networks import DenseDetector, architecture_hash, build_model
from refdense.numeric.ops import as_tensor
from refdense.numeric.tape import GradientTape
from refdense.service.evaluator import ModelPredictor, evaluate
from refdense.service.losses import total_loss

logger = logging.getLogger("refdense.trainer")

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class EpochSummary(BaseModel):
    epoch: int
    lr: float
    mean_total: Optional[float] = None
    val_mAP: Optional[float] = None


@dataclass
class TrainResult:
    """학습 결과."""

    model: DenseDetector
    best_model: DenseDetector
    best_val_map: Optional[float]
    history: List[EpochSummary] = field(default_factory=list)
    checkpoints: Dict[str, str] = field(default_factory=dict)
    steps: int = 0

    @property
    def arch_hash(self) -> str:
        return architecture_hash(self.model)


# ───────────────────── 차원·스케줄 ─────────────────────
def infer_dims(vocab: ActionVocabulary, sequences: List[VideoSequence], table: TextEmbeddingTable) -> ModelDims:
    """데이터에서 입력/클래스 차원을 읽는다."""
    if not sequences:
        raise ConfigurationError("cannot infer feature dimensions from an empty split")
    first = sequences[0]
    return ModelDims(
        d_segment=first.features.shape[1],
        d_frame=first.frame_features.shape[1],
        d_text_ent=table.dim("ent"),
        d_text_mot=table.dim("mot"),
        n_actions=vocab.n_actions,
        n_entities=vocab.n_entities,
        n_motions=vocab.n_motions,
    )


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    """lr₀ / factor^⌊epoch/period⌋."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return cfg.lr / cfg.lr_decay_factor ** (epoch // cfg.lr_decay_period)


def make_optimizer(model: torch.nn.Module, lr: float) -> torch.optim.Adam:
    return torch.optim.Adam(model.parameters(), lr=lr, betas=ADAM_BETAS, eps=ADAM_EPS)


def adam_step(
    optimizer: torch.optim.Adam,
    params: Mapping[str, torch.Tensor],
    grads: Mapping[str, torch.Tensor],
    lr: float,
) -> None:
    """그래디언트 유한성 검사 후 Adam 한 스텝(bias correction 포함).

    Raises:
        DivergenceError: 유한하지 않은 그래디언트. 해당 파라미터 이름을 포함한다.
    """
    for name, g in grads.items():
        if not torch.isfinite(g).all():
            raise DivergenceError(f"non-finite gradient in parameter '{name}'")
    for name, p in params.items():
        p.grad = grads[name].detach().clone()
    for group in optimizer.param_groups:
        group["lr"] = lr
    optimizer.step()
    optimizer.zero_grad(set_to_none=True)


# ───────────────────── 배치 항목 ─────────────────────
def item_gradients(
    model: DenseDetector,
    seq: VideoSequence,
    vocab: ActionVocabulary,
    table: TextEmbeddingTable,
    cfg: TrainConfig,
) -> Tuple[Dict[str, torch.Tensor], LossBreakdown]:
    """crop 된 시퀀스 하나의 손실 그래디언트와 성분 값."""
    tape = GradientTape(dict(model.named_parameters()))
    out = model.forward_padded(as_tensor(seq.features), as_tensor(seq.frame_features))
    loss, breakdown = total_loss(out, seq.labels, decompose_labels(seq.labels, vocab), table, model, cfg.loss, cfg.flags)
    if not math.isfinite(breakdown.total):
        raise DivergenceError(f"non-finite loss on sequence '{seq.seq_id}': {breakdown}")
    return tape.gradient(loss), breakdown


def _mean_breakdown(items: List[LossBreakdown]) -> LossBreakdown:
    fields = ["L_action", "L_ent_bce", "L_mot_bce", "L_ent_colv", "L_mot_colv", "total"]
    out = {}
    for f in fields:
        vals = [getattr(b, f) for b in items]
        if all(v is not None for v in vals):
            out[f] = float(np.mean(vals))
    return LossBreakdown(**out)


def split_validation(sequences: List[VideoSequence], fraction: float) -> Tuple[List[VideoSequence], List[VideoSequence]]:
    """뒤쪽 ``fraction`` 을 검증용으로 떼어낸다(seed 무관)."""
    n_val = int(math.floor(len(sequences) * fraction))
    if n_val >= len(sequences):
        n_val = 0
    cut = len(sequences) - n_val
    return sequences[:cut], sequences[cut:]


# ───────────────────── 학습 루프 ─────────────────────
def train(
    provider: FeatureProviderIF,
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    out_dir: str | Path | None = None,
    progress: bool = False,
) -> TrainResult:
    """모델을 학습하고 final / best 체크포인트를 남긴다.

    Args:
        provider: 학습 데이터 제공자("train" split 사용).
        model_cfg: 네트워크 설정. 구조 관련 ablation 플래그가 반영된다.
        cfg: 학습 설정.
        out_dir: 체크포인트·스텝 로그 디렉터리. None 이면 파일을 쓰지 않는다.
        progress: tqdm 진행 표시 여부.

    Raises:
        ConfigurationError: crop 길이가 2^M 배수가 아니거나 학습 시퀀스가 없음.
        DivergenceError: 손실/그래디언트 발산.
    """
    model_cfg = apply_flags(model_cfg, cfg.flags)
    t_train = cfg.t_train or model_cfg.t_train
    if t_train % model_cfg.stride_multiple:
        raise ConfigurationError(f"T_train={t_train} must be divisible by 2^{model_cfg.scales}")

    vocab = provider.vocabulary
    table = provider.text_table()
    fit, val = split_validation(provider.sequences("train"), cfg.validation_fraction)
    if not fit:
        raise ConfigurationError("no training sequences")
    dims = infer_dims(vocab, fit, table)

    model = build_model(model_cfg, dims, seed=cfg.seed)
    params = dict(model.named_parameters())
    optimizer = make_optimizer(model, cfg.lr)
    shuffle_ss, crop_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    crop_rng = np.random.default_rng(crop_ss)

    store = CheckpointStore()
    out = Path(out_dir) if out_dir is not None else None
    result = TrainResult(model=model, best_model=copy.deepcopy(model), best_val_map=None)
    best_score = -math.inf
    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    logger.info(
        "[Trainer] %s | fit=%d val=%d | epochs=%d batch=%d lr=%g | hash=%s",
        model_cfg.architecture, len(fit), len(val), cfg.epochs, cfg.batch_size, cfg.lr, result.arch_hash[:12],
    )

    def _grads(seq: VideoSequence):
        return item_gradients(model, seq, vocab, table, cfg)

    step = 0
    try:
        with NdjsonWriter(out / "steps.ndjson" if out else None) as log:
            for epoch in tqdm(range(cfg.epochs), desc="epochs", disable=not progress):
                lr = lr_at_epoch(cfg, epoch)
                order = shuffle_rng.permutation(len(fit))
                totals = []
                for b in range(0, len(order), cfg.batch_size):
                    batch = [crop_for_training(fit[i], t_train, crop_rng) for i in order[b : b + cfg.batch_size]]
                    items = list(pool.map(_grads, batch)) if pool else [_grads(s) for s in batch]
                    grads = {
                        name: torch.stack([g[name] for g, _ in items]).sum(dim=0) / len(items) for name in params
                    }
                    breakdown = _mean_breakdown([bd for _, bd in items])
                    adam_step(optimizer, params, grads, lr)
                    step += 1
                    totals.append(breakdown.total)
                    log.write(StepLogRecord(step=step, epoch=epoch, lr=lr, **breakdown.model_dump()))

                summary = EpochSummary(epoch=epoch, lr=lr, mean_total=float(np.mean(totals)) if totals else None)
                if val:
                    summary.val_mAP = evaluate(ModelPredictor(model), val, vocab.actions, cfg.eval).mAP
                    score = -math.inf if summary.val_mAP is None else summary.val_mAP
                    if score > best_score:
                        best_score = score
                        result.best_model = copy.deepcopy(model)
                        result.best_val_map = summary.val_mAP
                result.history.append(summary)
                logger.info(
                    "[Trainer] epoch %d lr=%g loss=%s val_mAP=%s", epoch, lr,
                    "-" if summary.mean_total is None else f"{summary.mean_total:.4f}",
                    "-" if summary.val_mAP is None else f"{100 * summary.val_mAP:.1f}",
                )
    except DivergenceError:
        if out is not None:
            result.checkpoints["last"] = store.save(out / "last.ckpt", model)
            logger.error("[Trainer] ❌ diverged at step %d, kept %s", step + 1, out / "last.ckpt")
        raise
    finally:
        if pool is not None:
            pool.shutdown()

    if result.best_val_map is None:
        if val:
            logger.warning("[Trainer] ⚠️ validation mAP undefined in every epoch, best = final")
        result.best_model = copy.deepcopy(model)
    result.steps = step
    if out is not None:
        result.checkpoints["final"] = store.save(out / "final.ckpt", model)
        result.checkpoints["best"] = store.save(out / "best.ckpt", result.best_model)
    return result
