# refdense/service/losses.py
"""losses.py
학습 목적 함수.

- ``bce``        : −(1/T) Σ_t Σ_c [y log p + (1−y) log(1−p)]  (클래스 합, 시간 평균)
- ``colv``       : co-occurrence 언어-비디오 대조 손실. 분모는 음성 클래스만 합한다.
- ``total_loss`` : 가중 합과 성분별 ``LossBreakdown``
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import torch

from refdense.domain.errors import DimensionError
from refdense.domain.features import TextEmbeddingTable
from refdense.domain.labels import FAMILIES, DenseLabelGrid, SubLabelGrids
from refdense.dto.config_dto import AblationFlags, LossWeights
from refdense.dto.report_dto import LossBreakdown
from refdense.model.networks import DenseDetector, ForwardOutput
from refdense.numeric.ops import DTYPE, PROB_EPS, as_tensor, l2_normalize

logger = logging.getLogger("refdense.losses")


# ───────────────────── BCE ─────────────────────
def bce(Y, P: torch.Tensor) -> torch.Tensor:
    """클래스 합·시간 평균 binary cross-entropy.

    Args:
        Y: (T, C) 0/1 라벨 (ndarray · Tensor · DenseLabelGrid).
        P: (T, C) 확률. [1e-12, 1−1e-12] 로 clamp 한 뒤 로그를 취한다.
    """
    if isinstance(Y, DenseLabelGrid):
        Y = Y.bits
    Y = as_tensor(Y)
    if Y.shape != P.shape or P.dim() != 2:
        raise DimensionError(f"bce shape mismatch: labels {tuple(Y.shape)} vs probs {tuple(P.shape)}")
    P = P.clamp(PROB_EPS, 1.0 - PROB_EPS)
    ll = Y * torch.log(P) + (1.0 - Y) * torch.log1p(-P)
    return -ll.sum() / P.shape[0]


# ───────────────────── CoLV ─────────────────────
@dataclass
class ColvResult:
    """CoLV 값과 제외된 시점 수."""

    loss: torch.Tensor
    used: int
    empty: int       # β(t) = ∅
    saturated: int   # β(t) = 전체 클래스 → 음성 분모가 비어 있음


def _positive_mask(beta: Sequence[Tuple[int, ...]] | torch.Tensor, T: int, C: int) -> torch.Tensor:
    if isinstance(beta, torch.Tensor):
        mask = beta.to(torch.bool)
    else:
        if len(beta) != T:
            raise DimensionError(f"co-occurrence sets cover {len(beta)} timesteps, features have {T}")
        mask = torch.zeros(T, C, dtype=torch.bool)
        for t, active in enumerate(beta):
            if active:
                mask[t, list(active)] = True
    if mask.shape != (T, C):
        raise DimensionError(f"positive mask {tuple(mask.shape)} does not match ({T}, {C})")
    return mask


def colv_terms(
    features: torch.Tensor,
    U,
    beta,
    temperature: float = 0.07,
    projection: Optional[torch.nn.Module] = None,
    normalize: bool = True,
    denominator: str = "negatives",
) -> ColvResult:
    """CoLV 손실과 통계.

    𝓛 = −(1/T') Σ_t (1/|β(t)|) Σ_{e∈β(t)} log[ exp(s_te) / Σ_{c∉β(t)} exp(s_tc) ],
    s_tc = f̂_tᵀu_c / τ. T' 는 β(t) ≠ ∅ 이고 음성 클래스가 하나 이상인 시점 수.

    Args:
        features: (T, D*) 스트림 특징 F̂^φ.
        U: (C^φ, D_txt) 단위 노름 텍스트 행.
        beta: 시점별 양성 인덱스 튜플 목록 또는 (T, C^φ) 0/1 텐서.
        temperature: τ_temp (> 0).
        projection: D* → D_txt 선형 투영. None 이면 항등.
        normalize: 투영 후 특징을 L2 정규화할지 여부.
        denominator: ``"negatives"`` (기본) 또는 ``"all"`` (표준 InfoNCE 분모, 비기본 변형).
    """
    U = as_tensor(U)
    f = projection(features) if projection is not None else features
    if f.shape[1] != U.shape[1]:
        raise DimensionError(f"CoLV feature width {f.shape[1]} != text width {U.shape[1]}")
    if normalize:
        f = l2_normalize(f)
    T, C = f.shape[0], U.shape[0]
    pos = _positive_mask(beta, T, C)
    n_pos = pos.sum(dim=1)
    empty = n_pos == 0
    saturated = (n_pos == C) & ~empty if denominator == "negatives" else torch.zeros_like(empty)
    valid = ~(empty | saturated)
    n_used = int(valid.sum())

    if int(saturated.sum()):
        logger.warning("[CoLV] %d timestep(s) with every class positive skipped", int(saturated.sum()))
    if n_used == 0:
        if T:
            logger.warning("[CoLV] no usable timestep (%d empty, %d saturated), loss is 0", int(empty.sum()), int(saturated.sum()))
        zero = (f.sum() * 0.0).to(DTYPE)
        return ColvResult(loss=zero, used=0, empty=int(empty.sum()), saturated=int(saturated.sum()))

    s = (f[valid] @ U.t()) / temperature
    p = pos[valid]
    if denominator == "negatives":
        log_den = torch.logsumexp(s.masked_fill(p, float("-inf")), dim=1)
    else:
        log_den = torch.logsumexp(s, dim=1)
    w = p.to(s.dtype)
    per_t = ((s - log_den[:, None]) * w).sum(dim=1) / w.sum(dim=1)
    return ColvResult(
        loss=-per_t.sum() / n_used,
        used=n_used,
        empty=int(empty.sum()),
        saturated=int(saturated.sum()),
    )


def colv(features, U, beta, temperature: float = 0.07, **kwargs) -> torch.Tensor:
    return colv_terms(features, U, beta, temperature, **kwargs).loss


# ───────────────────── 결합 ─────────────────────
def total_loss(
    out: ForwardOutput,
    Y: DenseLabelGrid,
    sub: SubLabelGrids,
    table: TextEmbeddingTable,
    model: DenseDetector,
    weights: LossWeights,
    flags: AblationFlags,
) -> Tuple[torch.Tensor, LossBreakdown]:
    """가중 합 손실과 성분별 값.

    비활성 항(플래그 off, 가중치 0, 모델에 헤드 없음)은 계산하지 않으며
    breakdown 에서 None 으로 남는다.
    """
    use_sub = {"ent": flags.use_sub_labels_ent, "mot": flags.use_sub_labels_mot}
    parts = {}
    total = torch.zeros((), dtype=DTYPE)

    if weights.w_action > 0:
        term = bce(Y, out.probs)
        parts["L_action"] = term
        total = total + weights.w_action * term

    for fam in FAMILIES:
        w = weights.w_ent if fam == "ent" else weights.w_mot
        if fam in model.sub_families and use_sub[fam] and w > 0:
            term = bce(sub.family(fam), out.sub_probs[fam])
            parts[f"L_{fam}_bce"] = term
            total = total + w * term

    if flags.use_colv and weights.w_colv > 0:
        for fam in FAMILIES:
            if fam not in model.colv_families:
                continue
            term = colv(
                out.features[fam],
                table.family(fam),
                torch.from_numpy(sub.family(fam).bits.astype(bool)),
                weights.temperature,
                projection=model.text_projection(fam),
                normalize=weights.normalize_features,
                denominator=weights.denominator,
            )
            parts[f"L_{fam}_colv"] = term
            total = total + weights.w_colv * term

    breakdown = LossBreakdown(**{k: float(v.detach()) for k, v in parts.items()}, total=float(total.detach()))
    return total, breakdown
