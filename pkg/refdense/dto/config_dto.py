"""config_dto.py
모델·학습 설정 스키마.

- **ModelConfig** : 네트워크 구조(D*, heads, M, 블록 수, 커널 폭, T_train)
- **ModelDims** : 데이터에서 읽은 입력/클래스 차원
- **LossWeights / AblationFlags / EvalOptions / TrainConfig** : 학습 루프 설정

합성 데이터 기본값(에폭 40, 15 에폭마다 감쇠)은 데스크 스케일용 값이며
원 데이터셋 설정이 아니다.
"""

from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

Architecture = Literal["refdense", "entity_only", "motion_only", "single_stream"]


# ────────────────────────── 모델 ────────────────────────────
class ModelConfig(BaseModel):
    """네트워크 구조 설정."""

    architecture: Architecture = "refdense"
    hidden: int = Field(64, ge=1, description="D*, 공유 hidden 폭")
    heads: int = Field(4, ge=1)
    scales: int = Field(3, ge=0, description="M, coarse 스케일 수")
    entity_layers: int = Field(1, ge=1)
    conv_width: int = Field(3, ge=1)
    ffn_mult: int = Field(2, ge=1)
    t_train: int = Field(64, ge=1, description="위치 임베딩 길이 = 학습 crop 길이")
    use_cross_attention: bool = True

    @model_validator(mode="after")
    def _check(self) -> "ModelConfig":
        if self.hidden % self.heads:
            raise ValueError(f"hidden={self.hidden} must be divisible by heads={self.heads}")
        if self.conv_width % 2 == 0:
            raise ValueError(f"conv_width must be odd, got {self.conv_width}")
        if self.t_train % (2 ** self.scales):
            raise ValueError(f"t_train={self.t_train} must be divisible by 2^{self.scales}")
        return self

    @property
    def stride_multiple(self) -> int:
        """입력 길이가 나누어떨어져야 하는 값(2^M)."""
        return 2 ** self.scales


class ModelDims(BaseModel):
    """데이터가 결정하는 차원. 체크포인트 헤더에 함께 저장된다."""

    d_segment: int = Field(ge=1, description="D")
    d_frame: int = Field(ge=1, description="𝔻")
    d_text_ent: int = Field(ge=1)
    d_text_mot: int = Field(ge=1)
    n_actions: int = Field(ge=1)
    n_entities: int = Field(ge=1)
    n_motions: int = Field(ge=1)


# ────────────────────────── 손실·플래그 ────────────────────────────
class LossWeights(BaseModel):
    """손실 결합 가중치와 CoLV 온도."""

    w_action: float = Field(1.0, ge=0)
    w_ent: float = Field(1.0, ge=0)
    w_mot: float = Field(1.0, ge=0)
    w_colv: float = Field(1.0, ge=0)
    temperature: float = Field(0.07, gt=0, description="τ_temp")
    normalize_features: bool = True
    # "negatives": 분모에 음성 클래스만(기본). "all": 표준 InfoNCE 분모(비기본 변형).
    denominator: Literal["negatives", "all"] = "negatives"


class AblationFlags(BaseModel):
    """ablation 스위치."""

    use_sub_labels_ent: bool = True
    use_sub_labels_mot: bool = True
    use_colv: bool = True
    use_cross_attention: bool = True
    single_stream_baseline: bool = False


class EvalOptions(BaseModel):
    """평가 지표 옵션."""

    windows: List[int] = Field(default_factory=lambda: [0, 20])
    threshold: float = Field(0.5, gt=0, lt=1)
    include_self_pairs: bool = False
    weight_by_support: bool = False

    @field_validator("windows")
    @classmethod
    def _non_negative(cls, v: List[int]) -> List[int]:
        if any(w < 0 for w in v):
            raise ValueError("temporal windows must be >= 0")
        return v


class TrainConfig(BaseModel):
    """학습 루프 설정."""

    lr: float = Field(1e-4, gt=0)
    batch_size: int = Field(5, ge=1)
    epochs: int = Field(40, ge=0)
    lr_decay_factor: float = Field(10.0, gt=1)
    lr_decay_period: int = Field(15, ge=1)
    seed: int = 0
    t_train: Optional[int] = Field(None, ge=1, description="crop 길이. 없으면 ModelConfig.t_train")
    validation_fraction: float = Field(0.2, ge=0, lt=1)
    threads: int = Field(1, ge=1)
    loss: LossWeights = Field(default_factory=LossWeights)
    flags: AblationFlags = Field(default_factory=AblationFlags)
    eval: EvalOptions = Field(default_factory=EvalOptions)


class RunConfig(BaseModel):
    """``--config`` 로 받는 결합 설정."""

    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)


def apply_flags(model: ModelConfig, flags: AblationFlags) -> ModelConfig:
    """구조에 영향을 주는 플래그를 모델 설정에 반영한다."""
    update = {"use_cross_attention": model.use_cross_attention and flags.use_cross_attention}
    if flags.single_stream_baseline:
        update["architecture"] = "single_stream"
    return model.model_copy(update=update)
