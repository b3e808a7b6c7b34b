"""synth_spec_dto.py
합성 조합형 dense action 데이터셋 생성 사양.
"""

from pydantic import BaseModel, Field, model_validator


class SynthSpec(BaseModel):
    """합성 데이터 생성 사양.

    기본값: 엔티티 12, 모션 10, 2-구성요소 행동 30 + 모션 전용 4,
    T=64, D=𝔻=32, 학습 200 / 테스트 50, σ=0.3, 겹침 목표 40%.
    """

    n_entities: int = Field(12, ge=1)
    n_motions: int = Field(10, ge=1)
    n_pair_actions: int = Field(30, ge=0)
    n_motion_only: int = Field(4, ge=0)
    n_entity_only: int = Field(0, ge=0)
    T: int = Field(64, ge=1)
    n_train: int = Field(200, ge=0)
    n_test: int = Field(50, ge=0)
    mean_instances: float = Field(6.0, gt=0, description="시퀀스당 평균 인스턴스 수(Poisson)")
    mean_duration: float = Field(10.0, gt=0)
    duration_sigma: float = Field(0.5, ge=0, description="log-normal shape")
    max_duration: int = Field(32, ge=1)
    overlap_target: float = Field(0.4, ge=0, lt=1)
    overlap_tolerance: float = Field(0.05, gt=0)
    d_segment: int = Field(32, ge=1, description="D")
    d_frame: int = Field(32, ge=1, description="𝔻")
    noise: float = Field(0.3, ge=0, description="σ")
    seed: int = 0
    max_retries: int = Field(30, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "SynthSpec":
        n_actions = self.n_actions
        if n_actions < 1:
            raise ValueError("spec defines no actions")
        if self.n_pair_actions > self.n_entities * self.n_motions:
            raise ValueError(
                f"n_pair_actions={self.n_pair_actions} exceeds "
                f"{self.n_entities}x{self.n_motions} entity/motion pairs"
            )
        if self.n_motion_only > self.n_motions or self.n_entity_only > self.n_entities:
            raise ValueError("single-component actions exceed available classes")
        if self.n_pair_actions + self.n_entity_only < self.n_entities:
            raise ValueError("every entity must be referenced by at least one action")
        if self.n_pair_actions + self.n_motion_only < self.n_motions:
            raise ValueError("every motion must be referenced by at least one action")
        return self

    @property
    def n_actions(self) -> int:
        return self.n_pair_actions + self.n_motion_only + self.n_entity_only
