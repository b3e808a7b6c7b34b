"""report_dto.py
손실 로그·평가 보고서·실행 매니페스트 스키마.
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


# ────────────────────────── 손실 ────────────────────────────
class LossBreakdown(BaseModel):
    """스텝별 손실 성분. 비활성 항은 None 이며 로그에서 생략된다."""

    L_action: Optional[float] = None
    L_ent_bce: Optional[float] = None
    L_mot_bce: Optional[float] = None
    L_ent_colv: Optional[float] = None
    L_mot_colv: Optional[float] = None
    total: float = 0.0


class StepLogRecord(LossBreakdown):
    """학습 NDJSON 한 줄."""

    step: int
    epoch: int
    lr: float


# ────────────────────────── 평가 ────────────────────────────
class ConditionalMetrics(BaseModel):
    """시간 창 τ 에서의 action-conditional 지표."""

    tau: int
    mAP_ac: Optional[float] = None
    F1_ac: Optional[float] = None
    P_ac: Optional[float] = None
    R_ac: Optional[float] = None
    n_pairs: int = 0
    skipped_pairs: int = 0
    empty: bool = False


class EvalReport(BaseModel):
    """per-frame mAP + action-conditional 지표 묶음. 값은 [0, 1]."""

    class_names: List[str] = Field(default_factory=list)
    per_class_ap: List[Optional[float]] = Field(default_factory=list)
    mAP: Optional[float] = None
    skipped_classes: int = 0
    conditional: List[ConditionalMetrics] = Field(default_factory=list)
    n_sequences: int = 0
    n_frames: int = 0

    def at_window(self, tau: int) -> Optional[ConditionalMetrics]:
        return next((c for c in self.conditional if c.tau == tau), None)


# ────────────────────────── 실행 매니페스트 ────────────────────────────
class RunManifest(BaseModel):
    """CLI 실행 1회당 하나씩 기록되는 매니페스트."""

    command: str
    argv: List[str] = Field(default_factory=list)
    config: Dict = Field(default_factory=dict)
    input_hashes: Dict[str, str] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    started_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    wall_time_s: float = 0.0
    versions: Dict[str, str] = Field(default_factory=dict)
    status: str = "ok"
    error: Optional[str] = None


# ────────────────────────── ablation ────────────────────────────
WINDOW_METRICS = ("mAP_ac", "F1_ac")


def metric_keys(windows: List[int]) -> List[str]:
    """``["mAP", "mAP_ac@0", "F1_ac@0", "mAP_ac@20", ...]``."""
    return ["mAP"] + [f"{m}@{tau}" for tau in windows for m in WINDOW_METRICS]


class WindowScores(BaseModel):
    """시간 창 하나의 action-conditional 요약."""

    mAP_ac: Optional[float] = None
    F1_ac: Optional[float] = None


class AblationRun(BaseModel):
    """(변형, seed) 학습·평가 1회 기록."""

    variant: str
    seed: int
    status: str = "ok"
    error: Optional[str] = None
    arch_hash: Optional[str] = None
    mAP: Optional[float] = None
    windows: Dict[int, WindowScores] = Field(default_factory=dict)
    wall_time_s: float = 0.0

    def metric(self, key: str) -> Optional[float]:
        if key == "mAP":
            return self.mAP
        name, _, tau = key.partition("@")
        scores = self.windows.get(int(tau))
        return None if scores is None else getattr(scores, name)


class AblationCell(BaseModel):
    """seed 평균과 표준편차(모집단). 값은 [0, 1]."""

    mean: Optional[float] = None
    std: Optional[float] = None
    n: int = 0


class AblationRow(BaseModel):
    variant: str
    cells: Dict[str, AblationCell] = Field(default_factory=dict)
    delta: Dict[str, Optional[float]] = Field(default_factory=dict, description="full − 변형")


class AblationReport(BaseModel):
    """ablation 배터리 결과."""

    seeds: List[int] = Field(default_factory=list)
    windows: List[int] = Field(default_factory=lambda: [0])
    runs: List[AblationRun] = Field(default_factory=list)
    rows: List[AblationRow] = Field(default_factory=list)
    violations: List[str] = Field(default_factory=list)
    failures: List[str] = Field(default_factory=list)
    colv_isolated: Optional[bool] = None

    @property
    def metrics(self) -> List[str]:
        return metric_keys(self.windows)
