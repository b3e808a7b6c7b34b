# refdense/service/metrics.py
"""metrics.py
per-frame mAP 과 action-conditional 지표.

AP 는 보간 없는 정의: 내림차순 정렬(동점은 원래 순서 유지) 후 양성 위치 k 마다
precision@k 를 평균한다. 양성이 없는 클래스/쌍은 0 점이 아니라 건너뛰고 센다.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from refdense.domain.errors import DimensionError
from refdense.dto.config_dto import EvalOptions
from refdense.dto.report_dto import ConditionalMetrics, EvalReport


def average_precision(scores, labels) -> Optional[float]:
    """단일 클래스 AP. 양성이 없으면 None(건너뜀 신호)."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel() > 0
    if scores.shape != labels.shape:
        raise DimensionError(f"scores {scores.shape} vs labels {labels.shape}")
    n_pos = int(labels.sum())
    if n_pos == 0:
        return None
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    ranks = np.flatnonzero(hits) + 1
    precision_at_hits = np.arange(1, n_pos + 1) / ranks
    return float(precision_at_hits.mean())


def per_frame_map(P, Y) -> Tuple[List[Optional[float]], Optional[float]]:
    """모든 프레임을 모아 클래스별 AP 와 그 평균을 계산한다."""
    P = np.asarray(P, dtype=np.float64)
    Y = np.asarray(Y)
    if P.shape != Y.shape or P.ndim != 2:
        raise DimensionError(f"per_frame_map shape mismatch: {P.shape} vs {Y.shape}")
    aps = [average_precision(P[:, c], Y[:, c]) for c in range(P.shape[1])]
    scored = [a for a in aps if a is not None]
    return aps, (float(np.mean(scored)) if scored else None)


def conditional_timesteps(Y, j: int, tau: int) -> np.ndarray:
    """클래스 j 의 활성 시점에서 ±τ 이내인 시점들의 bool 마스크 (T,)."""
    if tau < 0:
        raise ValueError(f"temporal window must be >= 0, got {tau}")
    col = np.asarray(Y)[:, j].astype(np.int64)
    T = col.shape[0]
    csum = np.concatenate(([0], np.cumsum(col)))
    t = np.arange(T)
    lo = np.clip(t - tau, 0, T)
    hi = np.clip(t + tau + 1, 0, T)
    return (csum[hi] - csum[lo]) > 0


def _threshold_scores(p: np.ndarray, y: np.ndarray, threshold: float) -> Tuple[float, float, float]:
    pred = p >= threshold
    tp = int((pred & y).sum())
    n_pred = int(pred.sum())
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / int(y.sum())
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def action_conditional_suite(
    P_list: Sequence[np.ndarray],
    Y_list: Sequence[np.ndarray],
    tau: int,
    threshold: float = 0.5,
    include_self_pairs: bool = False,
    weight_by_support: bool = False,
) -> ConditionalMetrics:
    """모든 순서쌍 (i, j) 에 대해 j 조건 구간 S 안의 클래스 i 예측을 평가한다.

    S 는 시퀀스마다 계산한 뒤 이어 붙인다(창이 시퀀스 경계를 넘지 않음).
    S 안에 i 의 양성이 없는 쌍은 건너뛴다. 집계는 쌍 단위 단순 평균
    (``weight_by_support`` 이면 S 안 i 양성 수로 가중).
    """
    if len(P_list) != len(Y_list):
        raise DimensionError("prediction and label lists differ in length")
    result = ConditionalMetrics(tau=tau)
    if not P_list:
        result.empty = True
        return result
    P = np.concatenate([np.asarray(p, dtype=np.float64) for p in P_list])
    Y = np.concatenate([np.asarray(y) for y in Y_list]) > 0
    if P.shape != Y.shape:
        raise DimensionError(f"pooled predictions {P.shape} vs labels {Y.shape}")
    C = P.shape[1]
    masks = [np.concatenate([conditional_timesteps(y, j, tau) for y in Y_list]) for j in range(C)]

    rows, weights = [], []
    for i in range(C):
        for j in range(C):
            if i == j and not include_self_pairs:
                continue
            S = masks[j]
            y = Y[S, i]
            support = int(y.sum())
            if support == 0:
                result.skipped_pairs += 1
                continue
            p = P[S, i]
            ap = average_precision(p, y)
            precision, recall, f1 = _threshold_scores(p, y, threshold)
            rows.append((ap, f1, precision, recall))
            weights.append(support if weight_by_support else 1)

    result.n_pairs = len(rows)
    if not rows:
        result.empty = True
        return result
    agg = np.average(np.asarray(rows, dtype=np.float64), axis=0, weights=np.asarray(weights, dtype=np.float64))
    result.mAP_ac, result.F1_ac, result.P_ac, result.R_ac = (float(v) for v in agg)
    return result


def evaluate_predictions(
    P_list: Sequence[np.ndarray],
    Y_list: Sequence[np.ndarray],
    class_names: List[str],
    opts: EvalOptions | None = None,
) -> EvalReport:
    """예측·라벨 목록 → EvalReport."""
    opts = opts or EvalOptions()
    n_frames = int(sum(np.asarray(y).shape[0] for y in Y_list))
    if P_list:
        aps, mAP = per_frame_map(np.concatenate(P_list), np.concatenate(Y_list))
    else:
        aps, mAP = [None] * len(class_names), None
    conditional = [
        action_conditional_suite(
            P_list, Y_list, tau, opts.threshold, opts.include_self_pairs, opts.weight_by_support
        )
        for tau in opts.windows
    ]
    return EvalReport(
        class_names=list(class_names),
        per_class_ap=aps,
        mAP=mAP,
        skipped_classes=sum(a is None for a in aps),
        conditional=conditional,
        n_sequences=len(P_list),
        n_frames=n_frames,
    )
