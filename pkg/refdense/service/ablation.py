# refdense/service/ablation.py
"""ablation.py
네트워크 구조 · 보조 라벨 · CoLV · cross-attention ablation 배터리.

변형 × seed 마다 학습 → test 평가를 수행하고, 변형별 seed 평균/표준편차와
full 대비 델타(full − 변형)를 집계한다. 개별 실행 실패는 ``safe_run`` 이 기록만 하고
배터리는 계속 진행한다. 방향성 점검 결과는 보고서의 ``violations`` 로 남긴다.
"""

from __future__ import annotations

import logging
import time
from functools import wraps
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from tqdm import tqdm

from refdense.domain.features import crop_for_training
from refdense.domain.interfaces import FeatureProviderIF
from refdense.dto.config_dto import ModelConfig, TrainConfig, apply_flags
from refdense.dto.report_dto import AblationCell, AblationReport, AblationRow, AblationRun, WindowScores, metric_keys
from refdense.infra.step_log import NdjsonWriter
from refdense.model.networks import architecture_hash, build_model
from refdense.service.evaluator import ModelPredictor, evaluate
from refdense.service.trainer import infer_dims, item_gradients, train

logger = logging.getLogger("refdense.ablation")

Variant = Callable[[ModelConfig, TrainConfig], Tuple[ModelConfig, TrainConfig]]
MAP_MARGIN = 0.02  # single-stream 대비 최소 mAP 우위


def _flags(**update) -> Variant:
    def _apply(m: ModelConfig, t: TrainConfig):
        return m, t.model_copy(update={"flags": t.flags.model_copy(update=update)})

    return _apply


def _arch(name: str) -> Variant:
    def _apply(m: ModelConfig, t: TrainConfig):
        return m.model_copy(update={"architecture": name}), t

    return _apply


# ─────────────────────────────────────────────────────────────
# 변형 목록 (보고서 행 순서)
# ─────────────────────────────────────────────────────────────
VARIANTS: Dict[str, Variant] = {
    "full": lambda m, t: (m, t),
    "entity-only": _arch("entity_only"),
    "motion-only": _arch("motion_only"),
    "no-sub-labels": _flags(use_sub_labels_ent=False, use_sub_labels_mot=False),
    "no-ent-labels": _flags(use_sub_labels_ent=False),
    "no-mot-labels": _flags(use_sub_labels_mot=False),
    "no-colv": _flags(use_colv=False),
    "no-cross-attention": _flags(use_cross_attention=False),
    "single-stream": _flags(single_stream_baseline=True, use_colv=False),
    "single-stream+colv": _flags(single_stream_baseline=True, use_colv=True),
}


def safe_run(fn: Callable[..., AblationRun]) -> Callable[..., AblationRun]:
    """실행 하나를 감싸 예외를 실행 기록의 error 로 바꾼다."""

    @wraps(fn)
    def _wrap(variant: str, seed: int, *args, **kwargs) -> AblationRun:
        t0 = time.perf_counter()
        try:
            run = fn(variant, seed, *args, **kwargs)
        except Exception as exc:  # noqa: BLE001
            logger.error("[Ablation] ❌ %s seed=%d failed: %s", variant, seed, exc)
            run = AblationRun(variant=variant, seed=seed, status="failed", error=f"{type(exc).__name__}: {exc}")
        run.wall_time_s = time.perf_counter() - t0
        return run

    return _wrap


@safe_run
def run_variant(
    variant: str,
    seed: int,
    provider: FeatureProviderIF,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    out_dir: Optional[Path] = None,
) -> AblationRun:
    """변형 하나를 seed 하나로 학습·평가한다."""
    m, t = VARIANTS[variant](model_cfg, train_cfg)
    t = t.model_copy(update={"seed": seed})
    run_dir = out_dir / variant / f"seed{seed}" if out_dir is not None else None
    result = train(provider, m, t, out_dir=run_dir)
    report = evaluate(ModelPredictor(result.best_model), provider.sequences("test"), provider.vocabulary.actions, t.eval)
    return AblationRun(
        variant=variant,
        seed=seed,
        arch_hash=result.arch_hash,
        mAP=report.mAP,
        windows={c.tau: WindowScores(mAP_ac=c.mAP_ac, F1_ac=c.F1_ac) for c in report.conditional},
    )


# ───────────────────── 집계 ─────────────────────
def _cell(values: List[Optional[float]]) -> AblationCell:
    vals = [v for v in values if v is not None]
    if not vals:
        return AblationCell()
    return AblationCell(mean=float(np.mean(vals)), std=float(np.std(vals)), n=len(vals))


def aggregate(runs: List[AblationRun], variants: Sequence[str], windows: Sequence[int] = (0,)) -> List[AblationRow]:
    """변형별 seed 평균·표준편차와 full − 변형 델타. 지표는 mAP 와 창별 mAP_ac / F1_ac."""
    keys = metric_keys(list(windows))
    rows = []
    for v in variants:
        ok = [r for r in runs if r.variant == v and r.status == "ok"]
        rows.append(AblationRow(variant=v, cells={k: _cell([r.metric(k) for r in ok]) for k in keys}))
    full = next((r for r in rows if r.variant == "full"), None)
    for row in rows:
        if full is None or row.variant == "full":
            continue
        for k in keys:
            a, b = full.cells[k].mean, row.cells[k].mean
            row.delta[k] = None if a is None or b is None else a - b
    return rows


def check_directionality(rows: List[AblationRow]) -> List[str]:
    """full 구성이 ablation 보다 나은지 점검하고 위반 문구 목록을 돌려준다."""
    by = {r.variant: r.cells["mAP"] for r in rows}
    full = by.get("full")
    if full is None or full.mean is None:
        return ["full configuration produced no mAP"] if "full" in by else []
    out = []
    single = by.get("single-stream")
    if single is not None and single.mean is not None and full.mean < single.mean + MAP_MARGIN:
        out.append(
            f"full mAP {100 * full.mean:.1f} is not >= single-stream {100 * single.mean:.1f} + {100 * MAP_MARGIN:.1f}"
        )
    for v in ("no-sub-labels", "no-cross-attention"):
        cell = by.get(v)
        if cell is not None and cell.mean is not None and not full.mean > cell.mean:
            out.append(f"{v} mAP {100 * cell.mean:.1f} does not fall below full {100 * full.mean:.1f}")
    cell = by.get("no-colv")
    if cell is not None and cell.mean is not None:
        noise = max(full.std or 0.0, cell.std or 0.0)
        if cell.mean - full.mean > noise:
            out.append(
                f"no-colv mAP {100 * cell.mean:.1f} exceeds full {100 * full.mean:.1f} by more than spread {100 * noise:.1f}"
            )
    return out


ISOLATION_MODELS = {"refdense": {}, "single-stream": {"single_stream_baseline": True}}


def check_colv_isolation(provider: FeatureProviderIF, model_cfg: ModelConfig, train_cfg: TrainConfig) -> bool:
    """CoLV 가 꺼지면 텍스트 투영 그래디언트가 정확히 0 인지, refdense 와 single-stream 모두 확인한다."""
    seqs = provider.sequences("train")
    table = provider.text_table()
    isolated = True
    for name, update in ISOLATION_MODELS.items():
        flags = train_cfg.flags.model_copy(update={**update, "use_colv": False})
        t = train_cfg.model_copy(update={"flags": flags})
        m = apply_flags(model_cfg, flags)
        model = build_model(m, infer_dims(provider.vocabulary, seqs, table), seed=t.seed)
        seq = crop_for_training(seqs[0], t.t_train or m.t_train, np.random.default_rng(t.seed))
        grads, _ = item_gradients(model, seq, provider.vocabulary, table, t)
        proj = {n: g for n, g in grads.items() if n.startswith("text_proj.")}
        if not proj or not all(bool((g == 0).all()) for g in proj.values()):
            logger.warning("[Ablation] %s text projection is not isolated from the CoLV flag", name)
            isolated = False
    return isolated


def colv_hash_match(runs: List[AblationRun]) -> Optional[bool]:
    """single-stream 과 single-stream+colv 의 구조 해시가 같은지."""
    a = {r.arch_hash for r in runs if r.variant == "single-stream" and r.arch_hash}
    b = {r.arch_hash for r in runs if r.variant == "single-stream+colv" and r.arch_hash}
    if not a or not b:
        return None
    return a == b and len(a) == 1


# ───────────────────── 배터리 ─────────────────────
def run_battery(
    provider: FeatureProviderIF,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    seeds: Sequence[int] = (0, 1, 2),
    variants: Sequence[str] | None = None,
    out_dir: str | Path | None = None,
    progress: bool = False,
) -> AblationReport:
    """변형 × seed 전체를 실행하고 보고서를 만든다.

    실행 순서와 보고서 행 순서는 ``VARIANTS`` 순서, seed 오름차순으로 고정된다.
    """
    variants = list(variants or VARIANTS)
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise ValueError(f"unknown ablation variants: {unknown}")
    out = Path(out_dir) if out_dir is not None else None
    runs: List[AblationRun] = []
    jobs = [(v, s) for v in variants for s in seeds]
    with NdjsonWriter(out / "runs.ndjson" if out else None) as log:
        for v, s in tqdm(jobs, desc="ablation", disable=not progress):
            run = run_variant(v, s, provider, model_cfg, train_cfg, out)
            runs.append(run)
            log.write(run)
            logger.info("[Ablation] %s seed=%d status=%s mAP=%s", v, s, run.status,
                        "-" if run.mAP is None else f"{100 * run.mAP:.1f}")

    windows = list(train_cfg.eval.windows)
    rows = aggregate(runs, variants, windows)
    violations = check_directionality(rows)
    isolated = None
    if "single-stream+colv" in variants or "no-colv" in variants:
        isolated = check_colv_isolation(provider, model_cfg, train_cfg)
        if not isolated:
            violations.append("text projection receives gradient with CoLV disabled")
    match = colv_hash_match(runs)
    if match is False:
        violations.append("single-stream architecture hash changes when CoLV is enabled")

    return AblationReport(
        seeds=list(seeds),
        windows=windows,
        runs=runs,
        rows=rows,
        violations=violations,
        failures=[f"{r.variant} seed={r.seed}: {r.error}" for r in runs if r.status != "ok"],
        colv_isolated=isolated,
    )
