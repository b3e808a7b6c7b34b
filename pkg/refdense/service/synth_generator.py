# refdense/service/synth_generator.py
"""synth_generator.py
엔티티·모션을 공유하는 조합형 dense action 데이터셋 생성기.

생성 원리
=========
1. 엔티티(𝔻 공간)·모션(D 공간)마다 고정 단위 프로토타입 벡터를 뽑는다.
2. 행동 인스턴스는 Poisson 개수 · log-normal 길이 구간으로 샘플하며 서로 겹칠 수 있다.
3. 프레임 특징 = 활성 엔티티 프로토타입 합 + 가우시안 잡음,
   세그먼트 특징 = 활성 모션 프로토타입 합을 폭 3 이동평균으로 평활 + 잡음.
4. 텍스트 임베딩 테이블은 프로토타입 자체(언어 특징이 시각 특징과 정렬됨).

겹침 비율(≥2 행동 활성 시점 / ≥1 활성 시점)이 [목표, 목표+허용오차] 에 들도록
인스턴스 발생률을 이분 탐색한다. 같은 seed 면 비트 단위로 동일한 결과를 낸다.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import List

import numpy as np
from pydantic import BaseModel, Field

from refdense.domain.dataset import SynthDataset
from refdense.domain.errors import GenerationError
from refdense.domain.features import TextEmbeddingTable, VideoSequence
from refdense.domain.labels import DenseLabelGrid, decompose_labels
from refdense.dto.synth_spec_dto import SynthSpec
from refdense.dto.vocabulary_dto import (
    ActionEntry,
    ActionVocabulary,
    ConceptEntry,
    VocabularyFile,
    build_vocabulary,
)
from refdense.prompts import class_prompt

logger = logging.getLogger("refdense.synth")


class SynthStats(BaseModel):
    """split_stats 요약."""

    n_sequences: int = 0
    n_frames: int = 0
    label_density: float = 0.0
    overlap_fraction: float = 0.0
    cooccurrence_histogram: List[int] = Field(default_factory=list)
    per_class_counts: List[int] = Field(default_factory=list)


# ───────────────────── 내부 헬퍼 ─────────────────────
def _unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _build_vocabulary(spec: SynthSpec, rng: np.random.Generator) -> ActionVocabulary:
    """모든 엔티티/모션이 최소 한 행동에 참조되도록 행동 집합을 구성한다."""
    ents = [f"E{i:02d}" for i in range(spec.n_entities)]
    mots = [f"M{i:02d}" for i in range(spec.n_motions)]

    motion_only = sorted(rng.permutation(spec.n_motions)[: spec.n_motion_only].tolist())
    entity_only = sorted(rng.permutation(spec.n_entities)[: spec.n_entity_only].tolist())
    pool_e = [i for i in rng.permutation(spec.n_entities).tolist() if i not in entity_only]
    pool_m = [i for i in rng.permutation(spec.n_motions).tolist() if i not in motion_only]
    pool_e = pool_e or rng.permutation(spec.n_entities).tolist()
    pool_m = pool_m or rng.permutation(spec.n_motions).tolist()

    # 덮개 쌍: i 와 j 가 lcm 주기 안에서 겹치지 않아 중복이 없다.
    k = min(max(len(pool_e), len(pool_m)), spec.n_pair_actions)
    pairs = {(pool_e[i % len(pool_e)], pool_m[i % len(pool_m)]) for i in range(k)}
    rest = [p for p in product(range(spec.n_entities), range(spec.n_motions)) if p not in pairs]
    n_fill = spec.n_pair_actions - len(pairs)
    if n_fill > 0:
        pick = rng.choice(len(rest), size=n_fill, replace=False)
        pairs.update(rest[i] for i in sorted(pick.tolist()))

    actions = [ActionEntry(name=f"{ents[e]}-{mots[m]}", entity=ents[e], motion=mots[m]) for e, m in sorted(pairs)]
    actions += [ActionEntry(name=f"{mots[m]}-only", motion=mots[m]) for m in motion_only]
    actions += [ActionEntry(name=f"{ents[e]}-only", entity=ents[e]) for e in entity_only]
    return build_vocabulary(
        VocabularyFile(
            actions=actions,
            entities=[ConceptEntry(name=n, text=f"object {i}") for i, n in enumerate(ents)],
            motions=[ConceptEntry(name=n, text=f"movement {i}") for i, n in enumerate(mots)],
        )
    )


def _sample_labels(spec: SynthSpec, n_actions: int, rate: float, seed: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed)
    Y = np.zeros((spec.T, n_actions), dtype=np.uint8)
    n_inst = int(rng.poisson(rate))
    mu = np.log(spec.mean_duration) - 0.5 * spec.duration_sigma ** 2
    max_dur = min(spec.max_duration, spec.T)
    for _ in range(n_inst):
        a = int(rng.integers(n_actions))
        dur = int(np.clip(np.rint(rng.lognormal(mu, spec.duration_sigma)), 1, max_dur))
        start = int(rng.integers(0, spec.T - dur + 1))
        Y[start : start + dur, a] = 1
    return Y


def _moving_average3(x: np.ndarray) -> np.ndarray:
    """폭 3 이동평균(양 끝 zero padding)."""
    padded = np.pad(x, ((1, 1), (0, 0)))
    return (padded[:-2] + padded[1:-1] + padded[2:]) / 3.0


def overlap_fraction(grids: List[np.ndarray]) -> float:
    """≥2 활성 시점 수 / ≥1 활성 시점 수. 활성 시점이 없으면 0."""
    counts = np.concatenate([g.sum(axis=1) for g in grids]) if grids else np.zeros(0)
    active = int((counts >= 1).sum())
    return float((counts >= 2).sum() / active) if active else 0.0


# ───────────────────── 공개 API ─────────────────────
def generate(spec: SynthSpec, threads: int = 1) -> SynthDataset:
    """사양에 따라 합성 데이터셋을 만든다.

    Args:
        spec: 검증된 SynthSpec.
        threads: 시퀀스 특징 생성 병렬도. 출력 순서는 항상 시퀀스 인덱스 순.

    Returns:
        SynthDataset

    Raises:
        GenerationError: 겹침 목표·클래스 커버리지를 재시도 한도 안에 만족하지 못함.
    """
    root = np.random.SeedSequence(spec.seed)
    proto_ss, vocab_ss, seq_ss = root.spawn(3)
    proto_rng = np.random.default_rng(proto_ss)
    ent_protos = _unit_rows(proto_rng, spec.n_entities, spec.d_frame)
    mot_protos = _unit_rows(proto_rng, spec.n_motions, spec.d_segment)
    vocab = _build_vocabulary(spec, np.random.default_rng(vocab_ss))

    n_seq = spec.n_train + spec.n_test
    per_seq = [ss.spawn(2) for ss in seq_ss.spawn(n_seq)]

    lo, hi, rate = 0.0, None, spec.mean_instances
    grids: List[np.ndarray] = []
    for attempt in range(1, spec.max_retries + 1):
        grids = [_sample_labels(spec, vocab.n_actions, rate, label_ss) for label_ss, _ in per_seq]
        frac = overlap_fraction(grids)
        covered = spec.n_train == 0 or bool(np.concatenate(grids[: spec.n_train]).any(axis=0).all())
        low = frac < spec.overlap_target or not covered
        high = frac > spec.overlap_target + spec.overlap_tolerance
        logger.debug("[Synth] attempt %d rate=%.4f overlap=%.4f covered=%s", attempt, rate, frac, covered)
        if not low and not high:
            break
        if low and high:
            raise GenerationError("coverage needs more instances but overlap is already above target")
        if low:
            lo = rate
            rate = rate * 2.0 if hi is None else 0.5 * (lo + hi)
        else:
            hi = rate
            rate = 0.5 * (lo + hi)
    else:
        raise GenerationError(
            f"overlap target {spec.overlap_target:.2f}±{spec.overlap_tolerance:.2f} or class coverage "
            f"not reached after {spec.max_retries} attempts (last overlap {frac:.3f})"
        )
    logger.info("[Synth] ✅ rate=%.3f overlap=%.3f after %d attempt(s)", rate, frac, attempt)

    def _features(i: int) -> VideoSequence:
        rng = np.random.default_rng(per_seq[i][1])
        grid = DenseLabelGrid(grids[i])
        sub = decompose_labels(grid, vocab)
        frame = sub.entity.bits.astype(np.float64) @ ent_protos
        segment = _moving_average3(sub.motion.bits.astype(np.float64) @ mot_protos)
        frame = frame + spec.noise * rng.standard_normal(frame.shape)
        segment = segment + spec.noise * rng.standard_normal(segment.shape)
        split = "train" if i < spec.n_train else "test"
        return VideoSequence(seq_id=f"{split}-{i:05d}", features=segment, frame_features=frame, labels=grid)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sequences = list(pool.map(_features, range(n_seq)))
    else:
        sequences = [_features(i) for i in range(n_seq)]

    table = TextEmbeddingTable(
        tables={"ent": ent_protos, "mot": mot_protos},
        prompts={
            "ent": [class_prompt(t) for t in vocab.entity_texts],
            "mot": [class_prompt(t) for t in vocab.motion_texts],
        },
    )
    return SynthDataset(
        spec=spec,
        vocabulary=vocab,
        train=sequences[: spec.n_train],
        test=sequences[spec.n_train :],
        text_table=table,
        entity_prototypes=ent_protos,
        motion_prototypes=mot_protos,
        instance_rate=rate,
    )


def split_stats(sequences: List[VideoSequence], n_classes: int | None = None) -> SynthStats:
    """라벨 밀도 · 동시 발생 히스토그램 · 클래스별 활성 프레임 수를 요약한다."""
    if not sequences:
        c = n_classes or 0
        return SynthStats(cooccurrence_histogram=[0] * (c + 1), per_class_counts=[0] * c)
    grids = [s.labels.bits for s in sequences]
    stacked = np.concatenate(grids).astype(np.int64)
    c = stacked.shape[1]
    per_t = stacked.sum(axis=1)
    return SynthStats(
        n_sequences=len(sequences),
        n_frames=int(stacked.shape[0]),
        label_density=float(stacked.mean()),
        overlap_fraction=overlap_fraction(grids),
        cooccurrence_histogram=np.bincount(per_t, minlength=c + 1).astype(int).tolist(),
        per_class_counts=stacked.sum(axis=0).astype(int).tolist(),
    )
