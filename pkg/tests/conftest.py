"""공용 fixture: 작은 합성 데이터셋 · 모델/학습 설정 · brute-force 오라클."""

from __future__ import annotations

import math

import numpy as np
import pytest

from refdense.dto.config_dto import ModelConfig, TrainConfig
from refdense.dto.synth_spec_dto import SynthSpec
from refdense.dto.vocabulary_dto import ActionEntry, VocabularyFile, build_vocabulary
from refdense.infra.dataset_files import write_dataset
from refdense.infra.synthetic_provider import SyntheticProvider
from refdense.service.synth_generator import generate

TINY_SPEC = dict(
    n_entities=3,
    n_motions=3,
    n_pair_actions=4,
    n_motion_only=1,
    T=16,
    n_train=10,
    n_test=4,
    mean_instances=3.0,
    mean_duration=4.0,
    max_duration=8,
    overlap_target=0.2,
    overlap_tolerance=0.5,
    d_segment=6,
    d_frame=6,
    noise=0.1,
    seed=0,
)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_spec() -> SynthSpec:
    return SynthSpec(**TINY_SPEC)


@pytest.fixture(scope="session")
def tiny_dataset(tiny_spec):
    return generate(tiny_spec)


@pytest.fixture(scope="session")
def tiny_provider(tiny_dataset):
    return SyntheticProvider(tiny_dataset)


@pytest.fixture(scope="session")
def tiny_data_dir(tiny_dataset, tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny_data")
    write_dataset(tiny_dataset, root)
    return root


@pytest.fixture
def tiny_model_cfg() -> ModelConfig:
    return ModelConfig(hidden=8, heads=2, scales=2, t_train=16)


@pytest.fixture
def tiny_train_cfg() -> TrainConfig:
    return TrainConfig(lr=1e-3, batch_size=4, epochs=2, seed=0)


@pytest.fixture
def small_vocab():
    """C=4, C^ent=3, C^mot=3."""
    return build_vocabulary(
        VocabularyFile(
            actions=[
                ActionEntry(name="E0-M0", entity="E0", motion="M0"),
                ActionEntry(name="E1-M1", entity="E1", motion="M1"),
                ActionEntry(name="E2-M2", entity="E2", motion="M2"),
                ActionEntry(name="E0-M1", entity="E0", motion="M1"),
            ]
        )
    )


# ───────────────────── 오라클 ─────────────────────
def ap_oracle(scores, labels):
    idx = sorted(range(len(scores)), key=lambda k: -scores[k])
    hits, precs = 0, []
    for rank, k in enumerate(idx, start=1):
        if labels[k]:
            hits += 1
            precs.append(hits / rank)
    return sum(precs) / len(precs) if precs else None


def bce_oracle(Y, P):
    T, C = Y.shape
    total = 0.0
    for t in range(T):
        for c in range(C):
            p = min(max(P[t, c], 1e-12), 1 - 1e-12)
            total += Y[t, c] * math.log(p) + (1 - Y[t, c]) * math.log(1 - p)
    return -total / T


def colv_oracle(f, U, beta, tau, denominator="negatives"):
    C = U.shape[0]
    total, used = 0.0, 0
    for t in range(f.shape[0]):
        pos = list(beta[t])
        neg = [c for c in range(C) if c not in pos]
        den_set = neg if denominator == "negatives" else list(range(C))
        if not pos or not den_set:
            continue
        den = sum(math.exp(float(f[t] @ U[c]) / tau) for c in den_set)
        s = sum(math.log(math.exp(float(f[t] @ U[e]) / tau) / den) for e in pos)
        total += s / len(pos)
        used += 1
    return -total / used if used else 0.0


def suite_oracle(P_list, Y_list, tau, thr=0.5, include_self=False, weight=False):
    C = Y_list[0].shape[1]
    rows, ws = [], []
    for i in range(C):
        for j in range(C):
            if i == j and not include_self:
                continue
            ps, ys = [], []
            for P, Y in zip(P_list, Y_list):
                T = Y.shape[0]
                for t in range(T):
                    if any(Y[t2, j] for t2 in range(max(0, t - tau), min(T, t + tau + 1))):
                        ps.append(P[t, i])
                        ys.append(int(Y[t, i]))
            if sum(ys) == 0:
                continue
            ap = ap_oracle(ps, ys)
            pred = [p >= thr for p in ps]
            tp = sum(1 for p, y in zip(pred, ys) if p and y)
            n_pred = sum(pred)
            prec = tp / n_pred if n_pred else 0.0
            rec = tp / sum(ys)
            f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
            rows.append((ap, f1, prec, rec))
            ws.append(sum(ys) if weight else 1)
    if not rows:
        return None
    return tuple(sum(w * r[k] for w, r in zip(ws, rows)) / sum(ws) for k in range(4))
