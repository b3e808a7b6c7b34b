# refdense/domain/labels.py
"""labels.py
dense 라벨 그리드와 라벨 분해(action → entity / motion).

- ``DenseLabelGrid`` : T×C 이진 행렬(읽기 전용)
- ``decompose_labels`` : 매핑을 통한 OR 투영. 시간 경계가 그대로 보존된다.
- ``cooccurrence_sets`` : 시점별 활성 클래스 집합 β(t)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

import numpy as np

from refdense.domain.errors import DimensionError, SchemaError
from refdense.dto.vocabulary_dto import ActionVocabulary

FAMILIES = ("ent", "mot")


@dataclass(frozen=True)
class DenseLabelGrid:
    """시점별 multi-hot 라벨. ``bits`` 는 쓰기 불가 uint8 배열."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise DimensionError(f"label grid must be 2-D, got shape {bits.shape}")
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise SchemaError("label grid entries must be 0 or 1")
        bits = bits.astype(np.uint8, copy=True)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def T(self) -> int:
        return self.bits.shape[0]

    @property
    def C(self) -> int:
        return self.bits.shape[1]

    @classmethod
    def from_active(cls, T: int, C: int, active: Iterable[Tuple[int, int]]) -> "DenseLabelGrid":
        """희소 좌표 ``[[t, c], ...]`` 로부터 그리드를 만든다."""
        bits = np.zeros((T, C), dtype=np.uint8)
        for t, c in active:
            if not (0 <= t < T and 0 <= c < C):
                raise SchemaError(f"active coordinate ({t}, {c}) outside {T}x{C}")
            bits[t, c] = 1
        return cls(bits)

    def to_active(self) -> List[List[int]]:
        return [[int(t), int(c)] for t, c in zip(*np.nonzero(self.bits))]

    def window(self, start: int, length: int) -> "DenseLabelGrid":
        return DenseLabelGrid(self.bits[start : start + length])


@dataclass(frozen=True)
class SubLabelGrids:
    """분해된 엔티티/모션 라벨 (Y^ent, Y^mot)."""

    entity: DenseLabelGrid
    motion: DenseLabelGrid

    def family(self, family: str) -> DenseLabelGrid:
        return self.entity if family == "ent" else self.motion


@dataclass(frozen=True)
class CoOccurrenceSet:
    """family → 시점별 활성 인덱스 튜플 목록."""

    sets: Dict[str, List[Tuple[int, ...]]]

    def at(self, family: str, t: int) -> Tuple[int, ...]:
        return self.sets[family][t]


# ───────────────────── 분해 ─────────────────────
def mapping_matrix(vocab: ActionVocabulary, family: str) -> np.ndarray:
    """C × C^φ one-hot 매핑 행렬."""
    index = vocab.entity_of if family == "ent" else vocab.motion_of
    mat = np.zeros((vocab.n_actions, vocab.family_size(family)), dtype=np.int64)
    for a, i in enumerate(index):
        if i is not None:
            mat[a, i] = 1
    return mat


def decompose_labels(Y: DenseLabelGrid, vocab: ActionVocabulary) -> SubLabelGrids:
    """행동 라벨을 엔티티/모션 라벨로 OR 투영한다.

    Args:
        Y: T×C 행동 라벨.
        vocab: 분해 매핑을 가진 어휘. ``Y.C == vocab.n_actions`` 여야 한다.

    Returns:
        SubLabelGrids: entity[t,e] = OR_{a→e} Y[t,a], motion 도 동일.
    """
    if Y.C != vocab.n_actions:
        raise DimensionError(f"label grid has {Y.C} classes, vocabulary has {vocab.n_actions}")
    bits = Y.bits.astype(np.int64)
    ent = (bits @ mapping_matrix(vocab, "ent")) > 0
    mot = (bits @ mapping_matrix(vocab, "mot")) > 0
    return SubLabelGrids(entity=DenseLabelGrid(ent.astype(np.uint8)), motion=DenseLabelGrid(mot.astype(np.uint8)))


def cooccurrence_sets(sub: SubLabelGrids) -> CoOccurrenceSet:
    """β(t)^φ = { e : Y^φ[t,e] = 1 }."""
    sets = {
        fam: [tuple(int(i) for i in np.flatnonzero(row)) for row in sub.family(fam).bits]
        for fam in FAMILIES
    }
    return CoOccurrenceSet(sets=sets)


def intervals(column: np.ndarray) -> List[Tuple[int, int]]:
    """이진 열의 활성 구간 목록 ``[(start, end), ...]`` (end 미포함)."""
    col = np.asarray(column).astype(np.int8)
    edges = np.diff(np.concatenate(([0], col, [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return list(zip(starts.tolist(), ends.tolist()))
