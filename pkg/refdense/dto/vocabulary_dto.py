"""vocabulary_dto.py
행동 클래스 어휘와 엔티티/모션 분해 매핑 스키마.

- **VocabularyFile** : 어휘 JSON 파일의 원형 스키마
- **ActionVocabulary** : 검증·인덱스 부여가 끝난 불변 어휘
"""

from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from refdense.domain.errors import SchemaError


# ────────────────────────── 파일 스키마 ────────────────────────────
class ActionEntry(BaseModel):
    """어휘 파일의 행동 항목."""

    name: str = Field(min_length=1)
    entity: Optional[str] = None
    motion: Optional[str] = None
    text: Optional[str] = None


class ConceptEntry(BaseModel):
    """명시적으로 나열된 엔티티/모션 클래스."""

    name: str = Field(min_length=1)
    text: Optional[str] = None


class VocabularyFile(BaseModel):
    """``{"actions": [...], "entities"?: [...], "motions"?: [...]}``"""

    actions: List[ActionEntry]
    entities: Optional[List[ConceptEntry]] = None
    motions: Optional[List[ConceptEntry]] = None


# ────────────────────────── 검증된 어휘 ────────────────────────────
class ActionVocabulary(BaseModel):
    """행동/엔티티/모션 클래스 목록과 행동별 분해 인덱스.

    Attributes
    ----------
    actions, entities, motions : list[str]
        파일 순서대로 인덱스가 부여된 클래스 이름.
    entity_of, motion_of : list[int | None]
        행동 c 가 참조하는 엔티티/모션 인덱스(없으면 None).
    entity_texts, motion_texts : list[str]
        프롬프트용 설명 문구. 파일에 없으면 클래스 이름.
    """

    actions: List[str]
    entities: List[str]
    motions: List[str]
    entity_of: List[Optional[int]]
    motion_of: List[Optional[int]]
    action_texts: List[str]
    entity_texts: List[str]
    motion_texts: List[str]

    model_config = ConfigDict(frozen=True)

    def validate_mapping(self) -> "ActionVocabulary":
        """불변식 검사. 위반 시 SchemaError."""
        for label, names in (("action", self.actions), ("entity", self.entities), ("motion", self.motions)):
            if len(set(names)) != len(names):
                raise SchemaError(f"duplicate {label} name in vocabulary")
        c = len(self.actions)
        if not (len(self.entity_of) == len(self.motion_of) == len(self.action_texts) == c):
            raise SchemaError("per-action mapping lists must have one entry per action")
        for a, (e, m) in enumerate(zip(self.entity_of, self.motion_of)):
            if e is None and m is None:
                raise SchemaError(f"action '{self.actions[a]}' has neither entity nor motion")
            if e is not None and not 0 <= e < len(self.entities):
                raise SchemaError(f"action '{self.actions[a]}' entity index {e} out of range")
            if m is not None and not 0 <= m < len(self.motions):
                raise SchemaError(f"action '{self.actions[a]}' motion index {m} out of range")
        for fam, idx, names in (("entity", self.entity_of, self.entities), ("motion", self.motion_of, self.motions)):
            used = {i for i in idx if i is not None}
            orphans = [names[i] for i in range(len(names)) if i not in used]
            if orphans:
                raise SchemaError(f"{fam} classes referenced by no action: {orphans}")
        return self

    # ───────────────────── 편의 속성 ─────────────────────
    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_motions(self) -> int:
        return len(self.motions)

    def family_size(self, family: str) -> int:
        return self.n_entities if family == "ent" else self.n_motions

    def family_texts(self, family: str) -> List[str]:
        return self.entity_texts if family == "ent" else self.motion_texts

    def to_file(self) -> VocabularyFile:
        """파일 스키마로 되돌린다(엔티티/모션 목록과 문구 포함)."""
        return VocabularyFile(
            actions=[
                ActionEntry(
                    name=name,
                    entity=None if e is None else self.entities[e],
                    motion=None if m is None else self.motions[m],
                    text=None if text == name else text,
                )
                for name, e, m, text in zip(self.actions, self.entity_of, self.motion_of, self.action_texts)
            ],
            entities=[
                ConceptEntry(name=n, text=None if t == n else t)
                for n, t in zip(self.entities, self.entity_texts)
            ],
            motions=[
                ConceptEntry(name=n, text=None if t == n else t)
                for n, t in zip(self.motions, self.motion_texts)
            ],
        )


def build_vocabulary(vf: VocabularyFile) -> ActionVocabulary:
    """파일 스키마 → 검증된 어휘. 인덱스는 파일 등장 순서로 부여한다.

    Raises:
        SchemaError: 중복 이름, 구성요소가 없는 행동, 목록에 없는 참조.
    """

    def _collect(listed: Optional[List[ConceptEntry]], refs: List[Optional[str]], label: str):
        if listed is not None:
            names = [c.name for c in listed]
            texts = [c.text or c.name for c in listed]
            known = set(names)
            for r in refs:
                if r is not None and r not in known:
                    raise SchemaError(f"dangling {label} reference '{r}'")
            if len(known) != len(names):
                raise SchemaError(f"duplicate {label} name in vocabulary")
            return names, texts
        names: List[str] = []
        for r in refs:
            if r is not None and r not in names:
                names.append(r)
        return names, list(names)

    entities, entity_texts = _collect(vf.entities, [a.entity for a in vf.actions], "entity")
    motions, motion_texts = _collect(vf.motions, [a.motion for a in vf.actions], "motion")
    e_index = {n: i for i, n in enumerate(entities)}
    m_index = {n: i for i, n in enumerate(motions)}
    vocab = ActionVocabulary(
        actions=[a.name for a in vf.actions],
        entities=entities,
        motions=motions,
        entity_of=[None if a.entity is None else e_index[a.entity] for a in vf.actions],
        motion_of=[None if a.motion is None else m_index[a.motion] for a in vf.actions],
        action_texts=[a.text or a.name for a in vf.actions],
        entity_texts=entity_texts,
        motion_texts=motion_texts,
    )
    return vocab.validate_mapping()
