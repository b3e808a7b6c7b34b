# refdense/infra/feature_store.py
"""feature_store.py
매니페스트 기반 파일 특징 저장소.

서비스 레이어는 ``FeatureProviderIF`` 로만 접근하므로 실제 데이터셋(사전 추출된
I3D/CLIP 특징)과 합성 데이터셋을 같은 방식으로 다룬다.
"""

from __future__ import annotations

import json
import logging
from functools import cached_property
from pathlib import Path
from typing import Dict, List

import pydantic

from refdense.domain.errors import AlignmentError, SchemaError
from refdense.domain.features import TextEmbeddingTable, VideoSequence
from refdense.domain.interfaces import FeatureProviderIF, Split
from refdense.domain.labels import DenseLabelGrid
from refdense.dto.dataset_dto import DatasetManifest, ManifestEntry
from refdense.dto.vocabulary_dto import ActionVocabulary
from refdense.infra.blob_codec import load_blob
from refdense.infra.dataset_files import MANIFEST_NAME
from refdense.infra.label_files import index_labels, load_vocabulary

logger = logging.getLogger("refdense.feature_store")


def load_manifest(path: str | Path) -> DatasetManifest:
    """매니페스트 JSON 을 읽는다. 디렉터리를 주면 ``manifest.json`` 을 찾는다."""
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST_NAME
    try:
        return DatasetManifest.model_validate(json.loads(p.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, pydantic.ValidationError) as exc:
        raise SchemaError(f"invalid manifest {p}: {exc}") from exc


def _tensor(blob: Dict, name: str, path: Path):
    if name not in blob:
        raise SchemaError(f"blob {path} has no tensor '{name}'")
    return blob[name]


def load_text_table(path: str | Path, vocab: ActionVocabulary, prompts: Dict[str, List[str]] | None = None) -> TextEmbeddingTable:
    """``u_ent`` / ``u_mot`` blob 을 읽어 정규화된 텍스트 테이블을 만든다.

    Raises:
        SchemaError: 행 수가 어휘와 다르거나 0 벡터 행이 있을 때.
    """
    blob = load_blob(path)
    tables = {"ent": _tensor(blob, "u_ent", Path(path)), "mot": _tensor(blob, "u_mot", Path(path))}
    for fam, u in tables.items():
        expected = vocab.family_size(fam)
        if u.ndim != 2 or u.shape[0] != expected:
            raise SchemaError(f"text table '{fam}' has shape {u.shape}, vocabulary expects {expected} rows")
    return TextEmbeddingTable(tables=tables, prompts=dict(prompts or {}))


class FileFeatureStore(FeatureProviderIF):
    """FeatureProviderIF 파일 구현체.

    Attributes
    ----------
    root : Path
        매니페스트가 놓인 데이터 디렉터리.
    manifest : DatasetManifest
    vocabulary : ActionVocabulary
    """

    def __init__(self, root: str | Path):
        root = Path(root)
        self.root = root if root.is_dir() else root.parent
        self.manifest = load_manifest(root)
        self.vocabulary = load_vocabulary(self.root / self.manifest.vocabulary)
        self._labels: Dict[str, Dict[str, DenseLabelGrid]] = {}
        logger.info("[FeatureStore] %d sequences in %s", len(self.manifest.sequences), self.root)

    # ───────────────────── 내부 헬퍼 ─────────────────────
    def _label_index(self, rel: str) -> Dict[str, DenseLabelGrid]:
        if rel not in self._labels:
            self._labels[rel] = index_labels(self.root / rel, self.vocabulary.n_actions)
        return self._labels[rel]

    # ───────────────────── 공개 API ─────────────────────
    def load_sequence(self, entry: ManifestEntry) -> VideoSequence:
        """매니페스트 항목 하나를 검증된 (F, 𝔽, Y) 로 읽는다."""
        f_path = self.root / entry.features
        g_path = self.root / entry.frame_features
        f_blob = load_blob(f_path)
        g_blob = f_blob if g_path == f_path else load_blob(g_path)
        labels = self._label_index(entry.labels)
        if entry.id not in labels:
            raise AlignmentError(f"sequence '{entry.id}': no label record in {entry.labels}")
        return VideoSequence(
            seq_id=entry.id,
            features=_tensor(f_blob, "F", f_path),
            frame_features=_tensor(g_blob, "Fimg", g_path),
            labels=labels[entry.id],
        )

    def sequences(self, split: Split) -> List[VideoSequence]:
        return [self.load_sequence(e) for e in self.manifest.sequences if e.split == split]

    @cached_property
    def _text_table(self) -> TextEmbeddingTable:
        return load_text_table(self.root / self.manifest.text_table, self.vocabulary, self.manifest.prompts)

    def text_table(self) -> TextEmbeddingTable:
        return self._text_table

    def input_hashes(self) -> Dict[str, str]:
        return dict(self.manifest.hashes)
