# refdense/infra/dataset_files.py
"""dataset_files.py
합성 데이터셋을 디렉터리에 기록한다.

출력 구조
---------
``vocabulary.json`` | ``labels.ndjson`` | ``features/<id>.rfdn`` (F, Fimg) |
``text_table.rfdn`` (u_ent, u_mot) | ``manifest.json`` (경로 + sha256)

타임스탬프를 기록하지 않으므로 같은 seed 는 바이트 단위로 같은 디렉터리를 만든다.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from refdense.domain.dataset import SynthDataset
from refdense.dto.dataset_dto import DatasetManifest, ManifestEntry
from refdense.infra.blob_codec import save_blob, sha256_file
from refdense.infra.label_files import save_vocabulary, write_labels

logger = logging.getLogger("refdense.dataset_files")

MANIFEST_NAME = "manifest.json"
VOCAB_NAME = "vocabulary.json"
LABELS_NAME = "labels.ndjson"
TEXT_TABLE_NAME = "text_table.rfdn"
FEATURE_DIR = "features"


def write_manifest(path: str | Path, manifest: DatasetManifest) -> str:
    """매니페스트를 정렬된 JSON 으로 쓰고 sha256 을 반환한다."""
    text = json.dumps(manifest.model_dump(exclude_none=True), indent=2, sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")
    return sha256_file(path)


def write_dataset(ds: SynthDataset, out_dir: str | Path) -> DatasetManifest:
    """데이터셋 파일 일체와 매니페스트를 기록한다.

    Args:
        ds: ``generate()`` 결과.
        out_dir: 출력 디렉터리(없으면 생성).

    Returns:
        DatasetManifest: 기록된 매니페스트.
    """
    root = Path(out_dir)
    (root / FEATURE_DIR).mkdir(parents=True, exist_ok=True)
    hashes = {}

    save_vocabulary(root / VOCAB_NAME, ds.vocabulary)
    hashes[VOCAB_NAME] = sha256_file(root / VOCAB_NAME)

    pairs = ds.split_pairs()
    write_labels(root / LABELS_NAME, [(seq.seq_id, seq.labels) for _, seq in pairs])
    hashes[LABELS_NAME] = sha256_file(root / LABELS_NAME)

    entries = []
    for split, seq in pairs:
        rel = f"{FEATURE_DIR}/{seq.seq_id}.rfdn"
        hashes[rel] = save_blob(root / rel, {"F": seq.features, "Fimg": seq.frame_features})
        entries.append(
            ManifestEntry(id=seq.seq_id, split=split, features=rel, frame_features=rel, labels=LABELS_NAME)
        )

    table = ds.text_table
    hashes[TEXT_TABLE_NAME] = save_blob(
        root / TEXT_TABLE_NAME, {"u_ent": table.family("ent"), "u_mot": table.family("mot")}
    )

    manifest = DatasetManifest(
        sequences=entries,
        text_table=TEXT_TABLE_NAME,
        vocabulary=VOCAB_NAME,
        prompts=dict(table.prompts),
        hashes=dict(sorted(hashes.items())),
        synth_spec=ds.spec.model_dump(),
    )
    write_manifest(root / MANIFEST_NAME, manifest)
    logger.info("[Dataset] ✅ wrote %d sequences → %s", len(entries), root)
    return manifest
