# refdense/infra/checkpoint_store.py
"""checkpoint_store.py
모델 체크포인트 어댑터.

파일 구조: ``header_len u32 (LE)`` | UTF-8 JSON 헤더 | 파라미터 blob
헤더 = ``{"format", "config", "dims", "arch_hash"}``. 파라미터는 float64 로 저장되어
save → load 후 순전파 결과가 비트 단위로 같다.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Tuple

import pydantic
import torch

from refdense.domain.errors import CheckpointLoadError, SchemaError
from refdense.domain.interfaces import CheckpointStoreIF
from refdense.dto.config_dto import ModelConfig, ModelDims
from refdense.dto.vocabulary_dto import ActionVocabulary
from refdense.infra.blob_codec import decode_blob, encode_blob
from refdense.model.networks import DenseDetector, architecture_hash, build_model
from refdense.numeric.ops import DTYPE

logger = logging.getLogger("refdense.checkpoint")

FORMAT = "refdense-checkpoint/1"


def checkpoint_bytes(model: DenseDetector) -> bytes:
    header = {
        "format": FORMAT,
        "config": model.cfg.model_dump(),
        "dims": model.dims.model_dump(),
        "arch_hash": architecture_hash(model),
    }
    raw_header = json.dumps(header, sort_keys=True).encode("utf-8")
    tensors = {name: t.detach().cpu().numpy() for name, t in model.state_dict().items()}
    return struct.pack("<I", len(raw_header)) + raw_header + encode_blob(tensors)


def read_checkpoint(raw: bytes) -> Tuple[dict, dict]:
    """바이트열 → (헤더, 텐서 매핑)."""
    try:
        (n,) = struct.unpack_from("<I", raw, 0)
        header = json.loads(raw[4 : 4 + n].decode("utf-8"))
        tensors = decode_blob(raw[4 + n :])
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError, SchemaError) as exc:
        raise CheckpointLoadError(f"unreadable checkpoint: {exc}") from exc
    if header.get("format") != FORMAT:
        raise CheckpointLoadError(f"unsupported checkpoint format {header.get('format')!r}")
    return header, tensors


class CheckpointStore(CheckpointStoreIF):
    """CheckpointStoreIF 파일 구현체."""

    def save(self, path: Path, model: DenseDetector) -> str:
        """체크포인트를 쓰고 sha256 을 반환한다."""
        raw = checkpoint_bytes(model)
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(raw)
        logger.debug("[Checkpoint] saved %s", path)
        return hashlib.sha256(raw).hexdigest()

    def load(self, path: Path, vocabulary: ActionVocabulary | None = None) -> DenseDetector:
        """체크포인트를 읽어 모델을 복원한다.

        Raises:
            CheckpointLoadError: 헤더 손상, 구조 해시 불일치, 어휘 차원 불일치.
        """
        header, tensors = read_checkpoint(Path(path).read_bytes())
        try:
            cfg = ModelConfig.model_validate(header["config"])
            dims = ModelDims.model_validate(header["dims"])
        except (KeyError, pydantic.ValidationError) as exc:
            raise CheckpointLoadError(f"checkpoint {path}: bad header ({exc})") from exc
        if vocabulary is not None:
            want = (vocabulary.n_actions, vocabulary.n_entities, vocabulary.n_motions)
            have = (dims.n_actions, dims.n_entities, dims.n_motions)
            if want != have:
                raise CheckpointLoadError(
                    f"checkpoint {path} was trained for (C, C^ent, C^mot)={have}, vocabulary has {want}"
                )
        model = build_model(cfg, dims)
        if architecture_hash(model) != header.get("arch_hash"):
            raise CheckpointLoadError(f"checkpoint {path}: architecture hash mismatch")
        state = {name: torch.from_numpy(arr).to(DTYPE) for name, arr in tensors.items()}
        try:
            model.load_state_dict(state, strict=True)
        except RuntimeError as exc:
            raise CheckpointLoadError(f"checkpoint {path}: {exc}") from exc
        return model
