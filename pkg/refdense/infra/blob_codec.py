# refdense/infra/blob_codec.py
"""blob_codec.py
이름 붙은 텐서 묶음을 바이너리 blob 으로 직렬화/역직렬화한다.

포맷 (little-endian)
--------------------
``"RFDN"`` | version u16 | count u32 | 텐서마다:
name_len u16 + UTF-8 name | rank u8 | extents u32 × rank | dtype u8 | payload

dtype 태그: 0 = float64, 1 = float32.
decode → encode 는 바이트 단위로 동일한 결과를 돌려준다(순서·dtype 보존).
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Dict, Mapping

import numpy as np

from refdense.domain.errors import SchemaError

# ───────────────────── 포맷 상수 ─────────────────────
MAGIC = b"RFDN"
VERSION = 1
_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}
_TAGS = {np.dtype("float64"): 0, np.dtype("float32"): 1}


def encode_blob(tensors: Mapping[str, np.ndarray]) -> bytes:
    """텐서 매핑을 blob 바이트로 변환한다. 삽입 순서를 유지한다."""
    parts = [MAGIC, struct.pack("<HI", VERSION, len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        if arr.dtype not in _TAGS:
            arr = arr.astype(np.float64)
        if arr.ndim == 0 or any(s < 1 for s in arr.shape):
            raise SchemaError(f"tensor '{name}' must have positive extents, got {arr.shape}")
        raw_name = name.encode("utf-8")
        tag = _TAGS[arr.dtype]
        parts.append(struct.pack("<H", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(struct.pack("<B", tag))
        parts.append(np.ascontiguousarray(arr, dtype=_DTYPES[tag]).tobytes())
    return b"".join(parts)


def decode_blob(raw: bytes) -> Dict[str, np.ndarray]:
    """blob 바이트를 ``이름 → ndarray`` 로 복원한다(저장 dtype 유지)."""
    if raw[:4] != MAGIC:
        raise SchemaError("not a RFDN blob (bad magic)")
    version, count = struct.unpack_from("<HI", raw, 4)
    if version != VERSION:
        raise SchemaError(f"unsupported blob version {version}")
    off = 10
    out: Dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (n_len,) = struct.unpack_from("<H", raw, off)
            off += 2
            name = raw[off : off + n_len].decode("utf-8")
            off += n_len
            (rank,) = struct.unpack_from("<B", raw, off)
            off += 1
            shape = struct.unpack_from(f"<{rank}I", raw, off)
            off += 4 * rank
            (tag,) = struct.unpack_from("<B", raw, off)
            off += 1
            if tag not in _DTYPES:
                raise SchemaError(f"tensor '{name}': unknown dtype tag {tag}")
            dtype = _DTYPES[tag]
            n_bytes = int(np.prod(shape)) * dtype.itemsize
            if off + n_bytes > len(raw):
                raise SchemaError(f"tensor '{name}': truncated payload")
            arr = np.frombuffer(raw, dtype=dtype, count=int(np.prod(shape)), offset=off)
            out[name] = arr.reshape(shape).astype(dtype.newbyteorder("="))
            off += n_bytes
    except struct.error as exc:
        raise SchemaError(f"truncated blob: {exc}") from exc
    if off != len(raw):
        raise SchemaError(f"trailing bytes after {count} tensors")
    return out


# ───────────────────── 파일 헬퍼 ─────────────────────
def save_blob(path: str | Path, tensors: Mapping[str, np.ndarray]) -> str:
    """blob 파일을 쓰고 sha256 hex digest 를 반환한다."""
    raw = encode_blob(tensors)
    Path(path).write_bytes(raw)
    return hashlib.sha256(raw).hexdigest()


def load_blob(path: str | Path) -> Dict[str, np.ndarray]:
    return decode_blob(Path(path).read_bytes())


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
