# refdense/controller/common.py
"""common.py
컨트롤러 공용 헬퍼.

- ``add_global_flags`` : 모든 서브커맨드가 공유하는 --seed/--config/--out/--force/--threads
- ``run_command``      : 핸들러 실행 + 예외 → 종료 코드 매핑 + 실행 매니페스트 1개 기록
- ``load_run_config`` / ``parse_flag_overrides`` : 설정 파일과 ``--flags`` 해석
"""

from __future__ import annotations

import argparse
import json
import logging
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pydantic
import torch

import refdense
from refdense.domain.errors import ConfigurationError, SchemaError, exit_code_for
from refdense.dto.config_dto import AblationFlags, RunConfig
from refdense.dto.report_dto import RunManifest

logger = logging.getLogger("refdense.cli")

Handler = Callable[[argparse.Namespace, RunManifest], int]


def add_global_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="seed 덮어쓰기")
    parser.add_argument("--config", type=Path, default=None, help="설정 JSON 경로")
    parser.add_argument("--out", type=Path, default=None, help="출력 경로")
    parser.add_argument("--force", action="store_true", help="비어 있지 않은 출력 디렉터리 허용")
    parser.add_argument("--threads", type=int, default=None, help="스레드 수 (없으면 REFDENSE_THREADS)")


def versions() -> Dict[str, str]:
    return {
        "refdense": refdense.__version__,
        "torch": torch.__version__,
        "numpy": np.__version__,
        "pydantic": pydantic.VERSION,
    }


def write_run_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"run_manifest.{manifest.command}.json"
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def run_command(args: argparse.Namespace, argv: List[str], handler: Handler, out_dir: Path) -> int:
    """핸들러를 실행하고 결과와 무관하게 실행 매니페스트를 하나 남긴다."""
    manifest = RunManifest(command=args.command, argv=list(argv), versions=versions())
    t0 = time.perf_counter()
    try:
        code = handler(args, manifest)
    except Exception as exc:  # noqa: BLE001
        code = exit_code_for(exc)
        manifest.status = "error"
        manifest.error = f"{type(exc).__name__}: {exc}"
        logger.error("[CLI] ❌ %s failed (exit %d): %s", args.command, code, exc)
    manifest.wall_time_s = time.perf_counter() - t0
    try:
        write_run_manifest(out_dir, manifest)
    except OSError as exc:
        logger.warning("[CLI] could not write run manifest: %s", exc)
    return code


# ───────────────────── 설정 해석 ─────────────────────
def load_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON in {path}: {exc}") from exc


def load_run_config(path: Optional[Path]) -> RunConfig:
    """``{"model": {...}, "train": {...}}`` 설정. 없으면 기본값."""
    if path is None:
        return RunConfig()
    return RunConfig.model_validate(load_json(path))


_FLAG_KEYS = {
    "sub_labels": ("use_sub_labels_ent", "use_sub_labels_mot"),
    "sub_ent": ("use_sub_labels_ent",),
    "sub_mot": ("use_sub_labels_mot",),
    "colv": ("use_colv",),
    "cross": ("use_cross_attention",),
    "cross_attention": ("use_cross_attention",),
    "single_stream": ("single_stream_baseline",),
}
_ON = {"on", "true", "1", "yes"}
_OFF = {"off", "false", "0", "no"}


def parse_flag_overrides(items: List[str], base: AblationFlags) -> AblationFlags:
    """``colv=off cross=off`` 형식 목록을 AblationFlags 에 반영한다."""
    update = {}
    for item in items:
        key, _, value = item.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip().lower()
        if key not in _FLAG_KEYS or value not in _ON | _OFF:
            raise ConfigurationError(f"bad --flags entry '{item}' (keys: {sorted(_FLAG_KEYS)}, values: on/off)")
        for field in _FLAG_KEYS[key]:
            update[field] = value in _ON
    return base.model_copy(update=update)


def ensure_empty_dir(path: Path, force: bool) -> None:
    """비어 있지 않은 디렉터리는 --force 없이는 거부한다."""
    if not path.exists() or force:
        return
    if any(not p.name.startswith("run_manifest.") for p in path.iterdir()):
        raise ConfigurationError(f"output directory {path} is not empty (use --force)")
