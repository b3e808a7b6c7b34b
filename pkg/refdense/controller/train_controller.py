# refdense/controller/train_controller.py
"""train_controller.py
학습 커맨드.

- 사용: ``refdense train [--data DIR] [--config run.json] [--flags colv=off ...] [--out DIR]``
- 출력: ``final.ckpt`` · ``best.ckpt`` · ``steps.ndjson`` · ``train_config.json``
"""

from __future__ import annotations

import argparse
from pathlib import Path

from refdense.controller.common import add_global_flags, load_run_config, parse_flag_overrides, run_command
from refdense.dto.report_dto import RunManifest
from refdense.infra.feature_store import FileFeatureStore
from refdense.service.trainer import train
from refdense.settings import get_settings, resolve_threads

COMMAND = "train"


def register(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser(COMMAND, help="모델 학습")
    add_global_flags(p)
    p.add_argument("--data", type=Path, default=None, help="데이터 디렉터리(manifest.json)")
    p.add_argument("--flags", nargs="*", default=[], help="ablation 플래그, 예: colv=off cross=off")
    p.add_argument("--epochs", type=int, default=None, help="에폭 수 덮어쓰기")
    p.add_argument("--progress", action="store_true", help="진행 표시")
    p.set_defaults(entry=main)


def _out_dir(args: argparse.Namespace) -> Path:
    return args.out or Path(get_settings().runs_dir) / "train"


def resolve_config(args: argparse.Namespace):
    """설정 파일 + CLI 덮어쓰기 → RunConfig."""
    cfg = load_run_config(args.config)
    update = {"threads": resolve_threads(args.threads)}
    if args.seed is not None:
        update["seed"] = args.seed
    if getattr(args, "epochs", None) is not None:
        update["epochs"] = args.epochs
    if getattr(args, "flags", None):
        update["flags"] = parse_flag_overrides(args.flags, cfg.train.flags)
    return cfg.model_copy(update={"train": cfg.train.model_copy(update=update)})


def handle(args: argparse.Namespace, manifest: RunManifest) -> int:
    cfg = resolve_config(args)
    manifest.config = cfg.model_dump()
    provider = FileFeatureStore(args.data or Path(get_settings().data_dir))
    manifest.input_hashes = provider.input_hashes()

    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "train_config.json").write_text(cfg.model_dump_json(indent=2) + "\n", encoding="utf-8")
    result = train(provider, cfg.model, cfg.train, out_dir=out, progress=args.progress)
    manifest.outputs = [str(out / n) for n in ("final.ckpt", "best.ckpt", "steps.ndjson", "train_config.json")]

    best = "-" if result.best_val_map is None else f"{100 * result.best_val_map:.1f}"
    print(f"steps: {result.steps}   best val mAP(%): {best}   arch: {result.arch_hash[:12]}\nout  : {out}")
    return 0


def main(args: argparse.Namespace, argv: list) -> int:
    return run_command(args, argv, handle, _out_dir(args))
