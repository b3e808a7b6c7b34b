# refdense/controller/eval_controller.py
"""eval_controller.py
평가 커맨드.

- 사용: ``refdense eval --checkpoint best.ckpt [--data DIR] [--split test] [--out DIR]``
        ``refdense eval --oracle`` 은 정답 라벨 예측기로 하네스를 자가 점검한다.
- 출력: ``eval_report.json`` · ``eval_report.txt`` · ``eval_plot.csv`` + 표 출력
"""

from __future__ import annotations

import argparse
from pathlib import Path

from refdense.controller.common import add_global_flags, load_run_config, run_command
from refdense.domain.errors import ConfigurationError
from refdense.dto.report_dto import RunManifest
from refdense.infra.blob_codec import sha256_file
from refdense.infra.checkpoint_store import CheckpointStore
from refdense.infra.feature_store import FileFeatureStore
from refdense.service.evaluator import LabelOracle, ModelPredictor, evaluate
from refdense.service.reporting import render_eval, write_eval_csv
from refdense.settings import get_settings, resolve_threads

COMMAND = "eval"


def register(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser(COMMAND, help="체크포인트 평가 (per-frame mAP, action-conditional)")
    add_global_flags(p)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--data", type=Path, default=None)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--oracle", action="store_true", help="정답 라벨을 그대로 내는 예측기 사용")
    p.set_defaults(entry=main)


def _out_dir(args: argparse.Namespace) -> Path:
    return args.out or Path(get_settings().runs_dir) / "eval"


def handle(args: argparse.Namespace, manifest: RunManifest) -> int:
    opts = load_run_config(args.config).train.eval
    manifest.config = {"eval": opts.model_dump(), "split": args.split, "oracle": args.oracle}
    provider = FileFeatureStore(args.data or Path(get_settings().data_dir))
    manifest.input_hashes = provider.input_hashes()

    if args.oracle:
        predictor = LabelOracle()
    elif args.checkpoint is not None:
        predictor = ModelPredictor(CheckpointStore().load(args.checkpoint, provider.vocabulary))
        manifest.input_hashes[str(args.checkpoint)] = sha256_file(args.checkpoint)
    else:
        raise ConfigurationError("eval needs --checkpoint or --oracle")

    report = evaluate(
        predictor, provider.sequences(args.split), provider.vocabulary.actions, opts, resolve_threads(args.threads)
    )
    text = render_eval(report)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "eval_report.json").write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    (out / "eval_report.txt").write_text(text, encoding="utf-8")
    write_eval_csv(report, out / "eval_plot.csv")
    manifest.outputs = [str(out / n) for n in ("eval_report.json", "eval_report.txt", "eval_plot.csv")]
    print(text, end="")
    return 0


def main(args: argparse.Namespace, argv: list) -> int:
    return run_command(args, argv, handle, _out_dir(args))
