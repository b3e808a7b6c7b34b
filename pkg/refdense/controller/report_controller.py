# refdense/controller/report_controller.py
"""report_controller.py
저장된 평가/ablation JSON 을 텍스트 표와 CSV 로 다시 렌더링한다.

- 사용: ``refdense report --input eval_report.json [--out DIR]``
"""

from __future__ import annotations

import argparse
from pathlib import Path

from refdense.controller.common import add_global_flags, load_json, run_command
from refdense.dto.report_dto import AblationReport, EvalReport, RunManifest
from refdense.infra.blob_codec import sha256_file
from refdense.service.reporting import render_ablation, render_eval, write_ablation_csv, write_eval_csv

COMMAND = "report"


def register(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser(COMMAND, help="EvalReport / AblationReport JSON 렌더링")
    add_global_flags(p)
    p.add_argument("--input", type=Path, required=True)
    p.set_defaults(entry=main)


def _out_dir(args: argparse.Namespace) -> Path:
    return args.out or args.input.parent


def handle(args: argparse.Namespace, manifest: RunManifest) -> int:
    raw = load_json(args.input)
    manifest.input_hashes = {str(args.input): sha256_file(args.input)}
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    if "rows" in raw:
        report = AblationReport.model_validate(raw)
        text = render_ablation(report)
        csv_path, txt_path = out / "ablation_plot.csv", out / "ablation.txt"
        write_ablation_csv(report, csv_path)
    else:
        report = EvalReport.model_validate(raw)
        text = render_eval(report)
        csv_path, txt_path = out / "eval_plot.csv", out / "eval_report.txt"
        write_eval_csv(report, csv_path)
    txt_path.write_text(text, encoding="utf-8")
    manifest.outputs = [str(txt_path), str(csv_path)]
    print(text, end="")
    return 0


def main(args: argparse.Namespace, argv: list) -> int:
    return run_command(args, argv, handle, _out_dir(args))
