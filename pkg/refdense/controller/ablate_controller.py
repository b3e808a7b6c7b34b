# refdense/controller/ablate_controller.py
"""ablate_controller.py
ablation 배터리 커맨드.

- 사용: ``refdense ablate [--data DIR] [--config run.json] [--seeds 0 1 2] [--variants ...] [--out DIR]``
- 출력: ``ablation_report.json`` · ``ablation.txt`` · ``ablation_plot.csv`` · ``runs.ndjson``
"""

from __future__ import annotations

import argparse
from pathlib import Path

from refdense.controller.common import add_global_flags, run_command
from refdense.controller.train_controller import resolve_config
from refdense.dto.report_dto import RunManifest
from refdense.infra.feature_store import FileFeatureStore
from refdense.service.ablation import VARIANTS, run_battery
from refdense.service.reporting import render_ablation, write_ablation_csv
from refdense.settings import get_settings

COMMAND = "ablate"


def register(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser(COMMAND, help="ablation 배터리 실행")
    add_global_flags(p)
    p.add_argument("--data", type=Path, default=None)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--variants", nargs="+", choices=list(VARIANTS), default=None)
    p.add_argument("--epochs", type=int, default=None, help="에폭 수 덮어쓰기")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(entry=main)


def _out_dir(args: argparse.Namespace) -> Path:
    return args.out or Path(get_settings().runs_dir) / "ablate"


def handle(args: argparse.Namespace, manifest: RunManifest) -> int:
    cfg = resolve_config(args)
    seeds = [args.seed] if args.seed is not None else list(args.seeds)
    manifest.config = {**cfg.model_dump(), "seeds": seeds, "variants": args.variants or list(VARIANTS)}
    provider = FileFeatureStore(args.data or Path(get_settings().data_dir))
    manifest.input_hashes = provider.input_hashes()

    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    report = run_battery(provider, cfg.model, cfg.train, seeds, args.variants, out_dir=out, progress=args.progress)
    text = render_ablation(report)
    (out / "ablation_report.json").write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    (out / "ablation.txt").write_text(text, encoding="utf-8")
    write_ablation_csv(report, out / "ablation_plot.csv")
    manifest.outputs = [str(out / n) for n in ("ablation_report.json", "ablation.txt", "ablation_plot.csv", "runs.ndjson")]
    print(text, end="")
    return 0


def main(args: argparse.Namespace, argv: list) -> int:
    return run_command(args, argv, handle, _out_dir(args))
