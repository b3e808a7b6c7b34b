# refdense/controller/gen_data_controller.py
"""gen_data_controller.py
합성 데이터셋 생성 커맨드.

- 사용: ``refdense gen-data [--config spec.json] [--seed N] [--out DIR] [--force]``
- 입력: SynthSpec JSON (없으면 기본 사양)
- 출력: 어휘 · 라벨 · 특징 blob · 텍스트 테이블 · manifest.json
"""

from __future__ import annotations

import argparse
from pathlib import Path

from refdense.controller.common import add_global_flags, ensure_empty_dir, load_json, run_command
from refdense.dto.report_dto import RunManifest
from refdense.dto.synth_spec_dto import SynthSpec
from refdense.infra.blob_codec import sha256_file
from refdense.infra.dataset_files import MANIFEST_NAME, write_dataset
from refdense.service.synth_generator import generate, split_stats
from refdense.settings import get_settings, resolve_threads

COMMAND = "gen-data"


def register(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser(COMMAND, help="합성 조합형 dense action 데이터셋 생성")
    add_global_flags(p)
    p.set_defaults(entry=main)


def _out_dir(args: argparse.Namespace) -> Path:
    return args.out or Path(get_settings().data_dir)


def handle(args: argparse.Namespace, manifest: RunManifest) -> int:
    raw = load_json(args.config) if args.config else {}
    if args.seed is not None:
        raw["seed"] = args.seed
    spec = SynthSpec.model_validate(raw)
    manifest.config = spec.model_dump()
    if args.config:
        manifest.input_hashes[str(args.config)] = sha256_file(args.config)

    out = _out_dir(args)
    ensure_empty_dir(out, args.force)
    ds = generate(spec, threads=resolve_threads(args.threads))
    dataset_manifest = write_dataset(ds, out)
    manifest.outputs = [str(out / rel) for rel in dataset_manifest.hashes] + [str(out / MANIFEST_NAME)]

    stats = split_stats(ds.sequences, ds.vocabulary.n_actions)
    print(
        f"sequences: {stats.n_sequences} (train {len(ds.train)} / test {len(ds.test)})\n"
        f"classes  : C={ds.vocabulary.n_actions}, C^ent={ds.vocabulary.n_entities}, C^mot={ds.vocabulary.n_motions}\n"
        f"density  : {stats.label_density:.4f}   overlap: {100 * stats.overlap_fraction:.1f}%\n"
        f"out      : {out}"
    )
    return 0


def main(args: argparse.Namespace, argv: list) -> int:
    return run_command(args, argv, handle, _out_dir(args))
