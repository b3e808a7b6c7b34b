# refdense/controller/decompose_controller.py
"""decompose_controller.py
행동 라벨 → 엔티티/모션 보조 라벨 분해 커맨드.

- 사용: ``refdense decompose-labels --vocab V.json --labels L.ndjson [--out SUB.ndjson]``
- 출력: ``{"id", "T", "ent": [[t, e]...], "mot": [[t, m]...]}`` NDJSON + 요약 출력
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

import numpy as np

from refdense.controller.common import add_global_flags, run_command
from refdense.domain.labels import decompose_labels
from refdense.dto.report_dto import RunManifest
from refdense.infra.blob_codec import sha256_file
from refdense.infra.label_files import load_vocabulary, read_labels, write_sublabels

logger = logging.getLogger("refdense.cli")

COMMAND = "decompose-labels"


def register(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser(COMMAND, help="라벨을 엔티티/모션 보조 라벨로 분해")
    add_global_flags(p)
    p.add_argument("--vocab", type=Path, required=True, help="어휘 JSON")
    p.add_argument("--labels", type=Path, required=True, help="라벨 NDJSON")
    p.set_defaults(entry=main)


def _out_file(args: argparse.Namespace) -> Path:
    return args.out or args.labels.with_name(args.labels.stem + ".sub.ndjson")


def handle(args: argparse.Namespace, manifest: RunManifest) -> int:
    vocab = load_vocabulary(args.vocab)
    records = read_labels(args.labels, vocab.n_actions)
    manifest.input_hashes = {str(args.vocab): sha256_file(args.vocab), str(args.labels): sha256_file(args.labels)}
    if not records:
        logger.warning("[Decompose] %s has no label records; writing an empty output", args.labels)

    decomposed = [(seq_id, decompose_labels(grid, vocab)) for seq_id, grid in records]
    out = _out_file(args)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_sublabels(out, decomposed)
    manifest.outputs = [str(out)]

    ent_counts = np.zeros(vocab.n_entities, dtype=np.int64)
    mot_counts = np.zeros(vocab.n_motions, dtype=np.int64)
    for _, sub in decomposed:
        ent_counts += sub.entity.bits.sum(axis=0, dtype=np.int64)
        mot_counts += sub.motion.bits.sum(axis=0, dtype=np.int64)
    print(
        f"{vocab.n_actions} action classes → {vocab.n_entities} action-entity and "
        f"{vocab.n_motions} action-motion classes ({len(records)} sequences)"
    )
    for name, n in zip(vocab.entities, ent_counts):
        print(f"  ent  {name:<24} {int(n)} frames")
    for name, n in zip(vocab.motions, mot_counts):
        print(f"  mot  {name:<24} {int(n)} frames")
    return 0


def main(args: argparse.Namespace, argv: list) -> int:
    return run_command(args, argv, handle, _out_file(args).parent)
