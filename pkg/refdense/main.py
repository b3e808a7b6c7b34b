# refdense/main.py
"""main.py
CLI 진입점. 컨트롤러마다 서브커맨드를 등록한다.

종료 코드: 0 성공 / 2 입력·스키마 오류 / 3 실행·발산 오류
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from refdense.controller import (
    ablate_controller,
    decompose_controller,
    eval_controller,
    gen_data_controller,
    report_controller,
    train_controller,
)
from refdense.domain.errors import ConfigurationError
from refdense.logging_setup import configure_logging
from refdense.settings import get_settings

CONTROLLERS = (
    gen_data_controller,
    decompose_controller,
    train_controller,
    eval_controller,
    ablate_controller,
    report_controller,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refdense", description="dense action detection (entity/motion dual stream)")
    sub = parser.add_subparsers(dest="command", required=True)
    for controller in CONTROLLERS:
        controller.register(sub)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        settings = get_settings()
    except ConfigurationError as exc:
        print(f"[CLI] ❌ {exc}", file=sys.stderr)
        return 2
    configure_logging(settings.log_level)
    return args.entry(args, argv)


if __name__ == "__main__":
    sys.exit(main())
