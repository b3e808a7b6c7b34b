# refdense/logging_setup.py
"""logging_setup.py
CLI 진입점에서 한 번 호출하는 로깅 설정.

모든 모듈 로거는 ``refdense.<module>`` 이름을 쓰고, 메시지는 ``[Trainer] ...`` 처럼
대괄호 태그로 시작한다.
"""

import logging
import sys

_FORMAT = "%(asctime)s %(levelname)-7s %(message)s"


def configure_logging(level: str = "INFO") -> None:
    root = logging.getLogger("refdense")
    root.setLevel(level.upper())
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_FORMAT, datefmt="%H:%M:%S"))
        root.addHandler(handler)
