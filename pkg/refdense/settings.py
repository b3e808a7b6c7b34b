# refdense/settings.py
"""settings.py
실행 환경 설정 모듈.

환경 변수
---------
- ``REFDENSE_THREADS``   : 연산 스레드 수(기본 1). CLI ``--threads`` 가 없을 때 사용.
- ``REFDENSE_LOG_LEVEL`` : 로그 레벨(기본 INFO).
- ``REFDENSE_DATA_DIR``  : 합성 데이터 기본 출력 경로.
- ``REFDENSE_RUNS_DIR``  : 학습/평가 결과 기본 출력 경로.

CLI·서비스 레이어는 이 모듈의 ``get_settings()`` 로만 설정을 읽어
환경 변수 해석을 한 곳에서 관리한다.
"""

import logging
import os
from functools import lru_cache

import pydantic
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

from refdense.domain.errors import ConfigurationError

load_dotenv()

# ───────────────────── 설정 값 ─────────────────────
REFDENSE_THREADS = os.getenv("REFDENSE_THREADS", "1")
REFDENSE_LOG_LEVEL = os.getenv("REFDENSE_LOG_LEVEL", "INFO")
REFDENSE_DATA_DIR = os.getenv("REFDENSE_DATA_DIR", "./data")
REFDENSE_RUNS_DIR = os.getenv("REFDENSE_RUNS_DIR", "./runs")


class Settings(BaseModel):
    """프로세스 단위 설정 스냅샷."""

    threads: int = Field(1, ge=1)
    log_level: str = "INFO"
    data_dir: str = "./data"
    runs_dir: str = "./runs"

    model_config = ConfigDict(frozen=True)

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, v: str) -> str:
        level = v.strip().upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"unknown log level '{v}'")
        return level


# ───────────────────── 싱글턴 getter ─────────────────────
@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """환경 변수 값을 검증해 Settings 로 만든다. 잘못된 값은 ConfigurationError."""
    try:
        return Settings(
            threads=REFDENSE_THREADS,
            log_level=REFDENSE_LOG_LEVEL,
            data_dir=REFDENSE_DATA_DIR,
            runs_dir=REFDENSE_RUNS_DIR,
        )
    except pydantic.ValidationError as exc:
        raise ConfigurationError(f"invalid REFDENSE_* environment: {exc}") from exc


def resolve_threads(cli_threads: int | None) -> int:
    """``--threads`` 값이 없으면 ``REFDENSE_THREADS`` 로 대체한다."""
    if cli_threads is not None:
        return max(1, cli_threads)
    return get_settings().threads
