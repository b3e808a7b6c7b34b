# refdense/domain/errors.py
"""errors.py
도메인 예외 계층.

컨트롤러는 ``exit_code_for()`` 로 예외를 CLI 종료 코드에 매핑한다.
(0 성공 / 2 입력·스키마 오류 / 3 실행·발산 오류)
"""

from __future__ import annotations

import pydantic


class RefDenseError(Exception):
    """모든 도메인 예외의 베이스."""


# ───────────────────── 입력·스키마 계열 (exit 2) ─────────────────────
class DimensionError(RefDenseError, ValueError):
    """텐서 shape 불일치."""


class ConfigurationError(RefDenseError, ValueError):
    """잘못된 설정값(짝수 커널 폭, heads 로 나누어지지 않는 폭 등)."""


class SchemaError(RefDenseError, ValueError):
    """어휘·라벨·텍스트 테이블 파일 스키마 위반."""


class AlignmentError(RefDenseError, ValueError):
    """시퀀스 구성 요소 간 T 불일치."""


class ValidationError(RefDenseError, ValueError):
    """비유한(non-finite) 값 등 내용 검증 실패."""


class GenerationError(RefDenseError, ValueError):
    """합성 데이터 생성 조건을 만족하지 못함."""


class CheckpointLoadError(RefDenseError, ValueError):
    """체크포인트 헤더·차원이 현재 어휘/데이터와 맞지 않음."""


# ───────────────────── 실행 계열 (exit 3) ─────────────────────
class GradCheckError(RefDenseError, RuntimeError):
    """유한차분 검사 중 손실이 유한하지 않음."""


class DivergenceError(RefDenseError, RuntimeError):
    """학습 중 손실/그래디언트 발산."""


_INPUT_ERRORS = (
    DimensionError,
    ConfigurationError,
    SchemaError,
    AlignmentError,
    ValidationError,
    GenerationError,
    CheckpointLoadError,
    pydantic.ValidationError,
    FileNotFoundError,
)


def exit_code_for(exc: BaseException) -> int:
    """예외 → CLI 종료 코드."""
    if isinstance(exc, _INPUT_ERRORS):
        return 2
    return 3
