# refdense/numeric/gradcheck.py
"""gradcheck.py
중앙 유한차분으로 테이프 그래디언트를 검증한다.

원소별 상대 오차: ``|g_tape - g_fd| / max(|g_tape|, |g_fd|, 1e-8)``.
절대 오차가 ``atol`` 이하인 원소는 유한차분 해상도 안의 잡음으로 보고 0 으로 센다.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, List, Mapping

import numpy as np
import torch
from pydantic import BaseModel, Field

from refdense.domain.errors import GradCheckError
from refdense.numeric.tape import GradientTape

REL_FLOOR = 1e-8


class GradCheckReport(BaseModel):
    """유한차분 검사 결과."""

    max_rel_error: float
    max_abs_error: float = 0.0
    worst_param: str | None = None
    worst_index: List[int] = Field(default_factory=list)
    n_elements: int
    tol: float
    atol: float = 0.0
    passed: bool


def _evaluate(f: Callable[[], torch.Tensor]) -> float:
    with torch.no_grad():
        value = float(f())
    if not math.isfinite(value):
        raise GradCheckError(f"non-finite loss at perturbed point: {value}")
    return value


def check_gradients(
    f: Callable[[], torch.Tensor],
    params: Mapping[str, torch.Tensor],
    step: float = 1e-4,
    tol: float = 1e-5,
    atol: float = 1e-7,
) -> GradCheckReport:
    """``f`` 의 테이프 그래디언트와 중앙 유한차분을 원소별로 비교한다.

    Args:
        f: 인자 없이 스칼라 텐서를 반환하는 계산. ``params`` 를 클로저로 참조한다.
        params: 검사할 leaf 텐서들(이름 → 텐서). 검사 중 in-place 로 흔든 뒤 복원한다.
        step: 유한차분 간격.
        tol: 허용 최대 상대 오차.
        atol: 이 값 이하의 절대 오차는 상대 오차 계산에서 제외한다.

    Returns:
        GradCheckReport: 최대 상대 오차와 통과 여부(``max_rel_error <= tol``).

    Raises:
        GradCheckError: 기준점 또는 흔든 점에서 손실이 유한하지 않을 때.
    """
    tape = GradientTape(params)
    loss = f()
    if not torch.isfinite(loss).all():
        raise GradCheckError(f"non-finite loss at base point: {float(loss)}")
    analytic: Dict[str, torch.Tensor] = tape.gradient(loss)

    worst, worst_abs, worst_name, worst_idx, count = 0.0, 0.0, None, [], 0
    for name, p in tape.params.items():
        g = analytic[name].detach()
        flat = p.data.view(-1)
        g_flat = g.reshape(-1)
        for i in range(flat.numel()):
            orig = float(flat[i])
            flat[i] = orig + step
            f_plus = _evaluate(f)
            flat[i] = orig - step
            f_minus = _evaluate(f)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = float(g_flat[i])
            err = abs(a - numeric)
            worst_abs = max(worst_abs, err)
            rel = 0.0 if err <= atol else err / max(abs(a), abs(numeric), REL_FLOOR)
            count += 1
            if rel > worst:
                worst, worst_name = rel, name
                worst_idx = [int(j) for j in np.unravel_index(i, tuple(p.shape))]

    return GradCheckReport(
        max_rel_error=worst,
        max_abs_error=worst_abs,
        worst_param=worst_name,
        worst_index=worst_idx,
        n_elements=count,
        tol=tol,
        atol=atol,
        passed=worst <= tol,
    )
