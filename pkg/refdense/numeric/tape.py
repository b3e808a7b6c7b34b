# refdense/numeric/tape.py
"""tape.py
이름 붙은 파라미터 집합에 대한 역전파 래퍼.

연산 그래프 기록은 torch autograd 가 담당하고, 이 클래스는
``파라미터 이름 → 누적 그래디언트`` 매핑을 돌려주는 얇은 어댑터다.
손실에 도달하지 않는 파라미터는 같은 shape 의 0 텐서를 받는다.
"""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Tuple

import torch

from refdense.domain.errors import DimensionError


class GradientTape:
    """이름 → 텐서 매핑을 추적하는 그래디언트 테이프.

    Attributes
    ----------
    params : dict[str, torch.Tensor]
        ``requires_grad`` 가 켜진 leaf 텐서들.
    """

    def __init__(self, params: Mapping[str, torch.Tensor] | Iterable[Tuple[str, torch.Tensor]]):
        items = params.items() if isinstance(params, Mapping) else params
        self.params: Dict[str, torch.Tensor] = {}
        for name, p in items:
            if not p.requires_grad:
                p.requires_grad_(True)
            self.params[name] = p

    def gradient(self, loss: torch.Tensor, *, retain_graph: bool = False) -> Dict[str, torch.Tensor]:
        """스칼라 손실의 그래디언트를 이름별로 반환한다."""
        if loss.numel() != 1:
            raise DimensionError(f"backward needs a scalar loss, got shape {tuple(loss.shape)}")
        names = list(self.params)
        tensors = [self.params[n] for n in names]
        if not loss.requires_grad:
            return {n: torch.zeros_like(t) for n, t in zip(names, tensors)}
        grads = torch.autograd.grad(
            loss.reshape(()), tensors, allow_unused=True, retain_graph=retain_graph
        )
        return {
            n: (g if g is not None else torch.zeros_like(t))
            for n, t, g in zip(names, tensors, grads)
        }
