# refdense/numeric/ops.py
"""ops.py
모델·손실이 사용하는 미분 가능 텐서 연산 모음.

- 모든 연산은 입력을 변경하지 않는 순수 함수이며 ``torch`` autograd 로
  역전파된다. 학습·테스트 계산은 float64 로 수행한다.
- shape 계약을 어기면 ``DimensionError`` / ``ConfigurationError`` 를 던진다.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F

from refdense.domain.errors import ConfigurationError, DimensionError

# ───────────────────── 공통 상수 ─────────────────────
DTYPE = torch.float64
PROB_EPS = 1e-12  # 확률 clamp 하한/상한 여유


def as_tensor(x, *, requires_grad: bool = False) -> torch.Tensor:
    """list / ndarray / Tensor 를 float64 텐서로 변환한다."""
    t = torch.as_tensor(x, dtype=DTYPE)
    if requires_grad:
        t = t.clone().requires_grad_(True)
    return t


# ───────────────────── 기본 연산 ─────────────────────
def matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """(m×k)·(k×n) 행렬곱."""
    if a.dim() != 2 or b.dim() != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul shape mismatch: {tuple(a.shape)} x {tuple(b.shape)}"
        )
    return a @ b


def softmax_last(x: torch.Tensor) -> torch.Tensor:
    """마지막 축 softmax. torch 구현은 max-shift 로 안정화되어 있다."""
    return torch.softmax(x, dim=-1)


def sigmoid(x: torch.Tensor) -> torch.Tensor:
    """원소별 sigmoid, 출력은 [1e-12, 1-1e-12] 로 clamp."""
    return torch.sigmoid(x).clamp(PROB_EPS, 1.0 - PROB_EPS)


def conv1d(
    x: torch.Tensor,
    kernel: torch.Tensor,
    stride: int = 1,
    bias: torch.Tensor | None = None,
) -> torch.Tensor:
    """시간축 1D 합성곱.

    Args:
        x: (T, D) 입력.
        kernel: (w, D, D') 커널. w 는 홀수여야 한다.
        stride: 양의 정수 stride.
        bias: (D',) 선택적 bias.

    Returns:
        (ceil(T/stride), D') 출력. 양 끝에 floor(w/2) 만큼 zero padding.
    """
    if kernel.dim() != 3:
        raise DimensionError(f"conv1d kernel must be (w, D, D'), got {tuple(kernel.shape)}")
    w, d_in, _ = kernel.shape
    if w % 2 == 0:
        raise ConfigurationError(f"conv1d kernel width must be odd, got {w}")
    if stride < 1:
        raise ConfigurationError(f"conv1d stride must be positive, got {stride}")
    if x.dim() != 2 or x.shape[1] != d_in:
        raise DimensionError(
            f"conv1d input {tuple(x.shape)} does not match kernel {tuple(kernel.shape)}"
        )
    weight = kernel.permute(2, 1, 0)  # (D', D, w)
    out = F.conv1d(x.t().unsqueeze(0), weight, bias=bias, stride=stride, padding=w // 2)
    return out.squeeze(0).t()


def upsample_linear(x: torch.Tensor, target_len: int) -> torch.Tensor:
    """endpoint 정렬 선형 보간으로 (t, D) → (target_len, D).

    출력 i 는 입력 좌표 i·(t-1)/(target_len-1) 를 샘플한다. t=1 이면 broadcast.
    """
    if target_len < 1:
        raise ConfigurationError(f"target_len must be >= 1, got {target_len}")
    t = x.shape[0]
    if t == target_len:
        return x
    if t == 1:
        return x.expand(target_len, x.shape[1])
    out = F.interpolate(
        x.t().unsqueeze(0), size=target_len, mode="linear", align_corners=True
    )
    return out.squeeze(0).t()


def attention(
    q: torch.Tensor,
    k: torch.Tensor,
    v: torch.Tensor,
    heads: int = 1,
) -> torch.Tensor:
    """멀티헤드 scaled dot-product attention (dropout 없음).

    head 별로 softmax(q·kᵀ/√(d/heads))·v 를 계산한 뒤 다시 이어 붙인다.
    Tq 와 Tk 는 달라도 된다(cross-attention).
    """
    if q.dim() != 2 or k.dim() != 2 or v.dim() != 2:
        raise DimensionError("attention expects 2-D q, k, v")
    d = q.shape[1]
    if k.shape[1] != d or v.shape[1] != d or k.shape[0] != v.shape[0]:
        raise DimensionError(
            f"attention shapes q={tuple(q.shape)} k={tuple(k.shape)} v={tuple(v.shape)}"
        )
    if heads < 1 or d % heads != 0:
        raise ConfigurationError(f"width {d} is not divisible by heads={heads}")
    dh = d // heads
    # (heads, T, dh)
    qh = q.reshape(q.shape[0], heads, dh).transpose(0, 1)
    kh = k.reshape(k.shape[0], heads, dh).transpose(0, 1)
    vh = v.reshape(v.shape[0], heads, dh).transpose(0, 1)
    scores = qh @ kh.transpose(1, 2) / math.sqrt(dh)
    out = softmax_last(scores) @ vh
    return out.transpose(0, 1).reshape(q.shape[0], d)


def l2_normalize(x: torch.Tensor, eps: float = 1e-12) -> torch.Tensor:
    """행 단위 L2 정규화."""
    return x / x.norm(dim=-1, keepdim=True).clamp_min(eps)


# ───────────────────── 등록 목록 ─────────────────────
# gradcheck 테스트가 순회하는 미분 가능 연산.
DIFFERENTIABLE_OPS = (
    "matmul",
    "softmax_last",
    "sigmoid",
    "conv1d",
    "upsample_linear",
    "attention",
    "l2_normalize",
)
