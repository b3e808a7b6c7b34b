# refdense/model/layers.py
"""layers.py
스트림 공용 빌딩 블록.

- ``AttentionBlock``      : pre-LN self-attention + residual, 2-layer FFN + residual
- ``CrossAttentionBlock`` : pre-LN cross-attention residual branch (query=자기 스트림, key/value=엔티티)
- ``PositionEmbedding``   : 학습되는 위치 임베딩(T_train 행), 길이가 다르면 잘라내거나 재표본화
- ``TemporalConv``        : (w, D, D') 커널 시간축 합성곱
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from refdense.numeric.ops import DTYPE, attention, conv1d, upsample_linear


class AttentionBlock(nn.Module):
    """self-attention 블록. 입력/출력 (T, D*)."""

    def __init__(self, d: int, heads: int, ffn_mult: int = 2):
        super().__init__()
        self.heads = heads
        self.ln_attn = nn.LayerNorm(d, dtype=DTYPE)
        self.q = nn.Linear(d, d, dtype=DTYPE)
        self.k = nn.Linear(d, d, bias=False, dtype=DTYPE)
        self.v = nn.Linear(d, d, dtype=DTYPE)
        self.out = nn.Linear(d, d, dtype=DTYPE)
        self.ln_ffn = nn.LayerNorm(d, dtype=DTYPE)
        self.ffn_in = nn.Linear(d, ffn_mult * d, dtype=DTYPE)
        self.ffn_out = nn.Linear(ffn_mult * d, d, dtype=DTYPE)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.ln_attn(x)
        x = x + self.out(attention(self.q(h), self.k(h), self.v(h), self.heads))
        return x + self.ffn_out(F.gelu(self.ffn_in(self.ln_ffn(x))))


class CrossAttentionBlock(nn.Module):
    """``x + W_o · MHA(LN(x), LN(E), LN(E))``.

    출력 투영에 bias 가 없으므로 value 가 0 이면 잔차 가지의 기여도 정확히 0 이다.
    """

    def __init__(self, d: int, heads: int):
        super().__init__()
        self.heads = heads
        self.ln_q = nn.LayerNorm(d, dtype=DTYPE)
        self.ln_kv = nn.LayerNorm(d, dtype=DTYPE)
        self.q = nn.Linear(d, d, dtype=DTYPE)
        self.k = nn.Linear(d, d, bias=False, dtype=DTYPE)
        self.v = nn.Linear(d, d, dtype=DTYPE)
        self.out = nn.Linear(d, d, bias=False, dtype=DTYPE)

    def forward(self, x: torch.Tensor, entity: torch.Tensor) -> torch.Tensor:
        kv = self.ln_kv(entity)
        return x + self.out(attention(self.q(self.ln_q(x)), self.k(kv), self.v(kv), self.heads))


class PositionEmbedding(nn.Module):
    """(T_train, D*) 위치 테이블."""

    def __init__(self, t_train: int, d: int):
        super().__init__()
        self.table = nn.Parameter(torch.zeros(t_train, d, dtype=DTYPE))

    def forward(self, T: int) -> torch.Tensor:
        if T <= self.table.shape[0]:
            return self.table[:T]
        return upsample_linear(self.table, T)


class TemporalConv(nn.Module):
    """폭 w, stride s 의 시간축 합성곱(양 끝 zero padding)."""

    def __init__(self, d_in: int, d_out: int, width: int, stride: int = 1):
        super().__init__()
        self.stride = stride
        self.kernel = nn.Parameter(torch.zeros(width, d_in, d_out, dtype=DTYPE))
        self.bias = nn.Parameter(torch.zeros(d_out, dtype=DTYPE))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return conv1d(x, self.kernel, stride=self.stride, bias=self.bias)
