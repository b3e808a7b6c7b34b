# refdense/model/networks.py
"""networks.py
RefDense 네트워크와 단일 스트림 기준선.

구성
====
- ``RefDenseNet``      : Action-Entity 스트림(𝔽) + Action-Motion 다중 스케일 스트림(F),
                         엔티티 특징을 key/value 로 쓰는 cross-attention 안내,
                         [F̂^ent; F̂^mot] 결합 분류기, 엔티티/모션 보조 헤드
- ``SingleStreamNet``  : [F; 𝔽] 연결 입력 하나로 동작하는 ablation 기준선
                         (entity_only / motion_only / single_stream)

모든 네트워크는 ``ForwardOutput`` 을 돌려주며 손실 계산은 service 레이어가 맡는다.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import torch
import torch.nn.functional as F
from torch import nn

from refdense.domain.errors import ConfigurationError, DimensionError
from refdense.dto.config_dto import ModelConfig, ModelDims
from refdense.model.layers import AttentionBlock, CrossAttentionBlock, PositionEmbedding, TemporalConv
from refdense.numeric.ops import DTYPE, sigmoid, upsample_linear


@dataclass
class ForwardOutput:
    """한 시퀀스에 대한 순전파 결과.

    Attributes
    ----------
    probs : (T, C) 행동 확률
    sub_probs : family → (T, C^φ) 보조 헤드 확률
    features : family → (T, D*) CoLV 입력 특징(F̂^φ)
    activations : 중간 활성값(이름 → 텐서), shape 점검용
    """

    probs: torch.Tensor
    sub_probs: Dict[str, torch.Tensor] = field(default_factory=dict)
    features: Dict[str, torch.Tensor] = field(default_factory=dict)
    activations: Dict[str, torch.Tensor] = field(default_factory=dict)

    def truncate(self, T: int) -> "ForwardOutput":
        """padding 된 시간축을 원래 길이 T 로 자른다."""
        return ForwardOutput(
            probs=self.probs[:T],
            sub_probs={k: v[:T] for k, v in self.sub_probs.items()},
            features={k: v[:T] for k, v in self.features.items()},
            activations=self.activations,
        )


# ───────────────────── 다중 스케일 스트림 ─────────────────────
class MultiScaleStream(nn.Module):
    """fine self-attention 경로 + stride-2 cascade coarse 경로 M 개.

    ``cross=True`` 이면 각 위치(fine, coarse θ)마다 별도 가중치의 cross-attention 을
    self-attention 출력 뒤에 둔다. coarse 경로도 전체 길이 엔티티 특징을 key/value 로 쓴다.
    """

    def __init__(self, cfg: ModelConfig, cross: bool):
        super().__init__()
        d = cfg.hidden
        self.scales = cfg.scales
        self.fine_attn = AttentionBlock(d, cfg.heads, cfg.ffn_mult)
        self.down = nn.ModuleList(TemporalConv(d, d, cfg.conv_width, stride=2) for _ in range(cfg.scales))
        self.coarse_attn = nn.ModuleList(AttentionBlock(d, cfg.heads, cfg.ffn_mult) for _ in range(cfg.scales))
        if cross:
            self.fine_cross = CrossAttentionBlock(d, cfg.heads)
            self.coarse_cross = nn.ModuleList(CrossAttentionBlock(d, cfg.heads) for _ in range(cfg.scales))
        else:
            self.fine_cross = None
            self.coarse_cross = None
        self.fuse = nn.Linear((cfg.scales + 1) * d, d, dtype=DTYPE)

    def forward(self, x: torch.Tensor, entity: Optional[torch.Tensor] = None) -> Tuple[torch.Tensor, Dict[str, torch.Tensor]]:
        T = x.shape[0]
        if T % (2 ** self.scales):
            raise ConfigurationError(f"sequence length {T} is not divisible by 2^{self.scales}")
        guided = self.fine_cross is not None and entity is not None
        acts: Dict[str, torch.Tensor] = {}

        fine = self.fine_attn(x)
        if guided:
            fine = self.fine_cross(fine, entity)
        acts["fine"] = fine

        branches = [fine]
        h = x
        for level in range(self.scales):
            h = self.coarse_attn[level](self.down[level](h))
            if guided:
                h = self.coarse_cross[level](h, entity)
            acts[f"coarse_{level + 1}"] = h
            up = upsample_linear(h, T)
            acts[f"upsampled_{level + 1}"] = up
            branches.append(up)

        fused = self.fuse(torch.cat(branches, dim=1))
        acts["fused"] = fused
        return fused, acts


# ───────────────────── 공통 베이스 ─────────────────────
class DenseDetector(nn.Module):
    """분류기·보조 헤드·텍스트 투영을 가진 네트워크 공통 부분."""

    #: 보조 BCE 헤드가 있는 family
    sub_families: Tuple[str, ...] = ()
    #: CoLV 를 계산할 수 있는 family
    colv_families: Tuple[str, ...] = ()

    def __init__(self, cfg: ModelConfig, dims: ModelDims):
        super().__init__()
        self.cfg = cfg
        self.dims = dims

    def _build_heads(self) -> None:
        d = self.cfg.hidden
        sizes = {"ent": self.dims.n_entities, "mot": self.dims.n_motions}
        text = {"ent": self.dims.d_text_ent, "mot": self.dims.d_text_mot}
        self.sub_heads = nn.ModuleDict({f: nn.Linear(d, sizes[f], dtype=DTYPE) for f in self.sub_families})
        self.text_proj = nn.ModuleDict({f: nn.Linear(d, text[f], bias=False, dtype=DTYPE) for f in self.colv_families})

    def _check_inputs(self, F_seg: torch.Tensor, F_img: torch.Tensor) -> None:
        if F_seg.dim() != 2 or F_seg.shape[1] != self.dims.d_segment:
            raise DimensionError(f"segment features {tuple(F_seg.shape)} do not match D={self.dims.d_segment}")
        if F_img.dim() != 2 or F_img.shape[1] != self.dims.d_frame:
            raise DimensionError(f"frame features {tuple(F_img.shape)} do not match 𝔻={self.dims.d_frame}")
        if F_seg.shape[0] != F_img.shape[0]:
            raise DimensionError(f"segment/frame length mismatch: {F_seg.shape[0]} vs {F_img.shape[0]}")

    def subtask_predict(self, feature: torch.Tensor, family: str) -> torch.Tensor:
        """폭 1 sigmoid 헤드로 (T, C^φ) 확률을 낸다."""
        return sigmoid(self.sub_heads[family](feature))

    def text_projection(self, family: str) -> nn.Linear:
        return self.text_proj[family]

    def forward_padded(self, F_seg: torch.Tensor, F_img: torch.Tensor) -> ForwardOutput:
        """T 를 2^M 배수로 zero padding 한 뒤 순전파하고 원래 길이로 자른다."""
        T = F_seg.shape[0]
        multiple = self.cfg.stride_multiple
        pad = (-T) % multiple
        if pad:
            F_seg = F.pad(F_seg, (0, 0, 0, pad))
            F_img = F.pad(F_img, (0, 0, 0, pad))
        out = self(F_seg, F_img)
        return out.truncate(T) if pad else out


# ───────────────────── RefDense ─────────────────────
class RefDenseNet(DenseDetector):
    """엔티티 스트림 + 엔티티 안내 다중 스케일 모션 스트림."""

    sub_families = ("ent", "mot")
    colv_families = ("ent", "mot")

    def __init__(self, cfg: ModelConfig, dims: ModelDims):
        super().__init__(cfg, dims)
        d = cfg.hidden
        self.frame_proj = nn.Linear(dims.d_frame, d, dtype=DTYPE)
        self.segment_proj = nn.Linear(dims.d_segment, d, dtype=DTYPE)
        self.pos_entity = PositionEmbedding(cfg.t_train, d)
        self.pos_motion = PositionEmbedding(cfg.t_train, d)
        self.entity_blocks = nn.ModuleList(AttentionBlock(d, cfg.heads, cfg.ffn_mult) for _ in range(cfg.entity_layers))
        self.motion = MultiScaleStream(cfg, cross=cfg.use_cross_attention)
        self.action_head = nn.Linear(2 * d, dims.n_actions, dtype=DTYPE)
        self._build_heads()

    def entity_forward(self, F_img: torch.Tensor) -> torch.Tensor:
        """𝔽 → F̂^ent (T, D*)."""
        x = self.frame_proj(F_img) + self.pos_entity(F_img.shape[0])
        for block in self.entity_blocks:
            x = block(x)
        return x

    def motion_forward(self, F_seg: torch.Tensor, entity: torch.Tensor) -> Tuple[torch.Tensor, Dict[str, torch.Tensor]]:
        """F, F̂^ent → F̂^mot (T, D*) 와 중간 활성값."""
        if entity.shape[0] != F_seg.shape[0]:
            raise DimensionError(f"entity features T={entity.shape[0]} vs segment features T={F_seg.shape[0]}")
        x = self.segment_proj(F_seg) + self.pos_motion(F_seg.shape[0])
        return self.motion(x, entity)

    def fuse_predict(self, entity: torch.Tensor, motion: torch.Tensor) -> torch.Tensor:
        """sigmoid(W·[F̂^ent; F̂^mot] + b) → (T, C)."""
        if entity.shape[0] != motion.shape[0]:
            raise DimensionError("entity and motion features must share T")
        return sigmoid(self.action_head(torch.cat([entity, motion], dim=1)))

    def forward(self, F_seg: torch.Tensor, F_img: torch.Tensor) -> ForwardOutput:
        self._check_inputs(F_seg, F_img)
        ent = self.entity_forward(F_img)
        mot, acts = self.motion_forward(F_seg, ent)
        acts["entity"] = ent
        return ForwardOutput(
            probs=self.fuse_predict(ent, mot),
            sub_probs={"ent": self.subtask_predict(ent, "ent"), "mot": self.subtask_predict(mot, "mot")},
            features={"ent": ent, "mot": mot},
            activations=acts,
        )


# ───────────────────── 단일 입력 기준선 ─────────────────────
class SingleStreamNet(DenseDetector):
    """[F; 𝔽] 연결 입력 기준선.

    - ``entity_only``  : 엔티티 스트림 형태(위치 인식 self-attention 블록) + 엔티티 보조 감독
    - ``motion_only``  : 다중 스케일 백본 + 모션 보조 감독
    - ``single_stream``: 다중 스케일 백본, 행동 BCE 만(CoLV 는 선택)
    """

    _FAMILIES = {
        "entity_only": (("ent",), ("ent",)),
        "motion_only": (("mot",), ("mot",)),
        "single_stream": ((), ("ent", "mot")),
    }

    def __init__(self, cfg: ModelConfig, dims: ModelDims):
        super().__init__(cfg, dims)
        if cfg.architecture not in self._FAMILIES:
            raise ConfigurationError(f"SingleStreamNet cannot build architecture '{cfg.architecture}'")
        self.sub_families, self.colv_families = self._FAMILIES[cfg.architecture]
        d = cfg.hidden
        self.input_proj = nn.Linear(dims.d_segment + dims.d_frame, d, dtype=DTYPE)
        self.pos = PositionEmbedding(cfg.t_train, d)
        if cfg.architecture == "entity_only":
            self.blocks = nn.ModuleList(AttentionBlock(d, cfg.heads, cfg.ffn_mult) for _ in range(cfg.entity_layers))
            self.backbone = None
        else:
            self.blocks = None
            self.backbone = MultiScaleStream(cfg, cross=False)
        self.action_head = nn.Linear(d, dims.n_actions, dtype=DTYPE)
        self._build_heads()

    def forward(self, F_seg: torch.Tensor, F_img: torch.Tensor) -> ForwardOutput:
        self._check_inputs(F_seg, F_img)
        x = self.input_proj(torch.cat([F_seg, F_img], dim=1)) + self.pos(F_seg.shape[0])
        acts: Dict[str, torch.Tensor] = {}
        if self.backbone is None:
            for block in self.blocks:
                x = block(x)
        else:
            x, acts = self.backbone(x)
        return ForwardOutput(
            probs=sigmoid(self.action_head(x)),
            sub_probs={f: self.subtask_predict(x, f) for f in self.sub_families},
            features={f: x for f in self.colv_families},
            activations=acts,
        )


# ───────────────────── 생성·초기화 ─────────────────────
def init_parameters(model: nn.Module, seed: int) -> nn.Module:
    """seed 고정 Glorot uniform 초기화. LayerNorm 가중치 1, bias 0."""
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in model.parameters():
            if p.dim() == 1:
                p.zero_()
                continue
            if p.dim() == 2:
                fan_in, fan_out = p.shape[1], p.shape[0]
            else:  # (w, D, D') 합성곱 커널
                fan_in, fan_out = p.shape[0] * p.shape[1], p.shape[0] * p.shape[2]
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            p.copy_((torch.rand(p.shape, generator=gen, dtype=DTYPE) * 2.0 - 1.0) * bound)
        for module in model.modules():
            if isinstance(module, nn.LayerNorm):
                module.weight.fill_(1.0)
    return model


def build_model(cfg: ModelConfig, dims: ModelDims, seed: int = 0) -> DenseDetector:
    """설정에 맞는 네트워크를 만들고 초기화한다."""
    cls = RefDenseNet if cfg.architecture == "refdense" else SingleStreamNet
    return init_parameters(cls(cfg, dims), seed)


def architecture_hash(model: nn.Module) -> str:
    """구조 이름 + (파라미터 이름, shape) 목록의 sha256."""
    cfg = getattr(model, "cfg", None)
    payload = {
        "architecture": cfg.architecture if cfg is not None else type(model).__name__,
        "params": [[n, list(p.shape)] for n, p in model.named_parameters()],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()
