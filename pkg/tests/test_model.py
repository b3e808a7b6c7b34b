import numpy as np
import pytest
import torch

from refdense.domain.errors import ConfigurationError, DimensionError
from refdense.dto.config_dto import ModelConfig, ModelDims
from refdense.model.layers import AttentionBlock, PositionEmbedding
from refdense.model.networks import RefDenseNet, SingleStreamNet, architecture_hash, build_model
from refdense.numeric.ops import DTYPE, as_tensor

DIMS = ModelDims(d_segment=6, d_frame=5, d_text_ent=4, d_text_mot=7, n_actions=4, n_entities=3, n_motions=3)


def _inputs(rng, T, dims=DIMS):
    return as_tensor(rng.standard_normal((T, dims.d_segment))), as_tensor(rng.standard_normal((T, dims.d_frame)))


@pytest.fixture
def cfg():
    return ModelConfig(hidden=8, heads=2, scales=2, t_train=16)


class TestShapes:
    def test_refdense_forward_shapes(self, cfg, rng):
        model = build_model(cfg, DIMS)
        out = model(*_inputs(rng, 16))
        assert out.probs.shape == (16, 4)
        assert out.sub_probs["ent"].shape == (16, 3)
        assert out.sub_probs["mot"].shape == (16, 3)
        assert out.features["ent"].shape == (16, 8)
        assert out.features["mot"].shape == (16, 8)
        acts = out.activations
        assert acts["fine"].shape == (16, 8)
        assert acts["coarse_1"].shape == (8, 8)
        assert acts["coarse_2"].shape == (4, 8)
        assert acts["upsampled_2"].shape == (16, 8)
        assert acts["fused"].shape == (16, 8)

    def test_probabilities_in_range(self, cfg, rng):
        out = build_model(cfg, DIMS)(*_inputs(rng, 16))
        assert bool(((out.probs > 0) & (out.probs < 1)).all())

    def test_unpadded_length_rejected(self, cfg, rng):
        with pytest.raises(ConfigurationError):
            build_model(cfg, DIMS)(*_inputs(rng, 10))

    def test_padding_restores_length(self, cfg, rng):
        out = build_model(cfg, DIMS).forward_padded(*_inputs(rng, 10))
        assert out.probs.shape == (10, 4)
        assert out.features["mot"].shape == (10, 8)

    def test_longer_than_training_length(self, cfg, rng):
        out = build_model(cfg, DIMS)(*_inputs(rng, 32))
        assert out.probs.shape == (32, 4)

    def test_wrong_feature_width(self, cfg, rng):
        F_seg, F_img = _inputs(rng, 16)
        with pytest.raises(DimensionError):
            build_model(cfg, DIMS)(F_seg[:, :5], F_img)

    def test_single_stream_without_coarse_scales(self, rng):
        cfg = ModelConfig(architecture="single_stream", hidden=8, heads=2, scales=0, t_train=16)
        model = build_model(cfg, DIMS)
        out = model(*_inputs(rng, 7))
        assert out.probs.shape == (7, 4)
        assert out.sub_probs == {}
        assert set(out.features) == {"ent", "mot"}

    def test_entity_only_families(self, rng):
        cfg = ModelConfig(architecture="entity_only", hidden=8, heads=2, scales=2, t_train=16)
        model = build_model(cfg, DIMS)
        assert isinstance(model, SingleStreamNet)
        assert model.sub_families == ("ent",)
        assert set(model.text_proj) == {"ent"}
        assert set(model(*_inputs(rng, 16)).sub_probs) == {"ent"}


class TestLayers:
    def test_zeroed_block_is_identity(self, rng):
        block = AttentionBlock(8, 2).to(DTYPE)
        with torch.no_grad():
            for lin in (block.out, block.ffn_out):
                lin.weight.zero_()
                lin.bias.zero_()
        x = as_tensor(rng.standard_normal((5, 8)))
        assert torch.equal(block(x), x)

    def test_position_embedding_lengths(self):
        pos = PositionEmbedding(4, 2)
        with torch.no_grad():
            pos.table.copy_(as_tensor([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))
        assert torch.equal(pos(2), pos.table[:2])
        long = pos(7)
        assert long.shape == (7, 2)
        assert float(long[0, 0]) == 0.0 and float(long[-1, 0]) == pytest.approx(3.0)


class TestFusion:
    def test_zero_head_gives_half(self, cfg, rng):
        model = build_model(cfg, DIMS)
        with torch.no_grad():
            model.action_head.weight.zero_()
            model.action_head.bias.zero_()
        probs = model.fuse_predict(as_tensor(rng.standard_normal((6, 8))), as_tensor(rng.standard_normal((6, 8))))
        assert torch.equal(probs, torch.full((6, 4), 0.5, dtype=DTYPE))

    def test_hand_case(self):
        dims = DIMS.model_copy(update={"n_actions": 1})
        model = RefDenseNet(ModelConfig(hidden=1, heads=1, scales=0, t_train=4), dims)
        with torch.no_grad():
            model.action_head.weight.copy_(as_tensor([[1.0, -1.0]]))
            model.action_head.bias.zero_()
        p = model.fuse_predict(as_tensor([[3.0]]), as_tensor([[1.0]]))
        assert float(p[0, 0]) == pytest.approx(0.8808, abs=1e-4)

    def test_fusion_is_pointwise_in_time(self, cfg, rng):
        model = build_model(cfg, DIMS)
        ent, mot = as_tensor(rng.standard_normal((9, 8))), as_tensor(rng.standard_normal((9, 8)))
        perm = torch.as_tensor(rng.permutation(9))
        with torch.no_grad():
            assert torch.allclose(model.fuse_predict(ent, mot)[perm], model.fuse_predict(ent[perm], mot[perm]))

    def test_length_mismatch(self, cfg):
        with pytest.raises(DimensionError):
            build_model(cfg, DIMS).fuse_predict(torch.zeros(3, 8, dtype=DTYPE), torch.zeros(4, 8, dtype=DTYPE))


class TestCrossAttention:
    def test_zero_entity_contributes_nothing_at_init(self, cfg, rng):
        model = build_model(cfg, DIMS)
        x = as_tensor(rng.standard_normal((16, 8)))
        with torch.no_grad():
            guided, _ = model.motion(x, torch.zeros(16, 8, dtype=DTYPE))
            plain, _ = model.motion(x, None)
        assert torch.equal(guided, plain)

    def test_disabled_cross_matches_backbone(self, cfg, rng):
        on = build_model(cfg, DIMS, seed=3)
        off = RefDenseNet(cfg.model_copy(update={"use_cross_attention": False}), DIMS)
        off.load_state_dict(on.state_dict(), strict=False)
        assert off.motion.fine_cross is None
        x = as_tensor(rng.standard_normal((16, 8)))
        with torch.no_grad():
            a, _ = on.motion(x, None)
            b, _ = off.motion(x, as_tensor(rng.standard_normal((16, 8))))
        assert torch.equal(a, b)

    def test_entity_features_change_motion_stream(self, cfg, rng):
        model = build_model(cfg, DIMS)
        x = as_tensor(rng.standard_normal((16, 8)))
        with torch.no_grad():
            a, _ = model.motion(x, as_tensor(rng.standard_normal((16, 8))))
            b, _ = model.motion(x, None)
        assert not torch.allclose(a, b)


class TestParameters:
    def test_every_parameter_receives_gradient(self, cfg, rng):
        model = build_model(cfg, DIMS)
        out = model(*_inputs(rng, 16))
        weights = [as_tensor(rng.standard_normal(t.shape)) for t in (out.probs, out.sub_probs["ent"], out.sub_probs["mot"])]
        loss = (out.probs * weights[0]).sum() + (out.sub_probs["ent"] * weights[1]).sum() + (out.sub_probs["mot"] * weights[2]).sum()
        for fam in ("ent", "mot"):
            loss = loss + model.text_projection(fam)(out.features[fam]).pow(2).sum()
        loss.backward()
        for name, p in model.named_parameters():
            assert p.grad is not None and float(p.grad.abs().max()) > 1e-10, name

    @pytest.mark.parametrize("architecture", ["refdense", "entity_only", "motion_only", "single_stream"])
    def test_key_projections_have_no_bias(self, cfg, architecture):
        model = build_model(cfg.model_copy(update={"architecture": architecture}), DIMS)
        keys = [n for n, _ in model.named_parameters() if ".k." in n]
        assert keys and all(n.endswith(".k.weight") for n in keys)

    def test_init_is_seeded(self, cfg):
        a, b, c = build_model(cfg, DIMS, seed=1), build_model(cfg, DIMS, seed=1), build_model(cfg, DIMS, seed=2)
        for (n, pa), pb, pc in zip(a.named_parameters(), b.parameters(), c.parameters()):
            assert torch.equal(pa, pb), n
        assert not torch.equal(a.action_head.weight, c.action_head.weight)

    def test_layer_norm_and_bias_init(self, cfg):
        model = build_model(cfg, DIMS)
        block = model.entity_blocks[0]
        assert torch.equal(block.ln_attn.weight, torch.ones(8, dtype=DTYPE))
        assert torch.equal(block.ln_attn.bias, torch.zeros(8, dtype=DTYPE))
        assert torch.equal(block.q.bias, torch.zeros(8, dtype=DTYPE))
        assert float(block.q.weight.abs().max()) <= np.sqrt(6.0 / 16)

    def test_architecture_hash(self, cfg):
        ref = architecture_hash(build_model(cfg, DIMS, seed=0))
        assert ref == architecture_hash(build_model(cfg, DIMS, seed=5))
        assert ref != architecture_hash(build_model(cfg.model_copy(update={"use_cross_attention": False}), DIMS))
        single = cfg.model_copy(update={"architecture": "single_stream"})
        assert ref != architecture_hash(build_model(single, DIMS))
