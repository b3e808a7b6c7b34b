import math

import numpy as np
import pytest
import torch

from refdense.domain.errors import DimensionError
from refdense.domain.features import TextEmbeddingTable
from refdense.domain.labels import DenseLabelGrid, decompose_labels
from refdense.dto.config_dto import AblationFlags, LossWeights, ModelConfig, ModelDims
from refdense.model.networks import build_model
from refdense.numeric.gradcheck import check_gradients
from refdense.numeric.ops import as_tensor
from refdense.numeric.tape import GradientTape
from refdense.service.losses import bce, colv, colv_terms, total_loss

from tests.conftest import bce_oracle, colv_oracle

TINY_DIMS = ModelDims(d_segment=6, d_frame=6, d_text_ent=6, d_text_mot=6, n_actions=4, n_entities=3, n_motions=3)
TINY_CFG = ModelConfig(hidden=8, heads=2, scales=2, t_train=8)


def _unit(rng, n, d):
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _random_beta(rng, T, C):
    return [tuple(int(c) for c in np.flatnonzero(rng.random(C) < 0.4)) for _ in range(T)]


@pytest.fixture
def tiny_setup(rng, small_vocab):
    model = build_model(TINY_CFG, TINY_DIMS, seed=0)
    F_seg = as_tensor(rng.standard_normal((8, 6)))
    F_img = as_tensor(rng.standard_normal((8, 6)))
    Y = DenseLabelGrid((rng.random((8, 4)) < 0.4).astype(np.uint8))
    table = TextEmbeddingTable(tables={"ent": _unit(rng, 3, 6), "mot": _unit(rng, 3, 6)})
    return model, F_seg, F_img, Y, decompose_labels(Y, small_vocab), table


class TestBce:
    def test_half_probabilities(self):
        assert float(bce(np.array([[1]]), as_tensor([[0.5]]))) == pytest.approx(math.log(2), abs=1e-12)

    def test_near_perfect_fit(self):
        Y = np.array([[1, 0], [0, 1]])
        P = as_tensor(np.where(Y == 1, 1 - 1e-12, 1e-12))
        assert float(bce(Y, P)) < 1e-10

    def test_matches_direct_summation(self, rng):
        for _ in range(100):
            T, C = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            Y = (rng.random((T, C)) < 0.5).astype(np.uint8)
            P = rng.random((T, C))
            assert float(bce(Y, as_tensor(P))) == pytest.approx(bce_oracle(Y, P), rel=1e-12, abs=1e-12)

    def test_accepts_label_grid(self):
        grid = DenseLabelGrid(np.array([[1, 0]], dtype=np.uint8))
        assert float(bce(grid, as_tensor([[0.5, 0.5]]))) == pytest.approx(2 * math.log(2))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            bce(np.zeros((2, 3)), as_tensor(np.full((3, 2), 0.5)))


class TestColv:
    def test_worked_example(self):
        U = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
        value = float(colv(as_tensor([[1.0, 0.0]]), U, [(0,)], temperature=1.0))
        assert value == pytest.approx(-0.68673, abs=1e-5)

    def test_all_empty_is_zero(self, rng, caplog):
        f = as_tensor(rng.standard_normal((4, 3)))
        res = colv_terms(f, _unit(rng, 3, 3), [()] * 4)
        assert float(res.loss) == 0.0
        assert res.used == 0 and res.empty == 4
        assert "no usable timestep" in caplog.text

    def test_saturated_timestep_skipped(self, rng, caplog):
        f = as_tensor(rng.standard_normal((2, 3)))
        U = _unit(rng, 3, 3)
        res = colv_terms(f, U, [(0, 1, 2), (1,)], temperature=0.5, normalize=False)
        assert res.used == 1 and res.saturated == 1
        only = float(colv(f[1:], U, [(1,)], temperature=0.5, normalize=False))
        assert float(res.loss) == pytest.approx(only, abs=1e-12)
        assert "every class positive" in caplog.text

    def test_matches_triple_loop(self, rng):
        for _ in range(100):
            T, C, d = int(rng.integers(1, 6)), int(rng.integers(2, 7)), int(rng.integers(2, 5))
            f = rng.standard_normal((T, d))
            U = _unit(rng, C, d)
            beta = _random_beta(rng, T, C)
            tau = float(rng.uniform(0.5, 2.0))
            got = float(colv(as_tensor(f), U, beta, temperature=tau, normalize=False))
            assert got == pytest.approx(colv_oracle(f, U, beta, tau), rel=1e-12, abs=1e-12)

    def test_full_denominator_variant(self, rng):
        for _ in range(20):
            T, C = int(rng.integers(1, 6)), int(rng.integers(2, 6))
            f = rng.standard_normal((T, 3))
            U = _unit(rng, C, 3)
            beta = _random_beta(rng, T, C)
            got = float(colv(as_tensor(f), U, beta, temperature=1.0, normalize=False, denominator="all"))
            assert got == pytest.approx(colv_oracle(f, U, beta, 1.0, "all"), rel=1e-12, abs=1e-12)
            assert got >= 0.0

    def test_mask_and_sets_agree(self, rng):
        f = as_tensor(rng.standard_normal((5, 4)))
        U = _unit(rng, 3, 4)
        beta = _random_beta(rng, 5, 3)
        mask = torch.zeros(5, 3, dtype=torch.bool)
        for t, active in enumerate(beta):
            mask[t, list(active)] = True
        assert float(colv(f, U, beta)) == float(colv(f, U, mask))

    def test_closer_positive_lowers_loss(self):
        U = np.array([[1.0, 0.0], [0.0, 1.0]])
        far = float(colv(as_tensor([[0.2, 1.0]]), U, [(0,)], temperature=1.0))
        near = float(colv(as_tensor([[1.0, 0.2]]), U, [(0,)], temperature=1.0))
        assert near < far

    def test_class_permutation_invariance(self, rng):
        f = as_tensor(rng.standard_normal((4, 3)))
        U = _unit(rng, 5, 3)
        beta = _random_beta(rng, 4, 5)
        perm = rng.permutation(5)
        inv = np.argsort(perm)
        beta_perm = [tuple(sorted(int(inv[c]) for c in b)) for b in beta]
        assert float(colv(f, U[perm], beta_perm)) == pytest.approx(float(colv(f, U, beta)), abs=1e-12)

    def test_width_mismatch(self, rng):
        with pytest.raises(DimensionError):
            colv(as_tensor(rng.standard_normal((2, 3))), _unit(rng, 2, 4), [(0,), (1,)])

    def test_gradient_matches_finite_differences(self, rng):
        f = as_tensor(rng.standard_normal((4, 3)), requires_grad=True)
        U = _unit(rng, 4, 3)
        beta = _random_beta(rng, 4, 4)
        report = check_gradients(lambda: colv(f, U, beta, temperature=0.3), {"f": f}, tol=1e-4)
        assert report.passed, report


class TestTotalLoss:
    def test_terms_sum_to_total(self, tiny_setup):
        model, F_seg, F_img, Y, sub, table = tiny_setup
        weights = LossWeights(w_action=1.0, w_ent=0.5, w_mot=2.0, w_colv=0.3)
        loss, bd = total_loss(model(F_seg, F_img), Y, sub, table, model, weights, AblationFlags())
        expect = bd.L_action + 0.5 * bd.L_ent_bce + 2.0 * bd.L_mot_bce + 0.3 * (bd.L_ent_colv + bd.L_mot_colv)
        assert bd.total == pytest.approx(expect, abs=1e-12)
        assert float(loss) == bd.total

    def test_recomputes_each_term(self, tiny_setup):
        model, F_seg, F_img, Y, sub, table = tiny_setup
        out = model(F_seg, F_img)
        _, bd = total_loss(out, Y, sub, table, model, LossWeights(), AblationFlags())
        assert bd.L_action == pytest.approx(float(bce(Y, out.probs)), abs=1e-12)
        assert bd.L_mot_bce == pytest.approx(float(bce(sub.motion, out.sub_probs["mot"])), abs=1e-12)
        ent_colv = colv(out.features["ent"], table.family("ent"), torch.from_numpy(sub.entity.bits.astype(bool)),
                        projection=model.text_projection("ent"))
        assert bd.L_ent_colv == pytest.approx(float(ent_colv), abs=1e-12)

    def test_disabled_terms_are_absent(self, tiny_setup):
        model, F_seg, F_img, Y, sub, table = tiny_setup
        flags = AblationFlags(use_colv=False, use_sub_labels_mot=False)
        loss, bd = total_loss(model(F_seg, F_img), Y, sub, table, model, LossWeights(w_ent=0.0), flags)
        dumped = bd.model_dump(exclude_none=True)
        assert set(dumped) == {"L_action", "total"}
        assert bd.total == pytest.approx(bd.L_action)

    def test_colv_off_gives_zero_text_projection_gradients(self, tiny_setup):
        model, F_seg, F_img, Y, sub, table = tiny_setup
        params = dict(model.named_parameters())
        loss, _ = total_loss(model(F_seg, F_img), Y, sub, table, model, LossWeights(), AblationFlags(use_colv=False))
        grads = GradientTape(params).gradient(loss)
        for name, g in grads.items():
            if name.startswith("text_proj."):
                assert torch.equal(g, torch.zeros_like(g)), name
        loss_on, _ = total_loss(model(F_seg, F_img), Y, sub, table, model, LossWeights(), AblationFlags())
        grads_on = GradientTape(params).gradient(loss_on)
        assert float(grads_on["text_proj.ent.weight"].abs().sum()) > 0

    def test_full_model_gradients_match_finite_differences(self, tiny_setup):
        model, F_seg, F_img, Y, sub, table = tiny_setup
        params = dict(model.named_parameters())

        def f():
            return total_loss(model(F_seg, F_img), Y, sub, table, model, LossWeights(), AblationFlags())[0]

        report = check_gradients(f, params, step=1e-4, tol=1e-4)
        assert report.passed, report
        assert report.n_elements == sum(p.numel() for p in params.values())
