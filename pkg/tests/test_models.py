"""Context sizing, feasibility, the reshape/stretch transforms and full forwards."""

import numpy as np
import pytest

from raeslab.gradcheck import check_gradients
from raeslab.models import (
    RAE,
    RAES,
    RAESC,
    RAES_STRETCH,
    AutoencoderModel,
    ContextSpec,
    ModelVariant,
    context_size_from_sigma,
    decoder_input_features,
    decoder_input_steps,
    encode_context,
    infeasibility_reason,
    raes_feasible,
    raesc_feature_len,
    stretch_context,
    transform_context,
)
from raeslab.optim import mse_loss
from raeslab.tensor import ShapeError, Tape, Tensor, backward

# the benchmark grid: features x sigma at sequence length 200
GRID_FEATURES = (1, 2, 4, 8)
GRID_SIGMAS = (0.25, 0.5, 1.0)
GRID_SEQ_LEN = 200
EXPECTED_INFEASIBLE = {(1, 0.25), (1, 0.5), (2, 0.25)}


class TestContextSize:
    def test_full_ratio_univariate(self):
        assert context_size_from_sigma(1.0, 1, 200) == 200

    def test_quarter_ratio_eight_features(self):
        assert context_size_from_sigma(0.25, 8, 200) == 400

    def test_quarter_ratio_univariate(self):
        assert context_size_from_sigma(0.25, 1, 200) == 50

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            context_size_from_sigma(0.0, 1, 200)
        with pytest.raises(ValueError):
            context_size_from_sigma(-0.5, 1, 200)
        with pytest.raises(ValueError):
            context_size_from_sigma(1.0, 0, 200)
        with pytest.raises(ValueError):
            context_size_from_sigma(0.001, 1, 10)  # rounds to an empty context


class TestFeasibility:
    def test_indivisible_is_absent(self):
        assert raes_feasible(50, 200) is None

    def test_equal_sizes(self):
        assert raes_feasible(200, 200) == 1

    def test_double_size(self):
        assert raes_feasible(400, 200) == 2

    def test_grid_dash_pattern_matches_exactly(self):
        infeasible = set()
        for nf in GRID_FEATURES:
            for sigma in GRID_SIGMAS:
                n_c = context_size_from_sigma(sigma, nf, GRID_SEQ_LEN)
                if raes_feasible(n_c, GRID_SEQ_LEN) is None:
                    infeasible.add((nf, sigma))
        assert infeasible == EXPECTED_INFEASIBLE

    def test_raesc_accepts_everything_above_minimum(self):
        variant = ModelVariant(RAESC)
        minimum = variant.kernel_size + variant.pool_size - 1
        for nf in GRID_FEATURES:
            for sigma in GRID_SIGMAS:
                spec = ContextSpec.autoencoding(GRID_SEQ_LEN, nf, sigma)
                assert spec.context_size >= minimum
                assert infeasibility_reason(variant, spec) is None


class TestTransformContext:
    def test_hand_case(self):
        out = transform_context(Tensor([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), 3)
        assert out.data.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]

    def test_unit_chunks(self):
        out = transform_context(Tensor([7.0, 8.0, 9.0]), 3)
        assert out.data.tolist() == [[7.0], [8.0], [9.0]]

    def test_flatten_roundtrip_on_random_divisible_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            seq_len = int(rng.integers(1, 40))
            lam = int(rng.integers(1, 8))
            c = rng.uniform(-1, 1, seq_len * lam)
            out = transform_context(Tensor(c), seq_len)
            assert out.shape == (seq_len, lam)
            assert np.array_equal(out.data.ravel(), c)

    def test_indivisible_rejected_with_constraint(self):
        with pytest.raises(ShapeError, match="multiple"):
            transform_context(Tensor(np.zeros(50)), 200)

    def test_batched(self):
        c = np.arange(12.0).reshape(2, 6)
        out = transform_context(Tensor(c), 3)
        assert out.shape == (2, 3, 2)
        assert np.array_equal(out.data.reshape(2, 6), c)


class TestStretchContext:
    def test_midpoint_is_average(self):
        out = stretch_context(Tensor([1.0, 3.0]), 3)
        assert out.data.tolist() == [[1.0], [2.0], [3.0]]

    def test_equal_length_is_identity_column(self):
        c = np.array([0.3, -0.7, 1.0, 0.1])
        out = stretch_context(Tensor(c), 4)
        assert np.allclose(out.data.ravel(), c, atol=1e-15)

    def test_single_point_is_constant(self):
        out = stretch_context(Tensor([4.2]), 5)
        assert np.all(out.data == 4.2)
        assert out.shape == (5, 1)

    def test_endpoints_preserved(self):
        rng = np.random.default_rng(2)
        for n_c, seq_len in [(2, 9), (3, 7), (5, 11), (7, 8)]:
            c = rng.uniform(-1, 1, n_c)
            out = stretch_context(Tensor(c), seq_len).data.ravel()
            assert out[0] == c[0]
            assert out[-1] == c[-1]

    def test_downsampling_rejected(self):
        with pytest.raises(ShapeError, match="upsample"):
            stretch_context(Tensor(np.zeros(5)), 3)

    def test_differentiable(self):
        c = Tensor(np.array([0.5, -0.5, 1.0]), requires_grad=True)

        def build():
            out = stretch_context(c, 7)
            return mse_loss(out, np.zeros((7, 1)))

        assert check_gradients(build, [c]) < 1e-4


def build_model(kind, seq_len=4, n_features=1, sigma=1.5, seed=0, **variant_kw):
    variant = ModelVariant(kind, **variant_kw)
    spec = ContextSpec.autoencoding(seq_len, n_features, sigma)
    rng = np.random.default_rng(seed)
    return AutoencoderModel.build(variant, spec, rng), spec


class TestForwards:
    @pytest.mark.parametrize(
        "kind,sigma,kw",
        [
            (RAE, 1.25, {}),
            (RAES, 2.0, {}),
            (RAESC, 1.5, {"kernel_size": 2, "pool_size": 2, "pool_stride": 2}),
            (RAES_STRETCH, 0.75, {}),
        ],
    )
    def test_output_shape_contract(self, kind, sigma, kw):
        model, spec = build_model(kind, sigma=sigma, **kw)
        rng = np.random.default_rng(1)
        single = model.forward(Tensor(rng.uniform(-1, 1, (spec.seq_len, spec.n_features))))
        assert single.shape == (spec.out_len, spec.out_features)
        batched = model.forward(Tensor(rng.uniform(-1, 1, (5, spec.seq_len, spec.n_features))))
        assert batched.shape == (5, spec.out_len, spec.out_features)

    def test_zero_parameters_give_zero_output(self):
        model, spec = build_model(RAE, sigma=1.25)
        for p in model.parameters():
            p.data[:] = 0.0
        out = model.forward(Tensor(np.random.default_rng(0).uniform(-1, 1, (spec.seq_len, 1))))
        assert np.array_equal(out.data, np.zeros(out.shape))

    def test_generic_parameters_give_live_gradients(self):
        for kind, sigma, kw in [
            (RAE, 1.25, {}),
            (RAES, 2.0, {}),
            (RAESC, 1.5, {"kernel_size": 2, "pool_size": 2}),
            (RAES_STRETCH, 0.75, {}),
        ]:
            model, spec = build_model(kind, sigma=sigma, seed=3, **kw)
            x = Tensor(np.random.default_rng(4).uniform(-1, 1, (spec.seq_len, 1)))
            with Tape() as tape:
                loss = mse_loss(model.forward(x), np.ones((spec.out_len, 1)))
                backward(tape, loss)
            total = sum(float(np.abs(p.grad).sum()) for p in model.parameters())
            assert total > 0.0, kind

    def test_raes_unit_chunk_steps_are_context_entries(self):
        model, spec = build_model(RAES, sigma=1.0)
        x = Tensor(np.random.default_rng(5).uniform(-1, 1, (spec.seq_len, 1)))
        context = encode_context(model, x)
        steps = decoder_input_steps(model, context)
        assert len(steps) == spec.seq_len
        for i, s in enumerate(steps):
            assert s.shape == (1,)
            assert s.data[0] == context.data[i]

    def test_raesc_decoder_input_shape_example(self):
        # context 50, kernel 3, pool 2/2 -> conv length 48, pooled 24, one step per filter
        assert raesc_feature_len(50, 3, 2, 2) == 24
        variant = ModelVariant(RAESC, kernel_size=3, pool_size=2, pool_stride=2)
        spec = ContextSpec.autoencoding(seq_len=200, n_features=1, sigma=0.25)
        model = AutoencoderModel.build(variant, spec, np.random.default_rng(0))
        context = Tensor(np.random.default_rng(1).uniform(-1, 1, 50))
        steps = decoder_input_steps(model, context)
        assert len(steps) == 200
        assert all(s.shape == (24,) for s in steps)

    def test_raesc_works_where_raes_cannot(self):
        spec = ContextSpec.autoencoding(seq_len=200, n_features=1, sigma=0.25)
        assert spec.step_features is None
        variant = ModelVariant(RAESC)
        model = AutoencoderModel.build(variant, spec, np.random.default_rng(0))
        x = Tensor(np.random.default_rng(1).uniform(-1, 1, (200, 1)))
        assert model.forward(x).shape == (200, 1)

    def test_full_forward_backward_finite_differences(self):
        for kind, sigma, kw in [(RAES, 2.0, {}), (RAESC, 1.5, {"kernel_size": 2, "pool_size": 2})]:
            model, spec = build_model(kind, sigma=sigma, seed=6, **kw)
            x = Tensor(np.random.default_rng(7).uniform(-1, 1, (spec.seq_len, 1)))
            target = np.random.default_rng(8).uniform(-1, 1, (spec.out_len, 1))

            def build():
                return mse_loss(model.forward(x), target)

            assert check_gradients(build, model.parameters()) < 1e-4

    def test_wrong_variant_dispatch_rejected(self):
        from raeslab.models import raes_forward

        model, spec = build_model(RAE, sigma=1.25)
        with pytest.raises(ValueError):
            raes_forward(model, Tensor(np.zeros((spec.seq_len, 1))))


class TestModelStructure:
    def test_encoder_hidden_is_context_size(self):
        model, spec = build_model(RAE, seq_len=6, sigma=1.5)
        assert model.encoder.hidden_size == spec.context_size == 9

    def test_raesc_filter_count_is_output_length(self):
        model, spec = build_model(RAESC, seq_len=5, sigma=2.0, kernel_size=2, pool_size=2)
        assert model.conv.filters == spec.out_len == 5

    def test_decoder_hidden_defaults_to_context_size_and_is_overridable(self):
        model, spec = build_model(RAE, sigma=1.25)
        assert model.decoder.hidden_size == spec.context_size
        other = AutoencoderModel.build(
            ModelVariant(RAE), spec, np.random.default_rng(0), decoder_hidden=7
        )
        assert other.decoder.hidden_size == 7
        assert other.head.in_features == 7

    def test_raes_requires_divisible_context(self):
        spec = ContextSpec.autoencoding(seq_len=4, n_features=1, sigma=1.25)
        with pytest.raises(ValueError, match="multiple"):
            AutoencoderModel.build(ModelVariant(RAES), spec, np.random.default_rng(0))

    def test_raesc_context_too_small_names_minimum(self):
        spec = ContextSpec.autoencoding(seq_len=3, n_features=1, sigma=1.0)
        variant = ModelVariant(RAESC, kernel_size=3, pool_size=2)
        with pytest.raises(ValueError, match="at least 4"):
            decoder_input_features(variant, spec)

    def test_same_seed_same_parameters_and_loss(self):
        for kind, sigma in [(RAE, 1.25), (RAES, 2.0), (RAESC, 1.5), (RAES_STRETCH, 0.75)]:
            a, spec = build_model(kind, sigma=sigma, seed=9, kernel_size=2, pool_size=2)
            b, _ = build_model(kind, sigma=sigma, seed=9, kernel_size=2, pool_size=2)
            for pa, pb in zip(a.parameters(), b.parameters()):
                assert np.array_equal(pa.data, pb.data)
            x = Tensor(np.random.default_rng(10).uniform(-1, 1, (spec.seq_len, 1)))
            la = mse_loss(a.forward(x), x)
            lb = mse_loss(b.forward(x), x)
            assert la.data == lb.data

    def test_parameter_names_are_qualified(self):
        model, _ = build_model(RAESC, sigma=1.5, kernel_size=2, pool_size=2)
        names = {p.name for p in model.parameters()}
        assert "encoder.W_z" in names
        assert "conv.w" in names
        assert "head.b" in names
