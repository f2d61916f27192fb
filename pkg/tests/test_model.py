"""Model contracts: shapes, determinism, causality, loss structure, gradients."""

import numpy as np
import pytest

from actionseq import tokens as tk
from actionseq.model import ModelConfig, SequenceDenoiser, compute_loss, init_model
from actionseq.nn.gradcheck import grad_check_sampled


def tiny_config():
    return ModelConfig(n_encoder_layers=1, n_decoder_layers=1, heads=2, d_model=16, L=20, dropout=0.0)


def random_encoder_tokens(rng, config, batch=1):
    return rng.standard_normal((batch, config.L, config.encoder_token_width)).astype(np.float32)


def token_batch(config, events=((2, 5, 3), (0, 17, 11))):
    """Decoder input + target index arrays for one window."""
    toks = [tk.sos_token()]
    for cat, slot, frame in events:
        toks.append(tk.TargetToken(cat, slot, frame))
    toks.append(tk.eos_token(config.L))
    dec = tk.target_tokens_to_array(toks[:-1], config.L)[None]
    n = len(toks) - 1
    cat_t = np.array([[t.category_index for t in toks[1:]]])
    role_t = np.array([[t.slot if t.slot is not None else 0 for t in toks[1:]]])
    frame_t = np.array([[t.frame_index for t in toks[1:]]])
    valid = np.ones((1, n), dtype=bool)
    role_valid = np.array([[t.slot is not None for t in toks[1:]]])
    return dec, cat_t, role_t, frame_t, valid, role_valid


class TestConstruction:
    def test_desk_model_parameter_budget(self):
        model = init_model(ModelConfig.desk(), seed=0)
        assert model.n_parameters() < 2_000_000

    def test_same_seed_identical_parameters(self):
        a = init_model(tiny_config(), seed=3)
        b = init_model(tiny_config(), seed=3)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert pa.name == pb.name
            np.testing.assert_array_equal(pa.data, pb.data)

    def test_full_scale_config_instantiable(self):
        cfg = ModelConfig.full_scale()
        assert (cfg.n_encoder_layers, cfg.heads, cfg.d_model, cfg.L) == (6, 8, 512, 750)
        assert cfg.encoder_token_width == 1116
        model = init_model(cfg, seed=0)
        assert model.n_parameters() > 10_000_000

    def test_parameter_names_unique_and_bias_flagged(self):
        model = init_model(tiny_config(), seed=0)
        params = model.parameters()
        names = [p.name for p in params]
        assert len(set(names)) == len(names)
        biases = {p.name for p in params if p.is_bias}
        assert any(n.endswith("bias") or "offset" in n for n in biases)
        assert not any("weight" in n for n in biases)

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            ModelConfig(heads=3, d_model=64).validate()
        with pytest.raises(ValueError):
            ModelConfig(dropout=1.5).validate()


class TestEncode:
    def test_output_shape(self, rng):
        cfg = tiny_config()
        model = init_model(cfg, seed=0)
        memory = model.encode(random_encoder_tokens(rng, cfg, batch=3))
        assert memory.shape == (3, cfg.L, cfg.d_model)

    def test_eval_mode_deterministic(self, rng):
        cfg = tiny_config()
        model = init_model(cfg, seed=0)
        enc = random_encoder_tokens(rng, cfg)
        np.testing.assert_array_equal(model.encode(enc).data, model.encode(enc).data)

    def test_width_mismatch_rejected(self, rng):
        model = init_model(tiny_config(), seed=0)
        with pytest.raises(ValueError, match="tokens"):
            model.encode(rng.standard_normal((20, 100)).astype(np.float32))

    def test_bidirectional_context(self, rng):
        cfg = tiny_config()
        model = init_model(cfg, seed=0)
        enc = random_encoder_tokens(rng, cfg)
        base = model.encode(enc).data
        enc2 = enc.copy()
        enc2[0, 10, 240:250] += 5.0  # poke one frame's game-state features
        out = model.encode(enc2).data
        others = [i for i in range(cfg.L) if i != 10]
        assert not np.array_equal(base[0, others], out[0, others])


class TestDecode:
    def test_head_shapes(self, rng):
        cfg = tiny_config()
        model = init_model(cfg, seed=0)
        memory = model.encode(random_encoder_tokens(rng, cfg))
        dec, *_ = token_batch(cfg)
        out = model.decode_teacher_forced(memory, dec)
        lp = dec.shape[1]
        assert out.category.shape == (1, lp, 10)
        assert out.role.shape == (1, lp, 26)
        assert out.frame.shape == (1, lp, cfg.L + 2)

    def test_must_start_with_sos(self, rng):
        cfg = tiny_config()
        model = init_model(cfg, seed=0)
        memory = model.encode(random_encoder_tokens(rng, cfg))
        dec, *_ = token_batch(cfg)
        bad = dec.copy()
        bad[:, 0] = 0.0
        with pytest.raises(ValueError, match="SOS"):
            model.decode_teacher_forced(memory, bad)

    def test_causal_mask_bitwise(self, rng):
        cfg = tiny_config()
        model = init_model(cfg, seed=0)
        memory = model.encode(random_encoder_tokens(rng, cfg))
        dec, *_ = token_batch(cfg, events=((2, 5, 3), (0, 17, 11), (1, 3, 15)))
        base = model.decode_teacher_forced(memory, dec)
        for j, upto in ((3, 3), (2, 2), (1, 1)):
            poked = dec.copy()
            poked[0, j:] = rng.standard_normal(poked[0, j:].shape).astype(np.float32)
            out = model.decode_teacher_forced(memory, poked)
            for head_base, head_out in zip(base, out):
                assert np.array_equal(head_base.data[0, :upto], head_out.data[0, :upto])

    def test_untrained_category_loss_near_uniform(self, rng):
        cfg = tiny_config()
        model = init_model(cfg, seed=1)
        b = 8
        memory = model.encode(random_encoder_tokens(rng, cfg, batch=b))
        dec, cat_t, role_t, frame_t, valid, role_valid = token_batch(cfg)
        tile = lambda a: np.repeat(a, b, axis=0)
        out = model.decode_teacher_forced(memory, tile(dec))
        _, parts = compute_loss(
            out, tile(cat_t), tile(role_t), tile(frame_t), tile(valid), tile(role_valid)
        )
        assert abs(parts["category"] - np.log(10.0)) < 0.3


class TestLoss:
    def test_decomposition(self, rng):
        cfg = tiny_config()
        model = init_model(cfg, seed=0)
        memory = model.encode(random_encoder_tokens(rng, cfg))
        dec, cat_t, role_t, frame_t, valid, role_valid = token_batch(cfg)
        out = model.decode_teacher_forced(memory, dec)
        total, parts = compute_loss(out, cat_t, role_t, frame_t, valid, role_valid)
        expected = parts["category"] + parts["role"] + parts["frame"]
        assert abs(total.item() - expected) <= 1e-6 * max(1.0, expected)

    def test_empty_window_role_loss_zero(self, rng):
        cfg = tiny_config()
        model = init_model(cfg, seed=0)
        memory = model.encode(random_encoder_tokens(rng, cfg))
        dec, cat_t, role_t, frame_t, valid, role_valid = token_batch(cfg, events=())
        assert not role_valid.any()
        out = model.decode_teacher_forced(memory, dec)
        _, parts = compute_loss(out, cat_t, role_t, frame_t, valid, role_valid)
        assert parts["role"] == 0.0
        assert parts["category"] > 0.0

    def test_perfect_predictions_drive_loss_to_zero(self):
        # hand-build confident logits and check the loss collapses
        from actionseq.model import HeadOutputs
        from actionseq.nn import Tensor

        cat_t = np.array([[2, 9]])
        role_t = np.array([[5, 0]])
        frame_t = np.array([[3, 21]])
        valid = np.ones((1, 2), dtype=bool)
        role_valid = np.array([[True, False]])
        big = 60.0
        cat_logits = np.zeros((1, 2, 10), dtype=np.float32)
        role_logits = np.zeros((1, 2, 26), dtype=np.float32)
        frame_logits = np.zeros((1, 2, 22), dtype=np.float32)
        for j in range(2):
            cat_logits[0, j, cat_t[0, j]] = big
            role_logits[0, j, role_t[0, j]] = big
            frame_logits[0, j, frame_t[0, j]] = big
        out = HeadOutputs(Tensor(cat_logits), Tensor(role_logits), Tensor(frame_logits))
        total, _ = compute_loss(out, cat_t, role_t, frame_t, valid, role_valid)
        assert total.item() < 1e-6


def test_full_loss_gradients_sampled(rng):
    cfg = tiny_config()
    model = init_model(cfg, seed=0)
    enc = random_encoder_tokens(rng, cfg)
    dec, cat_t, role_t, frame_t, valid, role_valid = token_batch(cfg)

    def loss_fn():
        memory = model.encode(enc)
        out = model.decode_teacher_forced(memory, dec)
        total, _ = compute_loss(out, cat_t, role_t, frame_t, valid, role_valid)
        return total

    tensors = [p.tensor for p in model.parameters()]
    rep = grad_check_sampled(loss_fn, tensors, n_samples=60, rng=rng, tolerance=5e-3)
    assert rep.passed, rep
