import numpy as np
import pytest

from sta_lstm.errors import ContractError, DimensionError
from sta_lstm.model import AttentionTrace, ModelShape, STAModel, forward, predict, zero_model
from sta_lstm.training import init_params

from helpers import make_seq, ref_plain_forward, ref_sta_forward, cell_arrays


def test_model_shape_validation():
    with pytest.raises(ContractError):
        ModelShape(joints=0, classes=2)
    with pytest.raises(ContractError):
        ModelShape(joints=2, classes=2, main_layers=0)
    with pytest.raises(ContractError):
        ModelShape(joints=2, classes=2, dropout=1.0)
    shape = ModelShape(joints=5, classes=3)
    assert shape.input_dim == 15
    assert shape.attn_size == shape.hidden


def test_named_parameters_partition(tiny_model):
    names = [n for n, _ in tiny_model.named_parameters()]
    assert len(names) == len(set(names))
    assert len(names) == 17 + 15 + 12 * 2 + 2
    groups = tiny_model.parameter_groups()
    assert set(groups) == {"spatial", "temporal", "main"}
    regrouped = sorted(n for items in groups.values() for n, _ in items)
    assert regrouped == sorted(names)
    assert any(n == "proj.w" for n, _ in groups["main"])


def test_weight_tensors_exclude_biases(tiny_model):
    weights = tiny_model.weight_tensors()
    named = dict(tiny_model.named_parameters())
    weight_ids = {id(w) for w in weights}
    for name, t in named.items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf.startswith("b"):
            assert id(t) not in weight_ids, name
        else:
            assert id(t) in weight_ids, name


def test_zero_scores_give_uniform_and_tiebreak_to_zero(rng):
    model = zero_model(ModelShape(joints=3, classes=2, hidden=4, temporal_bypass=True))
    seq = make_seq(rng.normal(size=(4, 3, 3)))
    scores, probs, _ = forward(model, seq)
    assert np.array_equal(scores.data, [0.0, 0.0])
    assert np.array_equal(probs.data, [0.5, 0.5])
    assert predict(model, seq) == 0


def test_temporal_bypass_plain_sum(rng):
    # zero main stack pins every per-frame projection to proj_b
    model = zero_model(ModelShape(joints=2, classes=2, hidden=3, temporal_bypass=True))
    model.proj_b.data[:] = [1.0, -2.0]
    seq = make_seq(rng.normal(size=(3, 2, 3)))
    scores, _, trace = forward(model, seq)
    assert np.allclose(scores.data, [3.0, -6.0])
    assert all(b.data == 1.0 for b in trace.betas)


def test_full_replay_equivalence_all_modes(rng):
    for trial, (sb, tb) in enumerate([(False, False), (True, False), (False, True), (True, True)]):
        shape = ModelShape(
            joints=4, classes=3, hidden=5, attn_hidden=4, main_layers=3,
            spatial_bypass=sb, temporal_bypass=tb, dropout=0.0,
        )
        model = init_params(shape, 20 + trial)
        frames = rng.normal(size=(7, 4, 3))
        seq = make_seq(frames)
        scores, probs, trace = forward(model, seq)
        r_scores, r_probs, r_alphas, r_betas = ref_sta_forward(model, frames, 7)
        assert np.abs(scores.data - r_scores).max() < 1e-12
        assert np.abs(probs.data - r_probs).max() < 1e-12
        assert np.abs(trace.alpha_array() - r_alphas).max() < 1e-12
        assert np.abs(trace.beta_array() - r_betas).max() < 1e-12


def test_double_bypass_bit_identical_to_plain_reference(rng):
    shape = ModelShape(
        joints=3, classes=2, hidden=4, main_layers=3,
        spatial_bypass=True, temporal_bypass=True, dropout=0.0,
    )
    model = init_params(shape, 9)
    model.proj_b.data[:] = 0.0
    frames = rng.normal(size=(6, 3, 3))
    scores, probs, _ = forward(model, make_seq(frames))
    layers = [cell_arrays(layer) for layer in model.main]
    r_scores, r_probs = ref_plain_forward(layers, model.proj_w.data, model.proj_b.data, frames, 6)
    assert np.array_equal(scores.data, r_scores)
    assert np.array_equal(probs.data, r_probs)


def test_probabilities_normalized(rng):
    model = init_params(ModelShape(joints=3, classes=4, hidden=5, main_layers=2, dropout=0.0), 2)
    for _ in range(5):
        _, probs, _ = forward(model, make_seq(rng.normal(size=(4, 3, 3))))
        assert abs(probs.data.sum() - 1.0) < 1e-12
        assert (probs.data > 0).all()


def test_beta_scaling_invariance(rng):
    model = init_params(ModelShape(joints=3, classes=3, hidden=4, main_layers=2, dropout=0.0), 8)
    frames = rng.normal(size=(6, 3, 3))
    seq = make_seq(frames)
    scores1, _, trace1 = forward(model, seq)
    assert trace1.beta_array().max() > 0  # a live gate, otherwise scaling proves nothing
    gamma = 3.7
    for t in (model.temporal.w_x, model.temporal.w_h, model.temporal.b):
        t.data *= gamma
    scores2, _, trace2 = forward(model, seq)
    assert np.allclose(trace2.beta_array(), gamma * trace1.beta_array(), rtol=1e-12, atol=1e-15)
    assert np.allclose(scores2.data, gamma * scores1.data, rtol=1e-12, atol=1e-15)
    assert predict(model, seq) == int(np.argmax(scores1.data))


def test_padded_frames_contribute_nothing(rng):
    model = init_params(ModelShape(joints=3, classes=2, hidden=4, main_layers=2, dropout=0.0), 5)
    frames = rng.normal(size=(4, 3, 3))
    padded = np.concatenate([frames, np.full((3, 3, 3), 1e6)])
    a = forward(model, make_seq(frames))
    b = forward(model, make_seq(padded, valid_len=4))
    assert np.array_equal(a[0].data, b[0].data)
    assert len(b[2].alphas) == 4


def test_forward_validations(rng):
    model = init_params(ModelShape(joints=3, classes=2, hidden=4, main_layers=1, dropout=0.5), 0)
    frames = rng.normal(size=(4, 3, 3))
    with pytest.raises(ContractError):
        forward(model, make_seq(frames, valid_len=4), training=True, rng=None)
    with pytest.raises(DimensionError):
        forward(model, make_seq(rng.normal(size=(4, 5, 3))))
    bad = make_seq(frames)
    bad.valid_len = 0
    with pytest.raises(ContractError):
        forward(model, bad)
    bad.valid_len = 9
    with pytest.raises(ContractError):
        forward(model, bad)


def test_trace_arrays(rng):
    model = init_params(ModelShape(joints=4, classes=2, hidden=3, main_layers=1, dropout=0.0), 0)
    _, _, trace = forward(model, make_seq(rng.normal(size=(5, 4, 3))))
    assert isinstance(trace, AttentionTrace)
    assert trace.alpha_array().shape == (5, 4)
    assert trace.beta_array().shape == (5,)


def test_shape_round_trip(tiny_model):
    shape = tiny_model.shape()
    rebuilt = zero_model(shape)
    assert [n for n, _ in rebuilt.named_parameters()] == [n for n, _ in tiny_model.named_parameters()]
    for (_, a), (_, b) in zip(rebuilt.named_parameters(), tiny_model.named_parameters()):
        assert a.data.shape == b.data.shape


def test_dropout_affects_training_forward_only(rng):
    model = init_params(ModelShape(joints=3, classes=2, hidden=4, main_layers=2, dropout=0.5), 4)
    seq = make_seq(rng.normal(size=(5, 3, 3)))
    base, _, _ = forward(model, seq)
    again, _, _ = forward(model, seq)
    assert np.array_equal(base.data, again.data)
    trained, _, _ = forward(model, seq, training=True, rng=np.random.default_rng(0))
    assert not np.array_equal(base.data, trained.data)
