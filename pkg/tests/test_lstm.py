import numpy as np
import pytest

from sta_lstm.autodiff import Tensor, backward, grad_check
from sta_lstm.errors import ContractError, DimensionError
from sta_lstm.recurrent import (
    LstmParams,
    LstmState,
    RnnParams,
    lstm_layer,
    lstm_stack,
    lstm_step,
    rnn_step,
    stack_step,
)

from helpers import cell_arrays, ref_lstm_step, numeric_grad, rel_err

# frozen from hand evaluation: zero params, c=1 gives every gate 0.5 and
# the candidate cell tanh(0)=0, so c' = 0.5*1 and h' = 0.5*tanh(0.5)
H_PRIME = 0.23105857863000487


def test_zero_params_zero_state_stays_zero(rng):
    p = LstmParams.zeros(3, 2)
    s = lstm_step(p, Tensor(rng.normal(size=3)), LstmState.zeros(2))
    assert np.array_equal(s.h.data, [0.0, 0.0])
    assert np.array_equal(s.c.data, [0.0, 0.0])


def test_zero_params_unit_cell_frozen_values():
    p = LstmParams.zeros(1, 1)
    state = LstmState(Tensor(np.zeros(1)), Tensor(np.ones(1)))
    s = lstm_step(p, Tensor([0.7]), state)
    assert s.c.data[0] == 0.5
    assert abs(s.h.data[0] - H_PRIME) < 1e-15


def test_step_matches_reference(rng):
    p = LstmParams.gaussian(4, 3, rng)
    x = rng.normal(size=4)
    h0, c0 = rng.normal(size=3), rng.normal(size=3)
    s = lstm_step(p, Tensor(x), LstmState(Tensor(h0), Tensor(c0)))
    rh, rc = ref_lstm_step(cell_arrays(p), x, h0, c0)
    assert np.array_equal(s.h.data, rh)
    assert np.array_equal(s.c.data, rc)


def test_hidden_bounded(rng):
    p = LstmParams.gaussian(3, 4, rng, std=2.0)
    s = LstmState.zeros(4)
    for _ in range(20):
        s = lstm_step(p, Tensor(rng.normal(size=3) * 5), s)
        assert (np.abs(s.h.data) < 1.0).all()


def test_step_gradients_match_finite_differences(rng):
    p = LstmParams.gaussian(3, 2, rng)
    x = rng.normal(size=3)
    worst = 0.0
    for name, t in p.named():
        def loss():
            s = lstm_step(p, Tensor(x), LstmState.zeros(2))
            return s.h.sum().item()

        for _, q in p.named():
            q.zero_grad()
        backward(lstm_step(p, Tensor(x), LstmState.zeros(2)).h.sum())
        worst = max(worst, rel_err(t.grad, numeric_grad(loss, t.data)))
    assert worst < 1e-5


def test_layer_single_frame_reduces_to_step(rng):
    p = LstmParams.gaussian(3, 2, rng)
    x = rng.normal(size=3)
    states = lstm_layer(p, [Tensor(x)])
    direct = lstm_step(p, Tensor(x), LstmState.zeros(2))
    assert np.array_equal(states[0].h.data, direct.h.data)
    assert np.array_equal(states[0].c.data, direct.c.data)


def test_layer_zero_params_all_zero(rng):
    p = LstmParams.zeros(3, 2)
    states = lstm_layer(p, [Tensor(rng.normal(size=3)) for _ in range(4)])
    for s in states:
        assert np.array_equal(s.h.data, np.zeros(2))


def test_layer_rejects_empty():
    with pytest.raises(ContractError):
        lstm_layer(LstmParams.zeros(2, 2), [])


def test_state_chaining_equivalence(rng):
    p = LstmParams.gaussian(3, 4, rng)
    xs = [Tensor(rng.normal(size=3)) for _ in range(6)]
    full = lstm_layer(p, xs)
    first = lstm_layer(p, xs[:3])
    resumed = lstm_layer(p, xs[3:], init=first[-1])
    assert np.array_equal(full[-1].h.data, resumed[-1].h.data)
    assert np.array_equal(full[-1].c.data, resumed[-1].c.data)


def test_stack_one_layer_equals_layer(rng):
    p = LstmParams.gaussian(3, 4, rng)
    xs = [Tensor(rng.normal(size=3)) for _ in range(5)]
    tops = lstm_stack([p], xs)
    states = lstm_layer(p, xs)
    for top, s in zip(tops, states):
        assert np.array_equal(top.data, s.h.data)


def test_stack_training_flag_without_dropout_is_identity(rng):
    layers = [LstmParams.gaussian(3, 4, rng), LstmParams.gaussian(4, 4, rng)]
    xs = [Tensor(rng.normal(size=3)) for _ in range(4)]
    train = lstm_stack(layers, xs, dropout_rate=0.0, training=True)
    infer = lstm_stack(layers, xs, dropout_rate=0.0, training=False)
    for a, b in zip(train, infer):
        assert np.array_equal(a.data, b.data)


def test_stack_dropout_only_between_layers(rng):
    # with one layer there is no inter-layer boundary, so dropout is a no-op
    p = LstmParams.gaussian(3, 4, rng)
    xs = [Tensor(rng.normal(size=3)) for _ in range(4)]
    dropped = lstm_stack([p], xs, dropout_rate=0.9, training=True, rng=np.random.default_rng(1))
    plain = lstm_stack([p], xs)
    for a, b in zip(dropped, plain):
        assert np.array_equal(a.data, b.data)


def test_stack_dropout_perturbs_deeper_layers(rng):
    layers = [LstmParams.gaussian(3, 4, rng), LstmParams.gaussian(4, 4, rng)]
    xs = [Tensor(rng.normal(size=3)) for _ in range(4)]
    a = lstm_stack(layers, xs, dropout_rate=0.5, training=True, rng=np.random.default_rng(1))
    b = lstm_stack(layers, xs)
    assert any(not np.array_equal(x.data, y.data) for x, y in zip(a, b))
    with pytest.raises(ContractError):
        lstm_stack(layers, xs, dropout_rate=0.5, training=True, rng=None)


def test_stack_shape_validation(rng):
    layers = [LstmParams.gaussian(3, 4, rng), LstmParams.gaussian(5, 4, rng)]
    with pytest.raises(DimensionError):
        lstm_stack(layers, [Tensor(rng.normal(size=3))])
    with pytest.raises(ContractError):
        lstm_stack([], [Tensor(np.zeros(3))])


def test_stack_step_agrees_with_stack(rng):
    layers = [LstmParams.gaussian(3, 4, rng), LstmParams.gaussian(4, 4, rng)]
    xs = [Tensor(rng.normal(size=3)) for _ in range(3)]
    tops = lstm_stack(layers, xs)
    states = [LstmState.zeros(4), LstmState.zeros(4)]
    for t, x in enumerate(xs):
        top, states = stack_step(layers, x, states)
        assert np.array_equal(top.data, tops[t].data)


def test_full_capture_dimensions_run(rng):
    # three layers of 100 on a 90-dim frame vector
    layers = [LstmParams.gaussian(90, 100, rng)] + [LstmParams.gaussian(100, 100, rng) for _ in range(2)]
    xs = [Tensor(rng.normal(size=90)) for _ in range(3)]
    tops = lstm_stack(layers, xs)
    assert tops[-1].shape == (100,)


def test_stack_gradient_check_small(rng):
    layers = [LstmParams.gaussian(6, 4, rng), LstmParams.gaussian(4, 4, rng), LstmParams.gaussian(4, 4, rng)]
    frames = rng.normal(size=(5, 6))

    def f(_):
        tops = lstm_stack(layers, [Tensor(x) for x in frames])
        acc = tops[0].sum()
        for top in tops[1:]:
            acc = acc + top.sum()
        return acc

    # the probe tensor is a live parameter of the stack, so perturbing its
    # data re-evaluates the true forward
    assert grad_check(f, layers[1].w_hc) < 1e-5
    assert grad_check(f, layers[0].b_f) < 1e-5


def test_rnn_baseline(rng):
    p = RnnParams.gaussian(3, 2, rng)
    x, h = rng.normal(size=3), rng.normal(size=2)
    out = rnn_step(p, Tensor(x), Tensor(h))
    assert np.allclose(out.data, np.tanh(p.w_x.data @ x + p.w_h.data @ h + p.b.data))


def test_param_draw_order_is_stable():
    a = LstmParams.gaussian(3, 2, np.random.default_rng(5))
    b = LstmParams.gaussian(3, 2, np.random.default_rng(5))
    for (na, ta), (nb, tb) in zip(a.named("x."), b.named("x.")):
        assert na == nb
        assert np.array_equal(ta.data, tb.data)
    assert np.array_equal(a.b_i.data, np.zeros(2))
