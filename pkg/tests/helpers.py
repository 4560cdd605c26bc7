"""Independent reference implementations the tests use as oracles.

Everything here computes with plain numpy arrays and Python loops, never
with the package's tensor type, so an engine bug cannot leak into the
expected values. The step functions mirror the documented update equations
with the same operand association, which keeps reference forwards
bit-comparable where the tests demand it.
"""

import numpy as np


def loop_matmul(a, b):
    """Triple-loop 2-D matrix product."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            acc = 0.0
            for k in range(a.shape[1]):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def ref_sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def ref_softmax(v):
    e = np.exp(v - v.max())
    return e / e.sum()


def cell_arrays(params):
    """Snapshot a cell's tensors into a plain dict of float64 arrays."""
    return {name: t.data.copy() for name, t in params.named()}


def ref_lstm_step(w, x, h, c):
    """One cell update on plain arrays; ``w`` is a dict keyed like the cell fields."""
    i = ref_sigmoid(w["w_xi"] @ x + w["w_hi"] @ h + w["b_i"])
    f = ref_sigmoid(w["w_xf"] @ x + w["w_hf"] @ h + w["b_f"])
    g = np.tanh(w["w_xc"] @ x + w["w_hc"] @ h + w["b_c"])
    o = ref_sigmoid(w["w_xo"] @ x + w["w_ho"] @ h + w["b_o"])
    c_next = f * c + i * g
    h_next = o * np.tanh(c_next)
    return h_next, c_next


def ref_lstm_states(w, xs):
    """All (h, c) pairs from a zero start over a list of input vectors."""
    h = np.zeros(w["w_xi"].shape[0])
    c = np.zeros_like(h)
    states = []
    for x in xs:
        h, c = ref_lstm_step(w, x, h, c)
        states.append((h, c))
    return states


def ref_plain_forward(layers, proj_w, proj_b, frames, t_valid):
    """Stacked LSTM over flattened frames, summed class scores, softmax.

    The no-gate special case: every frame's projection enters the class-score
    sum with weight one.
    """
    d = frames.shape[1] * frames.shape[2]
    hs = [np.zeros(w["w_xi"].shape[0]) for w in layers]
    cs = [np.zeros(w["w_xi"].shape[0]) for w in layers]
    scores = None
    for t in range(t_valid):
        x = frames[t].reshape(d)
        for i, w in enumerate(layers):
            hs[i], cs[i] = ref_lstm_step(w, x, hs[i], cs[i])
            x = hs[i]
        z = proj_w @ x + proj_b
        scores = z if scores is None else scores + z
    return scores, ref_softmax(scores)


def ref_spatial_scores(w_xs, w_hs, b_s, u_s, b_us, x, h_prev):
    """Per-joint selection scores via explicit index loops."""
    width = w_xs.shape[0]
    hidden = np.zeros(width)
    for i in range(width):
        acc = b_s[i]
        for j in range(x.size):
            acc += w_xs[i, j] * x[j]
        for j in range(h_prev.size):
            acc += w_hs[i, j] * h_prev[j]
        hidden[i] = np.tanh(acc)
    k = u_s.shape[0]
    scores = np.zeros(k)
    for i in range(k):
        acc = b_us[i]
        for j in range(width):
            acc += u_s[i, j] * hidden[j]
        scores[i] = acc
    return scores


def ref_temporal_preacts(cell, w_x, w_h, b, frames, t_valid):
    """Frame-gate pre-activations (before the ReLU), gate read before advance."""
    d = frames.shape[1] * frames.shape[2]
    h = np.zeros(cell["w_xi"].shape[0])
    c = np.zeros_like(h)
    pre = []
    for t in range(t_valid):
        x = frames[t].reshape(d)
        pre.append(float(w_x @ x + w_h @ h + b))
        h, c = ref_lstm_step(cell, x, h, c)
    return np.asarray(pre)


def ref_sta_forward(model, frames, t_valid):
    """Full forward replay on plain arrays, mirroring the documented wiring.

    Returns (scores, probs, alphas, betas). Gates are computed from each
    subnetwork's previous-frame state before that subnetwork advances, both
    subnetworks read the raw frame, and bypassed gates contribute ones.
    """
    d = frames.shape[1] * frames.shape[2]
    k = frames.shape[1]
    sp, tp = model.spatial, model.temporal
    sp_cell, tp_cell = cell_arrays(sp.lstm), cell_arrays(tp.lstm)
    main_cells = [cell_arrays(layer) for layer in model.main]
    h_sp = np.zeros(sp.lstm.hidden_size)
    c_sp = np.zeros_like(h_sp)
    h_tp = np.zeros(tp.lstm.hidden_size)
    c_tp = np.zeros_like(h_tp)
    hs = [np.zeros(cell["w_xi"].shape[0]) for cell in main_cells]
    cs = [np.zeros_like(h) for h in hs]
    alphas, betas = [], []
    scores = None
    for t in range(t_valid):
        x = frames[t].reshape(d)
        if model.spatial_bypass:
            alpha = np.ones(k)
            x_in = x
        else:
            raw = ref_spatial_scores(
                sp.w_xs.data, sp.w_hs.data, sp.b_s.data, sp.u_s.data, sp.b_us.data, x, h_sp
            )
            alpha = ref_softmax(raw)
            x_in = (frames[t] * alpha[:, None]).reshape(d)
            h_sp, c_sp = ref_lstm_step(sp_cell, x, h_sp, c_sp)
        inp = x_in
        for i, cell in enumerate(main_cells):
            hs[i], cs[i] = ref_lstm_step(cell, inp, hs[i], cs[i])
            inp = hs[i]
        z = model.proj_w.data @ inp + model.proj_b.data
        if model.temporal_bypass:
            beta = 1.0
            contrib = z
        else:
            beta = max(float(tp.w_x.data @ x + tp.w_h.data @ h_tp + tp.b.data), 0.0)
            h_tp, c_tp = ref_lstm_step(tp_cell, x, h_tp, c_tp)
            contrib = beta * z
        scores = contrib.copy() if scores is None else scores + contrib
        alphas.append(alpha)
        betas.append(beta)
    return scores, ref_softmax(scores), np.asarray(alphas), np.asarray(betas)


def numeric_grad(f, arr, eps=1e-5):
    """Central-difference gradient of the scalar ``f()`` w.r.t. ``arr`` in place."""
    flat = arr.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        f_plus = f()
        flat[i] = saved - eps
        f_minus = f()
        flat[i] = saved
        grad[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad.reshape(arr.shape)


def rel_err(analytic, numeric):
    """max over coordinates of |a - n| / max(1, |a|, |n|)."""
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    if a.size == 0:
        return 0.0
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom))


def make_seq(frames, label=0, valid_len=None, seq_id="t"):
    """Build a SkeletonSequence without importing at module scope."""
    from sta_lstm import SkeletonSequence

    frames = np.asarray(frames, dtype=np.float64)
    return SkeletonSequence(
        frames=frames,
        label=label,
        valid_len=frames.shape[0] if valid_len is None else valid_len,
        seq_id=seq_id,
    )
