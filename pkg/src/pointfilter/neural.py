"""Stacked recurrent regression network trained online on target histories.

Each layer keeps four gates (input ``i``, transform ``j``, forget ``f`` and
output ``o``) and updates its memory cell and hidden state as::

    c = c_prev * f + i * j
    h = tanh(o) * c

Note the hidden state applies ``tanh`` to the output gate rather than to the
cell, unlike the textbook LSTM. ``i``, ``f``, ``o`` use the logistic sigmoid,
``j`` uses ``tanh`` and the output layer is affine.

Per layer, the gate weights are stored stacked as one ``(4H, n_in + H)``
matrix ``[A | B]`` in gate order i, j, f, o, so a time step costs one
matrix-vector product. :meth:`ModelTuple.gate` returns the per-gate blocks.
Gradients are derived by hand for this architecture; there is no autodiff.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

GATES = ("i", "j", "f", "o")
FORMAT_TAG = "pointfilter-model"
FORMAT_VERSION = 1


class TrainingDiverged(FloatingPointError):
    """Raised when a loss, gradient or parameter stops being finite."""


@dataclass(frozen=True, eq=False)
class ModelTuple:
    weights: tuple
    biases: tuple
    out_weight: np.ndarray
    out_bias: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(np.asarray(w, dtype=float) for w in self.weights))
        object.__setattr__(self, "biases", tuple(np.asarray(b, dtype=float) for b in self.biases))
        object.__setattr__(self, "out_weight", np.asarray(self.out_weight, dtype=float))
        object.__setattr__(self, "out_bias", np.asarray(self.out_bias, dtype=float))
        H = self.hidden
        n_in = self.input_dim
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (4 * H, n_in + H) or b.shape != (4 * H,):
                raise ValueError(f"layer {layer} has inconsistent shapes {w.shape}, {b.shape}")
            n_in = H
        if self.out_weight.shape != (self.output_dim, H) or self.out_bias.shape != (self.output_dim,):
            raise ValueError("output layer shapes are inconsistent")

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def hidden(self) -> int:
        return self.out_weight.shape[1]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1] - self.hidden

    @property
    def output_dim(self) -> int:
        return self.out_weight.shape[0]

    def gate(self, layer: int, name: str):
        """Return ``(A, B, b)`` for one gate of one layer (views, not copies)."""
        k = GATES.index(name)
        H = self.hidden
        w = self.weights[layer]
        n_in = w.shape[1] - H
        rows = slice(k * H, (k + 1) * H)
        return w[rows, :n_in], w[rows, n_in:], self.biases[layer][rows]

    def params(self) -> list:
        """All parameter arrays in a fixed order: per-layer weights, per-layer biases, output."""
        return [*self.weights, *self.biases, self.out_weight, self.out_bias]

    def with_params(self, params) -> "ModelTuple":
        L = self.num_layers
        params = list(params)
        return ModelTuple(tuple(params[:L]), tuple(params[L:2 * L]), params[2 * L], params[2 * L + 1])

    def copy(self) -> "ModelTuple":
        return self.with_params([p.copy() for p in self.params()])

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.params())

    @classmethod
    def zeros(cls, d: int, hidden: int, num_layers: int, d_out: int | None = None) -> "ModelTuple":
        d_out = d if d_out is None else d_out
        weights, biases = [], []
        n_in = d
        for _ in range(num_layers):
            weights.append(np.zeros((4 * hidden, n_in + hidden)))
            biases.append(np.zeros(4 * hidden))
            n_in = hidden
        return cls(tuple(weights), tuple(biases), np.zeros((d_out, hidden)), np.zeros(d_out))

    @classmethod
    def random(cls, d: int, hidden: int, num_layers: int, rng=None, scale: float = 0.08,
               d_out: int | None = None) -> "ModelTuple":
        """Uniform initialisation in ``[-scale, scale]`` for every weight and bias."""
        rng = np.random.default_rng(rng)
        z = cls.zeros(d, hidden, num_layers, d_out)
        return z.with_params([rng.uniform(-scale, scale, size=p.shape) for p in z.params()])


def init_model(cfg, rng=None) -> "ModelTuple":
    rng = cfg.rng_seed if rng is None else rng
    return ModelTuple.random(cfg.d, cfg.hidden_units, cfg.num_layers, rng=rng, scale=cfg.init_scale)


@dataclass(frozen=True, eq=False)
class RecurrentState:
    h: tuple
    c: tuple

    @classmethod
    def zeros(cls, m: ModelTuple) -> "RecurrentState":
        H = m.hidden
        return cls(tuple(np.zeros(H) for _ in range(m.num_layers)),
                   tuple(np.zeros(H) for _ in range(m.num_layers)))


@dataclass(frozen=True, eq=False)
class OptimizerState:
    first: tuple
    second: tuple
    step: int = 0

    @classmethod
    def zeros_like(cls, m: ModelTuple) -> "OptimizerState":
        return cls(tuple(np.zeros_like(p) for p in m.params()),
                   tuple(np.zeros_like(p) for p in m.params()), 0)


def _activate(z: np.ndarray, H: int) -> np.ndarray:
    g = expit(z)
    g[..., H:2 * H] = np.tanh(z[..., H:2 * H])
    return g


def forward_step(m: ModelTuple, state: RecurrentState, x) -> tuple:
    """Advance every layer by one time step and return ``(new_state, output)``."""
    inp = np.asarray(x, dtype=float)
    if inp.shape != (m.input_dim,):
        raise ValueError(f"input must have shape ({m.input_dim},), got {inp.shape}")
    H = m.hidden
    hs, cs = [], []
    for w, b, h_prev, c_prev in zip(m.weights, m.biases, state.h, state.c):
        g = _activate(w @ np.concatenate([inp, h_prev]) + b, H)
        i, j, f, o = g[:H], g[H:2 * H], g[2 * H:3 * H], g[3 * H:]
        c = c_prev * f + i * j
        h = np.tanh(o) * c
        hs.append(h)
        cs.append(c)
        inp = h
    y = m.out_weight @ inp + m.out_bias
    if not np.isfinite(y).all():
        raise TrainingDiverged("non-finite network output")
    return RecurrentState(tuple(hs), tuple(cs)), y


def _forward(m: ModelTuple, xs: np.ndarray):
    """Run a whole input sequence through the stack from a zero state.

    Returns per-step outputs ``(T, d_out)`` and, per layer, the cached
    ``(inputs, gates, tanh_o, cells, hiddens)`` needed by the backward pass.
    Layers are processed one at a time over the full sequence so the input
    projection is a single matrix product per layer.
    """
    T = xs.shape[0]
    H = m.hidden
    inp = xs
    caches = []
    for w, b in zip(m.weights, m.biases):
        n_in = inp.shape[1]
        pre = inp @ w[:, :n_in].T + b
        rec = w[:, n_in:]
        gates = np.empty((T, 4 * H))
        cells = np.empty((T, H))
        hiddens = np.empty((T, H))
        h = np.zeros(H)
        c = np.zeros(H)
        for t in range(T):
            g = _activate(pre[t] + rec @ h, H)
            gates[t] = g
            c = c * g[2 * H:3 * H] + g[:H] * g[H:2 * H]
            h = np.tanh(g[3 * H:]) * c
            cells[t] = c
            hiddens[t] = h
        caches.append((inp, gates, np.tanh(gates[:, 3 * H:]), cells, hiddens))
        inp = hiddens
    return inp @ m.out_weight.T + m.out_bias, caches


def predict_next(m: ModelTuple, seq) -> np.ndarray:
    """Output of the network after consuming every row of ``seq``."""
    seq = np.atleast_2d(np.asarray(seq, dtype=float))
    ys, _ = _forward(m, seq)
    y = ys[-1]
    if not np.isfinite(y).all():
        raise TrainingDiverged("non-finite prediction")
    return y


def _check_sequence(seq) -> np.ndarray:
    seq = np.asarray(seq, dtype=float)
    if seq.ndim != 2 or seq.shape[0] < 2:
        raise ValueError("need a state matrix with at least two rows")
    return seq


def sequence_loss(m: ModelTuple, seq) -> float:
    """Mean over steps of the squared error of each one-step-ahead prediction."""
    seq = _check_sequence(seq)
    ys, _ = _forward(m, seq[:-1])
    return float(np.sum((ys - seq[1:]) ** 2) / (seq.shape[0] - 1))


def loss_and_gradients(m: ModelTuple, seq, weights=None):
    """Loss and its exact gradient with respect to every parameter.

    ``weights`` optionally scales each step's squared error (default 1).
    The gradient comes back as a :class:`ModelTuple` with matching shapes.
    """
    seq = _check_sequence(seq)
    T = seq.shape[0] - 1
    H = m.hidden
    ys, caches = _forward(m, seq[:-1])
    err = ys - seq[1:]
    w_t = np.ones(T) if weights is None else np.asarray(weights, dtype=float)
    loss = float(np.sum(w_t[:, None] * err ** 2) / T)

    dy = 2.0 * w_t[:, None] * err / T
    top = caches[-1][4]
    d_out_w = dy.T @ top
    d_out_b = dy.sum(axis=0)
    d_h_above = dy @ m.out_weight

    d_weights = [None] * m.num_layers
    d_biases = [None] * m.num_layers
    buf = np.empty(4 * H)
    quad = buf.reshape(4, H)
    for layer in range(m.num_layers - 1, -1, -1):
        inp, gates, tanh_o, cells, hiddens = caches[layer]
        w = m.weights[layer]
        n_in = inp.shape[1]
        rec_t = w[:, n_in:].T
        i, j, f, o = gates[:, :H], gates[:, H:2 * H], gates[:, 2 * H:3 * H], gates[:, 3 * H:]
        c_prev = np.vstack([np.zeros((1, H)), cells[:-1]])
        # d(pre-activation) = [dc*ki, dc*kj, dc*kf, dh*ko]
        k = np.hstack([j * i * (1 - i),
                       i * (1 - j * j),
                       c_prev * f * (1 - f),
                       cells * (1 - tanh_o * tanh_o) * o * (1 - o)])
        d_pre = np.empty((T, 4 * H))
        dh_next = np.zeros(H)
        dc_next = np.zeros(H)
        for t in range(T - 1, -1, -1):
            dh = d_h_above[t] + dh_next
            dc = dh * tanh_o[t] + dc_next
            quad[:3] = dc
            quad[3] = dh
            np.multiply(k[t], buf, out=d_pre[t])
            dh_next = rec_t @ d_pre[t]
            dc_next = dc * f[t]
        dw = np.empty_like(w)
        dw[:, :n_in] = d_pre.T @ inp
        dw[:, n_in:] = d_pre[1:].T @ hiddens[:-1]
        d_weights[layer] = dw
        d_biases[layer] = d_pre.sum(axis=0)
        d_h_above = d_pre @ w[:, :n_in]

    grads = ModelTuple(tuple(d_weights), tuple(d_biases), d_out_w, d_out_b)
    if not (np.isfinite(loss) and grads.is_finite()):
        raise TrainingDiverged("non-finite loss or gradient")
    return loss, grads


def bptt_gradients(m: ModelTuple, seq) -> ModelTuple:
    return loss_and_gradients(m, seq)[1]


def adam_step(m: ModelTuple, opt: OptimizerState, grads: ModelTuple, cfg) -> tuple:
    """One bias-corrected Adam update; returns new ``(model, optimizer_state)``."""
    params, g_list = m.params(), grads.params()
    if len(params) != len(g_list) or len(opt.first) != len(params):
        raise ValueError("model, gradient and optimizer state do not line up")
    t = opt.step + 1
    b1, b2 = cfg.beta1, cfg.beta2
    step_size = cfg.learning_rate / (1.0 - b1 ** t)
    bc2 = 1.0 - b2 ** t
    new_p, new_m, new_v = [], [], []
    for p, g, m1, v1 in zip(params, g_list, opt.first, opt.second):
        if p.shape != g.shape or p.shape != m1.shape:
            raise ValueError("shape mismatch in adam_step")
        m1 = b1 * m1 + (1.0 - b1) * g
        v1 = b2 * v1 + (1.0 - b2) * (g * g)
        new_p.append(p - step_size * m1 / (np.sqrt(v1 / bc2) + cfg.adam_epsilon))
        new_m.append(m1)
        new_v.append(v1)
    return m.with_params(new_p), OptimizerState(tuple(new_m), tuple(new_v), t)


def train_online(m_prev: ModelTuple, opt: OptimizerState, seq, epochs, cfg) -> tuple:
    """Fine-tune ``m_prev`` on one target history.

    ``epochs=None`` picks ``cfg.epochs_init`` for a model that has never been
    trained (optimizer step 0) and ``cfg.epochs_finetune`` otherwise.
    Raises :class:`TrainingDiverged` if the loss or gradients blow up; the
    caller keeps the previous model in that case.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.ndim != 2 or seq.shape[0] < 2:
        raise ValueError("history too short to train on")
    if epochs is None:
        epochs = cfg.epochs_init if opt.step == 0 else cfg.epochs_finetune
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    m = m_prev
    for _ in range(epochs):
        _, grads = loss_and_gradients(m, seq)
        m, opt = adam_step(m, opt, grads, cfg)
    if not m.is_finite():
        raise TrainingDiverged("parameters became non-finite")
    return m, opt


def save_model(path, m: ModelTuple, opt: OptimizerState | None = None) -> None:
    """Write a versioned text checkpoint (row-major matrices, exact float repr)."""
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}",
             f"layers {m.num_layers} hidden {m.hidden} input {m.input_dim} output {m.output_dim}",
             f"optimizer {opt.step if opt is not None else -1}"]

    def block(name, a):
        a = np.atleast_2d(a) if a.ndim == 1 else a
        lines.append(f"{name} {a.shape[0]} {a.shape[1]}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in a)

    groups = [("param", m.params())]
    if opt is not None:
        groups += [("first", opt.first), ("second", opt.second)]
    for prefix, arrays in groups:
        for idx, a in enumerate(arrays):
            block(f"{prefix}.{idx}", a)
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> tuple:
    """Read a checkpoint written by :func:`save_model`; returns ``(model, optimizer_or_None)``."""
    lines = Path(path).read_text().splitlines()
    tag, version = lines[0].split()
    if tag != FORMAT_TAG or int(version) != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint header: {lines[0]!r}")
    hdr = lines[1].split()
    L, H, d_in, d_out = int(hdr[1]), int(hdr[3]), int(hdr[5]), int(hdr[7])
    opt_step = int(lines[2].split()[1])
    template = ModelTuple.zeros(d_in, H, L, d_out).params()
    arrays = {}
    pos = 3
    while pos < len(lines):
        name, rows, cols = lines[pos].split()
        rows, cols = int(rows), int(cols)
        data = np.array([[float(v) for v in lines[pos + 1 + r].split()] for r in range(rows)])
        arrays[name] = data.reshape(rows, cols)
        pos += 1 + rows

    def collect(prefix):
        return [arrays[f"{prefix}.{k}"].reshape(t.shape) for k, t in enumerate(template)]

    m = ModelTuple.zeros(d_in, H, L, d_out).with_params(collect("param"))
    opt = None
    if opt_step >= 0:
        opt = OptimizerState(tuple(collect("first")), tuple(collect("second")), opt_step)
    return m, opt
