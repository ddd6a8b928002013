"""Two-layer photonic classifier on synthetic blobs, trained by distillation.

A digital teacher ``Linear -> ReLU -> Linear`` is trained first. Each
weight matrix is then tiled onto k x k cores, either with block unfolding
(one core yields a (2k) x k real block) or with differential detection
(two cores yield a k x k block, ``|W+ x| - |W- x|``). Cores are initialized
by fitting the teacher blocks and then fine-tuned with
``CE + eta * beta^2 * KL(p_T || p_S)`` at temperature ``beta``; biases stay
digital.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..ptc import PtcConfig, PtcParams, fold_matrix, forward, hybrid_step, unfold_matrix
from .adam import AdamState, adam_step
from .fitting import fit_matrices

KD_ETA = 0.1
KD_BETA = 2.0
LR_SIGMA_FT = 3e-4
LR_EPS_FT = 4e-4
KD_EPOCHS = 50
DIVERGE_FACTOR = 10.0
DIVERGE_PATIENCE = 100
_ABS_GUARD = 1e-12


@dataclass(frozen=True)
class BlobSpec:
    """Isotropic unit-variance blobs centred at ``separation * e_c``."""

    dim: int = 8
    classes: int = 4
    n_train: int = 2000
    n_test: int = 500
    separation: float = 3.0

    def generate(self, seed):
        if self.classes > self.dim:
            raise ValueError("need dim >= classes for axis-aligned centres")
        rng = np.random.default_rng([seed, 0, 3])
        centres = self.separation * np.eye(self.classes, self.dim)
        n = self.n_train + self.n_test
        y = rng.integers(0, self.classes, n)
        x = centres[y] + rng.standard_normal((n, self.dim))
        return (x[: self.n_train], y[: self.n_train]), (x[self.n_train :], y[self.n_train :])


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits, y):
    z = logits - logits.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    return float(-logp[np.arange(len(y)), y].mean())


def accuracy(logits, y):
    return float(np.mean(np.argmax(logits, axis=-1) == y))


# -- digital teacher ---------------------------------------------------------


@dataclass
class Mlp:
    weights: list  # [(out, in) matrix, bias]

    @classmethod
    def init(cls, dims, rng):
        return cls([
            (rng.normal(0.0, math.sqrt(2.0 / a), (b, a)), np.zeros(b)) for a, b in zip(dims[:-1], dims[1:])
        ])

    def forward(self, x):
        acts = [x]
        h = x
        for i, (w, b) in enumerate(self.weights):
            h = h @ w.T + b
            if i < len(self.weights) - 1:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return acts

    def __call__(self, x):
        return self.forward(x)[-1]


def train_teacher(dims, train, seed, epochs=100, batch=64, lr=1e-2):
    x, y = train
    rng = np.random.default_rng([seed, 0, 4])
    net = Mlp.init(dims, rng)
    params = {f"w{i}": w for i, (w, _) in enumerate(net.weights)} | {f"b{i}": b for i, (_, b) in enumerate(net.weights)}
    steps = epochs * math.ceil(len(x) / batch)
    state = AdamState.create(params, lr, total_steps=steps)
    n_layers = len(net.weights)
    for _ in range(epochs):
        perm = rng.permutation(len(x))
        for s in range(0, len(x), batch):
            idx = perm[s : s + batch]
            acts = net.forward(x[idx])
            g = softmax(acts[-1])
            g[np.arange(len(idx)), y[idx]] -= 1
            g /= len(idx)
            grads = {}
            for i in range(n_layers - 1, -1, -1):
                grads[f"w{i}"] = g.T @ acts[i]
                grads[f"b{i}"] = g.sum(axis=0)
                g = g @ net.weights[i][0]
                if i > 0:
                    g = g * (acts[i] > 0)
            params = adam_step(state, params, grads)
            net.weights = [(params[f"w{i}"], params[f"b{i}"]) for i in range(n_layers)]
    return net


# -- photonic layers ---------------------------------------------------------


def _pad(w, rows, cols):
    out = np.zeros((rows, cols))
    out[: w.shape[0], : w.shape[1]] = w
    return out


@dataclass
class PhotonicLinear:
    """Real ``out x in`` linear map tiled onto k x k cores.

    ``params`` carries one core per leading index. Unfold mode lays cores
    out as ``(row blocks of 2k, column blocks of k)``; diff mode as
    ``(row blocks of k, column blocks of k, 2)`` with the last axis
    selecting the ``+`` and ``-`` arm.
    """

    out_dim: int
    in_dim: int
    mode: str
    cfg: PtcConfig
    params: PtcParams
    bias: np.ndarray
    grid: tuple = field(default=())

    @property
    def k(self):
        return self.cfg.k

    def block_targets(self, w):
        k = self.k
        if self.mode == "unfold":
            rb, cb = math.ceil(self.out_dim / (2 * k)), math.ceil(self.in_dim / k)
            wp = _pad(w, rb * 2 * k, cb * k)
            # a single core's unfolded rows are [Re W x; Im W x], so each 2k slab is a target as is
            return wp.reshape(rb, 2 * k, cb, k).transpose(0, 2, 1, 3).reshape(-1, 2 * k, k), (rb, cb)
        rb, cb = math.ceil(self.out_dim / k), math.ceil(self.in_dim / k)
        wp = _pad(w, rb * k, cb * k)
        blocks = wp.reshape(rb, k, cb, k).transpose(0, 2, 1, 3)
        zeros = np.zeros_like(blocks)
        plus = np.concatenate([np.maximum(blocks, 0), zeros], axis=-2)
        minus = np.concatenate([np.maximum(-blocks, 0), zeros], axis=-2)
        return np.stack([plus, minus], axis=2).reshape(-1, 2 * k, k), (rb, cb)

    def core_weights(self, device):
        tape = forward(self.cfg, self.params, device)
        return tape, tape.weight  # (n_cores, k, k)

    def apply(self, x, device):
        """Output and a closure mapping ``dL/dout`` to ``(dL/dx, grad_w per core, dL/dbias)``."""
        k = self.k
        tape, w = self.core_weights(device)
        rb, cb = self.grid
        n = x.shape[0]
        xp = _pad(x, n, cb * k).reshape(n, cb, k)
        if self.mode == "unfold":
            t = unfold_matrix(w, k).reshape(rb, cb, 2 * k, k)
            y = np.einsum("rcok,nck->nro", t, xp).reshape(n, -1)[:, : self.out_dim] + self.bias

            def back(g):
                gp = _pad(g, n, rb * 2 * k).reshape(n, rb, 2 * k)
                gt = np.einsum("nro,nck->rcok", gp, xp).reshape(-1, 2 * k, k)
                gx = np.einsum("nro,rcok->nck", gp, t).reshape(n, -1)[:, : self.in_dim]
                return gx, fold_matrix(gt, k), g.sum(axis=0)

            return y, tape, back
        wc = w.reshape(rb, cb, 2, k, k)
        z = np.einsum("rcsok,nck->nrsco", wc, xp)  # complex fields per block
        a = np.abs(z)
        blk = a[:, :, 0] - a[:, :, 1]  # (n, rb, cb, k)
        y = blk.sum(axis=2).reshape(n, -1)[:, : self.out_dim] + self.bias

        def back(g):
            gp = _pad(g, n, rb * k).reshape(n, rb, 1, 1, k)
            sign = np.array([1.0, -1.0])[None, None, :, None, None]
            gz = gp * sign * z / np.maximum(a, _ABS_GUARD)  # dL/dRe z + j dL/dIm z
            gw = np.einsum("nrsco,nck->rcsok", gz, xp).reshape(-1, k, k)
            gx = np.real(np.einsum("nrsco,rcsok->nck", np.conj(gz), wc)).reshape(n, -1)[:, : self.in_dim]
            return gx, gw, g.sum(axis=0)

        return y, tape, back


def map_layer(w, b, mode, cfg, surrogate, device, seed, steps, task_offset):
    layer = PhotonicLinear(w.shape[0], w.shape[1], mode, cfg, None, b.copy())
    targets, layer.grid = layer.block_targets(w)
    res = fit_matrices(targets, cfg, surrogate, device, steps=steps, seed=seed, task_offset=task_offset)
    layer.params = PtcParams.from_mapping({n: np.stack([getattr(r.params, n) for r in res]) for n in PtcParams.NAMES})
    return layer, [r.distance for r in res]


class DivergenceMonitor:
    """Flags NaN/Inf losses, or losses above ``factor`` x the first one for ``patience`` steps in a row."""

    def __init__(self, factor=DIVERGE_FACTOR, patience=DIVERGE_PATIENCE):
        self.factor, self.patience = factor, patience
        self.initial = None
        self.streak = 0

    def update(self, loss):
        if not np.isfinite(loss):
            return True
        if self.initial is None:
            self.initial = loss
        self.streak = self.streak + 1 if loss > self.factor * self.initial else 0
        return self.streak >= self.patience


@dataclass
class OnnResult:
    mode: str
    accuracy: float
    teacher_accuracy: float
    mapped_accuracy: float
    loss_curve: list
    diverged: bool
    map_distances: list = field(default_factory=list)


def kd_grad(logits_s, logits_t, y, eta=KD_ETA, beta=KD_BETA):
    """Loss and ``dL/dlogits_S`` of ``CE + eta * beta^2 * KL(p_T || p_S)`` at temperature ``beta``."""
    n = len(y)
    p_s = softmax(logits_s)
    pt_b = softmax(logits_t / beta)
    ps_b = softmax(logits_s / beta)
    kl = np.sum(pt_b * (np.log(np.maximum(pt_b, 1e-300)) - np.log(np.maximum(ps_b, 1e-300))), axis=-1).mean()
    loss = cross_entropy(logits_s, y) + eta * beta**2 * kl
    g = p_s.copy()
    g[np.arange(n), y] -= 1
    g += eta * beta * (ps_b - pt_b)
    return float(loss), g / n


def toy_onn_train(
    mode,
    cfg: PtcConfig,
    surrogate,
    device,
    seed=0,
    spec=BlobSpec(),
    hidden=8,
    epochs=KD_EPOCHS,
    batch=64,
    map_steps=3000,
    teacher=None,
):
    """Teacher, blockwise mapping, then distillation fine-tuning of the photonic student."""
    if mode not in ("unfold", "diff"):
        raise ValueError(f"unknown mode {mode!r}")
    train, test = spec.generate(seed)
    dims = (spec.dim, hidden, spec.classes)
    teacher = teacher or train_teacher(dims, train, seed)
    teacher_acc = accuracy(teacher(test[0]), test[1])
    layers = []
    dists = []
    for i, (w, b) in enumerate(teacher.weights):
        layer, d = map_layer(w, b, mode, cfg, surrogate, device, seed, map_steps, task_offset=1000 * (i + 1))
        layers.append(layer)
        dists += d

    def student(x):
        h = x
        records = []
        for i, layer in enumerate(layers):
            h, tape, back = layer.apply(h, device)
            pre = h
            if i < len(layers) - 1:
                h = np.maximum(h, 0.0)
            records.append((tape, back, pre))
        return h, records

    mapped_acc = accuracy(student(test[0])[0], test[1])

    x, y = train
    t_logits = teacher(x)
    rng = np.random.default_rng([seed, 0, 5])
    steps = epochs * math.ceil(len(x) / batch)
    lrs = {"eps": LR_EPS_FT, "sigma_mag": LR_SIGMA_FT, "sigma_phase": LR_SIGMA_FT, "gain": LR_SIGMA_FT, "bias": LR_SIGMA_FT}
    bounds = {"eps": (0.0, 1.0), "sigma_mag": (0.0, 1.0)}
    states = []
    for layer in layers:
        p = layer.params.as_dict() | {"bias": layer.bias}
        states.append(AdamState.create(p, lrs, total_steps=steps, bounds=bounds))

    curve = []
    diverged = False
    monitor = DivergenceMonitor()
    for _ in range(epochs):
        perm = rng.permutation(len(x))
        for s in range(0, len(x), batch):
            idx = perm[s : s + batch]
            logits, records = student(x[idx])
            loss, g = kd_grad(logits, t_logits[idx], y[idx])
            curve.append(loss)
            if monitor.update(loss):
                diverged = True
                break
            for i in range(len(layers) - 1, -1, -1):
                tape, back, pre = records[i]
                if i < len(layers) - 1:
                    g = g * (pre > 0)
                gx, gw, gb = back(g)
                layer = layers[i]
                grads = hybrid_step(layer.cfg, layer.params, gw, surrogate, device, tape=tape)
                grads["bias"] = gb
                p = adam_step(states[i], layer.params.as_dict() | {"bias": layer.bias}, grads)
                layer.bias = p.pop("bias")
                layer.params = PtcParams.from_mapping(p)
                g = gx
        if diverged:
            break

    if diverged:
        acc = float("nan")
    else:
        out = student(test[0])[0]
        acc = accuracy(out, test[1]) if np.all(np.isfinite(out)) else float("nan")
    return OnnResult(mode, acc, teacher_acc, mapped_acc, curve, diverged, dists)
