"""Neural surrogate of the MOMMI transfer matrix.

The model maps quantized pad indices to a symmetric complex k x k matrix:

    features = [cos(omega * eps + phi), eps]
    y        = MLP(features)            # 2k^2 outputs, real block then imaginary block
    W        = (Y + Y^T) / 2            # per block

It provides exact Jacobians ``dW/deps`` (forward mode) which replace the
device gradient during hybrid training.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .optbench.adam import AdamState, adam_step

HIDDEN = (256, 256, 256, 128, 128)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class QuantConfig:
    bits: int

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("bits must be >= 0")

    @property
    def levels(self):
        return 2**self.bits if self.bits else 1


def quantize(eps, q):
    """Uniform quantization of ``eps`` in [0, 1] to ``q.bits`` bits.

    Returns ``(levels, values)``. ``bits == 0`` freezes everything at level 0.
    """
    eps = np.asarray(eps, dtype=float)
    if np.any(~np.isfinite(eps)) or np.any(eps < 0) or np.any(eps > 1):
        raise ValueError("eps must lie in [0, 1]")
    bits = q.bits if isinstance(q, QuantConfig) else int(q)
    if bits == 0:
        zeros = np.zeros(eps.shape)
        return zeros.astype(np.int64), zeros
    top = 2**bits - 1
    # eps >= 0, so floor(x + 0.5) is round-half-away-from-zero
    levels = np.floor(eps * top + 0.5).astype(np.int64)
    return levels, levels / top


def _sym(y, k):
    y = y.reshape(y.shape[:-1] + (2, k, k))
    return (0.5 * (y + np.swapaxes(y, -1, -2))).reshape(y.shape[:-3] + (2 * k * k,))


@dataclass(eq=False)
class SurrogateModel:
    k: int
    d: int
    omega: np.ndarray
    phi: np.ndarray
    weights: list  # [(W (out, in), b (out,)), ...]
    trained: bool = False

    @classmethod
    def init(cls, k, d, seed=0, hidden=HIDDEN):
        rng = np.random.default_rng(seed)
        sizes = (2 * d,) + tuple(hidden) + (2 * k * k,)
        weights = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1 / np.sqrt(fan_in)
            weights.append(
                (rng.uniform(-bound, bound, (fan_out, fan_in)), rng.uniform(-bound, bound, fan_out))
            )
        return cls(k, d, np.full(d, np.pi), np.zeros(d), weights)

    # -- forward / backward ------------------------------------------------

    def _forward(self, eps_q):
        x = np.concatenate([np.cos(self.omega * eps_q + self.phi), eps_q], axis=-1)
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(self.weights):
            h = h @ w.T + b
            if i < last:
                h = np.tanh(h)
            acts.append(h)
        return acts

    def raw_output(self, eps_q):
        """Symmetrized real vector of length ``2k^2``: real parts then imaginary parts."""
        eps_q = np.asarray(eps_q, dtype=float)
        return _sym(self._forward(eps_q)[-1], self.k)

    def __call__(self, eps_q):
        return predict(self, eps_q)

    def jacobian(self, eps_q):
        return jacobian_wrt_eps(self, eps_q)

    def params(self):
        p = {"omega": self.omega, "phi": self.phi}
        for i, (w, b) in enumerate(self.weights):
            p[f"w{i}"] = w
            p[f"b{i}"] = b
        return p

    def set_params(self, p):
        self.omega = p["omega"]
        self.phi = p["phi"]
        self.weights = [(p[f"w{i}"], p[f"b{i}"]) for i in range(len(self.weights))]

    def loss_and_grads(self, eps_q, target):
        """Mean squared error over all real components, and its parameter gradients."""
        acts = self._forward(eps_q)
        out = _sym(acts[-1], self.k)
        diff = out - target
        n = diff.size
        loss = float(np.sum(diff**2) / n)
        g = _sym(2 * diff / n, self.k)  # symmetrization is self-adjoint
        grads = {}
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            w, _ = self.weights[i]
            if i < last:
                g = g * (1 - acts[i + 1] ** 2)
            grads[f"w{i}"] = g.T @ acts[i]
            grads[f"b{i}"] = g.sum(axis=0)
            g = g @ w
        arg = self.omega * eps_q + self.phi
        g_cos = -g[:, : self.d] * np.sin(arg)
        grads["omega"] = np.sum(g_cos * eps_q, axis=0)
        grads["phi"] = np.sum(g_cos, axis=0)
        return loss, grads

    # -- serialization -------------------------------------------------------

    def to_dict(self):
        return {
            "k": self.k,
            "d": self.d,
            "omega": self.omega.tolist(),
            "phi": self.phi.tolist(),
            "trained": self.trained,
            "layers": [
                {"rows": w.shape[0], "cols": w.shape[1], "weights": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in self.weights
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        weights = [
            (
                np.array(layer["weights"], dtype=float).reshape(layer["rows"], layer["cols"]),
                np.array(layer["bias"], dtype=float),
            )
            for layer in doc["layers"]
        ]
        return cls(
            doc["k"],
            doc["d"],
            np.array(doc["omega"], dtype=float),
            np.array(doc["phi"], dtype=float),
            weights,
            bool(doc.get("trained", False)),
        )


def features(eps_q, model):
    eps_q = np.asarray(eps_q, dtype=float)
    return np.concatenate([np.cos(model.omega * eps_q + model.phi), eps_q], axis=-1)


def predict(model, eps_q):
    """Predicted symmetric transfer matrix; leading batch dims are kept."""
    y = model.raw_output(eps_q)
    k = model.k
    y = y.reshape(y.shape[:-1] + (2, k, k))
    return y[..., 0, :, :] + 1j * y[..., 1, :, :]


def jacobian_wrt_eps(model, eps_q):
    """Derivative of the ``2k^2`` symmetrized outputs w.r.t. each pad index.

    Shape ``(..., 2k^2, d)``. Forward mode: the primal activation and the d
    tangents are stacked into one matrix so each layer is a single GEMM.
    """
    eps_q = np.asarray(eps_q, dtype=float)
    batch = eps_q.shape[:-1]
    d = model.d
    e = eps_q.reshape(-1, d)
    n = e.shape[0]
    arg = model.omega * e + model.phi
    idx = np.arange(d)
    z = np.zeros((n, d + 1, 2 * d))
    z[:, 0, :d] = np.cos(arg)
    z[:, 0, d:] = e
    z[:, 1 + idx, idx] = -np.sin(arg) * model.omega
    z[:, 1 + idx, d + idx] = 1.0
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(model.weights):
        z = (z.reshape(n * (d + 1), -1) @ w.T).reshape(n, d + 1, -1)
        z[:, 0] += b
        if i < last:
            z[:, 0] = np.tanh(z[:, 0])
            z[:, 1:] *= (1 - z[:, 0] ** 2)[:, None, :]
    t = _sym(z[:, 1:], model.k)  # (n, d, 2k^2)
    return np.swapaxes(t, -1, -2).reshape(batch + (2 * model.k**2, d))


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 256
    lr: float = 1e-3
    val_fraction: float = 0.2
    seed: int = 0


@dataclass
class TrainReport:
    final_mse: float
    epochs_run: int
    loss_curve: list = field(default_factory=list)
    train_mse: float = float("nan")


def matrices_to_targets(w):
    w = np.asarray(w)
    n = w.shape[0]
    return np.concatenate([w.real.reshape(n, -1), w.imag.reshape(n, -1)], axis=1)


def complex_mse(model, eps_q, w):
    """Mean of ``|W_pred - W_true|^2`` over complex entries."""
    return float(np.mean(np.abs(predict(model, eps_q) - w) ** 2))


def train_surrogate(model, eps_q, w_truth, config=None):
    """Fit the surrogate to ``(eps_q, W)`` pairs with Adam and cosine decay.

    An 80/20 split is drawn from a seeded shuffle; the report tracks the
    held-out complex-entry MSE after every epoch.
    """
    config = config or TrainConfig()
    eps_q = np.asarray(eps_q, dtype=float)
    w_truth = np.asarray(w_truth)
    n = eps_q.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    if eps_q.shape[1] != model.d or w_truth.shape[1:] != (model.k, model.k):
        raise ValueError("dataset shape does not match the model")
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(n)
    n_val = int(np.floor(config.val_fraction * n))
    val_idx, train_idx = order[:n_val], order[n_val:]
    if n_val == 0:
        val_idx = train_idx
    targets = matrices_to_targets(w_truth)

    steps_per_epoch = int(np.ceil(len(train_idx) / config.batch_size))
    state = AdamState.create(model.params(), lr=config.lr, total_steps=config.epochs * steps_per_epoch)
    curve = []
    for _ in range(config.epochs):
        perm = train_idx[rng.permutation(len(train_idx))]
        for s in range(steps_per_epoch):
            batch = perm[s * config.batch_size : (s + 1) * config.batch_size]
            _, grads = model.loss_and_grads(eps_q[batch], targets[batch])
            model.set_params(adam_step(state, model.params(), grads))
        curve.append(complex_mse(model, eps_q[val_idx], w_truth[val_idx]))
    model.trained = True
    return TrainReport(
        final_mse=curve[-1],
        epochs_run=config.epochs,
        loss_curve=curve,
        train_mse=complex_mse(model, eps_q[train_idx], w_truth[train_idx]),
    )


def train_on_lut(lut, seed=0, config=None):
    """Build and train a surrogate on every entry of a LUT."""
    model = SurrogateModel.init(lut.k, lut.d, seed=seed)
    report = train_surrogate(model, lut.eps_values(), lut.matrices, config or TrainConfig(seed=seed))
    return model, report
