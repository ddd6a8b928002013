"""Multi-path MOMMI tensor core: composition, block unfolding and hybrid gradients.

A core with ``P`` parallel paths of ``C`` cascaded MOMMIs computes

    W = gain / P * sum_p  U[p,C-1] S[p,C-1] ... U[p,1] S[p,1] U[p,0]

where ``U[p,c] = device(eps[p,c])`` and ``S`` are diagonal modulators with
``|S| <= 1``. The first factor acts on the input first.

Gradients use the convention ``dL = Re(sum(conj(G) * dW))`` for a real loss
``L`` of a complex matrix, i.e. ``G = dL/dRe(W) + 1j * dL/dIm(W)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .complexmat import DimensionError
from .dpe import quantize

VARIANTS = ("log", "univ", "custom")
UNIV_ALPHA = 0.7


def univ_sizes(k, alpha=UNIV_ALPHA):
    """(P, C) for the near-universal variant: P rounded, C rounded up."""
    r = (1 + math.sqrt(1 + 6 * alpha * k)) / 3
    return int(math.floor(r + 0.5)), int(math.ceil(r))


@dataclass(frozen=True)
class PtcConfig:
    k: int
    d: int
    P: int
    C: int
    variant: str = "custom"

    def __post_init__(self):
        if self.k < 2 or self.d < 1 or self.P < 1 or self.C < 1:
            raise ValueError(f"invalid PTC sizes {self}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "log" and (self.P, self.C) != (2, int(math.floor(math.log2(self.k)))):
            raise ValueError("log variant needs P=2, C=floor(log2 k)")
        if self.variant == "univ" and ((self.P, self.C) != univ_sizes(self.k) or self.d != self.k):
            raise ValueError("univ variant needs d=k and (P, C) from the 70% parameter target")

    @classmethod
    def log(cls, k, d=None):
        return cls(k, k if d is None else d, 2, int(math.floor(math.log2(k))), "log")

    @classmethod
    def univ(cls, k):
        P, C = univ_sizes(k)
        return cls(k, k, P, C, "univ")

    @classmethod
    def single(cls, k, d=None):
        return cls(k, k if d is None else d, 1, 1, "custom")

    @classmethod
    def make(cls, variant, k, d=None, P=None, C=None):
        if variant == "log":
            return cls.log(k, d)
        if variant == "univ":
            return cls.univ(k)
        return cls(k, k if d is None else d, P or 1, C or 1, "custom")

    @property
    def label(self):
        if self.variant == "custom":
            return f"P{self.P}C{self.C}-{self.k}"
        return f"{self.variant}-{self.k}"

    def to_dict(self):
        return {"k": self.k, "d": self.d, "P": self.P, "C": self.C, "variant": self.variant}


def param_count(cfg: PtcConfig):
    """Latent real variables: ``P*C*d`` indices plus two per modulator entry."""
    return cfg.P * cfg.C * cfg.d + 2 * cfg.P * (cfg.C - 1) * cfg.k


@dataclass
class PtcParams:
    """Latent variables of one core (or a batch of cores along leading axes)."""

    eps: np.ndarray  # (..., P, C, d) in [0, 1]
    sigma_mag: np.ndarray  # (..., P, C-1, k) in [0, 1]
    sigma_phase: np.ndarray  # (..., P, C-1, k)
    gain: np.ndarray  # (...)

    NAMES = ("eps", "sigma_mag", "sigma_phase", "gain")

    @property
    def sigma(self):
        return self.sigma_mag * np.exp(1j * self.sigma_phase)

    @classmethod
    def random(cls, cfg: PtcConfig, rng, batch=()):
        batch = tuple(batch)
        s_shape = batch + (cfg.P, cfg.C - 1, cfg.k)
        return cls(
            rng.uniform(0.0, 1.0, batch + (cfg.P, cfg.C, cfg.d)),
            rng.uniform(0.5, 1.0, s_shape),
            rng.uniform(-np.pi, np.pi, s_shape),
            np.ones(batch),
        )

    def check(self, cfg: PtcConfig):
        b = np.shape(self.gain)
        if self.eps.shape != b + (cfg.P, cfg.C, cfg.d):
            raise DimensionError(f"eps shape {self.eps.shape} does not match {cfg}")
        if self.sigma_mag.shape != b + (cfg.P, cfg.C - 1, cfg.k) or self.sigma_phase.shape != self.sigma_mag.shape:
            raise DimensionError(f"sigma shape {self.sigma_mag.shape} does not match {cfg}")

    def as_dict(self):
        return {n: getattr(self, n) for n in self.NAMES}

    @classmethod
    def from_mapping(cls, m):
        return cls(*(np.asarray(m[n], dtype=float) for n in cls.NAMES))

    def take(self, i):
        return PtcParams(*(np.asarray(getattr(self, n))[i] for n in self.NAMES))

    def to_dict(self, cfg: PtcConfig):
        return {
            "cfg": cfg.to_dict(),
            "gain": float(self.gain),
            "eps": self.eps.tolist(),
            "sigma": [
                {"mag": float(m), "phase": float(p)}
                for m, p in zip(self.sigma_mag.ravel(), self.sigma_phase.ravel())
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        c = doc["cfg"]
        cfg = PtcConfig(c["k"], c["d"], c["P"], c["C"], c["variant"])
        shape = (cfg.P, cfg.C - 1, cfg.k)
        mag = np.array([s["mag"] for s in doc["sigma"]], dtype=float).reshape(shape)
        phase = np.array([s["phase"] for s in doc["sigma"]], dtype=float).reshape(shape)
        params = cls(np.array(doc["eps"], dtype=float).reshape(cfg.P, cfg.C, cfg.d), mag, phase, np.array(float(doc["gain"])))
        return cfg, params


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("noise sigma must be >= 0")


def device_inputs(params: PtcParams, bits=None):
    """Pad values actually applied to the devices (quantized when ``bits`` is set)."""
    if bits is None:
        return params.eps
    return quantize(params.eps, bits)[1]


@dataclass
class Tape:
    """Forward-pass intermediates reused by :func:`hybrid_step`."""

    eps_q: np.ndarray
    U: np.ndarray  # (..., P, C, k, k)
    prefix: list  # per cascade stage, (..., P, k, k)
    paths_mean: np.ndarray  # (..., k, k), without gain
    weight: np.ndarray  # (..., k, k)


def forward(cfg: PtcConfig, params: PtcParams, device, bits=None):
    params.check(cfg)
    eps_q = device_inputs(params, bits)
    U = np.asarray(device(eps_q))
    if U.shape[-2:] != (cfg.k, cfg.k):
        raise DimensionError(f"device returns {U.shape[-2:]} matrices, config needs k={cfg.k}")
    S = params.sigma
    M = U[..., 0, :, :]
    prefix = [M]
    for c in range(1, cfg.C):
        M = U[..., c, :, :] @ (S[..., c - 1, :, None] * M)
        prefix.append(M)
    mean = M.mean(axis=-3)
    return Tape(eps_q, U, prefix, mean, np.asarray(params.gain)[..., None, None] * mean)


def compose_weight(cfg: PtcConfig, params: PtcParams, device, bits=None):
    """Composed k x k transfer matrix of the core (batch dims preserved)."""
    return forward(cfg, params, device, bits).weight


def hybrid_step(cfg: PtcConfig, params: PtcParams, grad_w, surrogate, device, bits=None, tape=None):
    """Parameter gradients given ``dL/dW`` of the composed matrix.

    Forward values and the chain rule through the cascade use the
    ground-truth device matrices; only ``dU/deps`` comes from the surrogate
    Jacobian, evaluated at the (quantized) device inputs with a
    straight-through quantizer. Modulator and gain gradients are exact.
    """
    if surrogate.k != cfg.k or surrogate.d != cfg.d:
        raise DimensionError(f"surrogate is ({surrogate.k}, {surrogate.d}), config needs ({cfg.k}, {cfg.d})")
    if tape is None:
        tape = forward(cfg, params, device, bits)
    G = np.asarray(grad_w, dtype=complex)
    if G.shape != tape.weight.shape:
        raise DimensionError(f"gradient shape {G.shape} does not match weight {tape.weight.shape}")
    gain = np.asarray(params.gain)
    S = params.sigma
    k = cfg.k

    g_gain = np.sum(np.real(np.conj(G) * tape.paths_mean), axis=(-2, -1))
    Gp = np.broadcast_to(((gain / cfg.P)[..., None, None] * G)[..., None, :, :], tape.prefix[-1].shape)
    gU = [None] * cfg.C
    gS = np.zeros(S.shape, dtype=complex)
    for c in range(cfg.C - 1, 0, -1):
        n_c = S[..., c - 1, :, None] * tape.prefix[c - 1]
        gU[c] = Gp @ np.conj(np.swapaxes(n_c, -1, -2))
        gN = np.conj(np.swapaxes(tape.U[..., c, :, :], -1, -2)) @ Gp
        gS[..., c - 1, :] = np.sum(gN * np.conj(tape.prefix[c - 1]), axis=-1)
        Gp = np.conj(S[..., c - 1, :, None]) * gN
    gU[0] = Gp
    gU = np.stack(gU, axis=-3)  # (..., P, C, k, k)

    if bits == 0:
        g_eps = np.zeros_like(params.eps)
    else:
        J = surrogate.jacobian(tape.eps_q)  # (..., P, C, 2k^2, d)
        gvec = np.concatenate(
            [gU.real.reshape(gU.shape[:-2] + (k * k,)), gU.imag.reshape(gU.shape[:-2] + (k * k,))], axis=-1
        )
        g_eps = np.einsum("...r,...rd->...d", gvec, J)

    phase = np.exp(1j * params.sigma_phase)
    return {
        "eps": g_eps,
        "sigma_mag": np.real(np.conj(gS) * phase),
        "sigma_phase": np.real(np.conj(gS) * 1j * S),
        "gain": g_gain,
    }


def unfold_output(z, k):
    """Interleave real and imaginary parts block-wise: ``[Re z1, Im z1, Re z2, ...]``."""
    z = np.asarray(z)
    if z.shape[-1] % k:
        raise DimensionError(f"length {z.shape[-1]} is not a multiple of the block size {k}")
    blocks = z.reshape(z.shape[:-1] + (-1, k))
    return np.stack([blocks.real, blocks.imag], axis=-2).reshape(z.shape[:-1] + (2 * z.shape[-1],))


def unfold_matrix(w, k):
    """Real ``M x N`` matrix equivalent to a complex ``M/2 x N`` matrix under unfolding."""
    w = np.asarray(w)
    rows, cols = w.shape[-2:]
    if rows % k:
        raise DimensionError(f"{rows} rows are not a multiple of the block size {k}")
    blocks = w.reshape(w.shape[:-2] + (rows // k, k, cols))
    return np.stack([blocks.real, blocks.imag], axis=-3).reshape(w.shape[:-2] + (2 * rows, cols))


def fold_matrix(t, k):
    """Inverse of :func:`unfold_matrix`."""
    t = np.asarray(t)
    rows, cols = t.shape[-2:]
    if rows % (2 * k):
        raise DimensionError(f"{rows} rows are not a multiple of 2k={2 * k}")
    blocks = t.reshape(t.shape[:-2] + (rows // (2 * k), 2, k, cols))
    return (blocks[..., 0, :, :] + 1j * blocks[..., 1, :, :]).reshape(t.shape[:-2] + (rows // 2, cols))


def effective_real_matrix(w):
    """``[Re W; Im W]``: the (2k) x k real map a k x k complex core performs with unfolding."""
    w = np.asarray(w)
    if w.shape[-1] != w.shape[-2]:
        raise DimensionError(f"expected a square matrix, got {w.shape}")
    return unfold_matrix(w, w.shape[-1])


def differential_detection(w_plus, w_minus, x):
    """``|W+ x| - |W- x|``; not linear in ``x``."""
    w_plus = np.asarray(w_plus)
    w_minus = np.asarray(w_minus)
    if w_plus.shape != w_minus.shape:
        raise DimensionError(f"shape mismatch {w_plus.shape} vs {w_minus.shape}")
    x = np.asarray(x)
    if x.shape[-1] != w_plus.shape[-1]:
        raise DimensionError(f"input length {x.shape[-1]} does not match {w_plus.shape}")
    return np.abs(x @ w_plus.T) - np.abs(x @ w_minus.T)


def instances_for_real_rows(rows, k, mode):
    """Core instances needed to produce ``rows`` real outputs from k inputs."""
    if mode == "unfold":
        return math.ceil(rows / (2 * k))
    if mode == "diff":
        return 2 * math.ceil(rows / k)
    raise ValueError(f"unknown mode {mode!r}")


def apply_noise(params: PtcParams, spec: NoiseSpec):
    """Gaussian perturbation of every pad index, clamped to [0, 1]; modulators untouched."""
    if spec.sigma == 0:
        return replace(params, eps=params.eps.copy())
    rng = np.random.default_rng(spec.seed)
    noisy = params.eps + rng.normal(0.0, spec.sigma, params.eps.shape)
    return replace(params, eps=np.clip(noisy, 0.0, 1.0))
