"""Teacher-to-core weight mapping by hybrid-gradient Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..complexmat import DimensionError
from ..dpe import ConfigurationError
from ..ptc import PtcConfig, PtcParams, fold_matrix, forward, hybrid_step
from .adam import AdamState, adam_step

MAP_STEPS = 3000
LR_EPS = 1e-3
LR_SIGMA = 1e-2


@dataclass
class FitResult:
    distance: float
    steps_run: int
    loss_curve: list = field(default_factory=list, repr=False)
    params: PtcParams | None = field(default=None, repr=False)

    @property
    def fidelity(self):
        return 1.0 - min(self.distance, 1.0)


class CachedJacobian:
    """Memoizes surrogate Jacobians per quantized input row."""

    def __init__(self, surrogate):
        self.surrogate = surrogate
        self.k = surrogate.k
        self.d = surrogate.d
        self._cache = {}

    def jacobian(self, eps_q):
        eps_q = np.asarray(eps_q, dtype=float)
        rows = eps_q.reshape(-1, self.d)
        keys = [r.tobytes() for r in rows]
        missing = {}
        for i, key in enumerate(keys):
            if key not in self._cache and key not in missing:
                missing[key] = i
        if missing:
            fresh = self.surrogate.jacobian(rows[list(missing.values())])
            for key, jac in zip(missing, fresh):
                self._cache[key] = jac
        out = np.stack([self._cache[key] for key in keys])
        return out.reshape(eps_q.shape[:-1] + out.shape[-2:])


def _check_surrogate(surrogate, cfg):
    if not getattr(surrogate, "trained", True):
        raise ConfigurationError("surrogate has not been trained")
    if surrogate.k != cfg.k or surrogate.d != cfg.d:
        raise ConfigurationError(f"surrogate is ({surrogate.k}, {surrogate.d}), config needs ({cfg.k}, {cfg.d})")


def init_params(cfg, n, seed, task_offset=0):
    """Per-task random starts drawn from streams keyed by ``(seed, task index)``."""
    parts = [PtcParams.random(cfg, np.random.default_rng([seed, task_offset + i, 1])) for i in range(n)]
    return PtcParams.from_mapping({name: np.stack([getattr(p, name) for p in parts]) for name in PtcParams.NAMES})


def fit_matrices(
    targets,
    cfg: PtcConfig,
    surrogate,
    device,
    steps=MAP_STEPS,
    seed=0,
    bits=None,
    lr_eps=LR_EPS,
    lr_sigma=LR_SIGMA,
    init: PtcParams | None = None,
    task_offset=0,
):
    """Fit a batch of real ``(2k, k)`` targets independently, in lock-step.

    Minimizes the relative Frobenius distance between the unfolded composed
    matrix and each target. Returns one :class:`FitResult` per target with
    the best parameters seen.
    """
    targets = np.asarray(targets, dtype=float)
    if targets.ndim != 3 or targets.shape[1:] != (2 * cfg.k, cfg.k):
        raise DimensionError(f"targets must be (n, {2 * cfg.k}, {cfg.k}), got {targets.shape}")
    _check_surrogate(surrogate, cfg)
    n = targets.shape[0]
    tc = fold_matrix(targets, cfg.k)
    norms = np.sum(np.abs(tc) ** 2, axis=(-2, -1))
    if np.any(norms == 0):
        raise ZeroDivisionError("target matrix is all-zero")
    jac = CachedJacobian(surrogate) if bits is not None and bits > 0 else surrogate

    params = init if init is not None else init_params(cfg, n, seed, task_offset)
    if init is None:
        base = forward(cfg, params, device, bits).paths_mean
        num = np.sum(np.real(np.conj(base) * tc), axis=(-2, -1))
        den = np.sum(np.abs(base) ** 2, axis=(-2, -1))
        params.gain = np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0)

    lrs = {"eps": 0.0 if bits == 0 else lr_eps, "sigma_mag": lr_sigma, "sigma_phase": lr_sigma, "gain": lr_sigma}
    p = params.as_dict()
    state = AdamState.create(p, lrs, total_steps=steps, bounds={"eps": (0.0, 1.0), "sigma_mag": (0.0, 1.0)})

    best = np.full(n, np.inf)
    best_p = {name: np.array(v, copy=True) for name, v in p.items()}
    curve = np.empty((steps + 1, n))
    for t in range(steps + 1):
        current = PtcParams.from_mapping(p)
        tape = forward(cfg, current, device, bits)
        resid = tape.weight - tc
        loss = np.sum(np.abs(resid) ** 2, axis=(-2, -1)) / norms
        improved = loss < best
        if np.any(improved):
            best = np.where(improved, loss, best)
            for name in best_p:
                best_p[name][improved] = p[name][improved]
        curve[t] = best
        if t == steps:
            break
        grads = hybrid_step(cfg, current, 2 * resid / norms[:, None, None], jac, device, bits, tape=tape)
        p = adam_step(state, p, grads)

    best_params = PtcParams.from_mapping(best_p)
    return [
        FitResult(float(best[i]), steps, curve[:, i].tolist(), best_params.take(i)) for i in range(n)
    ]


def fit_matrix(target, cfg: PtcConfig, surrogate, device, steps=MAP_STEPS, seed=0, **kw):
    """Single-target :func:`fit_matrices`."""
    return fit_matrices(np.asarray(target, dtype=float)[None], cfg, surrogate, device, steps, seed, **kw)[0]
