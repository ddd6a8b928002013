"""Expressivity, quantization and noise sweeps over Gaussian target ensembles.

Every target and every random start comes from a stream keyed by
``(seed, task index, purpose)``, and targets are fitted in fixed-size
chunks, so results do not depend on how many workers share the load.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..complexmat import rel_frob_distance
from ..ptc import NoiseSpec, PtcConfig, apply_noise, compose_weight, effective_real_matrix
from .fitting import LR_EPS, MAP_STEPS, fit_matrices

ACTIVATION_BITS = 8
# Fits run in lock-step batches of this many targets. The batch height can
# change BLAS rounding, so it is fixed rather than derived from the worker count.
FIT_CHUNK = 25


@dataclass
class BenchReport:
    name: str
    axis_name: str
    axis: list
    mean: list
    std: list
    n: int
    seed: int
    samples: list = field(default_factory=list)  # per axis point, per-sample values
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.mean)):
            raise ValueError("benchmark means must be finite")
        if np.any(np.asarray(self.std) < 0):
            raise ValueError("benchmark std must be >= 0")

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"{self.axis_name},mean,std,n\n")
        for a, m, s in zip(self.axis, self.mean, self.std):
            buf.write(f"{a},{m!r},{s!r},{self.n}\n")
        return buf.getvalue()

    def to_dict(self):
        return {
            "name": self.name,
            "axis_name": self.axis_name,
            "axis": list(self.axis),
            "mean": [float(x) for x in self.mean],
            "std": [float(x) for x in self.std],
            "n": self.n,
            "seed": self.seed,
            "samples": [[float(v) for v in s] for s in self.samples],
            "metadata": self.metadata,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def gaussian_targets(k, n, seed):
    """Standard-normal ``(2k, k)`` real targets, one stream per target."""
    return np.stack([np.random.default_rng([seed, i, 0]).standard_normal((2 * k, k)) for i in range(n)])


def fit_parallel(targets, cfg, surrogate, device, workers=1, chunk=FIT_CHUNK, **kw):
    """:func:`fit_matrices` over fixed-size chunks of targets, optionally on several threads."""
    n = len(targets)
    workers = max(1, int(workers))
    starts = list(range(0, n, chunk))

    def run(s):
        return fit_matrices(targets[s : s + chunk], cfg, surrogate, device, task_offset=s, **kw)

    if workers == 1 or len(starts) == 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, starts))
    return [r for part in parts for r in part]


def _summary(values):
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std())


def expressivity_bench(cfgs, surrogates, device, n_matrices=100, seed=0, steps=MAP_STEPS, workers=1):
    """Mean/std fidelity per configuration on a shared Gaussian ensemble.

    ``surrogates`` maps ``(k, d)`` to a trained surrogate.
    """
    if n_matrices < 1:
        raise ValueError("n_matrices must be >= 1")
    means, stds, samples = [], [], []
    for cfg in cfgs:
        targets = gaussian_targets(cfg.k, n_matrices, seed)
        res = fit_parallel(targets, cfg, surrogates[(cfg.k, cfg.d)], device, workers, steps=steps, seed=seed)
        fid = [r.fidelity for r in res]
        m, s = _summary(fid)
        means.append(m)
        stds.append(s)
        samples.append(fid)
    return BenchReport(
        "expressivity", "design", [c.label for c in cfgs], means, stds, n_matrices, seed, samples,
        {"steps": steps, "configs": [c.to_dict() for c in cfgs]},
    )


def quant_lr(bits, base=LR_EPS):
    """Bit-dependent pad learning rate ``min(base, base * 2^(b-2))``."""
    return min(base, base * 2.0 ** (bits - 2))


def quantization_bench(cfg: PtcConfig, surrogate, device, bits_list=(0, 1, 2, 3, 4, 6, 8), n_matrices=100, seed=0, steps=MAP_STEPS, workers=1):
    """Fidelity against pad bitwidth; ``bits = 0`` freezes the pads at level 0."""
    bits_list = list(bits_list)
    if any(b < 0 or b > 8 for b in bits_list):
        raise ValueError("bitwidths must lie in 0..8")
    targets = gaussian_targets(cfg.k, n_matrices, seed)
    means, stds, samples = [], [], []
    for b in bits_list:
        res = fit_parallel(targets, cfg, surrogate, device, workers, steps=steps, seed=seed, bits=b, lr_eps=quant_lr(b))
        fid = [r.fidelity for r in res]
        m, s = _summary(fid)
        means.append(m)
        stds.append(s)
        samples.append(fid)
    return BenchReport(
        "quantization", "bits", bits_list, means, stds, n_matrices, seed, samples,
        {"steps": steps, "config": cfg.to_dict(), "activation_bits": ACTIVATION_BITS,
         "lr_eps": [quant_lr(b) for b in bits_list]},
    )


def noise_errors(cfg, params, target, device, sigma, n_draws, seed, task):
    """Relative errors of one fitted core under ``n_draws`` pad perturbations."""
    draw_seeds = np.random.default_rng([seed, task, 2]).integers(0, 2**63 - 1, n_draws)
    out = []
    for s in draw_seeds:
        noisy = apply_noise(params, NoiseSpec(sigma, int(s)))
        w = effective_real_matrix(compose_weight(cfg, noisy, device))
        out.append(rel_frob_distance(w, target))
    return np.array(out)


def noise_bench(cfg: PtcConfig, surrogate, device, sigmas=(0.0, 0.01, 0.02, 0.05), n_matrices=100, n_noise_draws=32, seed=0, steps=MAP_STEPS, workers=1):
    """Relative matrix error of clean-fitted cores under Gaussian pad noise.

    ``mean`` averages over targets and draws. ``std`` is the Monte-Carlo
    standard error from the finite number of draws, so it shrinks like
    ``1/sqrt(n_noise_draws)``.
    """
    sigmas = [float(s) for s in sigmas]
    if any(s < 0 for s in sigmas):
        raise ValueError("noise sigma must be >= 0")
    if n_noise_draws < 1:
        raise ValueError("n_noise_draws must be >= 1")
    targets = gaussian_targets(cfg.k, n_matrices, seed)
    fits = fit_parallel(targets, cfg, surrogate, device, workers, steps=steps, seed=seed)
    means, stds, samples = [], [], []
    for sigma in sigmas:
        errs = np.stack([
            noise_errors(cfg, r.params, targets[i], device, sigma, n_noise_draws, seed, i)
            for i, r in enumerate(fits)
        ])
        means.append(float(errs.mean()))
        var = errs.var(axis=1, ddof=1) if n_noise_draws > 1 else np.zeros(len(fits))
        stds.append(float(np.sqrt(var.mean() / n_noise_draws)))
        samples.append(errs.mean(axis=1).tolist())
    return BenchReport(
        "noise", "sigma", sigmas, means, stds, n_matrices, seed, samples,
        {"steps": steps, "config": cfg.to_dict(), "n_noise_draws": n_noise_draws,
         "clean_distance": [r.distance for r in fits]},
    )
