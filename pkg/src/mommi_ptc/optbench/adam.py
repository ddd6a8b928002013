"""Adam with bias correction, cosine learning-rate decay and optional box bounds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: dict  # per-parameter learning rate
    total_steps: int | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)  # name -> (lo, hi)

    @classmethod
    def create(cls, params, lr, total_steps=None, bounds=None, **kw):
        """``lr`` is a scalar or a ``{name: lr}`` mapping covering every parameter."""
        if not isinstance(lr, dict):
            lr = {name: float(lr) for name in params}
        return cls(
            lr=dict(lr),
            total_steps=total_steps,
            m={n: np.zeros_like(p, dtype=float) for n, p in params.items()},
            v={n: np.zeros_like(p, dtype=float) for n, p in params.items()},
            bounds=dict(bounds or {}),
            **kw,
        )

    def schedule(self):
        """Cosine factor for the step about to be taken (1 at the first step, -> 0)."""
        if not self.total_steps:
            return 1.0
        t = min(self.step, self.total_steps)
        return 0.5 * (1 + np.cos(np.pi * t / self.total_steps))


def adam_step(state: AdamState, params, grads):
    """Return updated parameters and advance ``state`` in place."""
    scale = state.schedule()
    state.step += 1
    t = state.step
    c1 = 1 - state.beta1**t
    c2 = 1 - state.beta2**t
    out = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            out[name] = p
            continue
        if np.shape(g) != np.shape(p):
            raise ValueError(f"gradient shape {np.shape(g)} does not match parameter {name} {np.shape(p)}")
        m = state.m[name] = state.beta1 * state.m[name] + (1 - state.beta1) * g
        v = state.v[name] = state.beta2 * state.v[name] + (1 - state.beta2) * g * g
        new = p - state.lr[name] * scale * (m / c1) / (np.sqrt(v / c2) + state.eps)
        if name in state.bounds:
            lo, hi = state.bounds[name]
            new = np.clip(new, lo, hi)
        out[name] = new
    return out
