"""Map a random real matrix onto cores of growing depth.

Forward passes use the true device model; pad gradients come from the
surrogate Jacobian.

Run: python3 demos/03_fit_matrix.py   (about 45 s)
"""

import numpy as np

from mommi_ptc.optbench.bench import gaussian_targets
from mommi_ptc.optbench.fitting import fit_matrix
from mommi_ptc.ptc import PtcConfig, compose_weight, effective_real_matrix, param_count

from _shared import quick_surrogate, reference_device

device = reference_device()
surrogate, _, _ = quick_surrogate(device)
target = gaussian_targets(4, 1, seed=3)[0]  # (8, 4): [Re; Im] blocks of one 4x4 core

for cfg in [PtcConfig.single(4, 4), PtcConfig(4, 4, 2, 2), PtcConfig(4, 4, 2, 3), PtcConfig(4, 4, 3, 4)]:
    res = fit_matrix(target, cfg, surrogate, device, steps=1500, seed=0)
    w = effective_real_matrix(compose_weight(cfg, res.params, device))
    print(f"P={cfg.P} C={cfg.C}: {param_count(cfg):3d} latent params, fidelity {res.fidelity:.3f}, "
          f"max entry error {np.max(np.abs(w - target)):.3f}")
