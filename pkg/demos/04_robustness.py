"""Pad quantization and pad noise sweeps on a small target ensemble.

Run: python3 demos/04_robustness.py   (about 30 s)
"""

from mommi_ptc.optbench.bench import noise_bench, quantization_bench
from mommi_ptc.ptc import PtcConfig

from _shared import quick_surrogate, reference_device

device = reference_device()
surrogate, _, _ = quick_surrogate(device)
cfg = PtcConfig(4, 4, 2, 3)

quant = quantization_bench(cfg, surrogate, device, bits_list=(0, 1, 2, 3, 4, 8), n_matrices=10, steps=1000)
print("fidelity vs pad bits (0 freezes the pads):")
print(quant.to_csv())

noise = noise_bench(cfg, surrogate, device, sigmas=(0.0, 0.01, 0.02, 0.05), n_matrices=10, n_noise_draws=16, steps=1000)
print("relative matrix error vs pad noise sigma (std is the Monte-Carlo standard error):")
print(noise.to_csv())
