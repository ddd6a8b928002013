"""Build a 4x4 multi-operand MMI and look at what its pads do.

Run: python3 demos/01_device_tour.py
"""

import numpy as np

from mommi_ptc.complexmat import passivity_excess, symmetry_error
from mommi_ptc.momdevice import base_transfer, l_pi, mommi_transfer, splitting_fom

from _shared import reference_device

device = reference_device()
geo = device.geometry
print(f"MMI {geo.width:.2f} um wide, {geo.length:.2f} um long, beat length {l_pi(geo):.2f} um")
print(f"{len(device.mode_betas)} guided modes, {device.d} pads")

w0 = base_transfer(device)
fom = splitting_fom(w0)
print("\n|W(0)|^2, the unprogrammed power splitting:")
print(np.round(np.abs(w0) ** 2, 3))
print(f"insertion loss {fom.insertion_loss_db:.2e} dB, imbalance {fom.imbalance_db:.3f} dB")

# each pad shifts mode phases by an amount set by its overlap with the mode
print("\npad-mode overlaps (rows: modes):")
print(np.round(device.pad_overlaps, 3))

rng = np.random.default_rng(0)
print("\nrandom pad settings stay reciprocal and passive:")
for eps in rng.uniform(0, 1, (3, device.d)):
    w = mommi_transfer(device, eps)
    change = np.linalg.norm(w - w0) / np.linalg.norm(w0)
    print(f"  eps={np.round(eps, 2)}  change {change:.3f}  symmetry {symmetry_error(w):.1e}  passivity {passivity_excess(w):.1e}")
