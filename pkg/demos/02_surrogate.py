"""Train the differentiable device surrogate on a 3-bit LUT and check its gradients.

Run: python3 demos/02_surrogate.py   (about 20 s)
"""

import numpy as np

from mommi_ptc.dpe import jacobian_wrt_eps, predict

from _shared import quick_surrogate, reference_device

device = reference_device()
model, report, lut = quick_surrogate(device)
print(f"LUT entries: {len(lut)}; held-out complex MSE after {report.epochs_run} epochs: {report.final_mse:.2e}")
print("validation curve (every 10 epochs):", [f"{x:.1e}" for x in report.loss_curve[::10]])

eps = np.array([0.2, 0.7, 0.4, 0.9])
w_true = lut[(1, 5, 3, 6)]
w_pred = predict(model, np.array([1, 5, 3, 6]) / 7)
print(f"\none entry: relative error {np.linalg.norm(w_pred - w_true) / np.linalg.norm(w_true):.2e}")

# forward-mode Jacobian against central differences of the network itself
jac = jacobian_wrt_eps(model, eps)
h = 1e-5
fd = np.stack([(model.raw_output(eps + h * e) - model.raw_output(eps - h * e)) / (2 * h) for e in np.eye(4)], axis=-1)
print(f"Jacobian {jac.shape}, relative gap to finite differences {np.linalg.norm(jac - fd) / np.linalg.norm(fd):.1e}")
