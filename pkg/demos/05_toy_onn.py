"""Distil a small digital classifier into photonic cores, unfolded vs differential.

Run: python3 demos/05_toy_onn.py   (about 40 s)
"""

from mommi_ptc.optbench.onn import BlobSpec, toy_onn_train, train_teacher
from mommi_ptc.ptc import PtcConfig

from _shared import quick_surrogate, reference_device

device = reference_device()
surrogate, _, _ = quick_surrogate(device)
cfg = PtcConfig(4, 4, 2, 2)
spec = BlobSpec()
teacher = train_teacher((spec.dim, 8, spec.classes), spec.generate(0)[0], seed=0)

for mode in ("unfold", "diff"):
    r = toy_onn_train(mode, cfg, surrogate, device, seed=0, epochs=20, map_steps=1500, teacher=teacher)
    print(f"{mode:6s}: teacher {r.teacher_accuracy:.3f}, after mapping {r.mapped_accuracy:.3f}, "
          f"after distillation {r.accuracy:.3f}, {len(r.map_distances)} cores")
