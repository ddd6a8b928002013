"""Reference device and a quickly trained surrogate shared by the demos."""

from mommi_ptc.dpe import TrainConfig, train_on_lut
from mommi_ptc.momdevice import MmiGeometry, build_design, generate_lut


def reference_device(k=4, d=4):
    return build_design(MmiGeometry.default(k), d=d)


def quick_surrogate(device, bits=3, epochs=60, seed=0):
    """Surrogate trained on the full LUT; fewer epochs than the default recipe."""
    lut = generate_lut(device, bits)
    model, report = train_on_lut(lut, seed=seed, config=TrainConfig(epochs=epochs, seed=seed))
    return model, report, lut
