"""Footprint, loss and compute density of MZI, butterfly and MOMMI-based cores.

Run: python3 demos/06_hardware_cost.py
"""

from mommi_ptc.hwcost import DeviceParams, evaluate

designs = ["mzi", "butterfly-4", "m3icro-log", "m3icro-univ"]
print(f"{'design':12s} {'k':>3s} {'area mm2':>9s} {'IL dB':>7s} {'delay ps':>9s} {'TOPS':>7s} {'TOPS/mm2':>9s}")
for k in (8, 16, 32, 64):
    for name in designs:
        r = evaluate(name, k)
        print(f"{name:12s} {k:3d} {r.footprint * 1e-6:9.3f} {r.insertion_loss:7.2f} {r.delay:9.1f} {r.tops:7.2f} {r.density:9.2f}")
    print()

# MZI meshes have no crossings, so only the MOMMI design gains from better ones
better = DeviceParams.from_dict({"CR": {"il_db": 0.005}})
for name in ("mzi", "m3icro-log"):
    print(f"{name} at k=64 with 0.005 dB crossings: IL {evaluate(name, 64, better).insertion_loss:.2f} dB")
