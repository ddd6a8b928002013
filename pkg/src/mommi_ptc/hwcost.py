"""Analytic footprint / insertion-loss / delay / throughput models for photonic tensor cores.

Designs: MZI mesh, FFT-k' and Butterfly-k' meshes (same cost rows), and the
MOMMI cores in their log-depth and near-universal sizings. Areas in um^2,
lengths in um, losses in dB, delays in ps.

Butterfly crossing counts come from a wiring model (see
:func:`crossing_counts`), not from a published formula. Electronic adders
needed to reduce k'-block partial sums are not costed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .ptc import univ_sizes

C_LIGHT = 2.9979e8  # m/s
GROUP_INDEX = 4.0
TAU_MODULATION_PS = 10.0
TAU_DETECTION_PS = 10.0
TAU_ADC_PS = 200.0
REF_MMI_PORTS = 4


@dataclass(frozen=True)
class Component:
    il_db: float
    width: float
    height: float
    response_ns: float | None = None

    @property
    def area(self):
        return self.width * self.height

    @property
    def length(self):
        """Propagation length: the longer side of the footprint."""
        return max(self.width, self.height)


@dataclass(frozen=True)
class DeviceParams:
    CR: Component = field(default_factory=lambda: Component(0.02, 7.4, 7.4))
    PS: Component = field(default_factory=lambda: Component(0.04, 90.0, 40.0, 10.0))
    Y: Component = field(default_factory=lambda: Component(0.3, 1.8, 1.3))
    BS: Component = field(default_factory=lambda: Component(0.33, 29.3, 2.4))
    MMI: Component = field(default_factory=lambda: Component(0.33, 55.4, 4.8))
    group_index: float = GROUP_INDEX
    tau_oe_eo_ps: float = TAU_MODULATION_PS + TAU_DETECTION_PS + TAU_ADC_PS

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Component):
                sizes = [x for n, x in asdict(v).items() if n != "il_db" and x is not None]
                ok = v.il_db >= 0 and all(x > 0 for x in sizes)
            else:
                ok = v > 0
            if not ok:
                raise ValueError(f"device parameter {f.name} must be positive (loss may be zero)")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, doc):
        base = asdict(cls())
        for key, val in doc.items():
            if key not in base:
                raise KeyError(f"unknown device parameter {key!r}")
            if isinstance(base[key], dict):
                unknown = set(val) - set(base[key])
                if unknown:
                    raise KeyError(f"unknown fields {sorted(unknown)} for {key}")
                base[key].update(val)
            else:
                base[key] = val
        kw = {k: Component(**v) if isinstance(v, dict) else v for k, v in base.items()}
        return cls(**kw)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class CostReport:
    design: str
    k: int
    footprint: float  # um^2
    insertion_loss: float  # dB
    delay: float  # ps
    tops: float = 0.0
    density: float = 0.0  # TOPS / mm^2
    mode: str = ""

    def row(self):
        return [self.design, self.k, self.footprint, self.insertion_loss, self.delay, self.tops, self.density]


def _optical_delay_ps(length_um, dev):
    return length_um * 1e-6 * dev.group_index / C_LIGHT * 1e12


def _is_pow2(n):
    return n >= 1 and n & (n - 1) == 0


def _inversions(seq):
    seq = list(seq)
    return sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])


def _stage_order(kp, s):
    """Physical order of logical ports that puts stride-2^s partners side by side."""
    stride = 2**s
    order = []
    for base in range(0, kp, 2 * stride):
        for i in range(stride):
            order += [base + i, base + i + stride]
    return order


def crossing_counts(kp):
    """(#CR, #CCR) of a size-k' butterfly.

    Ports are re-ordered before each coupler column so that stride-2^s
    partners are adjacent, and restored after the last column. Every
    re-ordering is a waveguide permutation whose crossings equal its
    inversion count. #CCR is the largest crossing total along any
    input-to-output path, where a path may switch to the partner wire at
    each coupler.
    """
    if not _is_pow2(kp) or kp < 2:
        raise ValueError("k' must be a power of two >= 2")
    n = int(math.log2(kp))
    orders = [list(range(kp))] + [_stage_order(kp, s) for s in range(n)] + [list(range(kp))]
    total = 0
    path = np.zeros(kp)  # worst crossings so far, indexed by logical port
    for i in range(1, len(orders)):
        prev, cur = orders[i - 1], orders[i]
        pos_prev = {p: j for j, p in enumerate(prev)}
        seq = [pos_prev[p] for p in cur]
        total += _inversions(seq)
        # a wire crosses every wire whose relative order flips
        for a in range(kp):
            for b in range(a + 1, kp):
                if (pos_prev[cur[a]] > pos_prev[cur[b]]):
                    path[cur[a]] += 1
                    path[cur[b]] += 1
        if i <= n:
            stride = 2 ** (i - 1)
            for p in range(kp):
                q = p ^ stride
                if p < q:
                    path[p] = path[q] = max(path[p], path[q])
    return total, int(path.max())


def cost_mzi(k, dev=None):
    dev = dev or DeviceParams()
    if k < 2:
        raise ValueError("k must be >= 2")
    stages = 2 * k + 1
    return CostReport(
        "mzi",
        k,
        footprint=k * k * (3 * dev.PS.area + 2 * dev.BS.area),
        insertion_loss=stages * (2 * dev.BS.il_db + 2 * dev.PS.il_db),
        delay=dev.tau_oe_eo_ps + _optical_delay_ps(stages * (2 * dev.BS.length + 2 * dev.PS.length), dev),
    )


def cost_fft_butterfly(k, kp, dev=None, kind="butterfly"):
    """FFT-k' and Butterfly-k' share one cost model."""
    dev = dev or DeviceParams()
    if not _is_pow2(kp) or kp < 2:
        raise ValueError("k' must be a power of two >= 2")
    if kind not in ("fft", "butterfly"):
        raise ValueError(f"unknown mesh kind {kind!r}")
    cr, ccr = crossing_counts(kp)
    tiles = math.ceil(k / kp)
    lg = int(math.log2(kp))
    tree = max(0, math.ceil(math.log2(k / kp)))
    footprint = tiles**2 * (
        kp * (lg + 2) * dev.BS.area + kp * (2 * lg + 2) * dev.PS.area + cr * dev.CR.area
    ) + 2 * k * (tiles - 1) * dev.Y.area
    n_cr = 2 * tree * (kp - 1) + ccr
    il = 2 * tree * dev.Y.il_db + (2 * lg + 2) * (dev.BS.il_db + dev.PS.il_db) + n_cr * dev.CR.il_db
    path = 2 * tree * dev.Y.length + (2 * lg + 2) * (dev.BS.length + dev.PS.length) + n_cr * dev.CR.length
    return CostReport(f"{kind}-{kp}", k, footprint, il, dev.tau_oe_eo_ps + _optical_delay_ps(path, dev))


def cost_m3icro(k, variant="log", dev=None):
    dev = dev or DeviceParams()
    if k < 2:
        raise ValueError("k must be >= 2")
    mmi_area = dev.MMI.area * k * k / REF_MMI_PORTS**2
    mmi_len = dev.MMI.length * k / REF_MMI_PORTS
    if variant == "log":
        c = int(math.floor(math.log2(k)))
        footprint = 2 * c * mmi_area + 4 * k * (c - 1) * (dev.PS.area + dev.Y.area) + 2 * k * dev.Y.area + k * (k - 1) * dev.CR.area
        il = 2 * dev.Y.il_db + c * dev.MMI.il_db + (c - 1) * (2 * dev.Y.il_db + dev.PS.il_db) + 2 * (k - 1) * dev.CR.il_db
        path = 2 * dev.Y.length + c * mmi_len + (c - 1) * (2 * dev.Y.length + dev.PS.length) + 2 * (k - 1) * dev.CR.length
    elif variant == "univ":
        p, c = univ_sizes(k)
        tree = math.ceil(math.log2(p))
        footprint = (
            p * c * mmi_area
            + 2 * k * p * (c - 1) * (dev.PS.area + dev.Y.area)
            + 2 * (p - 1) * k * dev.Y.area
            + (p - 1) * k * (k - 1) * dev.CR.area
        )
        il = 2 * tree * dev.Y.il_db + c * dev.MMI.il_db + (c - 1) * (2 * dev.Y.il_db + dev.PS.il_db) + 2 * tree * (k - 1) * dev.CR.il_db
        path = 2 * tree * dev.Y.length + c * mmi_len + (c - 1) * (2 * dev.Y.length + dev.PS.length) + 2 * tree * (k - 1) * dev.CR.length
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return CostReport(f"m3icro-{variant}", k, footprint, il, dev.tau_oe_eo_ps + _optical_delay_ps(path, dev))


def macs_per_shot(k, mode):
    """Effective real MACs per shot of one k x k core."""
    if mode == "unfold":
        return 2 * k * k
    if mode == "real":
        return k * k
    if mode == "diff":
        return k * k / 2  # two cores per k x k real product
    raise ValueError(f"unknown mode {mode!r}")


def tops_and_density(report: CostReport, mode):
    """Fill in TOPS (2 ops per MAC per shot) and TOPS/mm^2."""
    ops = 2 * macs_per_shot(report.k, mode)
    report.tops = ops / (report.delay * 1e-12) / 1e12
    report.density = report.tops / (report.footprint * 1e-6)
    report.mode = mode
    return report


DEFAULT_MODES = {"mzi": "real", "fft": "diff", "butterfly": "diff", "m3icro": "unfold"}


def evaluate(design, k, dev=None, mode=None):
    """Cost report for a design id such as ``mzi``, ``butterfly-4`` or ``m3icro-log``."""
    family, _, arg = design.partition("-")
    if family == "mzi":
        rep = cost_mzi(k, dev)
    elif family in ("fft", "butterfly"):
        rep = cost_fft_butterfly(k, int(arg), dev, kind=family)
    elif family == "m3icro":
        rep = cost_m3icro(k, arg or "log", dev)
    else:
        raise ValueError(f"unknown design {design!r}")
    return tops_and_density(rep, mode or DEFAULT_MODES[family])
