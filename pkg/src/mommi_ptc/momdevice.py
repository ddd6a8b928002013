"""Guided-mode model of a k x k MMI and its programmable multi-operand variant.

The multimode region supports ``m`` sinusoidal lateral modes. Each access
port couples into those modes through an overlap integral; each tuning pad
adds a phase to every mode proportional to the mode's intensity overlap with
the pad. Propagation is diagonal in the mode basis, so the port-to-port
transfer matrix is ``W = E^T diag(exp(j*phase)) E``, which is symmetric by
construction and passive because ``E`` has orthonormal columns.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field

import numpy as np

_GRID_POINTS = 4001
DEFAULT_N_EFF = 2.8
DEFAULT_N_CLAD = 1.44
DEFAULT_WAVELENGTH = 1.55  # um
DEFAULT_DELTA_N = 0.03
# Table-1 reference MMI is 4.8 um wide for k=4
WIDTH_PER_PORT = 1.2  # um
DEFAULT_LUT_CAP = 2**24


class LutCapacityError(MemoryError):
    pass


@dataclass(frozen=True)
class MmiGeometry:
    """Multimode-region geometry. Lengths in um."""

    k: int
    length: float
    width: float
    effective_width: float
    n_eff: float = DEFAULT_N_EFF
    n_clad: float = DEFAULT_N_CLAD
    wavelength: float = DEFAULT_WAVELENGTH
    n_modes: int = 8
    port_centers: tuple = ()
    port_width: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not (self.length > 0 and self.width > 0 and self.effective_width > 0):
            raise ValueError("length and widths must be positive")
        if not (0 < self.n_clad < self.n_eff):
            raise ValueError("need 0 < n_clad < n_eff")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.n_modes < self.k:
            raise ValueError("need at least k guided modes")
        c = np.asarray(self.port_centers, dtype=float)
        if c.shape != (self.k,):
            raise ValueError("need exactly k port centers")
        if np.any(np.diff(c) <= 0):
            raise ValueError("port centers must be strictly increasing")
        if np.any(c <= 0) or np.any(c >= self.width):
            raise ValueError("port centers must lie inside the multimode region")
        if not np.allclose(c + c[::-1], self.width, atol=1e-9):
            raise ValueError("port centers must be mirror-symmetric about width/2")
        if self.port_width <= 0:
            raise ValueError("port width must be positive")

    @classmethod
    def default(cls, k, length=None, width=None, **kw):
        """Evenly spaced ports on a ``1.2*k`` um wide region.

        ``length`` defaults to the first k-fold self-imaging length.
        """
        if width is None:
            width = WIDTH_PER_PORT * k
        centers = tuple(width * (np.arange(k) + 0.5) / k)
        kw.setdefault("n_modes", max(k, 8))
        geo = dict(
            k=k,
            length=1.0,
            width=width,
            effective_width=width,
            port_centers=centers,
            port_width=width / k,
            **kw,
        )
        if length is None:
            length = initial_length(cls(**geo), 1)
        geo["length"] = length
        return cls(**geo)

    def replace(self, **changes):
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return MmiGeometry(**d)


@dataclass(frozen=True)
class Pad:
    z_start: float
    z_end: float
    y_start: float
    y_end: float


@dataclass(frozen=True)
class PadLayout:
    pads: tuple
    delta_n_max: float = DEFAULT_DELTA_N

    @property
    def d(self):
        return len(self.pads)

    def validate(self, geometry: MmiGeometry):
        if self.delta_n_max <= 0:
            raise ValueError("delta_n_max must be positive")
        prev_end = 0.0
        for p in self.pads:
            if not (0 <= p.z_start < p.z_end <= geometry.length * (1 + 1e-12)):
                raise ValueError(f"pad {p} outside the multimode region along z")
            if not (0 <= p.y_start < p.y_end <= geometry.width * (1 + 1e-12)):
                raise ValueError(f"pad {p} outside the multimode region along y")
            if p.z_start < prev_end - 1e-12:
                raise ValueError("pad z-intervals must be sorted and non-overlapping")
            prev_end = p.z_end

    @classmethod
    def default(cls, geometry: MmiGeometry, d, delta_n_max=DEFAULT_DELTA_N):
        """``d`` equal-length pads along z, each over the central half of the width.

        A band symmetric about the centre gives a different intensity overlap
        for every low-order mode. (A band over exactly half the width starting
        at an edge gives 0.5 for every sinusoidal mode and only shifts the
        global phase.)
        """
        edges = np.linspace(0.0, geometry.length, d + 1)
        w = geometry.width
        pads = tuple(Pad(float(edges[i]), float(edges[i + 1]), 0.25 * w, 0.75 * w) for i in range(d))
        return cls(pads, delta_n_max)


@dataclass(frozen=True, eq=False)
class MommiDesign:
    geometry: MmiGeometry
    pads: PadLayout
    mode_betas: np.ndarray
    coupling: np.ndarray  # (m, k)
    pad_overlaps: np.ndarray  # (m, d)
    _pad_lengths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lengths = np.array([p.z_end - p.z_start for p in self.pads.pads], dtype=float)
        object.__setattr__(self, "_pad_lengths", lengths)
        for name in ("mode_betas", "coupling", "pad_overlaps"):
            getattr(self, name).setflags(write=False)

    @property
    def k(self):
        return self.geometry.k

    @property
    def d(self):
        return self.pads.d

    def __call__(self, eps):
        return mommi_transfer(self, eps)

    def to_dict(self):
        g = self.geometry
        return {
            "geometry": {
                "k": g.k,
                "length": g.length,
                "width": g.width,
                "effective_width": g.effective_width,
                "n_eff": g.n_eff,
                "n_clad": g.n_clad,
                "wavelength": g.wavelength,
                "n_modes": g.n_modes,
                "port_centers": list(g.port_centers),
                "port_width": g.port_width,
            },
            "pads": {
                "delta_n_max": self.pads.delta_n_max,
                "pads": [[p.z_start, p.z_end, p.y_start, p.y_end] for p in self.pads.pads],
            },
            "mode_betas": self.mode_betas.tolist(),
            "coupling": self.coupling.tolist(),
            "pad_overlaps": self.pad_overlaps.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        g = dict(doc["geometry"])
        g["port_centers"] = tuple(g["port_centers"])
        geometry = MmiGeometry(**g)
        pads = PadLayout(
            tuple(Pad(*map(float, p)) for p in doc["pads"]["pads"]),
            doc["pads"]["delta_n_max"],
        )
        return cls(
            geometry,
            pads,
            np.array(doc["mode_betas"], dtype=float),
            np.array(doc["coupling"], dtype=float),
            np.array(doc["pad_overlaps"], dtype=float),
        )


@dataclass(frozen=True)
class DesignFoM:
    insertion_loss_db: float
    imbalance_db: float

    @property
    def fom(self):
        return self.insertion_loss_db * self.imbalance_db


def l_pi(geometry: MmiGeometry):
    """Beat length ``4 n_eff W_e0^2 / (3 lambda0)``."""
    return 4 * geometry.n_eff * geometry.effective_width**2 / (3 * geometry.wavelength)


def beta_spacing(geometry: MmiGeometry, nu):
    """``beta_0 - beta_nu``, the propagation-constant offset of mode ``nu``."""
    if not 0 <= nu < geometry.n_modes:
        raise IndexError(f"mode index {nu} out of range [0, {geometry.n_modes})")
    return nu * (nu + 2) * np.pi / (3 * l_pi(geometry))


def initial_length(geometry: MmiGeometry, p=1):
    """Length of the p-th k-fold self-image, ``p * 3 L_pi / k``."""
    if int(p) != p or p < 1:
        raise ValueError("p must be a positive integer")
    return p * 3 * l_pi(geometry) / geometry.k


def _mode_profiles(geometry, y):
    we = geometry.effective_width
    y0 = 0.5 * (geometry.width - we)
    nu = np.arange(geometry.n_modes)[:, None]
    t = (y[None, :] - y0) / we
    inside = (t >= 0) & (t <= 1)
    return np.sqrt(2 / we) * np.sin((nu + 1) * np.pi * t) * inside


def _port_profiles(geometry, y):
    c = np.asarray(geometry.port_centers)[:, None]
    w = geometry.port_width
    dy = y[None, :] - c
    prof = np.where(np.abs(dy) <= w / 2, 0.5 * (1 + np.cos(2 * np.pi * dy / w)), 0.0)
    return prof / np.sqrt(np.trapezoid(prof**2, y, axis=1))[:, None]


def _orthonormalize_columns(a):
    q, r = np.linalg.qr(a)
    # match classical Gram-Schmidt: positive diagonal of r
    return q * np.sign(np.diag(r))


def build_design(geometry: MmiGeometry, pads: PadLayout | None = None, d=None):
    """Evaluate mode constants, port coupling and pad overlaps for a geometry."""
    if pads is None:
        pads = PadLayout.default(geometry, geometry.k if d is None else d)
    pads.validate(geometry)
    y = np.linspace(0.0, geometry.width, _GRID_POINTS)
    psi = _mode_profiles(geometry, y)
    ports = _port_profiles(geometry, y)
    coupling = _orthonormalize_columns(np.trapezoid(psi[:, None, :] * ports[None, :, :], y, axis=2))
    overlaps = np.empty((geometry.n_modes, pads.d))
    for j, p in enumerate(pads.pads):
        band = (y >= p.y_start) & (y <= p.y_end)
        overlaps[:, j] = np.trapezoid(psi**2 * band, y, axis=1)
    overlaps = np.clip(overlaps, 0.0, 1.0)
    beta0 = 2 * np.pi / geometry.wavelength * geometry.n_eff
    betas = beta0 - np.array([beta_spacing(geometry, v) for v in range(geometry.n_modes)])
    return MommiDesign(geometry, pads, betas, coupling, overlaps)


def _fix_global_phase(w):
    ref = w[..., 0, 0]
    mag = np.abs(ref)
    rot = np.where(mag > 0, np.conj(ref) / np.where(mag > 0, mag, 1.0), 1.0)
    return w * rot[..., None, None]


def _transfer_from_phases(design, phases):
    e = design.coupling
    w = np.einsum("vi,...v,vj->...ij", e, np.exp(1j * phases), e)
    return _fix_global_phase(w)


def base_transfer(design: MommiDesign):
    """Zero-bias transfer matrix, global phase chosen so ``W[0,0] >= 0``."""
    return _transfer_from_phases(design, design.mode_betas * design.geometry.length)


def mommi_transfer(design: MommiDesign, eps):
    """Transfer matrix for normalized pad indices ``eps`` in [0, 1].

    ``eps`` may carry leading batch dimensions: shape ``(..., d)`` gives
    ``(..., k, k)``.
    """
    eps = np.asarray(eps, dtype=float)
    if eps.shape[-1:] != (design.d,):
        raise ValueError(f"expected trailing dimension {design.d}, got shape {eps.shape}")
    if np.any(~np.isfinite(eps)) or np.any(eps < 0) or np.any(eps > 1):
        raise ValueError("pad indices must lie in [0, 1]")
    k0 = 2 * np.pi / design.geometry.wavelength
    # per-segment phases commute (diagonal in mode space), so they simply add up
    kick = k0 * design.pads.delta_n_max * design.pad_overlaps * design._pad_lengths  # (m, d)
    phases = design.mode_betas * design.geometry.length + eps @ kick.T
    return _transfer_from_phases(design, phases)


def splitting_fom(w):
    """Insertion loss and worst-port imbalance (both dB) of a transfer matrix."""
    power = np.abs(np.asarray(w)) ** 2
    il = max(0.0, float(-10 * np.log10(power.sum(axis=0).mean())))
    imb = float(np.max(10 * np.log10(power.max(axis=0) / power.min(axis=0))))
    return DesignFoM(il, imb)


def default_search_grid(k):
    base = MmiGeometry.default(k)
    lengths = np.linspace(0.8, 1.2, 41) * base.length
    widths = np.linspace(0.8, 1.2, 21) * base.width
    return lengths, widths


def design_initial_mmi(k, search_grid=None, d=None):
    """Grid search on (length, width) minimizing insertion loss x imbalance.

    Returns the best ``(MommiDesign, DesignFoM)``; ties (to 1e-12) go to the
    shorter, then narrower device.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    lengths, widths = default_search_grid(k) if search_grid is None else search_grid
    lengths = np.atleast_1d(np.asarray(lengths, dtype=float))
    widths = np.atleast_1d(np.asarray(widths, dtype=float))
    if lengths.size == 0 or widths.size == 0:
        raise ValueError("search grid is empty")
    best = None
    for w in widths:
        geo_w = MmiGeometry.default(k, width=float(w))
        for length in lengths:
            geo = geo_w.replace(length=float(length))
            des = build_design(geo, PadLayout.default(geo, 1))
            fom = splitting_fom(base_transfer(des))
            key = (round(fom.fom, 12), float(length), float(w))
            if best is None or key < best[0]:
                best = (key, geo, fom)
    _, geo, fom = best
    return build_design(geo, d=k if d is None else d), fom


@dataclass(frozen=True, eq=False)
class Lut:
    """Transfer matrices for every quantized level tuple, pad 0 slowest."""

    k: int
    d: int
    bits: int
    matrices: np.ndarray  # (levels**d, k, k)

    @property
    def levels(self):
        return 2**self.bits

    def level_tuples(self):
        return np.array(list(itertools.product(range(self.levels), repeat=self.d)), dtype=np.int64)

    def eps_values(self):
        return self.level_tuples() / (self.levels - 1)

    def index(self, levels):
        idx = 0
        for lv in levels:
            idx = idx * self.levels + int(lv)
        return idx

    def __getitem__(self, levels):
        return self.matrices[self.index(levels)]

    def __len__(self):
        return self.matrices.shape[0]


def generate_lut(design: MommiDesign, bits, cap=DEFAULT_LUT_CAP):
    """Enumerate ``W(eps)`` over all ``(2**bits)**d`` quantized level tuples."""
    if not 1 <= bits <= 8:
        raise ValueError("bits must be in [1, 8]")
    n = (2**bits) ** design.d
    if n > cap:
        raise LutCapacityError(
            f"{n} LUT entries exceed the cap of {cap}; use MemoizedEvaluator for on-demand evaluation"
        )
    grid = np.array(list(itertools.product(range(2**bits), repeat=design.d)), dtype=float)
    return Lut(design.k, design.d, bits, mommi_transfer(design, grid / (2**bits - 1)))


class MemoizedEvaluator:
    """On-demand LUT: evaluates and caches ``W`` per level tuple.

    Safe for concurrent readers; inserts happen under a lock and store a
    fully computed, read-only matrix.
    """

    def __init__(self, design: MommiDesign, bits):
        if not 1 <= bits <= 8:
            raise ValueError("bits must be in [1, 8]")
        self.design = design
        self.bits = bits
        self._cache = {}
        self._lock = threading.Lock()

    def __call__(self, levels):
        key = tuple(int(v) for v in levels)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if len(key) != self.design.d or any(not 0 <= v < 2**self.bits for v in key):
            raise ValueError(f"invalid level tuple {key}")
        w = mommi_transfer(self.design, np.array(key, dtype=float) / (2**self.bits - 1))
        w.setflags(write=False)
        with self._lock:
            return self._cache.setdefault(key, w)

    def __len__(self):
        return len(self._cache)
