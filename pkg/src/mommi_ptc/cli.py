"""Command-line entry point: ``python -m mommi_ptc <command> [options]``.

Every report carries ``format_version`` and the resolved ``run_config``.
JSON reports embed both; CSV reports get them in a ``<out>.run.json``
sidecar so the CSV itself stays a plain table. Exit status is 0 on
success, 2 on usage errors and 1 on runtime errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import hwcost, lutio
from .dpe import SurrogateModel, TrainConfig, train_surrogate
from .momdevice import MmiGeometry, MommiDesign, build_design, design_initial_mmi, generate_lut, mommi_transfer
from .optbench import bench, onn
from .optbench.fitting import MAP_STEPS, fit_matrix
from .ptc import PtcConfig

FORMAT_VERSION = 1
SURROGATE_BITS = 3
MAX_SURROGATE_SAMPLES = 2**16


@dataclass
class RunConfig:
    command: str
    k: int = 4
    d: int | None = None
    P: int | None = None
    C: int | None = None
    variant: str = "univ"
    variants: list = field(default_factory=lambda: ["single", "log", "univ"])
    bits: int | None = None
    bits_list: list = field(default_factory=lambda: [0, 1, 2, 3, 4, 6, 8])
    sigmas: list = field(default_factory=lambda: [0.0, 0.01, 0.02, 0.05])
    n_matrices: int = 100
    noise_draws: int = 32
    steps: int = MAP_STEPS
    epochs: int = onn.KD_EPOCHS
    surrogate_epochs: int = 200
    modes: list = field(default_factory=lambda: ["unfold", "diff"])
    designs: list = field(default_factory=lambda: ["mzi", "butterfly-4", "m3icro-log", "m3icro-univ"])
    ks: list = field(default_factory=lambda: [4, 8, 16, 32, 64])
    seed: int = 0
    lut_path: str | None = None
    surrogate_path: str | None = None
    design_path: str | None = None
    params_path: str | None = None
    report_path: str | None = None
    output_format: str = "json"
    device_params: dict = field(default_factory=dict)

    @property
    def pads(self):
        return self.k if self.d is None else self.d


class UsageError(Exception):
    pass


# -- argument parsing -----------------------------------------------------------


def _ints(text):
    return [int(t) for t in text.split(",") if t]


def _floats(text):
    return [float(t) for t in text.split(",") if t]


def _strs(text):
    return [t.strip() for t in text.split(",") if t.strip()]


COMMANDS = (
    "design", "lut", "surrogate-train", "fit", "bench-expressivity",
    "bench-quant", "bench-noise", "bench-onn", "hwcost",
)

# flag -> (RunConfig field, parser, help)
_FLAGS = {
    "--k": ("k", int, "ports per side"),
    "--d": ("d", int, "pad count (default k)"),
    "--P": ("P", int, "parallel paths (custom variant)"),
    "--C": ("C", int, "cascade depth (custom variant)"),
    "--variant": ("variant", str, "log, univ, single or custom"),
    "--bits": ("bits", int, "pad quantization bits"),
    "--n": ("n_matrices", int, "number of Gaussian targets"),
    "--steps": ("steps", int, "mapping steps per fit"),
    "--epochs": ("epochs", int, "distillation epochs"),
    "--surrogate-epochs": ("surrogate_epochs", int, "epochs when training a surrogate on the fly"),
    "--lut": ("lut_path", str, "LUT file"),
    "--surrogate": ("surrogate_path", str, "trained surrogate JSON (trained on the fly if absent)"),
    "--design": ("design_path", str, "device design JSON (reference device if absent)"),
    "--params": ("params_path", str, "write fitted core parameters here"),
    "--out": ("report_path", str, "report / output path (stdout if absent)"),
    "--format": ("output_format", str, "csv or json"),
}
_LIST_FLAGS = {
    "--variants": ("variants", _strs, "comma list of configs: single, log, univ or PxCy"),
    "--bits-list": ("bits_list", _ints, "comma list of bitwidths"),
    "--sigmas": ("sigmas", _floats, "comma list of noise sigmas"),
    "--draws": ("noise_draws", int, "noise draws per target"),
    "--modes": ("modes", _strs, "comma list of detection modes"),
    "--designs": ("designs", _strs, "comma list of hardware designs"),
}

_COMMAND_FLAGS = {
    "design": ["--k", "--d", "--out"],
    "lut": ["--k", "--d", "--bits", "--design", "--out"],
    "surrogate-train": ["--k", "--d", "--bits", "--lut", "--design", "--surrogate-epochs", "--out"],
    "fit": ["--k", "--d", "--P", "--C", "--variant", "--bits", "--steps", "--surrogate", "--surrogate-epochs", "--design", "--params", "--out"],
    "bench-expressivity": ["--k", "--d", "--variants", "--n", "--steps", "--surrogate", "--surrogate-epochs", "--design", "--out", "--format"],
    "bench-quant": ["--k", "--d", "--P", "--C", "--variant", "--bits-list", "--n", "--steps", "--surrogate", "--surrogate-epochs", "--design", "--out", "--format"],
    "bench-noise": ["--k", "--d", "--P", "--C", "--variant", "--sigmas", "--draws", "--n", "--steps", "--surrogate", "--surrogate-epochs", "--design", "--out", "--format"],
    "bench-onn": ["--k", "--d", "--P", "--C", "--variant", "--modes", "--epochs", "--steps", "--surrogate", "--surrogate-epochs", "--design", "--out"],
    "hwcost": ["--designs", "--k", "--out"],
}


def build_parser():
    parser = argparse.ArgumentParser(prog="mommi_ptc", description="Multi-operand MMI photonic tensor core toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="JSON file overriding defaults and device parameters")
        p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
        p.add_argument("--threads", type=int, default=1, help="worker cap; results do not depend on it")
        for flag in _COMMAND_FLAGS[cmd]:
            if cmd == "hwcost" and flag == "--k":
                p.add_argument("--k", dest="ks", type=_ints, default=None, help="comma list of sizes")
                continue
            name, conv, text = _FLAGS.get(flag) or _LIST_FLAGS[flag]
            p.add_argument(flag, dest=name, type=conv, default=None, help=text)
    return parser


def resolve(args):
    """Merge defaults, the optional config file and explicit flags."""
    cfg = RunConfig(args.command)
    known = {f.name for f in fields(RunConfig)}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        for key, val in doc.get("defaults", {}).items():
            if key not in known or key == "command":
                raise UsageError(f"unknown config default {key!r}")
            setattr(cfg, key, val)
        cfg.device_params = doc.get("device", {})
    for key, val in vars(args).items():
        if key in known and key != "command" and val is not None:
            setattr(cfg, key, val)
    if args.seed is not None:
        cfg.seed = args.seed
    if cfg.output_format not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    return cfg


# -- shared pieces ----------------------------------------------------------------


def load_device(rc: RunConfig) -> MommiDesign:
    if rc.design_path:
        with open(rc.design_path) as fh:
            device = MommiDesign.from_dict(json.load(fh))
        if device.k != rc.k or device.d != rc.pads:
            raise ValueError(f"design is ({device.k}, {device.d}), run needs ({rc.k}, {rc.pads})")
        return device
    return build_design(MmiGeometry.default(rc.k), d=rc.pads)


def surrogate_dataset(device, bits, seed, max_samples=MAX_SURROGATE_SAMPLES):
    """Full LUT when it fits, otherwise a seeded sample of level tuples."""
    top = 2**bits - 1
    if (top + 1) ** device.d <= max_samples:
        lut = generate_lut(device, bits)
        return lut.eps_values(), lut.matrices
    rng = np.random.default_rng([seed, 0, 6])
    eps = rng.integers(0, top + 1, (max_samples, device.d)) / top
    return eps, mommi_transfer(device, eps)


def load_surrogate(rc: RunConfig, device):
    if rc.surrogate_path:
        with open(rc.surrogate_path) as fh:
            model = SurrogateModel.from_dict(json.load(fh))
        return model, None
    eps, w = surrogate_dataset(device, rc.bits or SURROGATE_BITS, rc.seed)
    model = SurrogateModel.init(device.k, device.d, seed=rc.seed)
    report = train_surrogate(model, eps, w, TrainConfig(epochs=rc.surrogate_epochs, seed=rc.seed))
    return model, report


def make_cfg(rc: RunConfig, variant=None):
    variant = variant or rc.variant
    k, d = rc.k, rc.pads
    if variant == "single":
        return PtcConfig.single(k, d)
    if variant in ("log", "univ"):
        return PtcConfig.make(variant, k, d)
    if variant == "custom":
        return PtcConfig(k, d, rc.P or 1, rc.C or 1)
    if variant.startswith("P") and "C" in variant:
        p, c = variant[1:].split("C")
        return PtcConfig(k, d, int(p), int(c))
    raise UsageError(f"unknown variant {variant!r}")


def envelope(rc: RunConfig, report):
    return {"format_version": FORMAT_VERSION, "run_config": asdict(rc), "report": report}


def dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit(rc: RunConfig, text, out=None):
    path = rc.report_path
    if path is None:
        (out or sys.stdout).write(text)
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def emit_report(rc: RunConfig, report: dict, csv_text=None, out=None):
    if rc.output_format == "csv" and csv_text is not None:
        emit(rc, csv_text, out)
        if rc.report_path:
            with open(rc.report_path + ".run.json", "w", newline="\n") as fh:
                fh.write(dumps(envelope(rc, {"csv": rc.report_path})))
        return
    emit(rc, dumps(envelope(rc, report)), out)


def _surrogate_info(report):
    if report is None:
        return None
    return {"final_mse": report.final_mse, "train_mse": report.train_mse, "epochs_run": report.epochs_run}


# -- commands ------------------------------------------------------------------------


def cmd_design(rc, out):
    device, fom = design_initial_mmi(rc.k, d=rc.pads)
    report = {
        "MommiDesign": device.to_dict(),
        "DesignFoM": {"insertion_loss_db": fom.insertion_loss_db, "imbalance_db": fom.imbalance_db, "fom": fom.fom},
    }
    emit_report(rc, report, out=out)


def cmd_lut(rc, out):
    if rc.report_path is None:
        raise UsageError("lut needs --out")
    lut = generate_lut(load_device(rc), rc.bits or SURROGATE_BITS)
    lutio.write_lut(rc.report_path, lut)
    with open(rc.report_path + ".run.json", "w", newline="\n") as fh:
        fh.write(dumps(envelope(rc, {"entries": len(lut), "file": rc.report_path})))


def cmd_surrogate_train(rc, out):
    if rc.report_path is None:
        raise UsageError("surrogate-train needs --out")
    if rc.lut_path:
        lut = lutio.read_lut(rc.lut_path)
        eps, w = lut.eps_values(), lut.matrices
        k, d = lut.k, lut.d
    else:
        device = load_device(rc)
        eps, w = surrogate_dataset(device, rc.bits or SURROGATE_BITS, rc.seed)
        k, d = device.k, device.d
    model = SurrogateModel.init(k, d, seed=rc.seed)
    report = train_surrogate(model, eps, w, TrainConfig(epochs=rc.surrogate_epochs, seed=rc.seed))
    with open(rc.report_path, "w", newline="\n") as fh:
        fh.write(dumps(model.to_dict()))
    with open(rc.report_path + ".run.json", "w", newline="\n") as fh:
        fh.write(dumps(envelope(rc, {"TrainReport": asdict(report)})))


def cmd_fit(rc, out):
    device = load_device(rc)
    cfg = make_cfg(rc)
    surrogate, sreport = load_surrogate(rc, device)
    target = bench.gaussian_targets(rc.k, 1, rc.seed)[0]
    res = fit_matrix(target, cfg, surrogate, device, steps=rc.steps, seed=rc.seed, bits=rc.bits)
    params = res.params.to_dict(cfg)
    if rc.params_path:
        with open(rc.params_path, "w", newline="\n") as fh:
            fh.write(dumps(params))
    report = {
        "FitResult": {"distance": res.distance, "fidelity": res.fidelity, "steps_run": res.steps_run, "loss_curve": res.loss_curve},
        "PtcParams": params,
        "surrogate": _surrogate_info(sreport),
    }
    emit_report(rc, report, out=out)


def _bench_out(rc, rep, sreport, out):
    doc = {"BenchReport": rep.to_dict(), "surrogate": _surrogate_info(sreport)}
    emit_report(rc, doc, rep.to_csv(), out)


def cmd_bench_expressivity(rc, out, threads):
    device = load_device(rc)
    surrogate, sreport = load_surrogate(rc, device)
    cfgs = [make_cfg(rc, v) for v in rc.variants]
    rep = bench.expressivity_bench(cfgs, {(rc.k, rc.pads): surrogate}, device, rc.n_matrices, rc.seed, rc.steps, threads)
    _bench_out(rc, rep, sreport, out)


def cmd_bench_quant(rc, out, threads):
    device = load_device(rc)
    surrogate, sreport = load_surrogate(rc, device)
    rep = bench.quantization_bench(make_cfg(rc), surrogate, device, rc.bits_list, rc.n_matrices, rc.seed, rc.steps, threads)
    _bench_out(rc, rep, sreport, out)


def cmd_bench_noise(rc, out, threads):
    device = load_device(rc)
    surrogate, sreport = load_surrogate(rc, device)
    rep = bench.noise_bench(make_cfg(rc), surrogate, device, rc.sigmas, rc.n_matrices, rc.noise_draws, rc.seed, rc.steps, threads)
    _bench_out(rc, rep, sreport, out)


def cmd_bench_onn(rc, out):
    device = load_device(rc)
    surrogate, sreport = load_surrogate(rc, device)
    cfg = make_cfg(rc)
    results = []
    for mode in rc.modes:
        r = onn.toy_onn_train(mode, cfg, surrogate, device, seed=rc.seed, epochs=rc.epochs, map_steps=rc.steps)
        results.append({
            "mode": r.mode,
            "accuracy": None if np.isnan(r.accuracy) else r.accuracy,
            "teacher_accuracy": r.teacher_accuracy,
            "mapped_accuracy": r.mapped_accuracy,
            "diverged": r.diverged,
            "loss_curve": [float(x) for x in r.loss_curve],
            "map_distances": r.map_distances,
        })
    emit_report(rc, {"onn": results, "config": cfg.to_dict(), "surrogate": _surrogate_info(sreport)}, out=out)


def cmd_hwcost(rc, out):
    dev = hwcost.DeviceParams.from_dict(rc.device_params)
    lines = ["design,k,footprint_um2,il_db,delay_ps,tops,density"]
    rows = []
    for design in rc.designs:
        for k in rc.ks:
            r = hwcost.evaluate(design, k, dev)
            rows.append(asdict(r))
            lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in r.row()))
    csv_text = "\n".join(lines) + "\n"
    notes = [
        "butterfly crossing counts come from a wiring-permutation model",
        "electronic adders reducing k'-block partial sums are not costed",
    ]
    if rc.report_path and rc.report_path.endswith(".json"):
        rc.output_format = "json"
    else:
        rc.output_format = "csv"
    emit_report(rc, {"CostReport": rows, "DeviceParams": dev.to_dict(), "notes": notes}, csv_text, out)


def run(argv=None, out=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        rc = resolve(args)
        threads = max(1, args.threads)
        cmd = args.command
        if cmd in ("bench-expressivity", "bench-quant", "bench-noise"):
            globals()["cmd_" + cmd.replace("-", "_")](rc, out, threads)
        else:
            globals()["cmd_" + cmd.replace("-", "_")](rc, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, ArithmeticError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())
