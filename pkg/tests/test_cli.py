import io
import json

import numpy as np
import pytest

from mommi_ptc.cli import FORMAT_VERSION, run
from mommi_ptc.lutio import read_lut


@pytest.fixture(scope="module")
def surrogate_file(tmp_path_factory, surrogate):
    path = tmp_path_factory.mktemp("cli") / "surrogate.json"
    path.write_text(json.dumps(surrogate.to_dict()))
    return str(path)


def test_hwcost_csv(tmp_path):
    out = tmp_path / "cost.csv"
    assert run(["hwcost", "--designs", "mzi,m3icro-log", "--k", "4,8,16,32,64", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("design,k,")
    assert len(lines) == 1 + 10
    side = json.loads((tmp_path / "cost.csv.run.json").read_text())
    assert side["format_version"] == FORMAT_VERSION
    assert side["run_config"]["designs"] == ["mzi", "m3icro-log"]


def test_hwcost_json_with_device_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"device": {"CR": {"il_db": 0.0}}}))
    out = tmp_path / "cost.json"
    assert run(["hwcost", "--designs", "mzi", "--k", "4", "--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["report"]["DeviceParams"]["CR"]["il_db"] == 0.0
    assert doc["run_config"]["device_params"] == {"CR": {"il_db": 0.0}}


def test_lut_command(tmp_path):
    out = tmp_path / "lut.bin"
    assert run(["lut", "--k", "4", "--bits", "3", "--out", str(out)]) == 0
    lut = read_lut(out)
    assert len(lut) == 4096 and lut.matrices.shape == (4096, 4, 4)
    assert json.loads((tmp_path / "lut.bin.run.json").read_text())["report"]["entries"] == 4096


def test_design_command_stdout():
    buf = io.StringIO()
    assert run(["design", "--k", "4"], out=buf) == 0
    doc = json.loads(buf.getvalue())
    assert doc["run_config"]["command"] == "design"
    assert doc["report"]["DesignFoM"]["imbalance_db"] <= 3.0


def test_exit_codes(tmp_path, capsys):
    assert run(["no-such-command"]) == 2
    assert run(["fit", "--k", "four"]) == 2
    assert run(["fit", "--variant", "weird", "--steps", "1", "--surrogate-epochs", "1"]) == 2
    assert run(["lut", "--k", "4"]) == 2  # missing --out
    missing = tmp_path / "absent.json"
    assert run(["fit", "--surrogate", str(missing), "--steps", "1"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"device": {"XX": {}}}))
    assert run(["hwcost", "--config", str(bad), "--out", str(tmp_path / "c.csv")]) == 1
    capsys.readouterr()


def test_fit_is_byte_reproducible(tmp_path, surrogate_file):
    # same arguments twice must give identical bytes
    argv = ["fit", "--variant", "log", "--steps", "40", "--seed", "5", "--surrogate", surrogate_file, "--out", str(tmp_path / "f.json")]
    assert run(argv) == 0
    first = (tmp_path / "f.json").read_bytes()
    assert run(argv) == 0
    assert (tmp_path / "f.json").read_bytes() == first


def test_fit_ignores_thread_count(tmp_path, surrogate_file):
    outs = []
    for i, threads in enumerate((1, 4)):
        out = tmp_path / f"fit{i}.json"
        params = tmp_path / f"params{i}.json"
        argv = ["fit", "--variant", "log", "--steps", "40", "--seed", "5", "--surrogate", surrogate_file,
                "--params", str(params), "--out", str(out), "--threads", str(threads)]
        assert run(argv) == 0
        outs.append(out.read_bytes())
    docs = [json.loads(o) for o in outs]
    for doc in docs:
        doc["run_config"].pop("report_path")
        doc["run_config"].pop("params_path")
    assert docs[0] == docs[1]
    assert docs[0]["format_version"] == FORMAT_VERSION
    fit = docs[0]["report"]["FitResult"]
    assert 0 <= fit["distance"] and fit["fidelity"] == pytest.approx(1 - fit["distance"])
    assert fit["steps_run"] == 40 and len(fit["loss_curve"]) >= 40


def test_bench_csv_reproducible(tmp_path, surrogate_file):
    texts = []
    for threads in (1, 2):
        out = tmp_path / f"q{threads}.csv"
        argv = ["bench-quant", "--variant", "log", "--bits-list", "0,3", "--n", "4", "--steps", "20",
                "--surrogate", surrogate_file, "--format", "csv", "--out", str(out), "--threads", str(threads)]
        assert run(argv) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
    rows = texts[0].decode().splitlines()
    assert rows[0] == "bits,mean,std,n" and len(rows) == 3
    assert np.isfinite(float(rows[1].split(",")[1]))
