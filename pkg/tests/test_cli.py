import csv
import io
import json
from pathlib import Path

import pytest

from rateless.cli import main

CONFIGS = Path(__file__).parent.parent / "configs"


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def test_capacity_bsc_and_bec(capsys, tmp_path):
    code, out, _ = call(capsys, "capacity", "--config", str(CONFIGS / "channel_bsc.json"))
    assert code == 0
    assert json.loads(out)["capacity_bits"] == pytest.approx(0.18872187554086717, abs=1e-9)
    code, out, _ = call(capsys, "capacity", "--config", write(tmp_path, "bec.json", {"type": "bec", "delta": 0.3}))
    assert json.loads(out)["capacity_bits"] == pytest.approx(0.7, abs=1e-9)


def test_malformed_json_is_config_error(capsys, tmp_path):
    code, _, err = call(capsys, "capacity", "--config", write(tmp_path, "bad.json", "{not json"))
    assert code == 2 and err.startswith("error:")
    code, _, _ = call(capsys, "simulate", "--config", write(tmp_path, "x.json", {"scheme": "known"}))
    assert code == 2
    code, _, _ = call(capsys, "capacity", "--config", str(tmp_path / "missing.json"))
    assert code == 2


def test_bounds_command(capsys):
    code, out, _ = call(capsys, "bounds", "--config", str(CONFIGS / "bounds_known.json"))
    d = json.loads(out)
    assert code == 0 and d["converse_rate"] > d["rate_known"] > d["rate_limited_feedback"]


def test_empty_grid_gives_header_only(capsys, tmp_path):
    spec = {"grid": {"variable": "M", "values": []}, "params": {"C": 1, "epsilon": 0.01},
            "formulas": ["rate_known"]}
    code, out, _ = call(capsys, "sweep", "--config", write(tmp_path, "s.json", spec))
    assert code == 0 and out == "M,rate_known\n"


def test_sweep_gap_column(capsys):
    code, out, _ = call(capsys, "sweep", "--config", str(CONFIGS / "sweep_penalty.json"))
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 8
    gaps = [float(r["rate_known-rate_universal"]) for r in rows]
    assert all(g > 0 for g in gaps)
    assert all(x > y for x, y in zip(gaps, gaps[1:]))


def test_sweep_with_simulation(capsys, tmp_path):
    spec = json.loads((CONFIGS / "sweep_simulate.json").read_text())
    spec["trials"] = 300
    code, out, _ = call(capsys, "sweep", "--config", write(tmp_path, "s.json", spec), "--format", "json")
    d = json.loads(out)
    assert code == 0 and "sim_rate" in d["columns"]
    for row in d["rows"]:
        assert row["sim_rate"] + row["sim_rate_ci"] >= row["rate_known"]


def test_simulate_outputs_are_reproducible(capsys, tmp_path):
    conf = write(tmp_path, "e.json", {"scheme": "known", "channel": {"type": "bsc", "p": 0.11}, "M": 64,
                                      "trials": 50})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert call(capsys, "simulate", "--config", conf, "--out", str(a), "--dump-trials")[0] == 0
    assert call(capsys, "simulate", "--config", conf, "--out", str(b), "--workers", "2", "--dump-trials")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    ta, tb = tmp_path / "a.trials.csv", tmp_path / "b.trials.csv"
    assert ta.read_bytes() == tb.read_bytes()
    assert ta.read_text().splitlines()[0] == "trial,w,w_hat,T,error,tie,truncated"
    assert len(ta.read_text().splitlines()) == 51


def test_simulate_seed_override(capsys, tmp_path):
    conf = write(tmp_path, "e.json", {"scheme": "known", "channel": {"type": "bsc", "p": 0.11}, "M": 64,
                                      "trials": 50})
    _, one, _ = call(capsys, "simulate", "--config", conf, "--seed", "1")
    _, two, _ = call(capsys, "simulate", "--config", conf, "--seed", "2")
    assert json.loads(one)["config"]["seed"] == 1 and one != two


def test_dump_trials_needs_a_destination(capsys):
    code, _, err = call(capsys, "simulate", "--config", str(CONFIGS / "known_bsc.json"), "--dump-trials")
    assert code == 2 and "--out" in err


def test_simulate_csv_format(capsys, tmp_path):
    conf = write(tmp_path, "e.json", {"scheme": "bec_repetition", "channel": {"type": "bec", "delta": 0.5},
                                      "trials": 100})
    code, out, _ = call(capsys, "simulate", "--config", conf, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1 and rows[0]["scheme"] == "bec_repetition"


def test_verify_quick_passes(capsys):
    code, out, _ = call(capsys, "verify", "--quick")
    assert code == 0
    assert out.count("[PASS]") == 8 and "[FAIL]" not in out


def test_verify_detects_injected_fault(capsys):
    code, out, _ = call(capsys, "verify", "--quick", "--inject-fault", "kt")
    assert code == 1 and "[FAIL]" in out
