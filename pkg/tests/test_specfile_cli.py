import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import oracles
from compound_sk.cli import main
from compound_sk.errors import SpecError
from compound_sk.specfile import (load_spec, parse_spec_text, result_document,
                                  source_to_spec, write_csv)

SPECS = Path(__file__).resolve().parents[1] / "specs"
CASCADE = str(SPECS / "bsc_cascade.json")
NOISELESS = str(SPECS / "noiseless_bob.json")


def spec_text(joint=None, x=2, extra=""):
    joint = joint if joint is not None else ["1/8"] * 8
    return json.dumps({"alphabets": {"x": x, "y": 2, "z": 2},
                       "states": [{"label": "a", "joint": joint}]}, indent=2) + extra


class TestParse:
    def test_cascade_file_matches_oracle(self):
        src = load_spec(CASCADE)
        assert src.labels == ("p010", "p020")
        ref = np.array(oracles.bsc_cascade_joint(0.5, 0.1, 0.15))
        assert np.allclose(src.joints[0], ref, atol=1e-15)
        assert len(src.classes) == 1

    def test_fractions_share_marginal_exactly(self):
        src = load_spec(NOISELESS)
        m0 = src.joints[0].sum(axis=(1, 2))
        m1 = src.joints[1].sum(axis=(1, 2))
        assert np.array_equal(m0, m1)

    def test_decimals_and_numbers(self):
        src = parse_spec_text(spec_text([0.125, "0.125"] + ["1/8"] * 6))
        assert np.allclose(src.joints[0], 1 / 8)

    def test_roundtrip(self):
        src = load_spec(CASCADE)
        back = parse_spec_text(json.dumps(source_to_spec(src)))
        assert np.allclose(back.joints[1], src.joints[1], atol=1e-15)

    @pytest.mark.parametrize("joint,field", [
        (["1/8"] * 7, "states[0].joint"),
        (["1/8"] * 7 + ["x"], "states[0].joint[7]"),
        (["1/4"] + ["1/8"] * 7, "states[0].joint"),
        (["-1/8", "3/8"] + ["1/8"] * 6, "states[0].joint[0]"),
    ])
    def test_errors_name_line_and_field(self, joint, field):
        with pytest.raises(SpecError) as err:
            parse_spec_text(spec_text(joint))
        msg = str(err.value)
        assert f"field {field}:" in msg and msg.startswith("line ")

    def test_bad_alphabet(self):
        with pytest.raises(SpecError, match="alphabets.x"):
            parse_spec_text(spec_text(x=0))

    def test_json_syntax(self):
        with pytest.raises(SpecError, match="line 1"):
            parse_spec_text("{not json")

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecError):
            load_spec(tmp_path / "absent.json")


class TestOutput:
    def test_document_is_stable(self):
        a = result_document("x", {"v": 0.1 + 0.2, "inf": float("inf")}, "1.0")
        b = result_document("x", {"v": 0.1 + 0.2, "inf": float("inf")}, "1.0")
        assert a == b
        doc = json.loads(a)
        assert doc["result"]["v"] == 0.3 and doc["result"]["inf"] == "inf"
        assert "timestamp" not in doc["metadata"]

    def test_stamp(self):
        doc = json.loads(result_document("x", {}, "1.0", stamp="2026-01-01T00:00:00"))
        assert doc["metadata"]["timestamp"] == "2026-01-01T00:00:00"

    def test_csv_header_order(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv([{"a": 1, "b": 2}, {"a": 3, "c": 4}], path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["a", "b", "c"] and len(rows) == 3


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:
    def test_capacity(self, capsys):
        code, out, _ = run_cli(["capacity", CASCADE], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["command"] == "capacity"
        assert abs(doc["result"]["capacity"] - oracles.CASCADE_CAPACITY) < 1e-9

    def test_mi_bound(self, capsys):
        code, out, _ = run_cli(["mi-bound", "--gamma-param", "0.01", "--x-size", "2",
                                "--y-size", "2"], capsys)
        assert code == 0
        assert abs(json.loads(out)["result"]["bound"] - oracles.MI_BOUND_001_2x2) < 1e-9

    def test_exit_codes(self, capsys, tmp_path):
        assert run_cli(["capacity", str(tmp_path / "nope.json")], capsys)[0] == 2
        bad = tmp_path / "bad.json"
        bad.write_text(spec_text(["1/8"] * 7))
        code, _, err = run_cli(["capacity", str(bad)], capsys)
        assert code == 2 and "states[0].joint" in err
        with pytest.raises(SystemExit) as ex:
            main(["simulate", CASCADE])
        assert ex.value.code == 1
        assert run_cli(["mi-bound", "--gamma-param", "0.9", "--x-size", "2",
                        "--y-size", "2"], capsys)[0] == 1

    def test_budget_exit(self, capsys, monkeypatch):
        monkeypatch.setenv("COMPOUND_SK_MAX_SYMBOLS", "10")
        code, _, err = run_cli(["simulate", NOISELESS, "--n", "20", "--codebook-mode",
                                "explicit", "--trials", "5", "--security-mode", "none"], capsys)
        assert code == 3 and "BudgetError" in err

    def test_simulate_byte_identical(self, tmp_path, capsys):
        outs = []
        for k in range(2):
            path = tmp_path / f"r{k}.json"
            code, _, _ = run_cli(["simulate", NOISELESS, "--n", "6", "--trials", "100",
                                  "--seed", "3", "--key-rate", "0.2", "--delta", "0.1",
                                  "--slacks", "0.38,0.40,0.42,0.44", "--out", str(path)],
                                 capsys)
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]
        doc = json.loads(outs[0])
        assert doc["result"]["key_bits"] == 2

    def test_sweep_writes_csv_and_figure(self, tmp_path, capsys):
        csv_path, fig = tmp_path / "s.csv", tmp_path / "s.png"
        code, _, _ = run_cli(["sweep", NOISELESS, "--axis", "n", "--values", "4,6",
                              "--trials", "50", "--n", "4", "--security-mode", "none",
                              "--csv", str(csv_path), "--figure", str(fig),
                              "--slacks", "0.38,0.40,0.42,0.44", "--delta", "0.1"], capsys)
        assert code == 0
        assert csv_path.read_text().startswith("n,")
        assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "compound_sk", "capacity", CASCADE],
                             capture_output=True, text=True)
        assert res.returncode == 0 and '"capacity"' in res.stdout
