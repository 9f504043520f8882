import csv
import io
import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

from gaptooth.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def coeff_map(series_json):
    return {(t["delta_power"], t["has_mu"]): {p: F(c) for c, p in t["coeff"]}
            for t in series_json["terms"]}


class TestExpand:
    def test_order_8_table(self, capsys):
        code, out, _ = run(capsys, "expand", "--order", "8")
        assert code == 0
        plus = coeff_map(json.loads(out)["plus"])
        assert plus[(7, True)] == {0: F(-1, 140), 2: F(7, 240), 4: F(-1, 72), 6: F(1, 720)}
        assert plus[(8, False)] == {1: F(-1, 560), 3: F(7, 1440), 5: F(-1, 480), 7: F(1, 5040)}

    def test_order_2(self, capsys):
        _, out, _ = run(capsys, "expand", "--order", "2")
        data = json.loads(out)
        assert coeff_map(data["plus"]) == {(1, True): {0: 1}, (2, False): {1: 1}}
        assert coeff_map(data["minus"]) == {(1, True): {0: 1}, (2, False): {1: -1}}

    def test_numeric_r(self, capsys):
        _, out, _ = run(capsys, "expand", "--order", "8", "--r", "0.1")
        data = json.loads(out)
        assert data["r"] == "1/10"
        plus = coeff_map(data["plus"])
        r = F(1, 10)
        assert plus[(3, True)] == {0: F(-1, 6) + r * r / 2}

    def test_csv(self, capsys):
        _, out, _ = run(capsys, "expand", "--order", "2", "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["edge", "delta_power", "has_mu", "r_power", "coeff", "value"]
        assert ["+", "2", "0", "1", "1", "1"] in rows

    def test_order_guard(self, capsys):
        code, _, err = run(capsys, "expand", "--order", "17")
        assert code == 2 and "config error" in err


class TestStencil:
    def test_json(self, capsys):
        _, out, _ = run(capsys, "stencil", "--order", "2", "--r", "0.1", "--edge", "plus")
        d = json.loads(out)
        assert d["sign"] == 1
        assert d["weights"] == pytest.approx({"-1": -0.4, "0": -0.2, "1": 0.6})

    def test_bad_order(self, capsys):
        assert run(capsys, "stencil", "--order", "3")[0] == 2


class TestSpectrum:
    def test_table_row(self, capsys, tmp_path):
        table = tmp_path / "t.csv"
        code, out, _ = run(capsys, "spectrum", "--patches", "8", "--npoints", "11", "--r", "0.1",
                           "--order", "4", "--table-csv", str(table))
        assert code == 0
        assert "-0.996" in out
        with open(table) as fh:
            row = list(csv.DictReader(fh))[0]
        assert float(row["lambda_4_5"]) == pytest.approx(-3.787268, rel=1e-3)

    def test_csv_suffix_for_several_m(self, capsys, tmp_path):
        path = tmp_path / "s.csv"
        run(capsys, "spectrum", "--patches", "4", "5", "--npoints", "5", "--csv", str(path))
        assert (tmp_path / "s_m4.csv").exists() and (tmp_path / "s_m5.csv").exists()


class TestSimulate:
    def test_zero_data(self, capsys):
        code, out, _ = run(capsys, "simulate", "--initial", "zero", "--t-end", "0.01",
                           "--every", "0.005")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 3 * 8 * 11
        assert all(float(r["u"]) == 0.0 for r in rows)

    def test_cosine_decay(self, capsys):
        code, out, _ = run(capsys, "simulate", "--model", "diffusion", "--patches", "16",
                           "--dt", "2e-6", "--t-end", "0.05", "--every", "0.05")
        assert code == 0
        rows = [r for r in csv.DictReader(io.StringIO(out))
                if r["patch_j"] == "0" and r["fine_i"] == "5"]
        assert [float(r["t"]) for r in rows] == pytest.approx([0, 0.05])
        assert float(rows[-1]["u"]) == pytest.approx(math.exp(-0.05), rel=1e-4)

    def test_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert main(["simulate", "--t-end", "0.005", "-o", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_blow_up_exit_code(self, capsys):
        code, _, err = run(capsys, "simulate", "--model", "diffusion", "--dt", "1e-3",
                           "--t-end", "0.1", "--no-stability-check")
        assert code == 3 and "numerical failure" in err

    def test_cfl_violation_is_config_error(self, capsys):
        assert run(capsys, "simulate", "--model", "diffusion", "--dt", "1e-3")[0] == 2

    def test_insulated(self, capsys):
        code, out, _ = run(capsys, "simulate", "--order", "0", "--initial", "const",
                           "--t-end", "0.001")
        assert code == 0
        assert np.allclose([float(r["u"]) for r in csv.DictReader(io.StringIO(out))], 1.0)


class TestMacroEig:
    def test_second_order(self, capsys):
        _, out, _ = run(capsys, "macro-eig", "--patches", "4", "--order", "2")
        rows = list(csv.DictReader(io.StringIO(out)))
        H = math.pi / 2
        got = sorted(float(r["re_lambda"]) for r in rows)
        assert got[0] == pytest.approx(-4 / H**2)
        assert got[-1] == 0.0


class TestConvergence:
    def test_fourth_order(self, capsys):
        code, out, _ = run(capsys, "convergence", "--patches", "4", "8", "16", "--order", "4")
        assert code == 0
        fitted = float(out.strip().splitlines()[-1].split(":")[1])
        assert fitted > 3.5


class TestConfig:
    def test_toml_defaults_and_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.toml"
        cfg.write_text('[stencil]\norder = 6\nr = 0.25\nedge = "plus"\n')
        _, out, _ = run(capsys, "stencil", "--config", str(cfg))
        d = json.loads(out)
        assert d["p"] == 3 and d["r"] == pytest.approx(0.25)
        _, out, _ = run(capsys, "stencil", "--config", str(cfg), "--r", "0.1")
        assert json.loads(out)["r"] == pytest.approx(0.1)

    def test_top_level_keys(self, tmp_path, capsys):
        cfg = tmp_path / "run.toml"
        cfg.write_text("order = 4\n")
        _, out, _ = run(capsys, "stencil", "--config", str(cfg), "--edge", "minus")
        assert json.loads(out)["p"] == 2

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.toml"
        cfg.write_text("[stencil]\nbogus = 1\n")
        assert run(capsys, "stencil", "--config", str(cfg))[0] == 2

    def test_missing_file(self, capsys):
        assert run(capsys, "stencil", "--config", "/nonexistent.toml")[0] == 2
