import csv
import io
import json
import subprocess
import sys

import pytest

from rcrdesign.cli import main, parse_rho_grid


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestMinimax:
    def test_straight_line(self, capsys):
        code, out, _ = run(capsys, "minimax", "--model", "linear", "--case", "SL", "--n", "10")
        assert code == 0
        (r,) = rows(out)
        assert r["w_closed"] == "0.759746927"
        assert abs(float(r["w_numeric"]) - float(r["w_closed"])) <= 1e-8
        assert float(r["abs_diff"]) <= 1e-8

    def test_q3_equals_q2(self, capsys):
        _, out3, _ = run(capsys, "minimax", "--model", "quadratic", "--case", "Q3", "--n", "50")
        _, out2, _ = run(capsys, "minimax", "--case", "Q2", "--n", "50")
        assert rows(out3)[0]["w_closed"] == rows(out2)[0]["w_closed"]

    def test_n_one(self, capsys):
        code, _, err = run(capsys, "minimax", "--case", "SL", "--n", "1")
        assert code == 2
        assert "n >= 2" in err

    def test_model_mismatch(self, capsys):
        assert run(capsys, "minimax", "--model", "linear", "--case", "Q1", "--n", "4")[0] == 2

    def test_unknown_case(self, capsys):
        assert run(capsys, "minimax", "--case", "Q7", "--n", "4")[0] == 2


class TestCriterion:
    def test_value(self, capsys):
        code, out, _ = run(capsys, "criterion", "--model", "linear", "--design", "0:0.5,1:0.5",
                           "--d", "zero,inf", "--n", "4")
        assert code == 0
        r = rows(out)[0]
        # 4/3 + 3 * (1/3) / 0.5
        assert float(r["value"]) == pytest.approx(10 / 3, rel=1e-8)
        assert r["value"] == "3.33333333"
        assert r["population_term"] == "1.33333333"
        assert r["prediction_term"] == "2"

    def test_singular(self, capsys):
        code, _, err = run(capsys, "criterion", "--model", "linear", "--design", "1:1", "--d", "zero,inf", "--n", "4")
        assert code == 3
        assert "information matrix" in err

    def test_single_individual(self, capsys):
        _, out, _ = run(capsys, "criterion", "--model", "quadratic", "--design=-1:0.25,0:0.5,1:0.25",
                        "--d", "1,inf,zero", "--n", "1")
        assert float(rows(out)[0]["prediction_term"]) == 0.0

    def test_wrong_tag_count(self, capsys):
        assert run(capsys, "criterion", "--model", "quadratic", "--design", "0:1", "--d", "1,1", "--n", "2")[0] == 2

    def test_bad_design(self, capsys):
        assert run(capsys, "criterion", "--design", "0:0.5,1:0.6", "--d", "1,1", "--n", "2")[0] == 2
        assert run(capsys, "criterion", "--design", "0;1", "--d", "1,1", "--n", "2")[0] == 2

    def test_polynomial_with_config(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({
            "model": "polynomial", "degree": 3, "region": [0, 2],
            "design": {"support": [0, 0.5, 1.5, 2], "weights": [0.25, 0.25, 0.25, 0.25]},
            "d": ["inf", 1, "zero", 2.5], "n": 3, "m": 4,
            "measure": {"points": [0, 1, 2], "masses": [0.25, 0.5, 0.25]},
        }))
        code, out, _ = run(capsys, "criterion", "--config", str(cfg))
        assert code == 0
        assert float(rows(out)[0]["value"]) > 0

    def test_csv_out(self, capsys, tmp_path):
        out_file = tmp_path / "crit.csv"
        code, out, _ = run(capsys, "criterion", "--design", "0:0.5,1:0.5", "--d", "1,1", "--n", "2",
                           "--out", str(out_file))
        assert code == 0
        assert out_file.read_text() == out
        assert out.endswith("\n") and "\r" not in out


class TestConfig:
    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"case": "SL", "n": 10, "nn": 3}))
        code, _, err = run(capsys, "minimax", "--config", str(cfg))
        assert code == 2 and "nn" in err

    def test_flags_override_and_verbose(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"case": "SL", "n": 10}))
        code, out, err = run(capsys, "minimax", "--config", str(cfg), "--n", "4", "--verbose")
        assert code == 0
        assert rows(out)[0]["n"] == "4"
        assert json.loads(err.strip().splitlines()[0])["n"] == "4"

    def test_bad_json(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{")
        assert run(capsys, "minimax", "--config", str(cfg))[0] == 2

    def test_missing_config(self, capsys, tmp_path):
        assert run(capsys, "minimax", "--config", str(tmp_path / "nope.json"))[0] == 2

    def test_rho_grid(self):
        g = parse_rho_grid("0.01:0.99:0.01")
        assert len(g) == 99 and g[0] == 0.01 and g[-1] == 0.99
        with pytest.raises(ValueError):
            parse_rho_grid("0:0.5:0.1")


class TestEfficiencyCurve:
    def test_columns(self, capsys):
        code, out, _ = run(capsys, "efficiency-curve", "--case", "Q1", "--n", "10,50", "--rho-grid", "0.1:0.9:0.2")
        assert code == 0
        data = rows(out)
        assert list(data[0]) == ["rho", "eff_n10", "eff_n50"]
        assert [r["rho"] for r in data] == ["0.1", "0.3", "0.5", "0.7", "0.9"]
        effs = [float(r["eff_n10"]) for r in data]
        assert effs == sorted(effs) and 0 < effs[0] and effs[-1] <= 1


class TestFigures:
    def test_weight_figures(self, capsys, tmp_path):
        code, _, _ = run(capsys, "figures", "--out", str(tmp_path), "--cases", "SL,Q4",
                         "--rho-grid", "0.5:0.99:0.49", "--n-range", "2:40")
        assert code == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["figure1.csv", "figure2.csv", "figure5.csv"]
        f1 = rows((tmp_path / "figure1.csv").read_text())
        assert list(f1[0]) == ["n", "w_star"]
        assert (f1[0]["n"], f1[0]["w_star"]) == ("2", "0.585786438")
        f5 = [float(r["w_star"]) for r in rows((tmp_path / "figure5.csv").read_text())]
        assert all(a > b for a, b in zip(f5, f5[1:]))
        f2 = rows((tmp_path / "figure2.csv").read_text())
        assert list(f2[0]) == ["rho", "eff_n10", "eff_n50", "eff_n500"]
        assert float(f2[1]["eff_n10"]) >= float(f2[0]["eff_n10"])

    def test_q3_maps_to_figure4(self, capsys, tmp_path):
        run(capsys, "figures", "--out", str(tmp_path), "--cases", "Q3", "--rho-grid", "0.5:0.5:0.1", "--n-range", "2:5")
        assert sorted(p.name for p in tmp_path.iterdir()) == ["figure4.csv", "figure8.csv"]

    def test_unwritable(self, capsys, tmp_path):
        code, _, err = run(capsys, "figures", "--out", str(tmp_path / "missing"), "--cases", "SL")
        assert code == 4

    def test_bad_range(self, capsys, tmp_path):
        assert run(capsys, "figures", "--out", str(tmp_path), "--n-range", "1:10")[0] == 2


class TestSimulate:
    def test_pass(self, capsys):
        code, out, _ = run(capsys, "simulate", "--n", "1", "--replicates", "100000", "--seed", "42")
        assert code == 0
        r = rows(out)[0]
        assert r["result"] == "pass" and float(r["max_z"]) <= 4

    def test_repeatable(self, capsys):
        a = run(capsys, "simulate", "--n", "2", "--replicates", "5000", "--seed", "1")[1]
        b = run(capsys, "simulate", "--n", "2", "--replicates", "5000", "--seed", "1")[1]
        assert a == b

    def test_too_few_replicates(self, capsys):
        assert run(capsys, "simulate", "--replicates", "10")[0] == 2

    def test_statistical_failure_exit(self, capsys, monkeypatch):
        import rcrdesign.simulation as sim

        real = sim.mse_matrix

        def biased(F, D, n):
            out = real(F, D, n)
            return type(out)(out.matrix + 1.0, out.n, out.p)

        monkeypatch.setattr(sim, "mse_matrix", biased)
        code, out, err = run(capsys, "simulate", "--replicates", "2000")
        assert code == 5
        assert rows(out)[0]["result"] == "fail"

    def test_infinite_variance_rejected(self, capsys):
        assert run(capsys, "simulate", "--d", "inf,1", "--replicates", "1000")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rcrdesign", "minimax", "--case", "Q5", "--n", "4"],
                          capture_output=True, text=True, check=True)
    assert rows(proc.stdout)[0]["w_closed"] == "0.333333333"


def test_argparse_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2
