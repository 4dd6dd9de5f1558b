import json
from importlib import resources

import numpy as np
import pytest
from scipy.stats import norm

from sorkinsim import io as sio
from sorkinsim.cli import main
from sorkinsim.sorkin import RateOctet

SMALL = """\
source:
  kind: coherent
detector_true:
  tau0_s: 4.5e-8
campaign:
  runs: 50
  rate_grid: [1000.0, 1.0e6]
  seed: 5
output:
  stem: small
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestSimulate:
    def test_csv_and_meta(self, tmp_path):
        cfg = write(tmp_path, "c.yaml", SMALL)
        assert main(["simulate", cfg, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "small.csv").exists()
        meta = json.loads((tmp_path / "o" / "small.meta.json").read_text())
        assert meta["seed"] == 5 and meta["mode"] == "monte_carlo"

    def test_seed_override(self, tmp_path):
        cfg = write(tmp_path, "c.yaml", SMALL)
        main(["simulate", "--config", cfg, "--seed", "6", "--out", str(tmp_path / "a")])
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "small.csv").read_bytes() != (tmp_path / "b" / "small.csv").read_bytes()

    def test_json_format(self, tmp_path):
        cfg = write(tmp_path, "c.yaml", SMALL)
        assert main(["simulate", cfg, "--format", "json", "--out", str(tmp_path)]) == 0
        rows = json.loads((tmp_path / "small.json").read_text())["rows"]
        assert len(rows) == 2

    def test_sweep_config(self, tmp_path):
        text = resources.files("sorkinsim").joinpath("data", "configs", "corrected_rate_law.yaml").read_text()
        cfg = write(tmp_path, "c.yaml", text)
        assert main(["simulate", cfg, "--out", str(tmp_path)]) == 0
        meta = next(tmp_path.glob("*.meta.json"))
        assert len(json.loads(meta.read_text())["crossings_hz"]["constant"]) == 1

    def test_parse_error_exit_2(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.yaml", SMALL + "bogus: 1\n")
        assert main(["simulate", cfg, "--out", str(tmp_path)]) == 2
        assert "line 11" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["simulate", str(tmp_path / "none.yaml")]) == 2

    def test_domain_error_exit_3(self, tmp_path):
        cfg = write(tmp_path, "c.yaml", SMALL.replace("runs: 50", "runs: -1"))
        assert main(["simulate", cfg, "--out", str(tmp_path)]) == 3

    def test_strict_failure_exit_3(self, tmp_path):
        text = SMALL.replace("rate_grid: [1000.0, 1.0e6]", "rate_grid: [1000.0, 1.0e9]")
        text += "detector_assumed:\n  tau0_s: 6.0e-8\n"
        cfg = write(tmp_path, "c.yaml", text)
        assert main(["simulate", cfg, "--out", str(tmp_path)]) == 0
        assert main(["simulate", cfg, "--out", str(tmp_path), "--strict"]) == 3

    def test_argparse_error_exit_2(self):
        with pytest.raises(SystemExit) as info:
            main(["simulate", "--seed", "x"])
        assert info.value.code == 2


class TestAnalysis:
    def test_kappa_report(self, tmp_path, capsys):
        octets = [(RateOctet([0, 1, 1, 1, 4, 4, 4, 9 + 0.1 * i]), 1.0) for i in range(5)]
        sio.write_rate_octets(octets, tmp_path / "o.csv")
        assert main(["kappa", str(tmp_path / "o.csv")]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["n_octets"] == 5
        assert report["octets"][1]["kappa"] == pytest.approx(0.1 / 6)
        assert set(report["aggregate"]["fits"]) == {"moments", "histogram_lsq"}

    def test_kappa_undefined_rows(self, tmp_path, capsys):
        sio.write_rate_octets([(RateOctet([0, 1, 1, 1, 2, 2, 2, 3]), 1.0)], tmp_path / "o.csv")
        assert main(["kappa", str(tmp_path / "o.csv")]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["n_undefined"] == 1 and report["octets"][0]["kappa"] is None

    def test_visibility_default(self, capsys):
        assert main(["visibility"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "paths,visibility_pct"
        assert out[-1].endswith("0.710000")

    def test_visibility_json(self, capsys):
        assert main(["visibility", "--efficiencies", "0.3", "0.3", "0.3", "--format", "json"]) == 0
        assert json.loads(capsys.readouterr().out)["visibility_pct"]["AB"] == 100.0

    def test_visibility_domain(self):
        assert main(["visibility", "--efficiencies", "0", "0.3", "0.3"]) == 3

    def test_deadtime(self, tmp_path, capsys):
        assert main(["generate", "superposition", "--tau", "43.5e-9", "--window", "0",
                     "--repetitions", "3", "--out", str(tmp_path)]) == 0
        assert main(["deadtime", str(tmp_path / "superposition.csv"), "--per-row"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["tau_s"] == pytest.approx(43.5e-9, abs=1e-12)
        assert len(report["per_row_tau_s"]) == 3

    def test_deadtime_linear_exit_4(self, tmp_path):
        sio.write_superposition([sio.SuperpositionMeasurement(2e3, 1e3, 1e3)] * 2, tmp_path / "s.csv")
        assert main(["deadtime", str(tmp_path / "s.csv")]) == 4

    def test_fit_constant_exit_4(self, tmp_path):
        (tmp_path / "k.txt").write_text("1\n1\n1\n")
        assert main(["fit", str(tmp_path / "k.txt")]) == 4

    def test_fit(self, tmp_path, capsys):
        x = norm.ppf((np.arange(1, 1001) - 0.5) / 1000)
        sio.write_values(x, tmp_path / "k.txt")
        assert main(["fit", str(tmp_path / "k.txt")]) == 0
        fits = json.loads(capsys.readouterr().out)["fits"]
        assert fits[0]["mu"] == pytest.approx(0.0, abs=1e-12)

    def test_gate(self, tmp_path, capsys):
        (tmp_path / "t.txt").write_text("0\n2e-8\n1e-7\n")
        assert main(["gate", str(tmp_path / "t.txt"), "--tau", "4.5e-8"]) == 0
        assert [float(v) for v in capsys.readouterr().out.split()] == [0.0, 1e-7]

    def test_gate_unsorted_exit_3(self, tmp_path):
        (tmp_path / "t.txt").write_text("1\n0\n")
        assert main(["gate", str(tmp_path / "t.txt")]) == 3

    @pytest.mark.parametrize("what,name", [("octets", "octets.csv"), ("timestamps", "timestamps.txt")])
    def test_generate(self, tmp_path, what, name):
        assert main(["generate", what, "--window", "1e-3", "--repetitions", "4", "--out", str(tmp_path)]) == 0
        assert (tmp_path / name).stat().st_size > 0
