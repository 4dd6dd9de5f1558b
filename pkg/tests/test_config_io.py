from importlib import resources

import numpy as np
import pytest

from sorkinsim import io as sio
from sorkinsim.campaign import CampaignConfig, run_campaign, sweep_corrected_kappa
from sorkinsim.config import Mode, parse_config
from sorkinsim.errors import ConfigError, DomainError
from sorkinsim.sorkin import RateOctet
from sorkinsim.sources import SourceKind, SourceModel
from sorkinsim.spad import DeadtimeModel, SuperpositionMeasurement

MINIMAL = """\
campaign:
  rate_grid: [1000.0, 10000.0]
  runs: 10
"""


def shipped(name):
    return resources.files("sorkinsim").joinpath("data", "configs", name).read_text()


class TestConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        cc = cfg.campaign_config()
        assert cc.source.kind is SourceKind.COHERENT
        assert cc.true_detector.tau0 == 45e-9
        assert cc.rate_grid == (1000.0, 10000.0)

    def test_round_trip(self):
        cfg = parse_config(shipped("uncorrected_sps.yaml"))
        assert parse_config(cfg.dump()) == cfg

    @pytest.mark.parametrize("name", ["uncorrected_sps.yaml", "uncorrected_laser.yaml",
                                      "corrected_constant.yaml", "corrected_rate_law.yaml"])
    def test_shipped_configs_valid(self, name):
        cfg = parse_config(shipped(name))
        cfg.campaign_config()

    def test_log_grid(self):
        grid = parse_config(shipped("uncorrected_sps.yaml")).campaign.grid()
        assert len(grid) == 13 and grid[0] == pytest.approx(10.0) and grid[-1] == pytest.approx(1e7)

    def test_unknown_key_location(self):
        text = MINIMAL + "detector_true:\n  tau0_s: 4.5e-8\n  taoo: 1\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert (info.value.line, info.value.column) == (6, 3)
        assert "taoo" in str(info.value)

    def test_wrong_type_location(self):
        with pytest.raises(ConfigError) as info:
            parse_config("campaign:\n  rate_grid: [1.0]\n  runs: many\n")
        assert info.value.line == 3

    def test_syntax_error(self):
        with pytest.raises(ConfigError) as info:
            parse_config("campaign: [1, 2\n")
        assert info.value.line is not None

    def test_not_mapping(self):
        with pytest.raises(ConfigError):
            parse_config("- 1\n- 2\n")

    def test_domain_error_deferred(self):
        cfg = parse_config(MINIMAL.replace("runs: 10", "runs: 0"))
        with pytest.raises(DomainError):
            cfg.campaign_config()

    def test_fixture_amplitudes(self):
        cfg = parse_config(MINIMAL + "interferometer:\n  fixture: grating_experiment\n")
        amps = cfg.campaign_config().path_amplitudes
        assert len(amps) == 3 and len(set(amps)) == 3

    def test_coherent_has_no_period(self):
        cfg = parse_config(MINIMAL + "source:\n  kind: coherent\n  pulse_period_s: 1.0e-7\n")
        with pytest.raises(DomainError):
            cfg.campaign_config()

    def test_mode(self):
        assert parse_config(shipped("corrected_constant.yaml")).campaign.mode is Mode.CORRECTED_SWEEP


class TestIO:
    def test_octet_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        octets = [(RateOctet(rng.uniform(0, 1e6, 8)), 1.0) for _ in range(5)]
        sio.write_rate_octets(octets, tmp_path / "o.csv")
        back = sio.read_rate_octets(tmp_path / "o.csv")
        assert all(a[0] == b[0] and a[1] == b[1] for a, b in zip(octets, back))

    def test_octet_missing_column(self, tmp_path):
        (tmp_path / "o.csv").write_text("r0,ra\n1,2\n")
        with pytest.raises(ConfigError):
            sio.read_rate_octets(tmp_path / "o.csv")

    def test_octet_non_numeric(self, tmp_path):
        header = ",".join(sio.OCTET_COLUMNS)
        (tmp_path / "o.csv").write_text(header + "\n" + ",".join(["1"] * 8 + ["x"]) + "\n")
        with pytest.raises(ConfigError) as info:
            sio.read_rate_octets(tmp_path / "o.csv")
        assert info.value.line == 2

    def test_octet_negative(self, tmp_path):
        header = ",".join(sio.OCTET_COLUMNS)
        (tmp_path / "o.csv").write_text(header + "\n" + ",".join(["-1"] + ["1"] * 8) + "\n")
        with pytest.raises(DomainError):
            sio.read_rate_octets(tmp_path / "o.csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            sio.read_values(tmp_path / "nope.txt")

    def test_superposition_round_trip(self, tmp_path):
        ms = [SuperpositionMeasurement(3e6, 1.5e6, 1.6e6, 10.0)]
        sio.write_superposition(ms, tmp_path / "s.csv")
        assert sio.read_superposition(tmp_path / "s.csv") == ms

    def test_values_round_trip(self, tmp_path):
        x = np.random.default_rng(1).uniform(size=20)
        sio.write_values(x, tmp_path / "v.txt")
        assert np.array_equal(sio.read_values(tmp_path / "v.txt"), x)

    def test_values_strict_order(self, tmp_path):
        (tmp_path / "v.txt").write_text("0.0\n1.0\n1.0\n")
        with pytest.raises(DomainError):
            sio.read_values(tmp_path / "v.txt", strictly_increasing=True)

    def test_values_comments(self, tmp_path):
        (tmp_path / "v.txt").write_text("# header\n1.0\n\n2.0\n")
        assert sio.read_values(tmp_path / "v.txt").tolist() == [1.0, 2.0]

    def test_campaign_csv(self, tmp_path):
        cfg = CampaignConfig(SourceModel.coherent(0.0), DeadtimeModel.constant(45e-9), [1e3, 1e4], runs=5)
        sio.write_campaign_csv(run_campaign(cfg), tmp_path / "c.csv")
        lines = (tmp_path / "c.csv").read_text().splitlines()
        assert lines[0] == ",".join(sio.CAMPAIGN_COLUMNS)
        assert len(lines) == 3

    def test_sweep_outputs(self, tmp_path):
        t = sweep_corrected_kappa(43.5e-9, [45e-9], [1e5, 1e6])
        sio.write_sweep_csv(t, tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text().splitlines()[0] == "rate_hz,kappa_tau_45ns"
        sio.write_json(sio.sweep_json(t), tmp_path / "s.json")
        assert '"kappa"' in (tmp_path / "s.json").read_text()

    def test_fmt(self):
        assert sio.fmt(3) == "3"
        assert sio.fmt(0.1) == "1.0000000000000001e-01"
        assert float(sio.fmt(1 / 3)) == 1 / 3
        assert sio.fmt(float("nan")) == "nan"
