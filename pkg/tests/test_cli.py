import json

import pytest
import yaml

from noma_outage.cli import main, rows_to_csv
from noma_outage.config import (
    ScenarioConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)
from noma_outage.montecarlo import run_sweep

SMALL_YAML = dict(
    k_aircraft=4,
    m_antennas=4,
    trials=5,
    algorithms=["SSA", "GSA"],
    r_g_list=[2.0, 5.0],
    master_seed=9,
)


@pytest.fixture()
def small_config(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(SMALL_YAML))
    return path


# ---------------------------------------------------------------------------
# config serialization
# ---------------------------------------------------------------------------

def test_config_round_trip(tmp_path):
    cfg = ScenarioConfig(k_aircraft=7, trials=42, coverage_fraction=0.4)
    path = tmp_path / "round.yaml"
    save_config(cfg, str(path))
    assert load_config(str(path)) == cfg


def test_config_dict_round_trip():
    cfg = ScenarioConfig()
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("k_aircrafts: 4\n")
    with pytest.raises(Exception):
        load_config(str(path))


def test_defaults_match_reference_deployment():
    cfg = ScenarioConfig()
    assert cfg.earth_radius_m == 6_371_000.0
    assert cfg.cell_radius_m == 222_000.0
    assert cfg.gs_height_m == 500.0
    assert cfg.aircraft_altitude_m == 10_000.0
    assert cfg.min_separation_m == 10_000.0
    assert cfg.carrier_hz == 987e6
    assert cfg.tx_power_dbm == 41.0
    assert cfg.noise_power_dbm == -107.0
    assert cfg.m_antennas == 64
    assert cfg.coverage_fraction == 0.5
    assert cfg.ground.eps_r == 3.0
    assert cfg.comparison_epsilon == 0.0


# ---------------------------------------------------------------------------
# sweep command
# ---------------------------------------------------------------------------

def test_sweep_writes_expected_csv(small_config, tmp_path):
    out = tmp_path / "out.csv"
    assert main(["sweep", "--config", str(small_config), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "algorithm,K,r_G,rate_mode,p_out,stderr,trials,avg_mults,master_seed"
    assert len(lines) == 1 + 2 * 2  # two algorithms x two rates
    cols = [line.split(",") for line in lines[1:]]
    assert [c[0] for c in cols] == sorted(c[0] for c in cols)
    for c in cols:
        assert c[1] == "4" and c[3] == "equal_rate" and c[6] == "5" and c[8] == "9"
        assert 0.0 <= float(c[4]) <= 1.0


def test_sweep_byte_identical_across_runs_and_threads(small_config, tmp_path):
    out1, out2, out3 = (tmp_path / f"o{i}.csv" for i in range(3))
    assert main(["sweep", "--config", str(small_config), "--out", str(out1)]) == 0
    assert main(["sweep", "--config", str(small_config), "--out", str(out2)]) == 0
    assert main(["sweep", "--config", str(small_config), "--out", str(out3), "--threads", "2"]) == 0
    b1, b2, b3 = out1.read_bytes(), out2.read_bytes(), out3.read_bytes()
    assert b1 == b2 == b3


def test_sweep_rejects_bad_config(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("m_antennas: 5\n")  # not a perfect square
    assert main(["sweep", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 1


def test_sweep_runtime_failure_exit_code(small_config, tmp_path):
    missing_dir = tmp_path / "no" / "such" / "dir" / "x.csv"
    assert main(["sweep", "--config", str(small_config), "--out", str(missing_dir)]) == 2


def test_sweep_overrides_trials_and_seed(small_config, tmp_path):
    out = tmp_path / "o.csv"
    code = main(
        [
            "sweep",
            "--config",
            str(small_config),
            "--out",
            str(out),
            "--trials",
            "3",
            "--seed",
            "123",
            "--algorithms",
            "SSA",
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3  # header + 2 rates, single algorithm
    assert all(line.split(",")[6] == "3" and line.split(",")[8] == "123" for line in lines[1:])


def test_sweep_vmax_applies_to_bare_lgsa(small_config, tmp_path):
    out = tmp_path / "o.csv"
    code = main(
        ["sweep", "--config", str(small_config), "--out", str(out),
         "--algorithms", "SSA,LGSA", "--vmax", "3", "--trials", "2"]
    )
    assert code == 0
    assert any(line.startswith("LGSA:3,") for line in out.read_text().splitlines())


def test_preset_fig4_grid(tmp_path):
    out = tmp_path / "fig4.csv"
    code = main(
        ["sweep", "--preset", "paper-fig4", "--out", str(out),
         "--trials", "1", "--algorithms", "SSA", "--seed", "1"]
    )
    assert code == 0
    lines = out.read_text().splitlines()[1:]
    r_values = [float(line.split(",")[2]) for line in lines]
    assert r_values == [float(r) for r in range(1, 16)]
    assert all(line.split(",")[1] == "32" for line in lines)


def test_sweep_single_trial_single_aircraft_binary_outage(tmp_path):
    cfg = tmp_path / "tiny.yaml"
    cfg.write_text(
        yaml.safe_dump(
            dict(k_aircraft=1, m_antennas=4, trials=1, algorithms=["GSA"], r_g_list=[1.0, 30.0])
        )
    )
    out = tmp_path / "tiny.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()[1:]
    assert len(lines) == 2
    assert all(float(line.split(",")[4]) in (0.0, 1.0) for line in lines)


def test_threads_env_override(small_config, tmp_path, monkeypatch):
    out1 = tmp_path / "env1.csv"
    out2 = tmp_path / "env2.csv"
    assert main(["sweep", "--config", str(small_config), "--out", str(out1)]) == 0
    monkeypatch.setenv("NOMA_OUTAGE_THREADS", "2")
    assert main(["sweep", "--config", str(small_config), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_csv_float_formatting():
    rows = run_sweep(
        ScenarioConfig(
            k_aircraft=3, m_antennas=4, trials=3, algorithms=("SSA",), r_g_list=(3.0,)
        )
    )
    text = rows_to_csv(rows)
    payload = text.splitlines()[1].split(",")
    assert len(payload) == 9
    for field in (payload[4], payload[5], payload[7]):
        assert len(field.replace(".", "").replace("-", "").replace("e", "").lstrip("0")) <= 7


# ---------------------------------------------------------------------------
# validate command
# ---------------------------------------------------------------------------

def test_validate_passes_on_correct_build(capsys):
    assert main(["validate", "--seed", "3", "--instances", "40"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out


def test_validate_detects_injected_fault(capsys):
    code = main(["validate", "--seed", "3", "--instances", "40", "--epsilon", "-0.1"])
    assert code == 3
    err = capsys.readouterr().err
    assert "FAIL" in err
    payload = json.loads(err.strip().splitlines()[-1])
    assert {"seed", "h_re", "h_im", "r", "kind"} <= set(payload)


def test_validate_rejects_zero_instances(capsys):
    assert main(["validate", "--instances", "0"]) == 1


# ---------------------------------------------------------------------------
# complexity command
# ---------------------------------------------------------------------------

def test_complexity_table(capsys):
    assert main(["complexity", "--K", "1", "2", "32"]) == 0
    out = capsys.readouterr().out
    assert "1,1" in out
    assert "2,5" in out
    assert "32,1853015893884545" in out


def test_complexity_rejects_large_k(capsys):
    assert main(["complexity", "--K", "65"]) == 1


def test_complexity_with_measured_counts(small_config, capsys):
    code = main(["complexity", "--K", "2", "--config", str(small_config), "--trials", "2"])
    assert code == 0
    out = capsys.readouterr().out
    assert "algorithm,K,r_G,avg_mults" in out
    assert "SSA,4," in out
