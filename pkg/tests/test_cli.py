import json
from pathlib import Path

import numpy as np
import pytest

from rql import cli
from rql.calibrate import ResonanceScan


def _config(tmp_path, **over):
    cfg = {
        "schema_version": 1,
        "geometry": {"n_sites": 6, "lattice_constant_um": 9.0},
        "protocol": {"omega_target_rad_per_us": 2.2, "total_time_us": 0.5},
        "variant": {"tag": "minimal", "delta_r_um": 0.1},
        "ensemble": {"n_realizations": 3},
        "stride": 5,
        "master_seed": 7,
    }
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(cfg.get(k), dict):
            cfg[k].update(v)
        else:
            cfg[k] = v
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def _csv_bytes(d: Path):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.suffix == ".csv"}


def test_simulate_writes_outputs(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["simulate", "--config", str(_config(tmp_path)), "--out", str(out), "--threads", "1"]) == 0
    for name in ("magnetization", "domain_wall", "qfi_density", "entropy", "correlators", "correlators_sem"):
        assert (out / f"{name}.csv").exists()
    assert (out / "entropy.csv").read_text().splitlines()[0] == "time_us,mean_nats,sem_nats"
    assert (out / "magnetization.csv").read_text().splitlines()[0] == "time_us,mean,sem"
    man = json.loads((out / "manifest.json").read_text())
    assert len(man["realization_seeds"]) == 3
    assert man["derived"]["v_c_um_per_us"] == pytest.approx(39.6)
    assert man["derived"]["disorder_strength_w"] == pytest.approx(12 * 0.1 / 9)
    assert json.loads((out / "timing.json").read_text())["wall_clock_s"] >= 0


def test_same_seed_gives_identical_bytes(tmp_path):
    cfg = _config(tmp_path, measurement={"n_shots_per_realization": 20, "prep_failure_per_atom": 0.01})
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(d), "--threads", "1"]) == 0
    assert _csv_bytes(a) == _csv_bytes(b)
    assert (a / "mitigation.json").read_bytes() == (b / "mitigation.json").read_bytes()
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    ma["resolved_config"].pop("output_dir")
    mb["resolved_config"].pop("output_dir")
    assert ma == mb


def test_threads_do_not_change_bytes(tmp_path):
    cfg = _config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["simulate", "--config", str(cfg), "--out", str(a), "--threads", "1"])
    cli.main(["simulate", "--config", str(cfg), "--out", str(b), "--threads", "3"])
    assert _csv_bytes(a) == _csv_bytes(b)


def test_manifest_reproduces_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["simulate", "--config", str(_config(tmp_path)), "--out", str(a), "--threads", "1"])
    assert cli.main(["simulate", "--config", str(a / "manifest.json"), "--out", str(b), "--threads", "1"]) == 0
    assert _csv_bytes(a) == _csv_bytes(b)


def test_seed_changes_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = str(_config(tmp_path))
    cli.main(["simulate", "--config", cfg, "--out", str(a), "--threads", "1"])
    cli.main(["simulate", "--config", cfg, "--out", str(b), "--threads", "1", "--seed", "8"])
    assert (a / "magnetization.csv").read_bytes() != (b / "magnetization.csv").read_bytes()


@pytest.mark.parametrize("over", [
    {"geometry": {"n_sites": 6, "lattice_constant_um": -1}},
    {"variant": {"tag": "quantum"}},
    {"observables": ["bogus"]},
    {"schema_version": 2},
    {"protocol": {"omega_target_rad_per_us": 2.2, "dt_us": 0.3}},
    {"extra_key": 1},
])
def test_config_errors_exit_1(tmp_path, over, capsys):
    code = cli.main(["simulate", "--config", str(_config(tmp_path, **over)), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "rql:" in capsys.readouterr().err


def test_missing_config_exit_1(tmp_path):
    assert cli.main(["simulate", "--config", str(tmp_path / "nope.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert cli.main(["simulate", "--config", str(bad)]) == 1


def test_usage_error_exit_1():
    with pytest.raises(SystemExit) as e:
        cli.main(["simulate"])
    assert e.value.code == 1


def test_size_limit_exit_2(tmp_path, capsys):
    cfg = _config(tmp_path, geometry={"n_sites": 20, "lattice_constant_um": 9.0})
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "L=20" in capsys.readouterr().err


def test_mitigate_command(tmp_path, capsys):
    shots = tmp_path / "shots.csv"
    shots.write_text("site_0,site_1,site_2,prep_ok\n0,0,0,1\n0,0,0,1\n1,1,1,0\n")
    assert cli.main(["mitigate", str(shots), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "mitigation.json").read_text())
    assert rep["n_retained"] == 2 and rep["retention_rate"] == pytest.approx(2 / 3)
    assert rep["raw"]["magnetization"] == -1.0
    assert rep["mitigated_outside_unit_interval"] is True
    assert cli.main(["mitigate", str(shots), "--no-postselect", "--p01", "0", "--p10", "0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["n_retained"] == 3


def test_mitigate_bad_rows(tmp_path, capsys):
    shots = tmp_path / "shots.csv"
    shots.write_text("site_0,site_1\n0,1\n0,x\n")
    assert cli.main(["mitigate", str(shots)]) == 1
    assert "line 3" in capsys.readouterr().err
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert cli.main(["mitigate", str(empty)]) == 1


def test_calibrate_command(tmp_path):
    det = np.linspace(-30, 30, 25)
    scan = ResonanceScan.synthetic(det, 15.7, 0.4, t_pulse=np.pi / 15.0)
    path = tmp_path / "scan.csv"
    path.write_text(scan.to_csv())
    assert cli.main(["calibrate", str(path), "--omega-guess", "15", "--bootstrap", "0", "--out", str(tmp_path)]) == 0
    fit = json.loads((tmp_path / "calibration.json").read_text())
    assert fit["omega_cal_rad_per_us"] == pytest.approx(15.7, rel=1e-3)
    assert fit["detuning_shift_rad_per_us"] == pytest.approx(0.4, rel=1e-3)
    flat = tmp_path / "flat.csv"
    flat.write_text(ResonanceScan(det, np.full(25, 0.5)).to_csv())
    assert cli.main(["calibrate", str(flat), "--omega-guess", "15"]) == 1


def test_lightcone_command(tmp_path):
    run = tmp_path / "run"
    cfg = _config(tmp_path, variant={"tag": "ideal"}, protocol={"omega_target_rad_per_us": 2.2,
                                                                 "total_time_us": 1.0}, stride=1)
    cli.main(["simulate", "--config", str(cfg), "--out", str(run), "--threads", "1"])
    assert cli.main(["lightcone", str(run)]) == 0
    rep = json.loads((run / "lightcone.json").read_text())
    assert rep["n_points"] == 3
    assert rep["v_c_um_per_us"] == pytest.approx(39.6)
    assert (run / "front.csv").read_text().startswith("arrival_time_us,distance_um")
    assert cli.main(["lightcone", str(run), "--threshold", "5"]) == 2
    assert cli.main(["lightcone", str(tmp_path / "missing")]) == 1


def test_spectrum_command(tmp_path):
    cfg = _config(tmp_path, ensemble={"n_realizations": 4})
    out = tmp_path / "spec"
    assert cli.main(["spectrum", "--config", str(cfg), "--out", str(out)]) == 0
    summary = json.loads((out / "spectrum.json").read_text())
    assert 0 < summary["mean_gap_ratio"] < 1
    lines = (out / "dos.csv").read_text().splitlines()
    assert lines[0] == "energy_lo_rad_per_us,energy_hi_rad_per_us,density_per_rad_per_us"
    assert len(lines) == 51


def test_sweep_command(tmp_path):
    out = tmp_path / "sw"
    cfg = str(_config(tmp_path))
    assert cli.main(["sweep", "--config", cfg, "--out", str(out), "--threads", "1",
                     "--axis", "omega_target_rad_per_us", "--values", "2,5"]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("omega_target_rad_per_us,j_nn_rad_per_us")
    assert len(lines) == 3
    assert (out / "omega_target_rad_per_us=2" / "manifest.json").exists()
    assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 1


def test_motion_needs_geometry(tmp_path):
    cfg = _config(tmp_path, variant={"tag": "motion"})
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
