import json
import math
from pathlib import Path

import pytest

from zenocavity.cli import main, run_sweep
from zenocavity.config import (
    ConfigError,
    list_presets,
    load_preset,
    parse_config,
    preset_raw,
)


def test_empty_config_lists_missing_keys():
    with pytest.raises(ConfigError) as err:
        parse_config({})
    msg = str(err.value)
    assert "protocol" in msg and "dim" in msg


def test_validation_aggregates_problems():
    with pytest.raises(ConfigError) as err:
        parse_config({
            "protocol": "no_such_thing",
            "dim": 1,
            "steps": 0,
            "interleave": "diagonal",
        })
    problems = err.value.problems
    assert len(problems) >= 4
    joined = " ".join(problems)
    for frag in ("protocol", "dim", "steps", "interleave"):
        assert frag in joined


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config({"protocol": "crush", "dim": 32, "betta": 0.1})
    assert "betta" in str(err.value)


def test_complex_values_parse():
    cfg = parse_config({
        "protocol": "zeno_upper",
        "dim": 72,
        "alpha_init": [-5, 0],
        "beta": 0.1,
        "steps": 45,
    })
    assert cfg.alpha_init == complex(-5, 0)
    assert cfg.beta == complex(0.1, 0)


def test_trajectory_cap_validated_in_config():
    with pytest.raises(ConfigError) as err:
        parse_config({
            "protocol": "tweezer_move",
            "dim": 80,
            "trajectories": [
                {"start": [2, 0], "stop": [0, 5], "steps": 50}
            ],
        })
    assert "adiabatic_cap" in str(err.value)


def test_all_presets_load():
    names = list_presets()
    assert {"fig2a", "fig2b", "fig2c", "fig3", "fig4ab", "fig4c", "fig4d",
            "realistic"} <= set(names)
    for name in names:
        cfg = load_preset(name)
        assert cfg.dim >= 2


def test_preset_fig2a_emits_ten_snapshots(tmp_path):
    rc = main(["preset", "fig2a", "--out", str(tmp_path), "--quiet"])
    assert rc == 0
    csvs = sorted(tmp_path.glob("wigner_step*.csv"))
    assert len(csvs) == 10
    steps = [int(p.stem.split("step")[1]) for p in csvs]
    assert steps == list(range(0, 50, 5))
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["truncation_ok"] is True
    assert (tmp_path / "trace.csv").exists()


def test_preset_fig4ab_summary_fidelity(tmp_path):
    rc = main(["preset", "fig4ab", "--out", str(tmp_path), "--quiet"])
    assert rc == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert abs(summary["fidelity"] - 0.988) < 0.005
    assert summary["kicks"] == 100


def test_run_matches_preset_and_is_deterministic(tmp_path):
    raw = preset_raw("qze")
    cfg_path = tmp_path / "qze.json"
    cfg_path.write_text(json.dumps(raw))
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", str(cfg_path), "--out", str(out_a), "--quiet"]) == 0
    assert main(["run", str(cfg_path), "--out", str(out_b), "--quiet"]) == 0
    assert (out_a / "trace.csv").read_bytes() == (out_b / "trace.csv").read_bytes()


def test_dim_override(tmp_path):
    rc = main(["preset", "qze", "--out", str(tmp_path), "--dim", "24", "--quiet"])
    assert rc == 0
    assert json.loads((tmp_path / "summary.json").read_text())["dim"] == 24


def test_invalid_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"protocol": "crush"}))
    assert main(["run", str(bad), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_state_dump_format(tmp_path):
    raw = preset_raw("qze")
    raw.update({"dump_states": True, "snapshot_steps": [0], "steps": 3})
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps(raw))
    assert main(["run", str(cfg_path), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    dump = (tmp_path / "o" / "state_step000000.txt").read_text().splitlines()
    assert len(dump) == 20
    idx, re_part, im_part = dump[0].split()
    assert idx == "0" and float(re_part) == 1.0 and float(im_part) == 0.0


def test_single_point_sweep_equals_run(tmp_path):
    raw = preset_raw("qze")
    rows = run_sweep(raw, ["beta=0.05"], tmp_path / "sweep")
    assert len(rows) == 1 and rows[0]["error"] == ""
    point_summary = json.loads(
        (tmp_path / "sweep" / "point_0000" / "summary.json").read_text()
    )
    direct = tmp_path / "direct"
    main(["preset", "qze", "--out", str(direct), "--quiet"])
    direct_summary = json.loads((direct / "summary.json").read_text())
    assert point_summary["energy"] == direct_summary["energy"]
    table = (tmp_path / "sweep" / "sweep.csv").read_text().splitlines()
    assert table[0] == "index,beta,fidelity,energy,leak,error"
    assert len(table) == 2


def test_sweep_records_individual_failures(tmp_path):
    raw = preset_raw("qze")
    rows = run_sweep(raw, ["dim=20,1"], tmp_path / "sweep")
    assert rows[0]["error"] == ""
    assert rows[1]["error"] != ""  # dim=1 is invalid, but the sweep finishes
    table = (tmp_path / "sweep" / "sweep.csv").read_text().splitlines()
    assert len(table) == 3


def test_theta_sweep_on_realistic_kicks(tmp_path):
    # scanning the kick angle on the vacuum-confinement run: the ideal
    # angle 2*pi tracks the ideal kicks best and tiny angles lose it
    raw = {
        "protocol": "zeno_confine",
        "dim": 48,
        "s": 6,
        "beta": 0.1,
        "steps": 25,
        "leak_tol": 1e-3,
        "kick_omega": 2 * math.pi * 50e3,
        "kick_rabi_drive": 0.05 * 2 * math.pi * 50e3 * (math.sqrt(7) - math.sqrt(6)),
        "kick_theta": 1.0,
    }
    thetas = [2 * math.pi, 2.0, 1.0, 0.5]
    rows = run_sweep(raw, ["kick_theta=" + ",".join(str(t) for t in thetas)],
                     tmp_path)
    fids = [r["fidelity"] for r in rows]
    assert all(r["error"] == "" for r in rows)
    assert fids[0] > fids[3]  # monotone tendency across the sweep ends
    assert fids[2] > 0.9  # one radian still reproduces the run
