import json

import numpy as np
import pytest

import wavelearn as wl


def test_windowed_rrc_has_unit_energy_and_known_aclr():
    c = wl.windowed_rrc(0.0, duration=32.0, half_width=100)
    assert c.shape == (201,)
    t = np.linspace(-16.0, 16.0, 20001)[1:-1]
    g = np.asarray(wl.filter_time(c, 32.0, t))
    energy = np.sum(np.abs(g) ** 2) * (t[1] - t[0])
    assert energy == pytest.approx(1.0, abs=1e-3)
    assert wl.aclr_db(c, 32.0) == pytest.approx(-21.47, abs=0.05)


def test_aclr_increases_with_rolloff():
    values = [wl.aclr_db(wl.windowed_rrc(b, 32.0, 100), 32.0) for b in (0.0, 0.5, 1.0)]
    assert values == sorted(values)


def test_gray_qam_is_unit_energy_and_centered():
    pts = np.asarray(wl.qam_gray(4))
    assert pts.size == 16
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0)
    assert abs(np.mean(pts)) < 1e-12


def test_baseline_rate_is_bounded_by_bits_per_symbol():
    c = wl.windowed_rrc(0.5, duration=8.0, half_width=20)
    r = wl.baseline_rate(c, 8.0, snr_db=10.0, block_length=256, num_blocks=4, seed=1)
    assert 2.0 < r <= 4.0


def test_oracle_suite_passes():
    rep = wl.run_suite("nyquist")
    assert rep["passed"]
    assert rep["cases"] > 0


def test_config_round_trip_and_errors():
    text = wl.parse_config('{"seed": 3, "mode": "two_user"}')
    assert json.loads(text)["seed"] == 3
    assert wl.parse_config(text) == text
    assert wl.config_hash(text) != wl.config_hash(wl.parse_config('{"seed": 4, "mode": "two_user"}'))
    with pytest.raises(wl.ConfigError, match="seeed"):
        wl.parse_config('{"seeed": 1}')


def test_cli_train_and_eval(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "block_length": 32,
                "duration_symbols": 4,
                "half_width_S": 6,
                "batch_size": 2,
                "papr_batch": 100,
                "inner_steps": 2,
                "outer_iterations": 1,
                "eval_symbols": 200,
                "papr_samples": 200,
                "threads": 1,
                "receiver": {"num_blocks": 1, "channels": 6, "dilations": [1]},
            }
        )
    )
    out = tmp_path / "run"
    assert wl.cli(["train", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "metrics.jsonl").exists()
    ev = tmp_path / "eval"
    ckpt = str(out / "checkpoint.manifest.json")
    assert wl.cli(["eval", "--checkpoint", ckpt, "--out", str(ev), "--snr-grid", "0:10:3"]) == 0
    rows = [l for l in (ev / "curves" / "rate.csv").read_text().splitlines() if l and not l.startswith("#")]
    assert rows[0] == "x,y"
    assert len(rows) == 4
    assert wl.cli(["train", "--config", str(tmp_path / "missing.json")]) != 0
