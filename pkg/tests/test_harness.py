import csv

import numpy as np
import pytest

from ris_ofdm_ce.harness import (
    ConfigError,
    SweepConfig,
    draw_trials,
    generate_training_set,
    hpa_for,
    load_config,
    load_training_set,
    observe,
    read_results,
    run_sweep,
    run_trial,
    save_training_set,
    train_networks,
)
from ris_ofdm_ce.harness.cli import main
from ris_ofdm_ce.harness.config import from_mapping
from ris_ofdm_ce.harness.pipeline import TEST, TRAIN


@pytest.fixture
def small():
    return SweepConfig(
        n_trials=12, n_train=300, hidden_size=32, snr_grid_db=(0.0, 20.0), chunk_size=5
    )


class TestConfig:
    def test_defaults(self):
        cfg = SweepConfig()
        assert (cfg.n_subcarriers, cfg.n_paths, cfg.cp_len, cfg.n_subsurfaces) == (64, 12, 8, 8)
        assert cfg.evm_target == 55.0 and cfg.n_train == 10000 and cfg.hidden_size == 256
        assert cfg.n_links == 9

    @pytest.mark.parametrize(
        "bad",
        [
            {"cp_len": 64},
            {"n_paths": 0},
            {"evm_target": 100.0},
            {"estimators": ["kalman"]},
            {"n_trials": -1},
            {"seed": -1},
        ],
    )
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            from_mapping(bad)

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            from_mapping({"n_subcarrier": 32})

    def test_toml(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('n_paths = 10\nsnr_grid_db = [0, 10]\nestimators = ["ls_only"]\n')
        cfg = load_config(p)
        assert cfg.n_paths == 10 and cfg.snr_grid_db == (0.0, 10.0)
        assert not cfg.needs_network

    def test_bad_toml(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("n_paths = = 3")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_round_trip_dict(self):
        cfg = SweepConfig(seed=9, snr_grid_db=(5,))
        assert from_mapping(cfg.to_dict()) == cfg


class TestPipeline:
    def test_noiseless_sufficient_cp_is_exact(self):
        cfg = SweepConfig(cp_len=11, evm_target=0.0, estimators=("ls_only",))
        assert run_trial(cfg, 0, np.inf)["ls_only"] < 1e-18

    def test_insufficient_cp_floors(self):
        cfg = SweepConfig(evm_target=0.0, estimators=("ls_only",))
        assert run_trial(cfg, 0, np.inf)["ls_only"] > 1e-3

    def test_hpa_degrades_ls(self):
        base = SweepConfig(cp_len=11, estimators=("ls_only",), evm_target=0.0)
        clean = run_trial(base, 3, np.inf)["ls_only"]
        dist = run_trial(base.replace(evm_target=55.0), 3, np.inf)["ls_only"]
        assert dist > clean + 1e-3

    def test_trial_streams_deterministic(self):
        cfg = SweepConfig()
        a, b = draw_trials(cfg, [4, 5]), draw_trials(cfg, [4, 5])
        assert a.unit_noise.tobytes() == b.unit_noise.tobytes()
        assert a.channel.direct.tobytes() == b.channel.direct.tobytes()

    def test_batch_equals_single(self):
        cfg = SweepConfig()
        both = draw_trials(cfg, [2, 7])
        single = draw_trials(cfg, [7])
        assert both.channel.tx_ris[1].tobytes() == single.channel.tx_ris[0].tobytes()

    def test_purposes_disjoint(self):
        cfg = SweepConfig()
        a = draw_trials(cfg, [0], TEST).channel.direct
        b = draw_trials(cfg, [0], TRAIN).channel.direct
        assert not np.allclose(a, b)

    def test_noise_shrinks_with_snr(self):
        cfg = SweepConfig(cp_len=11, evm_target=0.0, estimators=("ls_only",))
        vals = [run_trial(cfg, 1, s)["ls_only"] for s in (0, 10, 20, 30)]
        assert np.all(np.diff(vals) < 0)
        # noise-limited LS: 10 dB more SNR buys about 10 dB less NMSE
        assert vals[2] / vals[3] == pytest.approx(10.0, rel=0.05)

    def test_observation_shapes(self):
        cfg = SweepConfig()
        obs = observe(cfg, draw_trials(cfg, [0, 1, 2]), 10.0)
        assert obs.ls.shape == obs.separated.shape == obs.truth.shape == (3, 64, 9)

    def test_run_trial_wraps_errors(self):
        with pytest.raises(RuntimeError, match="trial 0"):
            run_trial(SweepConfig(), 0, 10.0, networks=None)


class TestTraining:
    def test_dataset_alignment_and_file(self, small, tmp_path):
        data = generate_training_set(small)
        assert data.samples.shape == data.labels.shape == (300, 9, 64)
        assert np.all((data.snr_db >= 0) & (data.snr_db <= 30))
        # labels are the true link CFRs of the same trial
        batch = draw_trials(small, [17], TRAIN)
        obs = observe(small, batch, batch.train_snr_db, hpa_for(small))
        np.testing.assert_allclose(data.labels[17], obs.truth[0].T, atol=1e-12)
        save_training_set(tmp_path / "d.bin", data)
        back = load_training_set(tmp_path / "d.bin")
        assert back.samples.tobytes() == data.samples.tobytes()
        assert back.labels.tobytes() == data.labels.tobytes()
        assert back.drive_scale == data.drive_scale

    def test_dataset_deterministic(self, small, tmp_path):
        save_training_set(tmp_path / "a.bin", generate_training_set(small))
        save_training_set(tmp_path / "b.bin", generate_training_set(small))
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_corrupt_dataset(self, tmp_path):
        (tmp_path / "d.bin").write_bytes(b"EELD\x01\x00")
        with pytest.raises(ValueError):
            load_training_set(tmp_path / "d.bin")

    def test_networks_share_input_layer(self, small):
        nets = train_networks(small, generate_training_set(small))
        assert set(nets) == {"eelm", "elm_no_std"}
        assert nets["eelm"].input_weights.tobytes() == nets["elm_no_std"].input_weights.tobytes()
        assert nets["elm_no_std"].std_mode == "none"
        assert np.all(nets["elm_no_std"].std_scale == 1)


class TestSweep:
    def test_aggregation_recomputes(self, small, tmp_path):
        res = run_sweep(small, out_dir=tmp_path)
        rows = read_results(tmp_path / "results.csv")
        assert len(rows) == 2 * 3
        with open(tmp_path / "trials.csv", newline="") as f:
            trials = list(csv.DictReader(f))
        for r in rows:
            vals = np.array(
                [float(t["nmse"]) for t in trials
                 if float(t["snr_db"]) == r["snr_db"] and t["estimator"] == r["estimator"]]
            )
            assert len(vals) == r["n_trials"] == 12
            assert r["mean_nmse"] == pytest.approx(vals.mean(), rel=1e-12)
            assert r["stderr"] == pytest.approx(vals.std(ddof=1) / np.sqrt(12), rel=1e-12)
        assert res.mean("ls_only").shape == (2,)

    def test_workers_do_not_change_results(self, small):
        a = run_sweep(small.replace(estimators=("ls_only",)), workers=1)
        b = run_sweep(small.replace(estimators=("ls_only",)), workers=4)
        assert a.nmse["ls_only"].tobytes() == b.nmse["ls_only"].tobytes()

    def test_empty_grid(self, small, tmp_path):
        res = run_sweep(small.replace(snr_grid_db=(), estimators=("ls_only",)), out_dir=tmp_path)
        assert res.rows() == []
        assert read_results(tmp_path / "results.csv") == []

    def test_one_trial_has_nan_stderr(self, small):
        res = run_sweep(small.replace(n_trials=1, estimators=("ls_only",)))
        assert np.all(np.isnan(res.stderr("ls_only")))


class TestCli:
    ARGS = ["--trials", "6", "--train-samples", "300", "--snr", "0,20"]

    def test_train_is_deterministic(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("hidden_size = 32\n")
        for d in ("a", "b"):
            assert main(["train", "--seed", "7", "--config", str(cfg), "--out", str(tmp_path / d), *self.ARGS]) == 0
        for name in ("dataset.bin", "model_eelm.bin", "model_elm_no_std.bin"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_sweep_and_report(self, tmp_path, capsys):
        out = tmp_path / "r"
        assert main(["sweep", "--estimators", "ls_only", "--out", str(out), *self.ARGS]) == 0
        assert (out / "results.csv").exists() and (out / "results.json").exists()
        capsys.readouterr()
        assert main(["report", str(out / "results.csv")]) == 0
        assert "ls_only" in capsys.readouterr().out

    def test_calibrate(self, capsys):
        assert main(["calibrate", "--evm", "45"]) == 0
        assert "achieved 45." in capsys.readouterr().out

    def test_missing_config(self, tmp_path, capsys):
        assert main(["sweep", "--config", str(tmp_path / "nope.toml")]) == 1
        assert "config file not found" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path):
        assert main(["sweep", "--cp", "99", "--out", str(tmp_path)]) == 2

    def test_bad_argument(self):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--snr", "abc"])
        assert exc.value.code == 2

    def test_report_missing(self, tmp_path):
        assert main(["report", str(tmp_path / "none.csv")]) == 1
