import json

import numpy as np
import pytest

from glasslocal.cli import main
from glasslocal.config import CONFIG_SCHEMA, resolve_config, ConfigError
from glasslocal.disorder import read_tensors


def run_cli(*args):
    return main(list(args))


class TestConfig:
    def test_defaults_materialized(self):
        cfg = resolve_config({"kind": "sample"})
        assert cfg["sampler"]["delta"] == 0.05
        assert cfg["sampler"]["L"] == 400
        assert cfg["sampler"]["k_amp"] == 30
        assert cfg["sampler"]["k_ngd"] == 100
        assert cfg["sampler"]["eta"] == 0.1
        assert cfg["sampler"]["gamma"] == 1.0

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="bogus"):
            resolve_config({"kind": "se", "bogus": 1})

    def test_nested_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="sampler"):
            resolve_config({"kind": "sample", "sampler": {"junk": 2}})

    def test_schema_is_strict_everywhere(self):
        assert CONFIG_SCHEMA["additionalProperties"] is False
        assert CONFIG_SCHEMA["properties"]["sampler"]["additionalProperties"] is False


class TestSubcommands:
    def test_thresholds_sk(self, tmp_path, capsys):
        out = tmp_path / "th.json"
        code = run_cli("thresholds", "--mixture", '{"2": 0.5}', "--out", str(out))
        assert code == 0
        rep = json.loads(out.read_text())
        assert rep["beta1"] == pytest.approx(1.0, abs=1e-3)
        assert rep["beta2"] == pytest.approx(1.0, abs=1e-3)
        assert rep["beta3"] == 0.5
        assert rep["beta_c_rs"] == pytest.approx(1.0, abs=2e-3)
        # resolved config echoed next to the result
        paired = json.loads((tmp_path / "th.json.config.json").read_text())
        assert paired["kind"] == "thresholds"
        assert paired["thresholds"]["c0"] == 0.25

    def test_malformed_config_names_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"kind": "se", "betaa": 0.3}))
        code = run_cli("se", "--config", str(cfg))
        assert code == 2
        assert "betaa" in capsys.readouterr().err

    def test_se_csv(self, tmp_path):
        out = tmp_path / "se.csv"
        code = run_cli(
            "se", "--beta", "0.5", "--set", "se.t_max=1.0", "--set", "se.t_step=0.5",
            "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "t,q_star,psi_star,mmse"
        rows = [line.split(",") for line in lines[1:]]
        assert float(rows[0][1]) == 0.0  # q*(t=0) = 0 below beta1
        assert float(rows[2][1]) == pytest.approx(0.5946385559, abs=1e-6)

    def test_gen_disorder_roundtrip(self, tmp_path):
        out = tmp_path / "g.gltn"
        assert run_cli("gen-disorder", "--n", "4", "--seed", "9", "--out", str(out)) == 0
        g = read_tensors(out)
        assert g.n == 4 and g.seed == 9

    def test_amp_csv(self, tmp_path):
        out = tmp_path / "amp.csv"
        code = run_cli(
            "amp", "--n", "300", "--beta", "0.5", "--seed", "1",
            "--set", "amp.k=5", "--set", "amp.t=1.0", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "k,q_hat,mse_empirical,mse_predicted,z_increment_ratio"
        assert len(lines) == 6

    def test_tap_json(self, tmp_path):
        out = tmp_path / "tap.json"
        code = run_cli(
            "tap", "--n", "60", "--beta", "0.3", "--seed", "2",
            "--set", "tap.q=0.2", "--set", "tap.k_amp=10", "--out", str(out),
        )
        assert code == 0
        rep = json.loads(out.read_text())
        assert {"ftap_value", "grad_norm", "relative_hessian_min"} <= set(rep)

    def test_exact_and_w2(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for path, seed in ((a, 3), (b, 4)):
            code = run_cli(
                "exact", "--n", "6", "--beta", "0.2", "--seed", str(seed),
                "--set", "exact.m_samples=50", "--out", str(path),
            )
            assert code == 0
        out = tmp_path / "w2.csv"
        code = run_cli(
            "w2", "--set", f'w2.batch_a="{a}"', "--set", f'w2.batch_b="{b}"',
            "--out", str(out),
        )
        assert code == 0
        val = float(out.read_text().strip().split("\n")[1])
        assert 0.0 <= val <= 2.0

    def test_glauber_csv(self, tmp_path):
        out = tmp_path / "gl.csv"
        code = run_cli(
            "glauber", "--n", "5", "--beta", "0.2", "--seed", "5",
            "--set", "glauber.sweeps=40", "--set", "glauber.burn_in=10",
            "--set", "glauber.thin=2", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "state,x_bits_hex"
        assert len(lines) == 16

    def test_chaos_csv(self, tmp_path):
        out = tmp_path / "chaos.csv"
        code = run_cli(
            "chaos", "--n", "8", "--beta", "1.0", "--seed", "0",
            "--set", "chaos.s_list=[0.0,1.0]", "--set", "chaos.n_seeds=2",
            "--set", "chaos.batch_size=50", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "s,seed,overlap_moment,w2"
        assert len(lines) == 5

    def test_stability_csv(self, tmp_path):
        out = tmp_path / "st.csv"
        code = run_cli(
            "stability", "--n", "6", "--beta", "0.2", "--seed", "0",
            "--set", "stability.s_list=[0.0,0.5]", "--set", "stability.n_seeds=1",
            "--set", "stability.replicas=2",
            "--set", "sampler.L=4", "--set", "sampler.delta=0.25",
            "--set", "sampler.k_amp=4", "--set", "sampler.k_ngd=6",
            "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "s,seed,spin_distance,mean_distance"
        first = lines[1].split(",")
        assert float(first[2]) == 0.0  # s = 0 row is exactly zero


class TestDeterminism:
    SAMPLE_ARGS = [
        "sample", "--n", "8", "--beta", "0.25", "--seed", "11",
        "--set", "sampler.L=6", "--set", "sampler.delta=0.25",
        "--set", "sampler.k_amp=6", "--set", "sampler.k_ngd=10",
        "--set", "sampler.replicas=5",
    ]

    def test_sample_threads_byte_identical(self, tmp_path):
        outs = []
        for threads, name in ((1, "s1.csv"), (4, "s4.csv")):
            out = tmp_path / name
            code = run_cli(*self.SAMPLE_ARGS, "--threads", str(threads), "--out", str(out))
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_rerun_byte_identical(self, tmp_path):
        outs = []
        for name in ("r1.csv", "r2.csv"):
            out = tmp_path / name
            assert run_cli(*self.SAMPLE_ARGS, "--out", str(out)) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_rerun_from_resolved_config(self, tmp_path):
        out1 = tmp_path / "c1.csv"
        assert run_cli(*self.SAMPLE_ARGS, "--out", str(out1)) == 0
        resolved = json.loads((tmp_path / "c1.csv.config.json").read_text())
        cfg2 = tmp_path / "resolved.json"
        resolved["out"] = str(tmp_path / "c2.csv")
        cfg2.write_text(json.dumps(resolved))
        assert run_cli("sample", "--config", str(cfg2)) == 0
        assert out1.read_bytes() == (tmp_path / "c2.csv").read_bytes()

    def test_chaos_threads_byte_identical(self, tmp_path):
        outs = []
        for threads, name in ((1, "c1.csv"), (3, "c3.csv")):
            out = tmp_path / name
            code = run_cli(
                "chaos", "--n", "6", "--beta", "0.5", "--seed", "2",
                "--set", "chaos.s_list=[0.0,0.3]", "--set", "chaos.n_seeds=3",
                "--set", "chaos.batch_size=30",
                "--threads", str(threads), "--out", str(out),
            )
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_validate_subcommand(self):
        assert run_cli("validate") == 0

    def test_env_var_thread_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GLASSLOCAL_THREADS", "3")
        out = tmp_path / "env.csv"
        assert run_cli(*self.SAMPLE_ARGS, "--out", str(out)) == 0
        ref = tmp_path / "ref.csv"
        monkeypatch.delenv("GLASSLOCAL_THREADS")
        assert run_cli(*self.SAMPLE_ARGS, "--out", str(ref)) == 0
        assert out.read_bytes() == ref.read_bytes()

    def test_trajectory_dump(self, tmp_path):
        out = tmp_path / "t.csv"
        code = run_cli(
            *self.SAMPLE_ARGS, "--set", "sampler.keep_trajectory=true", "--out", str(out)
        )
        assert code == 0
        traj = np.fromfile(tmp_path / "t.csv.traj.bin", dtype="<f8")
        # replicas x (L+1) x n doubles
        assert traj.size == 5 * 7 * 8
        assert np.all(traj.reshape(5, 7, 8)[:, 0, :] == 0.0)  # y_0 = 0

    def test_w2_accepts_bits_files(self, tmp_path):
        from glasslocal.baselines import SampleBatch, write_batch_bits

        gen = np.random.default_rng(3)
        spins = np.where(gen.uniform(size=(10, 6)) < 0.5, -1.0, 1.0)
        path = tmp_path / "b.bits"
        write_batch_bits(path, SampleBatch(spins=spins))
        out = tmp_path / "w2b.csv"
        code = run_cli(
            "w2", "--set", f'w2.batch_a="{path}"', "--set", f'w2.batch_b="{path}"',
            "--out", str(out),
        )
        assert code == 0
        assert float(out.read_text().strip().split("\n")[1]) == 0.0

    def test_seventeen_digit_floats(self, tmp_path):
        out = tmp_path / "se.csv"
        run_cli("se", "--beta", "0.5", "--set", "se.t_max=0.5", "--set", "se.t_step=0.5",
                "--out", str(out))
        val = out.read_text().strip().split("\n")[2].split(",")[1]
        assert float(val) == float(format(float(val), ".17g"))
