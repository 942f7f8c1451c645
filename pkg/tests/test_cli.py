import json
import struct

import numpy as np
import pytest

from l4dict import load_matrix, orthogonality_defect
from l4dict.cli import dispatch


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = dispatch(args + ["--out", str(out)])
    return code, out


class TestDispatch:
    def test_unknown_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            dispatch(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            dispatch([])
        assert exc.value.code == 2

    def test_domain_error_exits_one(self, tmp_path, capsys):
        code, _ = run(["generate", "--n", "4", "--p", "100", "--theta", "1.5"], tmp_path)
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_verify_passes(self, capsys):
        assert dispatch(["verify", "--seed", "42"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out


class TestGenerate:
    def test_writes_consistent_dataset(self, tmp_path):
        code, out = run(["generate", "--n", "6", "--p", "50", "--theta", "0.4", "--seed", "7"], tmp_path)
        assert code == 0
        d = load_matrix(out / "dictionary.txt")
        x = load_matrix(out / "codes.txt")
        y = load_matrix(out / "observations.txt")
        assert orthogonality_defect(d) <= 1e-8 * np.sqrt(6)
        assert np.allclose(d @ x, y)
        params = json.loads((out / "params.json").read_text())
        assert params == {"n": 6, "p": 50, "theta": 0.4, "seed": 7}
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["subcommand"] == "generate"
        assert manifest["options"]["seed"] == 7

    def test_replay_bit_identical(self, tmp_path):
        _, out1 = run(["generate", "--n", "5", "--p", "30", "--theta", "0.3", "--seed", "3"], tmp_path, "a")
        _, out2 = run(["generate", "--n", "5", "--p", "30", "--theta", "0.3", "--seed", "3"], tmp_path, "b")
        for name in ("dictionary.txt", "codes.txt", "observations.txt"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestSolve:
    def test_synthetic_end_to_end(self, tmp_path):
        code, out = run(
            ["solve", "--alpha", "inf", "--n", "10", "--p", "5000", "--theta", "0.3", "--max-iters", "30"],
            tmp_path,
        )
        assert code == 0
        a = load_matrix(out / "A.txt")
        assert orthogonality_defect(a) <= 1e-8 * np.sqrt(10)
        trace = (out / "trace.csv").read_text().splitlines()
        assert trace[0] == "iter,g_norm,fhat_norm,displacement"
        first = trace[1].split(",")
        assert first[0] == "0" and first[3] == ""
        final_g = float(trace[-1].split(",")[1])
        assert final_g >= 0.99

    def test_reads_observation_file(self, tmp_path):
        _, gen_out = run(["generate", "--n", "8", "--p", "2000", "--theta", "0.3", "--seed", "11"], tmp_path, "gen")
        code, out = run(
            [
                "solve",
                "--y",
                str(gen_out / "observations.txt"),
                "--d",
                str(gen_out / "dictionary.txt"),
                "--theta",
                "0.3",
                "--max-iters",
                "30",
                "--seed",
                "11",
            ],
            tmp_path,
        )
        assert code == 0
        rows = (out / "trace.csv").read_text().splitlines()
        assert float(rows[-1].split(",")[1]) >= 0.99

    def test_precondition_flag(self, tmp_path):
        _, gen_out = run(["generate", "--n", "6", "--p", "3000", "--theta", "0.5", "--seed", "5"], tmp_path, "gen")
        code, _ = run(
            [
                "solve",
                "--y",
                str(gen_out / "observations.txt"),
                "--theta",
                "0.5",
                "--precondition",
                "--max-iters",
                "25",
            ],
            tmp_path,
        )
        assert code == 0

    def test_finite_alpha_with_data_rejected(self, tmp_path, capsys):
        code, _ = run(
            ["solve", "--alpha", "5", "--n", "6", "--p", "500", "--theta", "0.3"],
            tmp_path,
        )
        assert code == 1

    def test_missing_inputs_rejected(self, tmp_path):
        code, _ = run(["solve", "--n", "6"], tmp_path)
        assert code == 1


class TestConfigLayering:
    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 4, "p": 40, "theta": 0.5, "seed": 1}))
        code, out = run(
            ["generate", "--config", str(cfg), "--theta", "0.3"],
            tmp_path,
        )
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["options"]["theta"] == 0.3  # flag wins
        assert manifest["options"]["n"] == 4  # config fills the rest
        assert manifest["options"]["seed"] == 1

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"frobnicate": 1}))
        code, _ = run(["generate", "--config", str(cfg)], tmp_path)
        assert code == 1

    def test_seed_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("L4DICT_SEED", "12345")
        code, out = run(["generate", "--n", "4", "--p", "20", "--theta", "0.5"], tmp_path)
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["options"]["seed"] == 12345

    def test_default_seed_documented_value(self, tmp_path, monkeypatch):
        monkeypatch.delenv("L4DICT_SEED", raising=False)
        code, out = run(["generate", "--n", "4", "--p", "20", "--theta", "0.5"], tmp_path)
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["options"]["seed"] == 42


class TestBatchSubcommands:
    def test_trace_orth_mode(self, tmp_path):
        code, out = run(
            ["trace", "--mode", "orth", "--n", "8", "--trials", "3", "--jobs", "1"],
            tmp_path,
        )
        assert code == 0
        lines = (out / "convergence.csv").read_text().splitlines()
        assert lines[0] == "trial,iter,g_norm,fhat_norm"
        assert len(lines) > 3

    def test_phase_transition_small(self, tmp_path):
        code, out = run(
            [
                "phase-transition",
                "--n",
                "8",
                "--thetas",
                "0.3,0.8",
                "--ps",
                "200,1000",
                "--trials",
                "2",
                "--max-iters",
                "20",
                "--jobs",
                "1",
            ],
            tmp_path,
        )
        assert code == 0
        lines = (out / "phase.csv").read_text().splitlines()
        assert lines[0] == "theta,p,mean_error,success_rate"
        assert len(lines) == 5

    def test_sweep_2k_small(self, tmp_path):
        code, out = run(
            [
                "sweep-2k",
                "--n",
                "6",
                "--theta",
                "0.3",
                "--ps",
                "300",
                "--orders",
                "4,6",
                "--trials",
                "2",
                "--max-iters",
                "20",
                "--jobs",
                "1",
            ],
            tmp_path,
        )
        assert code == 0
        assert (out / "sweep_error.csv").exists()
        det = (out / "sweep_deterministic.csv").read_text().splitlines()
        assert det[0] == "order_2k,iters"

    def test_pga_table_small(self, tmp_path):
        code, out = run(
            ["pga-table", "--ns", "5", "--alphas", "1,inf", "--tol", "1e-6", "--seed", "1"],
            tmp_path,
        )
        assert code == 0
        lines = (out / "pga_table.csv").read_text().splitlines()
        assert lines[0] == "n,alpha,iters"
        assert lines[2].split(",")[1] == "inf"

    def test_probe_concentration_small(self, tmp_path):
        code, out = run(
            ["probe-concentration", "--n", "6", "--theta", "0.3", "--ps", "100,1000", "--trials", "3"],
            tmp_path,
        )
        assert code == 0
        lines = (out / "concentration.csv").read_text().splitlines()
        assert lines[0] == "p,mean_deviation,max_deviation,theory_scale"


class TestImageDict:
    def test_end_to_end(self, tmp_path):
        # synthetic 3x3 images from sparse mixtures, written as IDX bytes
        rng = np.random.default_rng(123)
        count, side = 600, 3
        pix = rng.random((count, side, side))
        payload = np.clip(np.rint(pix * 255), 0, 255).astype(np.uint8).tobytes()
        idx = tmp_path / "imgs.idx"
        idx.write_bytes(struct.pack(">IIII", 0x00000803, count, side, side) + payload)
        code, out = run(
            ["image-dict", "--images", str(idx), "--topk", "4", "--max-iters", "30", "--seed", "2"],
            tmp_path,
        )
        assert code == 0
        rows = (out / "mse.csv").read_text().splitlines()
        assert rows[0] == "k,dictionary_mse,pca_mse"
        assert len(rows) == 5
        mses = [float(r.split(",")[1]) for r in rows[1:]]
        assert all(b <= a + 1e-12 for a, b in zip(mses, mses[1:]))
        a = load_matrix(out / "basis_rows.txt")
        assert orthogonality_defect(a) <= 1e-8 * np.sqrt(9)

    def test_bad_file_exits_one(self, tmp_path):
        bad = tmp_path / "bad.idx"
        bad.write_bytes(b"\x00\x00\x08\x01" + bytes(12))
        code, _ = run(["image-dict", "--images", str(bad)], tmp_path)
        assert code == 1

    def test_missing_images_flag(self, tmp_path):
        code, _ = run(["image-dict"], tmp_path)
        assert code == 1
