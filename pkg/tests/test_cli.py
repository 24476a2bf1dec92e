import json

import numpy as np
import pytest

from zipsbm.cli import main
from zipsbm.netcore import load_network


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--scenario", "1", "--seed", "7", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def fitted(sim, tmp_path_factory):
    out = tmp_path_factory.mktemp("fit")
    code = main(["fit", str(sim / "network.csv"), "--attributes", str(sim / "attributes.csv"),
                 "--iters", "400", "--burn-in", "200", "--seed", "3", "--out", str(out)])
    assert code == 0
    return out


def test_simulate_writes_four_files(sim):
    assert sorted(p.name for p in sim.iterdir()) == ["attributes.csv", "manifest.json", "network.csv",
                                                     "truth.json"]
    truth = json.loads((sim / "truth.json").read_text())
    assert set(truth) >= {"z0", "pi0", "lambda0", "X", "W"}
    Y = load_network(sim / "network.csv").ties
    assert np.array_equal(Y, np.array(truth["W"]) * (1 - np.array(truth["X"])))
    attrs = (sim / "attributes.csv").read_text().split()
    assert sum(a != str(z) for a, z in zip(attrs, truth["z0"])) == 20


def test_simulate_scenario3_size(tmp_path):
    assert main(["simulate", "--scenario", "3", "--seed", "1", "--out", str(tmp_path)]) == 0
    assert load_network(tmp_path / "network.csv").num_nodes == 120


def test_simulate_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--scenario", "1"])
    assert exc.value.code == 2
    assert main(["simulate", "--scenario", "9", "--out", str(tmp_path)]) == 2
    (tmp_path / "bad.json").write_text("{}")
    assert main(["simulate", "--spec", str(tmp_path / "bad.json"), "--out", str(tmp_path)]) == 2


def test_fit_outputs_and_manifest(fitted, sim):
    lines = (fitted / "trace.jsonl").read_text().splitlines()
    assert len(lines) == 200
    rec = json.loads(lines[0])
    assert rec["iteration"] == 201 and rec["chain"] == 0 and min(rec["z"]) == 1
    manifest = json.loads((fitted / "manifest.json").read_text())
    assert manifest["subcommand"] == "fit" and manifest["seed"] == 3
    assert manifest["config"]["gamma"] == 0.3 and manifest["config"]["b"] == 9.0
    assert len(manifest["inputs"]["network"]["sha256"]) == 64
    assert sorted(p.name for p in fitted.iterdir()) == ["h_trace.csv", "manifest.json", "trace.jsonl"]


def test_fit_default_draw_count_contract():
    from zipsbm.cli import SAMPLER_DEFAULTS

    assert (SAMPLER_DEFAULTS["iters"] - SAMPLER_DEFAULTS["burn_in"]) // SAMPLER_DEFAULTS["thin"] == 10_000


def test_fit_rejects_bad_gamma(sim, tmp_path):
    assert main(["fit", str(sim / "network.csv"), "--gamma", "1.5", "--out", str(tmp_path)]) == 2
    assert main(["fit", str(sim / "network.csv"), "--gamma", "0.7", "--iters", "3", "--burn-in", "1",
                 "--out", str(tmp_path)]) == 0


def test_fit_data_errors(tmp_path):
    (tmp_path / "asym.csv").write_text("0,1\n2,0\n")
    assert main(["fit", str(tmp_path / "asym.csv"), "--out", str(tmp_path / "o")]) == 3
    assert main(["fit", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")]) == 3


def test_config_file_precedence(sim, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sampler settings\ngamma = 0.5\niters = 30\nburn-in = 10\nseed = 11\n")
    assert main(["fit", str(sim / "network.csv"), "--config", str(cfg), "--seed", "12",
                 "--out", str(tmp_path / "o")]) == 0
    config = json.loads((tmp_path / "o" / "manifest.json").read_text())["config"]
    assert config["gamma"] == 0.5 and config["iters"] == 30 and config["burn_in"] == 10
    assert config["seed"] == 12 and config["b"] == 9.0
    (tmp_path / "bad.cfg").write_text("iters = many\n")
    assert main(["fit", str(sim / "network.csv"), "--config", str(tmp_path / "bad.cfg"),
                 "--out", str(tmp_path / "o2")]) == 2


def test_fit_from_manifest_is_bit_exact(fitted, tmp_path):
    assert main(["--from-manifest", str(fitted / "manifest.json"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trace.jsonl").read_bytes() == (fitted / "trace.jsonl").read_bytes()


def test_fit_variants(sim, tmp_path):
    common = ["--iters", "30", "--burn-in", "10"]
    assert main(["fit", str(sim / "network.csv"), "--variant", "p-sbm", *common, "--out", str(tmp_path / "p")]) == 0
    part = tmp_path / "z.txt"
    part.write_text("\n".join(str(1 + i // 16) for i in range(80)))
    assert main(["fit", str(sim / "network.csv"), "--fixed-partition", str(part), *common,
                 "--out", str(tmp_path / "f")]) == 0
    rec = json.loads((tmp_path / "f" / "trace.jsonl").read_text().splitlines()[0])
    assert "pi_lower" in rec and len(rec["pi_lower"]) == 15
    part.write_text("1\n2\n")
    assert main(["fit", str(sim / "network.csv"), "--fixed-partition", str(part), *common,
                 "--out", str(tmp_path / "g")]) == 2


def test_fit_multiple_chains(sim, tmp_path):
    assert main(["fit", str(sim / "network.csv"), "--chains", "2", "--iters", "30", "--burn-in", "10",
                 "--out", str(tmp_path)]) == 0
    chains = [json.loads(r)["chain"] for r in (tmp_path / "trace.jsonl").read_text().splitlines()]
    assert chains == [0] * 20 + [1] * 20


@pytest.fixture(scope="module")
def estimated(fitted, tmp_path_factory):
    out = tmp_path_factory.mktemp("est")
    assert main(["estimate", str(fitted / "trace.jsonl"), "--out", str(out)]) == 0
    return out


def test_estimate_outputs(estimated, sim):
    est = json.loads((estimated / "estimate.json").read_text())
    assert {"z_hat", "H_hat", "expected_vi", "ball_radius", "ball_mass", "z_bound"} <= set(est)
    assert est["H_hat"] == 5
    truth = json.loads((sim / "truth.json").read_text())
    from zipsbm.partition import vi_distance

    assert vi_distance(est["z_hat"], truth["z0"]) == 0.0
    S = np.loadtxt(estimated / "similarity.csv", delimiter=",")
    assert S.shape == (80, 80) and np.allclose(np.diag(S), 1)


def test_estimate_alpha_monotone(fitted, estimated, tmp_path):
    assert main(["estimate", str(fitted / "trace.jsonl"), "--alpha", "0.5", "--out", str(tmp_path)]) == 0
    wide = json.loads((estimated / "estimate.json").read_text())["ball_radius"]
    narrow = json.loads((tmp_path / "estimate.json").read_text())["ball_radius"]
    assert narrow <= wide


def test_estimate_single_draw_and_empty(tmp_path):
    (tmp_path / "one.jsonl").write_text(json.dumps({"iteration": 1, "chain": 0, "H": 2, "z": [1, 1, 2]}) + "\n")
    assert main(["estimate", str(tmp_path / "one.jsonl"), "--out", str(tmp_path / "o")]) == 0
    est = json.loads((tmp_path / "o" / "estimate.json").read_text())
    assert est["z_hat"] == [1, 1, 2] and est["ball_radius"] == 0.0
    (tmp_path / "empty.jsonl").write_text("")
    assert main(["estimate", str(tmp_path / "empty.jsonl"), "--out", str(tmp_path / "e")]) == 3
    assert main(["estimate", str(tmp_path / "one.jsonl"), "--alpha", "1.5", "--out", str(tmp_path / "e")]) == 2


def test_analyze_outputs_and_replay(sim, estimated, tmp_path):
    out = tmp_path / "a"
    args = ["analyze", str(sim / "network.csv"), "--partition", str(estimated / "estimate.json"),
            "--iters", "600", "--burn-in", "200", "--seed", "2", "--out", str(out)]
    assert main(args) == 0
    report = json.loads((out / "report.json").read_text())
    truth = json.loads((sim / "truth.json").read_text())
    pi_hat = np.array(report["blocks"]["pi_mean"])
    lam_hat = np.array(report["blocks"]["lambda_mean"])
    idx = np.tril_indices(5)
    assert np.abs(pi_hat - np.array(truth["pi0"]))[idx].mean() <= 0.05
    assert np.abs(lam_hat - np.array(truth["lambda0"]))[idx].mean() <= 0.1
    ranking = (out / "ranking.csv").read_text().splitlines()
    assert ranking[0] == "rank,v,u,p_hidden_positive,sd" and len(ranking) > 1
    assert main(["--from-manifest", str(out / "manifest.json"), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "report.json").read_bytes() == (out / "report.json").read_bytes()
    assert (tmp_path / "b" / "ranking.csv").read_bytes() == (out / "ranking.csv").read_bytes()


def test_analyze_errors_and_all_positive(tmp_path):
    Y = np.full((4, 4), 2) - 2 * np.eye(4, dtype=int)
    np.savetxt(tmp_path / "net.csv", Y, fmt="%d", delimiter=",")
    (tmp_path / "z.txt").write_text("1\n1\n2\n2\n")
    assert main(["analyze", str(tmp_path / "net.csv"), "--partition", str(tmp_path / "z.txt"),
                 "--iters", "20", "--burn-in", "10", "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "ranking.csv").read_text().strip() == "rank,v,u,p_hidden_positive,sd"
    (tmp_path / "short.txt").write_text("1\n2\n")
    assert main(["analyze", str(tmp_path / "net.csv"), "--partition", str(tmp_path / "short.txt"),
                 "--iters", "20", "--burn-in", "10", "--out", str(tmp_path / "o2")]) == 2


def test_validate_exit_codes(tmp_path, capsys):
    assert main(["validate", "--rounds", "20000", "--seed", "1", "--out", str(tmp_path)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert json.loads((tmp_path / "validation.json").read_text())["passed"] is True
    assert main(["validate", "--rounds", "20000", "--seed", "1", "--mutate", "skip-step-2"]) == 4
    # a threshold nobody can meet turns the shipped sampler into a failure
    assert main(["validate", "--rounds", "20000", "--seed", "1", "--threshold", "0.0001"]) == 4
    assert main(["validate", "--nodes", "12"]) == 2


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 2
