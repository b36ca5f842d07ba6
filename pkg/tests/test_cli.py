import json

import numpy as np
import pytest

from polyfab.cli import main, load_config, run_gradcheck


def write_cfg(path, **over):
    cfg = {
        "model": {"layers": [{"m": 2, "n": 1, "heads": [{
            "expansion": {"kind": "taylor", "d": 2},
            "reconciliation": {"kind": "identity"},
            "remainder": {"kind": "linear"}}]}]},
        "dataset": {"source": "function", "id": "E.0", "n": 200, "seed": 0},
        "train": {"loss": "mse", "optimizer": "adam",
                  "opt_hyper": {"lr": 0.05}, "epochs": 30, "seeds": [0, 1]},
    }
    cfg.update(over)
    path.write_text(json.dumps(cfg))
    return cfg


def test_train_writes_artifacts(tmp_path, capsys):
    cfgp = tmp_path / "cfg.json"
    write_cfg(cfgp)
    out = tmp_path / "run"
    assert main(["train", "--config", str(cfgp), "--out", str(out)]) == 0
    assert (out / "summary.json").exists()
    assert (out / "report.txt").exists()
    assert (out / "metadata.json").exists()
    assert (out / "params_seed0_fold0.npy").exists()
    assert (out / "params_seed1_fold0.npy").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["param_count"] == 8
    assert len(summary["runs"]) == 2
    assert "mean" in summary["aggregate"]
    stdout = capsys.readouterr().out
    assert "cherry-picked" in stdout


def test_train_reports_are_deterministic(tmp_path):
    cfgp = tmp_path / "cfg.json"
    write_cfg(cfgp)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["train", "--config", str(cfgp), "--out", str(out)]) == 0
        outs.append(out)
    assert (outs[0] / "summary.json").read_bytes() == (outs[1] / "summary.json").read_bytes()
    assert (outs[0] / "report.txt").read_bytes() == (outs[1] / "report.txt").read_bytes()
    a = np.load(outs[0] / "params_seed0_fold0.npy")
    b = np.load(outs[1] / "params_seed0_fold0.npy")
    assert np.array_equal(a, b)


def test_eval_checkpoint(tmp_path, capsys):
    cfgp = tmp_path / "cfg.json"
    write_cfg(cfgp)
    out = tmp_path / "run"
    main(["train", "--config", str(cfgp), "--out", str(out)])
    code = main(["eval", "--config", str(cfgp),
                 "--checkpoint", str(out / "params_seed0_fold0.npy")])
    assert code == 0
    assert "mse" in capsys.readouterr().out


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfgp = tmp_path / "cfg.json"
    cfg = write_cfg(cfgp)
    cfg["trian"] = cfg.pop("train")
    cfgp.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(cfgp)]) == 2
    assert "trian" in capsys.readouterr().err


def test_unknown_head_key_exits_2(tmp_path):
    cfgp = tmp_path / "cfg.json"
    cfg = write_cfg(cfgp)
    cfg["model"]["layers"][0]["heads"][0]["expnasion"] = {"kind": "identity"}
    cfgp.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(cfgp)]) == 2


def test_missing_dataset_path_exits_2(tmp_path):
    cfgp = tmp_path / "cfg.json"
    write_cfg(cfgp, dataset={"source": "csv", "path": str(tmp_path / "nope.csv")})
    assert main(["train", "--config", str(cfgp)]) == 2


def test_bad_json_exits_2(tmp_path):
    cfgp = tmp_path / "cfg.json"
    cfgp.write_text("{not json")
    assert main(["train", "--config", str(cfgp)]) == 2


def test_divergence_exits_3(tmp_path):
    cfgp = tmp_path / "cfg.json"
    write_cfg(cfgp, train={"loss": "mse", "optimizer": "sgd",
                           "opt_hyper": {"lr": 1e9}, "epochs": 50, "seeds": [0]},
              dataset={"source": "function", "id": "E.3", "n": 200, "seed": 0})
    assert main(["train", "--config", str(cfgp), "--out", str(tmp_path / "o")]) == 3


def test_gen_data_then_train_csv(tmp_path):
    csvp = tmp_path / "e5.csv"
    assert main(["gen-data", "--function", "E.5", "--n", "200",
                 "--out", str(csvp)]) == 0
    cfgp = tmp_path / "cfg.json"
    write_cfg(cfgp, dataset={"source": "csv", "path": str(csvp),
                             "label_column": "target", "k_folds": 2},
              train={"epochs": 5, "seeds": [0]})
    out = tmp_path / "run"
    assert main(["train", "--config", str(cfgp), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert {r["fold"] for r in summary["runs"]} == {0, 1}


def test_gen_data_unknown_function(tmp_path, capsys):
    assert main(["gen-data", "--function", "E.99",
                 "--out", str(tmp_path / "x.csv")]) == 2


def test_gradcheck_command(capsys):
    assert main(["gradcheck"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "worst case" in out


def test_gradcheck_negative_control(capsys):
    # the corrupt switch must flip the sweep to a failure
    ok, results = run_gradcheck(corrupt=True, quiet=True)
    assert not ok


@pytest.mark.parametrize("target", ["mlp", "kan", "ksvm", "nb"])
def test_equiv_targets(target, capsys):
    assert main(["equiv", "--target", target]) == 0


def test_bench_sweeps(capsys):
    assert main(["bench", "--sweep", "recon-params"]) == 0
    out = capsys.readouterr().out
    assert "slope" in out
    assert main(["bench", "--sweep", "expand-time"]) == 0
    assert main(["bench", "--sweep", "nope"]) == 2


def test_load_config_requires_sections(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"model": {"layers": []}}))
    with pytest.raises(Exception, match="dataset"):
        load_config(cfgp)
