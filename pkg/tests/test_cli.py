import hashlib
import json

import pytest

from garmentcast.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_train_config(root, out_name="model.muqar", epochs=2, seed_override=None):
    config = {
        "records": str(root / "data" / "records.csv"),
        "taxonomy": str(root / "data" / "taxonomy.json"),
        "out": str(root / "registry" / out_name),
        "version": "t1",
        "model": {
            "architecture": "muqar",
            "k": 1,
            "fusion": {"feature_dim": 32, "u_mlp": 16, "use_demographic": True},
            "qar": {"kind": "LR", "n": 4, "a_max": 4, "q": 8},
        },
        "schedule": {"epochs": epochs, "batch_size": 64, "lr": 0.003},
    }
    if seed_override is not None:
        config["schedule"]["seed"] = seed_override
    path = root / f"train-{out_name}.json"
    path.write_text(json.dumps(config))
    return path


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    code = main(["generate-synthetic", "--out", str(root / "data"),
                 "--garments", "60", "--weeks", "30", "--seed", "3"])
    assert code == 0
    return root


def test_generate_synthetic_writes_expected_files(capsys, tmp_path):
    code, out, _ = run(capsys, "generate-synthetic", "--out", str(tmp_path / "w"),
                       "--garments", "10", "--weeks", "12", "--seed", "0")
    assert code == 0
    paths = json.loads(out)
    assert set(paths) == {"records", "taxonomy", "worldspec"}
    for path in paths.values():
        assert (tmp_path / "w").as_posix() in path
        assert len(open(path, "rb").read()) > 0


def test_generate_synthetic_seed_determinism(capsys, tmp_path):
    digests = []
    for name in ("a", "b"):
        _, out, _ = run(capsys, "generate-synthetic", "--out",
                        str(tmp_path / name), "--garments", "10",
                        "--weeks", "12", "--seed", "5", "--format", "jsonl")
        records = json.loads(out)["records"]
        digests.append(hashlib.sha256(open(records, "rb").read()).hexdigest())
    assert digests[0] == digests[1]


def test_train_then_evaluate_round_trip(capsys, data_dir):
    train_cfg = write_train_config(data_dir)
    code, out, err = run(capsys, "train", "--config", str(train_cfg), "--seed", "0")
    assert code == 0
    summary = json.loads(out)
    assert summary["model_version"] == "t1"
    assert summary["epochs_run"] == 2
    assert summary["samples"] > 0

    eval_cfg = data_dir / "eval.json"
    eval_cfg.write_text(json.dumps({
        "records": str(data_dir / "data" / "records.csv"),
        "taxonomy": str(data_dir / "data" / "taxonomy.json"),
        "model": summary["out"],
        "part": "test",
    }))
    code, out, _ = run(capsys, "evaluate", "--config", str(eval_cfg))
    assert code == 0
    report = json.loads(out)
    assert report["model_version"] == "t1"
    assert report["sample_count"] > 0
    assert 0.0 <= report["mae"] <= 1.0


def test_train_seed_flag_reproduces_identical_model(capsys, data_dir):
    paths = []
    for name in ("same1.muqar", "same2.muqar"):
        cfg = write_train_config(data_dir, out_name=name)
        code, out, _ = run(capsys, "train", "--config", str(cfg), "--seed", "7")
        assert code == 0
        paths.append(json.loads(out)["out"])
    first, second = (hashlib.sha256(open(p, "rb").read()).hexdigest()
                     for p in paths)
    assert first == second

    cfg = write_train_config(data_dir, out_name="other-seed.muqar")
    code, out, _ = run(capsys, "train", "--config", str(cfg), "--seed", "8")
    other = hashlib.sha256(
        open(json.loads(out)["out"], "rb").read()).hexdigest()
    assert other != first


def test_topsis_report_ranks_hand_matrix(capsys, tmp_path):
    matrix = tmp_path / "matrix.json"
    matrix.write_text(json.dumps({
        "models": ["alpha", "bravo", "charlie"],
        "criteria": [["mae", "cost"], ["pcc", "benefit"]],
        "values": [[0.10, 0.80], [0.12, 0.75], [0.09, 0.85]],
    }))
    code, out, err = run(capsys, "topsis-report", "--config", str(matrix),
                         "--pretty")
    assert code == 0
    payload = json.loads(out)
    assert payload["ranking"] == ["charlie", "alpha", "bravo"]
    assert "closeness" in err


def test_missing_config_fails_cleanly(capsys):
    with pytest.raises(SystemExit):
        main(["train"])


def test_bad_config_path_returns_error_code(capsys, tmp_path):
    code, _, err = run(capsys, "topsis-report", "--config",
                       str(tmp_path / "nope.json"))
    assert code == 2
    assert "error:" in err
