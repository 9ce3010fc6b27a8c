import json

import pytest

from graphpd.cli import main


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    cfg = d / "synth.toml"
    cfg.write_text(
        "speakers_per_class = 11\nsegments_per_speaker = 4\ndim = 5\n"
        "class_separation = 8.0\nseed = 21\n"
    )
    assert main(["synth", "--config", str(cfg), "--out", str(d / "ds")]) == 0
    return d / "ds"


def test_synth_outputs(data_dir):
    for name in ("embeddings.bin", "manifest.tsv", "noise_flags.tsv"):
        assert (data_dir / name).exists()


def test_build_graph(data_dir, tmp_path):
    out = tmp_path / "edges.tsv"
    rc = main(["build-graph", "--data", str(data_dir), "--distance", "cosine", "--k", "3", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines
    assert all(len(line.split("\t")) == 2 for line in lines)


def test_build_graph_k_too_large(data_dir, tmp_path, capsys):
    rc = main(["build-graph", "--data", str(data_dir), "--distance", "cosine", "--k", "88", "--out", str(tmp_path / "e.tsv")])
    assert rc == 3
    assert "k-too-large" in capsys.readouterr().err


def test_run_deterministic(data_dir, tmp_path):
    grid = tmp_path / "grid.toml"
    grid.write_text(
        "[grid]\nk_values = [3]\ndistances = ['euclidean']\n"
    )
    outs = []
    for name in ("r1.json", "r2.json"):
        out = tmp_path / name
        rc = main([
            "run", "--data", str(data_dir), "--model", "knn", "--grid", str(grid),
            "--replicates", "2", "--seed", "5", "--out", str(out),
        ])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    report = json.loads(outs[0])
    assert report["model"] == "knn"
    assert (tmp_path / "r1.tsv").exists()


def test_run_gcn_small(data_dir, tmp_path):
    grid = tmp_path / "gcn.toml"
    grid.write_text(
        "[grid]\nlearning_rates = [0.01]\nk_values = [3]\ndepths = [2]\ndistances = ['euclidean']\n"
        "[training]\nhidden_width = 8\nmax_epochs = 15\npatience = 5\n"
    )
    out = tmp_path / "g.json"
    rc = main([
        "run", "--data", str(data_dir), "--model", "gcn", "--grid", str(grid),
        "--replicates", "1", "--seed", "1", "--jobs", "2", "--out", str(out),
    ])
    assert rc == 0
    report = json.loads(out.read_text())
    assert len(report["folds"]) == 10


def test_sweep_k(data_dir, tmp_path):
    fixed = tmp_path / "fixed.toml"
    fixed.write_text(
        "k_values = [1, 2]\n"
        "[fixed.euclidean]\nlr = 0.01\nL = 2\n"
        "[training]\nhidden_width = 4\nmax_epochs = 8\npatience = 4\n"
    )
    out = tmp_path / "curve.tsv"
    rc = main([
        "sweep", "--data", str(data_dir), "--axis", "k", "--fixed", str(fixed),
        "--replicates", "1", "--seed", "2", "--out", str(out),
    ])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "distance\tk\tmean\tstd"
    assert [line.split("\t")[1] for line in lines[1:]] == ["1", "2"]


def test_missing_dataset_is_data_error(tmp_path, capsys):
    rc = main(["build-graph", "--data", str(tmp_path / "nope"), "--distance", "cosine", "--k", "2", "--out", str(tmp_path / "e.tsv")])
    assert rc == 3
    assert "error:" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(data_dir):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--data", str(data_dir), "--model", "knn", "--nope"])
    assert exc.value.code == 2


def test_malformed_config_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("not toml ][")
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--config", str(bad), "--out", str(tmp_path / "x")])
    assert exc.value.code == 2
    assert "malformed-config" in capsys.readouterr().err
