import json
from pathlib import Path

import numpy as np
import pytest

from motifcnn.cli import main, run_gradcheck, tensor_prefix
from motifcnn.graph import load_dataset
from motifcnn.motifs import brute_force_instances, load_motif, read_tensor, tensor_from_instances
from motifcnn.training import TrainConfig


def write(path: Path, text: str) -> str:
    path.write_text(text)
    return str(path)


@pytest.fixture
def shapes(tmp_path):
    tri = write(tmp_path / "tri.txt", "N 3\nTYPES node\nEDGE 0 1\nEDGE 1 2\nEDGE 0 2\n")
    star = write(tmp_path / "star.txt", "N 4\nTYPES node\nEDGE 0 1\nEDGE 0 2\nEDGE 0 3\n")
    edge = write(tmp_path / "edge.json", json.dumps({"nodes": [{"id": 0}, {"id": 1}], "edges": [[0, 1]],
                                                     "target": 0, "context": 1}))
    triangle = write(tmp_path / "triangle.json", json.dumps({"nodes": [{"id": i} for i in range(3)],
                                                             "edges": [[0, 1], [1, 2], [0, 2]],
                                                             "target": 0, "context": 1}))
    return tri, star, edge, triangle


def test_build_tensor_summaries(tmp_path, shapes, capsys):
    tri, star, edge, triangle = shapes
    assert main(["build-tensor", "--graph", tri, "--motif", edge, "--out", str(tmp_path / "t")]) == 0
    assert "instances: 6 (2 per target)" in capsys.readouterr().out
    assert main(["build-tensor", "--graph", star, "--motif", triangle, "--out", str(tmp_path / "t")]) == 0
    assert "instances: 0 " in capsys.readouterr().out


@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert main(["synth", "planted-hetero", "--size", "60", "--seed", "3", "--out", str(out)]) == 0
    return out


def test_synth_is_byte_identical(planted, tmp_path):
    assert main(["synth", "planted-hetero", "--size", "60", "--seed", "3", "--out", str(tmp_path)]) == 0
    for name in ("dataset.txt", "apv.json", "appv.json", "edge.json"):
        assert (tmp_path / name).read_bytes() == (planted / name).read_bytes()


def test_four_node_tensor_matches_oracle(tmp_path, capsys):
    # small enough for the N^4 oracle
    assert main(["synth", "planted-hetero", "--size", "8", "--seed", "4", "--out", str(tmp_path)]) == 0
    ds = load_dataset(tmp_path / "dataset.txt")
    m = load_motif(tmp_path / "appv.json")
    assert main(["build-tensor", "--graph", str(tmp_path / "dataset.txt"), "--motif", str(tmp_path / "appv.json"),
                 "--out", str(tmp_path / "t")]) == 0
    got = read_tensor(tmp_path / "t", tensor_prefix(ds.graph, m), m)
    ref = tensor_from_instances(brute_force_instances(ds.graph, m), m, ds.graph.num_nodes)
    assert ref.total_instances > 0
    assert np.array_equal(got.counts, ref.counts)
    assert all((a != b).nnz == 0 for a, b in zip(got.roles, ref.roles))


def _train(planted, out, *extra):
    cfg = write(Path(out).parent / "cfg.txt", "max_epochs=30\nlayers=2\nfilters=8\ndropout=0.3\n")
    args = ["train", "--graph", str(planted / "dataset.txt"), "--motif", str(planted / "apv.json"),
            "--motif", str(planted / "edge.json"), "--config", cfg, "--seed", "1", "--out", str(out), *extra]
    assert main(args) == 0


def test_train_then_eval(planted, tmp_path, capsys):
    _train(planted, tmp_path / "run", "--tensors", str(tmp_path / "cache"))
    outputs = {p.name for p in (tmp_path / "run").iterdir()}
    assert {"checkpoint.npz", "report.csv", "loss_curve.png", "metrics.txt", "config.txt"} <= outputs
    assert len(list((tmp_path / "cache").glob("*.diag.txt"))) == 2
    capsys.readouterr()
    assert main(["eval", "--checkpoint", str(tmp_path / "run" / "checkpoint.npz"),
                 "--graph", str(planted / "dataset.txt"), "--out", str(tmp_path / "eval.txt")]) == 0
    assert (tmp_path / "eval.txt").read_text() == (tmp_path / "run" / "metrics.txt").read_text()


def test_train_is_idempotent_and_cache_neutral(planted, tmp_path):
    _train(planted, tmp_path / "a")
    _train(planted, tmp_path / "b", "--tensors", str(tmp_path / "cache"))
    _train(planted, tmp_path / "c", "--tensors", str(tmp_path / "cache"), "--threads", "3")
    for run in ("b", "c"):
        for name in ("checkpoint.npz", "metrics.txt", "config.txt", "loss_curve.png"):
            if name == "config.txt":
                continue  # records the thread count
            assert (tmp_path / run / name).read_bytes() == (tmp_path / "a" / name).read_bytes(), name

        def losses(d):
            return [line.rsplit(",", 1)[0] for line in (tmp_path / d / "report.csv").read_text().splitlines()]

        assert losses(run) == losses("a")


def test_errors_have_context(tmp_path, shapes, capsys):
    tri, _, edge, _ = shapes
    assert main(["train", "--graph", str(tmp_path / "missing.txt"), "--motif", edge]) == 2
    assert "--graph" in capsys.readouterr().err
    bad = write(tmp_path / "bad.txt", "N 3\nTYPES node\nEDGE 0 7\n")
    assert main(["build-tensor", "--graph", bad, "--motif", edge]) == 1
    assert "bad.txt:3" in capsys.readouterr().err
    bad_motif = write(tmp_path / "m.json", '{"nodes": [{"id": 0}], "edges": [], "target": 0, "context": 0}')
    assert main(["build-tensor", "--graph", tri, "--motif", bad_motif]) == 2
    assert "m.json" in capsys.readouterr().err
    assert main(["train", "--graph", tri, "--motif", edge]) == 2
    assert "no labels" in capsys.readouterr().err
    assert main(["gradcheck", "--threads", "0"]) == 2


def test_gradcheck_command(capsys):
    assert main(["gradcheck", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("head,group,relative_error") and "# max" in out


def test_gradcheck_covers_every_group():
    table = run_gradcheck(TrainConfig(layers=2, filters=3))
    for errs in table.values():
        assert any(k.endswith(".W0") for k in errs) and "layer1.attention" in errs and "classifier.bias" in errs
