import math
from dataclasses import replace

import numpy as np
import pytest

from motifcnn.graph import TEST, LabelSet, format_dataset, split_labels
from motifcnn.motifs import build_motif_tensor, enumerate_triangles, enumerate_wedges
from motifcnn.neural import init_model
from motifcnn.synth import planted_hetero, planted_motifs, sbm_homo, sbm_motifs
from motifcnn.training import TrainConfig, TrainingDiverged, TrainReport, evaluate_f1, predict, train


@pytest.fixture(scope="module")
def sbm():
    ds = sbm_homo(n=80, seed=1)
    labels = split_labels(ds.labels, (0.2, 0.2), seed=1)
    tensors = [build_motif_tensor(ds.graph, m) for m in sbm_motifs().values()]
    return ds.features.data, tensors, labels


def _model(X, tensors, labels, cfg):
    return init_model(X.shape[1], [t.num_roles for t in tensors], labels.num_classes,
                      cfg.filters, cfg.layers, cfg.dropout, cfg.seed, labels.task)


def test_config_text_round_trip():
    cfg = TrainConfig(max_epochs=50, learning_rate=0.005, dropout=0.3, threads=2)
    assert TrainConfig.from_text(cfg.to_text()) == cfg
    parsed = TrainConfig.from_text("# comment\nmax_epochs = 7\nlearning_rate=1e-3  # inline\n", seed=4)
    assert (parsed.max_epochs, parsed.learning_rate, parsed.seed) == (7, 1e-3, 4)


@pytest.mark.parametrize("text,msg", [
    ("epochs=3", "unknown key"), ("max_epochs", "key=value"), ("dropout=high", "bad value"),
    ("dropout=1.0", "dropout"), ("patience=0", "positive"),
])
def test_config_errors(text, msg):
    with pytest.raises(ValueError, match=msg):
        TrainConfig.from_text(text)


def test_disabled_stopping_runs_every_epoch(sbm):
    X, tensors, labels = sbm
    cfg = TrainConfig(max_epochs=15, patience=15, layers=1, filters=4, dropout=0.0)
    _, rep = train(_model(X, tensors, labels, cfg), X, tensors, labels, cfg)
    assert rep.epochs == list(range(1, 16))


def test_zero_learning_rate_changes_nothing(sbm):
    X, tensors, labels = sbm
    cfg = TrainConfig(max_epochs=5, patience=10, learning_rate=0.0, layers=2, filters=4, dropout=0.0)
    model = _model(X, tensors, labels, cfg)
    before = {k: v.copy() for k, v in model.parameters().items()}
    _, rep = train(model, X, tensors, labels, cfg)
    assert all(np.array_equal(before[k], v) for k, v in model.parameters().items())
    assert len(set(rep.train_loss)) == 1 and len(set(rep.val_loss)) == 1


def test_chosen_epoch_has_minimum_validation_loss(sbm):
    X, tensors, labels = sbm
    cfg = TrainConfig(max_epochs=60, patience=5, layers=2, filters=8, dropout=0.3, learning_rate=0.05)
    model, rep = train(_model(X, tensors, labels, cfg), X, tensors, labels, cfg)
    best = int(np.argmin(rep.val_loss))
    assert rep.chosen_epoch == rep.epochs[best] <= cfg.max_epochs
    assert len(rep.epochs) == rep.chosen_epoch + cfg.patience or len(rep.epochs) == cfg.max_epochs
    assert all(math.isfinite(v) for v in rep.train_loss + rep.val_loss)


def test_test_labels_never_reach_gradients(sbm):
    X, tensors, labels = sbm
    cfg = TrainConfig(max_epochs=10, layers=1, filters=4, dropout=0.2)
    y = labels.y.copy()
    test = labels.split == TEST
    y[test] = 1 - y[test]
    flipped = replace(labels, y=y)
    _, a = train(_model(X, tensors, labels, cfg), X, tensors, labels, cfg)
    _, b = train(_model(X, tensors, flipped, cfg), X, tensors, flipped, cfg)
    assert a.train_loss == b.train_loss and a.val_loss == b.val_loss


def test_divergence_aborts_with_report(sbm):
    X, tensors, labels = sbm
    X = X.copy()
    X[0, 0] = np.nan
    cfg = TrainConfig(max_epochs=5, layers=1, filters=2)
    with pytest.raises(TrainingDiverged) as info:
        train(_model(X, tensors, labels, cfg), X, tensors, labels, cfg)
    assert isinstance(info.value.report, TrainReport)


def test_report_csv_round_trip():
    rep = TrainReport([1, 2], [3.25, 1.0 / 3.0], [4.0, 2.5], [0.01, 0.02])
    text = rep.to_csv()
    assert text.splitlines()[0] == "epoch,train_loss,val_loss,seconds"
    back = TrainReport.from_csv(text)
    assert back.train_loss == rep.train_loss and back.val_loss == rep.val_loss
    with pytest.raises(ValueError):
        TrainReport.from_csv("a,b\n")


def _labelset(y, task="multiclass", k=2):
    y = np.asarray(y)
    return LabelSet(task, k, np.arange(len(y)), y, np.full(len(y), TEST, dtype=np.int8))


def test_f1_perfect_and_one_class():
    y = np.arange(10) % 2
    m = evaluate_f1(y, _labelset(y))
    assert m["micro_f1"] == m["macro_f1"] == m["accuracy"] == 1.0
    m = evaluate_f1(np.zeros(10, dtype=int), _labelset(y))
    assert m["micro_f1"] == pytest.approx(0.5)
    assert m["macro_f1"] == pytest.approx((2 / 3 + 0) / 2)
    assert m["macro_f1"] == pytest.approx(1 / 3)


def test_f1_multilabel_empty_classes():
    Y = np.zeros((4, 3), dtype=bool)
    m = evaluate_f1(np.zeros((4, 3), dtype=bool), _labelset(Y, "multilabel", 3))
    assert m["macro_f1"] == 1.0 and m["accuracy"] == 1.0
    assert predict(np.array([[0.0, -1e-9, 2.0]]), "multilabel").tolist() == [[True, False, True]]


def test_f1_empty_split():
    labels = split_labels(LabelSet("multiclass", 2, np.arange(10), np.arange(10) % 2), (0.2, 0.1))
    with pytest.raises(ValueError, match="empty"):
        evaluate_f1(np.zeros(10, dtype=int), replace(labels, split=np.zeros(10, dtype=np.int8)), "test")


def test_noise_free_planted_labels_follow_venue_majority():
    ds = planted_hetero(num_authors=60, noise=0.0, seed=5)
    g = ds.graph
    wedges = enumerate_wedges(g, planted_motifs()["apv"])
    venue_class = {}
    V = g.type_id("V")
    for v in np.flatnonzero(g.node_type == V):
        feat = ds.features.data[v, ds.features.slices[V]]
        venue_class[v] = int(np.argmax(feat[:ds.labels.num_classes]))
    votes = np.zeros((60, ds.labels.num_classes), dtype=int)
    for inst in wedges:
        votes[inst.target, venue_class[inst.mapping[2]]] += 1
    # the label is always a top-voted venue class; ties are the only ambiguity
    y = ds.labels.y
    assert np.all(votes[np.arange(60), y] == votes.max(axis=1))
    unique = (votes == votes.max(axis=1, keepdims=True)).sum(axis=1) == 1
    assert unique.mean() > 0.8
    assert np.array_equal(votes.argmax(axis=1)[unique], y[unique])


def test_synth_is_seed_deterministic():
    assert format_dataset(planted_hetero(num_authors=30, seed=9)) == format_dataset(planted_hetero(num_authors=30, seed=9))
    assert format_dataset(planted_hetero(num_authors=30, seed=9)) != format_dataset(planted_hetero(num_authors=30, seed=8))
    assert format_dataset(sbm_homo(seed=2)) == format_dataset(sbm_homo(seed=2))


def test_sbm_triangles_concentrate_inside_blocks():
    ds = sbm_homo(n=200, p_in=0.2, p_out=0.02, seed=0)
    block = ds.labels.y
    tris = {tuple(sorted(i.mapping)) for i in enumerate_triangles(ds.graph)}
    inside = sum(block[a] == block[b] == block[c] for a, b, c in tris)
    across = len(tris) - inside
    # triple counts: 2 * C(100, 3) inside vs C(200, 3) - that across
    n_in = 2 * math.comb(100, 3)
    n_across = math.comb(200, 3) - n_in
    assert inside / n_in > 10 * (across / n_across)


def test_synth_rejects_bad_sizes():
    with pytest.raises(ValueError):
        planted_hetero(num_authors=0)
    with pytest.raises(ValueError):
        planted_hetero(num_venues=2, num_classes=4)
    with pytest.raises(ValueError):
        sbm_homo(n=2)
