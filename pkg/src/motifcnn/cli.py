"""``motifcnn`` command line: build-tensor, train, eval, gradcheck, synth."""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .graph import GraphFormatError, HeteroGraph, LabelSet, load_dataset, save_dataset, split_labels
from .motifs import InstanceLimitError, Motif, MotifError, build_motif_tensor, load_motif, path_motif, edge_motif
from .motifs import read_tensor, write_tensor
from .neural import gradcheck, init_model, load_checkpoint, model_forward, save_checkpoint
from .synth import planted_hetero, planted_motifs, random_graph, sbm_homo, sbm_motifs
from .training import TrainConfig, TrainingDiverged, evaluate_f1, predict, train

log = logging.getLogger("motifcnn")

GRADCHECK_TOL = 1e-5


class UsageError(Exception):
    pass


def graph_hash(g: HeteroGraph) -> str:
    h = hashlib.sha256()
    h.update(str(g.num_nodes).encode())
    for arr in (g.node_type, g.src, g.dst, g.directed):
        h.update(np.ascontiguousarray(arr, dtype=np.int64).tobytes())
    h.update(",".join(g.type_names).encode())
    return h.hexdigest()[:16]


def tensor_prefix(g: HeteroGraph, motif: Motif) -> str:
    key = hashlib.sha256((graph_hash(g) + motif.content_hash()).encode()).hexdigest()[:12]
    return f"{motif.name}-{key}"


def _motifs(paths) -> list[Motif]:
    if not paths:
        raise UsageError("at least one --motif is required")
    out = []
    for p in paths:
        if not Path(p).exists():
            raise UsageError(f"--motif {p}: no such file")
        try:
            out.append(load_motif(p))
        except (MotifError, json.JSONDecodeError) as exc:
            raise UsageError(f"--motif {p}: {exc}") from None
    return out


def _dataset(path):
    if not path:
        raise UsageError("--graph is required")
    if not Path(path).exists():
        raise UsageError(f"--graph {path}: no such file")
    return load_dataset(path)


def _config(args) -> TrainConfig:
    overrides = {"seed": args.seed, "threads": args.threads}
    if args.config:
        if not Path(args.config).exists():
            raise UsageError(f"--config {args.config}: no such file")
        return TrainConfig.load(args.config, **overrides)
    return TrainConfig(**{k: v for k, v in overrides.items() if v is not None})


def _tensors(g, motifs, cfg: TrainConfig, cache_dir=None):
    """Reads cached tensors when present, else enumerates (and caches if a dir is given)."""
    out = []
    for m in motifs:
        prefix = tensor_prefix(g, m)
        if cache_dir and (Path(cache_dir) / f"{prefix}.diag.txt").exists():
            log.info("using cached tensor %s", prefix)
            out.append(read_tensor(cache_dir, prefix, m))
            continue
        t = build_motif_tensor(g, m, cap=cfg.instance_cap, threads=cfg.threads)
        if cache_dir:
            write_tensor(t, cache_dir, prefix)
        out.append(t)
    return out


def _metrics_text(metrics: dict) -> str:
    return "".join(f"{k}={v!r}\n" for k, v in sorted(metrics.items()))


# ---------------------------------------------------------------------------


def cmd_build_tensor(args) -> int:
    ds = _dataset(args.graph)
    motifs = _motifs(args.motif)
    cfg = _config(args)
    out = Path(args.out or ".")
    lines = []
    for m in motifs:
        t0 = time.perf_counter()
        t = build_motif_tensor(ds.graph, m, cap=cfg.instance_cap, threads=cfg.threads)
        elapsed = time.perf_counter() - t0
        prefix = tensor_prefix(ds.graph, m)
        write_tensor(t, out, prefix)
        total = t.total_instances
        lines.append(f"motif {m.name}: roles {t.num_roles}, instances: {total} "
                     f"({total / ds.graph.num_nodes:g} per target), files {prefix}.*, {elapsed:.3f}s")
    print("\n".join(lines))
    return 0


def cmd_train(args) -> int:
    ds = _dataset(args.graph)
    if ds.labels is None:
        raise UsageError(f"--graph {args.graph}: dataset has no labels")
    motifs = _motifs(args.motif)
    cfg = _config(args)
    out = Path(args.out or "run")
    out.mkdir(parents=True, exist_ok=True)
    labels = split_labels(ds.labels, (cfg.train_fraction, cfg.val_fraction), seed=cfg.seed)
    tensors = _tensors(ds.graph, motifs, cfg, args.tensors)
    X = ds.features.data
    model = init_model(X.shape[1], [t.num_roles for t in tensors], labels.num_classes,
                       cfg.filters, cfg.layers, cfg.dropout, cfg.seed, labels.task)
    try:
        model, report = train(model, X, tensors, labels, cfg)
    except TrainingDiverged as exc:
        (out / "report.csv").write_text(exc.report.to_csv(), encoding="utf-8")
        raise
    extra = {"seed": cfg.seed, "train_fraction": cfg.train_fraction, "val_fraction": cfg.val_fraction,
             "graph_hash": graph_hash(ds.graph), "chosen_epoch": report.chosen_epoch}
    save_checkpoint(out / "checkpoint.npz", model, motifs, extra)
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    (out / "metrics.txt").write_text(_metrics_text(report.test_metrics), encoding="utf-8")
    from .plotting import plot_loss_curve

    plot_loss_curve(report, out / "loss_curve.png", title=" + ".join(m.name for m in motifs))
    print(f"epochs run {len(report.epochs)}, best epoch {report.chosen_epoch}")
    print(_metrics_text(report.test_metrics), end="")
    return 0


def cmd_eval(args) -> int:
    if not args.checkpoint:
        raise UsageError("--checkpoint is required")
    model, meta = load_checkpoint(args.checkpoint)
    ds = _dataset(args.graph)
    if ds.labels is None:
        raise UsageError(f"--graph {args.graph}: dataset has no labels")
    extra = meta["extra"]
    if extra.get("graph_hash") not in (None, graph_hash(ds.graph)):
        log.warning("graph differs from the one the checkpoint was trained on")
    motifs = [Motif.from_dict(d) for d in meta["motifs"]]
    cfg = _config(args)
    labels = split_labels(ds.labels, (extra["train_fraction"], extra["val_fraction"]), seed=extra["seed"])
    tensors = _tensors(ds.graph, motifs, cfg, args.tensors)
    logits, _ = model_forward(ds.features.data, tensors, model, mode="eval")
    metrics = evaluate_f1(predict(logits, labels.task), labels, args.split)
    text = _metrics_text(metrics)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def gradcheck_problem(seed: int = 0, num_nodes: int = 15):
    """Small random graph with an edge motif and a 3-node path motif."""
    rng = np.random.default_rng([seed, 7])
    g = random_graph(num_nodes, 0.35, seed=int(rng.integers(1 << 30)))
    X = rng.normal(size=(num_nodes, 4))
    nodes = np.arange(num_nodes)
    multiclass = LabelSet("multiclass", 3, nodes, rng.integers(0, 3, size=num_nodes))
    multilabel = LabelSet("multilabel", 3, nodes, rng.random((num_nodes, 3)) < 0.4)
    motifs = [edge_motif(name="edge"), path_motif(name="path3")]
    tensors = [build_motif_tensor(g, m) for m in motifs]
    return g, X, tensors, {"softmax-ce": multiclass, "binary-ce": multilabel}


def run_gradcheck(cfg: TrainConfig, num_nodes: int = 15) -> dict[str, dict[str, float]]:
    g, X, tensors, heads = gradcheck_problem(cfg.seed, num_nodes)
    out = {}
    for head, labels in heads.items():
        model = init_model(X.shape[1], [t.num_roles for t in tensors], labels.num_classes,
                           cfg.filters, cfg.layers, 0.0, cfg.seed, labels.task)
        out[head] = gradcheck(model, X, tensors, labels, split=None)
    return out


def cmd_gradcheck(args) -> int:
    cfg = _config(args)
    t0 = time.perf_counter()
    table = run_gradcheck(cfg)
    worst = 0.0
    print("head,group,relative_error")
    for head, errs in table.items():
        for group, err in errs.items():
            print(f"{head},{group},{err:.3e}")
            worst = max(worst, err)
    ok = worst < GRADCHECK_TOL
    print(f"# max {worst:.3e} ({'ok' if ok else 'FAIL'}, tol {GRADCHECK_TOL:g}), {time.perf_counter() - t0:.1f}s")
    return 0 if ok else 1


def cmd_synth(args) -> int:
    seed = 0 if args.seed is None else args.seed
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "planted-hetero":
        ds = planted_hetero(seed=seed, **({"num_authors": args.size} if args.size else {}))
        motifs = planted_motifs()
    else:
        ds = sbm_homo(seed=seed, **({"n": args.size} if args.size else {}))
        motifs = sbm_motifs()
    save_dataset(ds, out / "dataset.txt")
    for stem, m in motifs.items():
        (out / f"{stem}.json").write_text(json.dumps(m.to_dict(), indent=1) + "\n", encoding="utf-8")
    print(f"{args.kind}: {ds.graph.num_nodes} nodes, {ds.graph.num_edges} edges -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="dataset file")
    common.add_argument("--motif", action="append", default=[], help="motif JSON (repeatable)")
    common.add_argument("--config", help="key=value TrainConfig file")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="motifcnn", description="Motif-based graph convolutional networks")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build-tensor", parents=[common], help="enumerate motifs and dump tensors")
    t = sub.add_parser("train", parents=[common], help="train and write checkpoint, report and figure")
    t.add_argument("--tensors", help="tensor cache directory")
    e = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    e.add_argument("--checkpoint")
    e.add_argument("--tensors", help="tensor cache directory")
    e.add_argument("--split", default="test", choices=["train", "validation", "test"])
    sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    s = sub.add_parser("synth", parents=[common], help="write a synthetic dataset and its motifs")
    s.add_argument("kind", choices=["planted-hetero", "sbm-homo"])
    s.add_argument("--size", type=int, help="authors (planted-hetero) or nodes (sbm-homo)")
    return p


COMMANDS = {
    "build-tensor": cmd_build_tensor,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("motifcnn: error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"motifcnn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (GraphFormatError, MotifError, InstanceLimitError, TrainingDiverged, ValueError, OSError) as exc:
        print(f"motifcnn {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
