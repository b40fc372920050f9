"""Full-batch semi-supervised training with patience-based early stopping."""
from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import LabelSet
from .motifs import DEFAULT_INSTANCE_CAP, MotifTensor
from .neural import AdamState, Model, adam_step, loss_fn, model_backward, model_forward

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    def __init__(self, msg: str, report: "TrainReport"):
        super().__init__(msg)
        self.report = report


@dataclass
class TrainConfig:
    max_epochs: int = 200
    patience: int = 10
    learning_rate: float = 0.01
    dropout: float = 0.5
    filters: int = 16
    layers: int = 3
    seed: int = 0
    train_fraction: float = 0.2
    val_fraction: float = 0.1
    instance_cap: int = DEFAULT_INSTANCE_CAP
    threads: int = 1

    def __post_init__(self):
        if self.max_epochs < 1 or self.patience < 1 or self.filters < 1 or self.layers < 1:
            raise ValueError("epoch, patience, filter and layer counts must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")

    @classmethod
    def from_text(cls, text: str, **overrides) -> "TrainConfig":
        """Parse ``key=value`` lines (``#`` comments allowed)."""
        kinds = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in kinds:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            conv = float if kinds[key] in ("float", float) else int
            try:
                values[key] = conv(float(value)) if conv is int else conv(value)
            except ValueError:
                raise ValueError(f"config line {lineno}: bad value for {key}: {value!r}") from None
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def load(cls, path, **overrides) -> "TrainConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), **overrides)

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in dataclasses.asdict(self).items())


@dataclass
class TrainReport:
    epochs: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list, compare=False)
    chosen_epoch: int = 0
    test_metrics: dict[str, float] = field(default_factory=dict)

    def to_csv(self) -> str:
        rows = ["epoch,train_loss,val_loss,seconds"]
        for e, a, b, s in zip(self.epochs, self.train_loss, self.val_loss, self.seconds):
            rows.append(f"{e},{a!r},{b!r},{s:.6f}")
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "TrainReport":
        lines = text.strip().splitlines()
        if not lines or lines[0].strip() != "epoch,train_loss,val_loss,seconds":
            raise ValueError("not a training report")
        rep = cls()
        for line in lines[1:]:
            e, a, b, s = line.split(",")
            rep.epochs.append(int(e))
            rep.train_loss.append(float(a))
            rep.val_loss.append(float(b))
            rep.seconds.append(float(s))
        return rep


def predict(logits: np.ndarray, task: str) -> np.ndarray:
    """Class ids (multiclass) or a boolean matrix thresholded at sigmoid >= 0.5."""
    if task == "multilabel":
        return logits >= 0.0
    return np.argmax(logits, axis=1)


def evaluate_f1(predictions: np.ndarray, labels: LabelSet, split="test") -> dict[str, float]:
    """Micro-F1, macro-F1 and accuracy on one split.

    A class with no true and no predicted positives counts as F1 = 1 in the
    macro average. Multilabel accuracy is the exact-match ratio.
    """
    pos = labels.part(split) if split is not None else np.arange(len(labels.nodes))
    if len(pos) == 0:
        raise ValueError(f"empty {split} split")
    nodes = labels.nodes[pos]
    K = labels.num_classes
    if labels.multilabel:
        T = labels.y[pos].astype(bool)
        P = np.asarray(predictions)[nodes].astype(bool)
        accuracy = float(np.mean(np.all(T == P, axis=1)))
    else:
        y = labels.y[pos]
        p = np.asarray(predictions)[nodes]
        T = np.eye(K, dtype=bool)[y]
        P = np.eye(K, dtype=bool)[p]
        accuracy = float(np.mean(y == p))
    tp = (T & P).sum(axis=0)
    fp = (~T & P).sum(axis=0)
    fn = (T & ~P).sum(axis=0)

    def f1(tp, fp, fn):
        denom = 2 * tp + fp + fn
        return 1.0 if denom == 0 else 2 * tp / denom

    micro = f1(tp.sum(), fp.sum(), fn.sum())
    macro = float(np.mean([f1(a, b, c) for a, b, c in zip(tp, fp, fn)]))
    return {"micro_f1": float(micro), "macro_f1": macro, "accuracy": accuracy}


def train(model: Model, X: np.ndarray, tensors: Sequence[MotifTensor], labels: LabelSet,
          cfg: TrainConfig) -> tuple[Model, TrainReport]:
    """Train in place; parameters are restored to the best-validation epoch."""
    lf = loss_fn(labels.task)
    rng = np.random.default_rng([cfg.seed, 1])
    params = model.parameters()
    state = AdamState.zeros_like(params)
    report = TrainReport()
    best_loss, best_epoch = math.inf, 0
    best_params = {k: v.copy() for k, v in params.items()}

    for epoch in range(1, cfg.max_epochs + 1):
        t0 = time.perf_counter()
        logits, tape = model_forward(X, tensors, model, mode="train", rng=rng)
        loss, dlogits = lf(logits, labels, "train")
        if not math.isfinite(loss):
            raise TrainingDiverged(f"non-finite training loss at epoch {epoch}", report)
        grads = model_backward(tape, dlogits, model)
        adam_step(params, grads, state, cfg.learning_rate)
        val_logits, _ = model_forward(X, tensors, model, mode="eval")
        val_loss, _ = lf(val_logits, labels, "validation")
        if not math.isfinite(val_loss):
            raise TrainingDiverged(f"non-finite validation loss at epoch {epoch}", report)

        report.epochs.append(epoch)
        report.train_loss.append(loss)
        report.val_loss.append(val_loss)
        report.seconds.append(time.perf_counter() - t0)
        log.debug("epoch %d train %.5f val %.5f", epoch, loss, val_loss)

        if val_loss < best_loss:
            best_loss, best_epoch = val_loss, epoch
            best_params = {k: v.copy() for k, v in params.items()}
        elif epoch - best_epoch >= cfg.patience:
            break

    model.load_parameters(best_params)
    report.chosen_epoch = best_epoch
    logits, _ = model_forward(X, tensors, model, mode="eval")
    report.test_metrics = evaluate_f1(predict(logits, labels.task), labels, "test")
    return model, report
