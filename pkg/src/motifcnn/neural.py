"""Motif convolution layers with hand-written gradients.

One layer runs a convolution unit per motif,

    H^M = relu(X W_0 + D^-1 sum_k A_k X W_k),

and fuses the unit outputs per node with a softmax over motifs
(scaled dot-product scores ``z_k . h^k(v) / sqrt(F)``). A stack of such
layers feeds a dense classifier. All arithmetic is float64.
"""
from __future__ import annotations

import io
import json
import math
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

from .graph import HeteroGraph, LabelSet
from .motifs import Motif, MotifInstance, MotifTensor
from .sparse import ShapeError, gemm, relu, row_scale, spmm, spmm_transposed

CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------------------
# Initialization and dropout
# ---------------------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def glorot_init(shape: Sequence[int], seed=None) -> np.ndarray:
    """Uniform on +-sqrt(6 / (fan_in + fan_out)); fans are the last two dims."""
    shape = tuple(shape)
    fan_in, fan_out = (shape[-2], shape[-1]) if len(shape) >= 2 else (shape[0], 1)
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return _rng(seed).uniform(-limit, limit, size=shape)


def dropout(B: np.ndarray, rate: float, seed=None, mode: str = "train"):
    """Inverted dropout. Returns ``(output, mask)``; mask is None when inactive."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode != "train" or rate == 0.0:
        return B, None
    keep = _rng(seed).random(B.shape) >= rate
    mask = keep / (1.0 - rate)
    return B * mask, mask


# ---------------------------------------------------------------------------
# Convolution unit
# ---------------------------------------------------------------------------


@dataclass
class ConvCache:
    X: np.ndarray
    pre: np.ndarray
    activation: bool


def _check_conv(X, tensor: MotifTensor, W):
    if W.ndim != 3 or W.shape[0] != tensor.num_roles + 1 or W.shape[1] != X.shape[1]:
        raise ShapeError(
            f"filter tensor {W.shape} does not fit {tensor.num_roles} roles and input width {X.shape[1]}"
        )
    if tensor.num_nodes != X.shape[0]:
        raise ShapeError(f"tensor built for {tensor.num_nodes} nodes, features have {X.shape[0]}")


def conv_unit_forward(X: np.ndarray, tensor: MotifTensor, W: np.ndarray, activation: bool = True):
    """Returns ``(H, cache)``. Rows without instances keep only the target term."""
    _check_conv(X, tensor, W)
    motif_sum = None
    for k, A in enumerate(tensor.float_roles, 1):
        term = spmm(A, gemm(X, W[k]))
        motif_sum = term if motif_sum is None else motif_sum + term
    pre = gemm(X, W[0])
    if motif_sum is not None:
        pre = pre + row_scale(tensor.inverse_counts, motif_sum)
    H = relu(pre) if activation else pre
    return H, ConvCache(X, pre, activation)


def conv_unit_backward(dH: np.ndarray, cache: ConvCache, tensor: MotifTensor, W: np.ndarray,
                       input_grad: bool = True):
    """Returns ``(dX or None, dW)``."""
    dpre = dH * (cache.pre > 0) if cache.activation else dH
    X = cache.X
    dW = np.empty_like(W)
    dW[0] = X.T @ dpre
    G = row_scale(tensor.inverse_counts, dpre)
    dX = dpre @ W[0].T if input_grad else None
    for k, A in enumerate(tensor.float_roles, 1):
        AtG = spmm_transposed(A, G)
        dW[k] = X.T @ AtG
        if input_grad:
            dX += AtG @ W[k].T
    return dX, dW


def reference_instance_conv(
    g: HeteroGraph,
    motif: Motif,
    instances: Sequence[MotifInstance],
    W: np.ndarray,
    X: np.ndarray,
    activation: bool = True,
) -> np.ndarray:
    """Convolution evaluated instance by instance, then mean-pooled per target.

    Each instance with target ``i`` yields ``W_0^T x_i + sum_pos W_role(pos)^T x_psi(pos)``;
    a node's output is the mean of its instance outputs (just ``W_0^T x_i``
    when it has none), passed through ReLU when ``activation`` is set.
    """
    N, F = X.shape[0], W.shape[2]
    per_target: dict[int, list[np.ndarray]] = {}
    others = [x for x in range(motif.size) if x != motif.target]
    for inst in instances:
        i = inst.target
        h = W[0].T @ X[i]
        for x in others:
            h = h + W[motif.roles[x]].T @ X[inst.mapping[x]]
        per_target.setdefault(i, []).append(h)
    out = np.empty((N, F))
    for i in range(N):
        outputs = per_target.get(i)
        out[i] = np.mean(outputs, axis=0) if outputs else W[0].T @ X[i]
    return relu(out) if activation else out


# ---------------------------------------------------------------------------
# Motif attention
# ---------------------------------------------------------------------------


def attention_combine(Hs: Sequence[np.ndarray], Z: np.ndarray):
    """Per-node softmax over motifs. Returns ``(H, alpha)`` with ``alpha`` of shape (N, U)."""
    if len(Hs) != Z.shape[0] or any(H.shape != Hs[0].shape for H in Hs):
        raise ShapeError("attention inputs must share one shape and match the attention vectors")
    F = Hs[0].shape[1]
    if Z.shape[1] != F:
        raise ShapeError(f"attention vectors have width {Z.shape[1]}, unit outputs {F}")
    scale = 1.0 / math.sqrt(F)
    E = np.stack([H @ z for H, z in zip(Hs, Z)], axis=1) * scale
    E = E - E.max(axis=1, keepdims=True)
    ex = np.exp(E)
    alpha = ex / ex.sum(axis=1, keepdims=True)
    H = alpha[:, 0, None] * Hs[0]
    for k in range(1, len(Hs)):
        H = H + alpha[:, k, None] * Hs[k]
    return H, alpha


def attention_backward(dH: np.ndarray, Hs: Sequence[np.ndarray], Z: np.ndarray, alpha: np.ndarray):
    scale = 1.0 / math.sqrt(Z.shape[1])
    dalpha = np.stack([(dH * H).sum(axis=1) for H in Hs], axis=1)
    de = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
    dHs = [alpha[:, k, None] * dH + (de[:, k, None] * scale) * Z[k][None, :] for k in range(len(Hs))]
    dZ = np.stack([(de[:, k] @ H) * scale for k, H in enumerate(Hs)])
    return dHs, dZ


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


@dataclass
class Layer:
    conv: list[np.ndarray]  # per motif, (K_u + 1, d_in, F)
    attention: np.ndarray  # (U, F)


@dataclass
class Model:
    layers: list[Layer]
    weight: np.ndarray  # (F, K)
    bias: np.ndarray  # (K,)
    dropout: float = 0.0
    task: str = "multiclass"

    @property
    def num_classes(self) -> int:
        return self.weight.shape[1]

    def parameters(self) -> dict[str, np.ndarray]:
        """Name -> array (the live arrays, in a fixed order)."""
        out = {}
        for l, layer in enumerate(self.layers):
            for u, W in enumerate(layer.conv):
                out[f"layer{l}.motif{u}.W"] = W
            out[f"layer{l}.attention"] = layer.attention
        out["classifier.weight"] = self.weight
        out["classifier.bias"] = self.bias
        return out

    def copy(self) -> "Model":
        return Model(
            [Layer([W.copy() for W in L.conv], L.attention.copy()) for L in self.layers],
            self.weight.copy(), self.bias.copy(), self.dropout, self.task,
        )

    def load_parameters(self, params: dict[str, np.ndarray]) -> None:
        for name, arr in self.parameters().items():
            arr[...] = params[name]


def init_model(
    in_dim: int,
    role_counts: Sequence[int],
    num_classes: int,
    filters: int = 16,
    layers: int = 3,
    dropout: float = 0.0,
    seed=0,
    task: str = "multiclass",
) -> Model:
    """Glorot-initialized model: ``layers`` motif layers, then a dense classifier."""
    if layers < 1 or filters < 1:
        raise ValueError("need at least one layer and one filter")
    rng = _rng(seed)
    stack = []
    d = in_dim
    for _ in range(layers):
        conv = [glorot_init((K + 1, d, filters), rng) for K in role_counts]
        attention = glorot_init((len(role_counts), filters), rng)
        stack.append(Layer(conv, attention))
        d = filters
    weight = glorot_init((d, num_classes), rng)
    return Model(stack, weight, np.zeros(num_classes), dropout, task)


@dataclass
class LayerTape:
    mask: np.ndarray | None
    caches: list[ConvCache]
    outputs: list[np.ndarray]
    alpha: np.ndarray


@dataclass
class ForwardTape:
    tensors: Sequence[MotifTensor]
    layers: list[LayerTape] = field(default_factory=list)
    final_input: np.ndarray | None = None
    final_mask: np.ndarray | None = None


def model_forward(X: np.ndarray, tensors: Sequence[MotifTensor], model: Model,
                  mode: str = "eval", rng=None):
    """Returns ``(logits, tape)``. Dropout acts on every layer input in train mode."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if model.layers and len(tensors) != len(model.layers[0].conv):
        raise ShapeError(f"model has {len(model.layers[0].conv)} motifs, got {len(tensors)} tensors")
    rng = _rng(rng) if mode == "train" and model.dropout > 0 else None
    tape = ForwardTape(tensors)
    H = X
    for layer in model.layers:
        Hin, mask = dropout(H, model.dropout, rng, mode)
        outs, caches = [], []
        for W, T in zip(layer.conv, tensors):
            Hu, cache = conv_unit_forward(Hin, T, W, activation=True)
            outs.append(Hu)
            caches.append(cache)
        H, alpha = attention_combine(outs, layer.attention)
        tape.layers.append(LayerTape(mask, caches, outs, alpha))
    Hin, mask = dropout(H, model.dropout, rng, mode)
    tape.final_input, tape.final_mask = Hin, mask
    logits = gemm(Hin, model.weight) + model.bias
    return logits, tape


def model_backward(tape: ForwardTape, dlogits: np.ndarray, model: Model) -> dict[str, np.ndarray]:
    """Gradients for every entry of :meth:`Model.parameters`."""
    if tape.final_input is None or dlogits.shape != (tape.final_input.shape[0], model.num_classes):
        raise ShapeError("tape does not match these logits")
    grads = {}
    grads["classifier.weight"] = tape.final_input.T @ dlogits
    grads["classifier.bias"] = dlogits.sum(axis=0)
    dH = dlogits @ model.weight.T
    if tape.final_mask is not None:
        dH = dH * tape.final_mask
    for l in range(len(model.layers) - 1, -1, -1):
        layer, lt = model.layers[l], tape.layers[l]
        dHs, dZ = attention_backward(dH, lt.outputs, layer.attention, lt.alpha)
        grads[f"layer{l}.attention"] = dZ
        dIn = None
        for u, (W, T, cache) in enumerate(zip(layer.conv, tape.tensors, lt.caches)):
            dX, dW = conv_unit_backward(dHs[u], cache, T, W, input_grad=l > 0)
            grads[f"layer{l}.motif{u}.W"] = dW
            if dX is not None:
                dIn = dX if dIn is None else dIn + dX
        if l > 0:
            dH = dIn * lt.mask if lt.mask is not None else dIn
    return {name: grads[name] for name in model.parameters()}


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


def _rows(labels: LabelSet, split) -> np.ndarray:
    rows = labels.mask_nodes(split) if split is not None else labels.nodes
    if len(rows) == 0:
        raise ValueError(f"empty {split} split")
    return rows


def softmax_cross_entropy(logits: np.ndarray, labels: LabelSet, split="train"):
    """Summed cross-entropy over the masked rows and its gradient w.r.t. all logits."""
    rows = _rows(labels, split)
    Y = labels.target_matrix(logits.shape[0])[rows]
    Z = logits[rows]
    m = Z.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(Z - m).sum(axis=1, keepdims=True))
    loss = float(np.sum(lse[:, 0] - (Z * Y).sum(axis=1)))
    grad = np.zeros_like(logits)
    grad[rows] = np.exp(Z - lse) - Y
    return loss, grad


def binary_cross_entropy(logits: np.ndarray, labels: LabelSet, split="train"):
    """Summed sigmoid cross-entropy over masked rows and all K outputs."""
    rows = _rows(labels, split)
    Y = labels.target_matrix(logits.shape[0])[rows]
    Z = logits[rows]
    loss = float(np.sum(np.maximum(Z, 0) - Z * Y + np.log1p(np.exp(-np.abs(Z)))))
    grad = np.zeros_like(logits)
    grad[rows] = expit(Z) - Y
    return loss, grad


def loss_fn(task: str):
    return binary_cross_entropy if task == "multilabel" else softmax_cross_entropy


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls({k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    """Bias-corrected Adam update, in place on ``params`` and ``state``."""
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for name, p in params.items():
        g = grads[name]
        m, v = state.m[name], state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state


# ---------------------------------------------------------------------------
# Gradient check
# ---------------------------------------------------------------------------


def _groups(model: Model) -> list[tuple[str, str, tuple]]:
    """(report name, parameter name, index prefix) triples; conv filters split per slice."""
    out = []
    for name, arr in model.parameters().items():
        if name.endswith(".W"):
            out.extend((f"{name[:-2]}.W{k}", name, (k,)) for k in range(arr.shape[0]))
        else:
            out.append((name, name, ()))
    return out


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """``||a - b|| / max(||a||, ||b||)``; zero when both vanish."""
    denom = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if denom == 0.0 else float(np.linalg.norm(a - b) / denom)


def gradcheck(model: Model, X: np.ndarray, tensors: Sequence[MotifTensor], labels: LabelSet,
              split="train", eps: float = 1e-6) -> dict[str, float]:
    """Analytic vs central-difference gradients, per parameter group (eval mode)."""
    lf = loss_fn(labels.task)

    def loss_at():
        logits, _ = model_forward(X, tensors, model, mode="eval")
        return lf(logits, labels, split)[0]

    logits, tape = model_forward(X, tensors, model, mode="eval")
    _, dlogits = lf(logits, labels, split)
    analytic = model_backward(tape, dlogits, model)
    params = model.parameters()
    report = {}
    for group, name, prefix in _groups(model):
        p = params[name]
        view = p[prefix] if prefix else p
        numeric = np.zeros_like(view)
        for idx in np.ndindex(view.shape):
            old = view[idx]
            view[idx] = old + eps
            fp = loss_at()
            view[idx] = old - eps
            fm = loss_at()
            view[idx] = old
            numeric[idx] = (fp - fm) / (2 * eps)
        a = analytic[name][prefix] if prefix else analytic[name]
        report[group] = relative_error(a, numeric)
    return report


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def motif_list_hash(motifs: Sequence[Motif]) -> str:
    import hashlib

    return hashlib.sha256("|".join(m.content_hash() for m in motifs).encode()).hexdigest()[:16]


def save_checkpoint(path, model: Model, motifs: Sequence[Motif], extra: dict | None = None) -> None:
    """Zip of ``.npy`` arrays plus a JSON header, written with fixed timestamps."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "motif_hash": motif_list_hash(motifs),
        "motifs": [m.to_dict() for m in motifs],
        "dropout": model.dropout,
        "task": model.task,
        "num_layers": len(model.layers),
        "shapes": {k: list(v.shape) for k, v in model.parameters().items()},
        "extra": extra or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo("meta.json", date_time=(1980, 1, 1, 0, 0, 0))
        zf.writestr(info, json.dumps(meta, sort_keys=True, indent=1))
        for name, arr in model.parameters().items():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arr), allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0)), buf.getvalue())


def load_checkpoint(path) -> tuple[Model, dict]:
    with zipfile.ZipFile(path) as zf:
        meta = json.loads(zf.read("meta.json"))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {meta.get('version')}")
        arrays = {}
        for name in meta["shapes"]:
            arrays[name] = np.lib.format.read_array(io.BytesIO(zf.read(f"{name}.npy")), allow_pickle=False)
    layers = []
    for l in range(meta["num_layers"]):
        conv = []
        u = 0
        while f"layer{l}.motif{u}.W" in arrays:
            conv.append(arrays[f"layer{l}.motif{u}.W"])
            u += 1
        layers.append(Layer(conv, arrays[f"layer{l}.attention"]))
    model = Model(layers, arrays["classifier.weight"], arrays["classifier.bias"],
                  meta["dropout"], meta["task"])
    return model, meta
