"""Typed graphs, joint feature matrices and label sets.

A dataset file is line oriented UTF-8 text::

    # comment
    N 5
    TYPES A P V
    TASK multiclass 3
    NODE 0 A
    EDGE 0 1
    EDGE 1 2 directed
    FEAT V 2
    4 0.5 -1.0
    LABEL 0 2
    LABEL 3 0,2

``FEAT <type> <width>`` is followed by one row ``<node> <v_1> ... <v_width>``
per node of that type. Types without a FEAT block get 1-hot identity
features. ``NODE`` lines may be omitted when there is a single type.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

TRAIN, VALIDATION, TEST = 0, 1, 2
SPLIT_NAMES = {"train": TRAIN, "validation": VALIDATION, "val": VALIDATION, "test": TEST}

_KEYWORDS = {"N", "TYPES", "TASK", "NODE", "EDGE", "FEAT", "LABEL"}


class GraphFormatError(ValueError):
    """Malformed dataset file."""


class GraphValidationError(GraphFormatError):
    """Well-formed input describing an invalid graph."""


@dataclass(frozen=True)
class NodeType:
    id: int
    name: str


def _csr(num_nodes: int, rows: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((cols, rows))
    counts = np.bincount(rows, minlength=num_nodes)
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, cols[order].astype(np.int64)


@dataclass(frozen=True, eq=False)
class HeteroGraph:
    """Node-typed graph with a mix of undirected and directed edges.

    Undirected edges are stored once (``src < dst``) and exposed
    symmetrically through :meth:`neighbors`. Directed edges are exposed
    through :meth:`successors` and :meth:`predecessors`.
    """

    num_nodes: int
    node_type: np.ndarray
    type_names: tuple[str, ...]
    src: np.ndarray
    dst: np.ndarray
    directed: np.ndarray

    @classmethod
    def from_edges(
        cls,
        num_nodes: int,
        edges: Iterable[tuple],
        node_type: Sequence[int] | np.ndarray | None = None,
        type_names: Sequence[str] | None = None,
    ) -> "HeteroGraph":
        """Build a validated graph from ``(src, dst)`` or ``(src, dst, directed)`` tuples."""
        edges = list(edges)
        src = np.fromiter((e[0] for e in edges), dtype=np.int64, count=len(edges))
        dst = np.fromiter((e[1] for e in edges), dtype=np.int64, count=len(edges))
        directed = np.fromiter(
            (bool(e[2]) if len(e) > 2 else False for e in edges), dtype=bool, count=len(edges)
        )
        return cls.from_arrays(num_nodes, src, dst, directed, node_type, type_names)

    @classmethod
    def from_arrays(
        cls,
        num_nodes: int,
        src,
        dst,
        directed=None,
        node_type=None,
        type_names: Sequence[str] | None = None,
    ) -> "HeteroGraph":
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if directed is None:
            directed = np.zeros(len(src), dtype=bool)
        directed = np.asarray(directed, dtype=bool).ravel()
        if node_type is None:
            node_type = np.zeros(num_nodes, dtype=np.int64)
        node_type = np.asarray(node_type, dtype=np.int64).ravel()
        if type_names is None:
            ntypes = int(node_type.max()) + 1 if num_nodes else 1
            type_names = tuple(f"t{i}" for i in range(ntypes))
        type_names = tuple(type_names)

        bad = validate_edges(num_nodes, src, dst, directed)
        if bad is not None:
            idx, msg = bad
            raise GraphValidationError(f"edge {idx} ({src[idx]}, {dst[idx]}): {msg}")
        if len(node_type) != num_nodes:
            raise GraphValidationError(f"node_type has length {len(node_type)}, expected {num_nodes}")
        if num_nodes and (node_type.min() < 0 or node_type.max() >= len(type_names)):
            raise GraphValidationError("node type id out of range")
        if len(set(type_names)) != len(type_names):
            raise GraphValidationError("duplicate type names")

        # canonical storage: undirected edges with src < dst
        s = np.where(directed, src, np.minimum(src, dst))
        d = np.where(directed, dst, np.maximum(src, dst))
        for arr in (s, d, directed, node_type):
            arr.setflags(write=False)
        return cls(int(num_nodes), node_type, type_names, s, d, directed)

    # -- structure -------------------------------------------------------

    @property
    def num_edges(self) -> int:
        return len(self.src)

    @property
    def types(self) -> list[NodeType]:
        return [NodeType(i, n) for i, n in enumerate(self.type_names)]

    def type_id(self, name: str) -> int:
        try:
            return self.type_names.index(name)
        except ValueError:
            raise KeyError(f"unknown node type {name!r}") from None

    @cached_property
    def _und(self) -> tuple[np.ndarray, np.ndarray]:
        u = ~self.directed
        rows = np.concatenate([self.src[u], self.dst[u]])
        cols = np.concatenate([self.dst[u], self.src[u]])
        return _csr(self.num_nodes, rows, cols)

    @cached_property
    def _out(self) -> tuple[np.ndarray, np.ndarray]:
        return _csr(self.num_nodes, self.src[self.directed], self.dst[self.directed])

    @cached_property
    def _in(self) -> tuple[np.ndarray, np.ndarray]:
        return _csr(self.num_nodes, self.dst[self.directed], self.src[self.directed])

    def neighbors(self, i: int) -> np.ndarray:
        """Sorted undirected neighbors of ``i``."""
        indptr, indices = self._und
        return indices[indptr[i]:indptr[i + 1]]

    def successors(self, i: int) -> np.ndarray:
        indptr, indices = self._out
        return indices[indptr[i]:indptr[i + 1]]

    def predecessors(self, i: int) -> np.ndarray:
        indptr, indices = self._in
        return indices[indptr[i]:indptr[i + 1]]

    def has_edge(self, u: int, v: int, directed: bool = False) -> bool:
        """Binary-search edge query. ``directed`` asks for ``u -> v``."""
        row = self.successors(u) if directed else self.neighbors(u)
        k = np.searchsorted(row, v)
        return bool(k < len(row) and row[k] == v)

    def degree(self) -> np.ndarray:
        """Undirected degree plus out- and in-degree."""
        return (
            np.diff(self._und[0]) + np.diff(self._out[0]) + np.diff(self._in[0])
        )

    def undirected_degree(self) -> np.ndarray:
        return np.diff(self._und[0])

    @cached_property
    def adjacency_lists(self) -> tuple[list[list[int]], list[list[int]], list[list[int]]]:
        """Python lists (undirected, out, in) for the enumeration loops."""
        out = []
        for indptr, indices in (self._und, self._out, self._in):
            flat = indices.tolist()
            bounds = indptr.tolist()
            out.append([flat[bounds[i]:bounds[i + 1]] for i in range(self.num_nodes)])
        return tuple(out)

    @cached_property
    def adjacency_sets(self) -> tuple[list[frozenset], list[frozenset], list[frozenset]]:
        return tuple([frozenset(r) for r in lists] for lists in self.adjacency_lists)

    def adjacency_matrix(self, directed: bool = False):
        """Sparse 0/1 matrix of the undirected edges (or of the directed ones)."""
        import scipy.sparse as sp

        indptr, indices = self._out if directed else self._und
        data = np.ones(len(indices), dtype=np.int64)
        return sp.csr_matrix((data, indices, indptr), shape=(self.num_nodes, self.num_nodes))

    def edge_list(self) -> list[tuple[int, int, bool]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.directed.tolist()))

    def permute(self, perm: Sequence[int]) -> "HeteroGraph":
        """Relabel node ``i`` as ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        node_type = np.empty_like(self.node_type)
        node_type[perm] = self.node_type
        return HeteroGraph.from_arrays(
            self.num_nodes, perm[self.src], perm[self.dst], self.directed.copy(),
            node_type, self.type_names,
        )

    def same_as(self, other: "HeteroGraph") -> bool:
        def key(g):
            return sorted(g.edge_list())

        return (
            self.num_nodes == other.num_nodes
            and self.type_names == other.type_names
            and np.array_equal(self.node_type, other.node_type)
            and key(self) == key(other)
        )


def validate_edges(num_nodes: int, src: np.ndarray, dst: np.ndarray, directed: np.ndarray):
    """Return ``(index, message)`` for the first invalid edge, or None."""
    n = len(src)
    if n == 0:
        return None
    problems = []
    out_of_range = (src < 0) | (src >= num_nodes) | (dst < 0) | (dst >= num_nodes)
    if out_of_range.any():
        problems.append((int(np.argmax(out_of_range)), f"node index out of range (N={num_nodes})"))
    loops = src == dst
    if loops.any():
        problems.append((int(np.argmax(loops)), "self-loop"))
    # an unordered pair may carry one undirected edge, or directed edges only
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    key_dir = np.stack([src, dst, np.ones(n, dtype=np.int64)], axis=1)
    key_und = np.stack([lo, hi, np.zeros(n, dtype=np.int64)], axis=1)
    keys = np.where(directed[:, None], key_dir, key_und)
    _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    dup = np.ones(n, dtype=bool)
    dup[first] = False
    if dup.any():
        problems.append((int(np.argmax(dup)), "duplicate edge"))
    if (~directed).any() and directed.any():
        und_pairs = {(int(a), int(b)) for a, b in zip(lo[~directed], hi[~directed])}
        for idx in np.flatnonzero(directed):
            if (int(lo[idx]), int(hi[idx])) in und_pairs:
                problems.append((int(idx), "duplicate edge (pair already linked undirected)"))
                break
    if not problems:
        return None
    return min(problems)


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    data: np.ndarray
    slices: dict[int, slice]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def build_feature_matrix(
    node_type: np.ndarray,
    per_type_features: Mapping[int, tuple[Sequence[int], np.ndarray]],
    num_types: int | None = None,
) -> FeatureMatrix:
    """Concatenate per-type feature blocks into one zero-padded matrix.

    Types missing from ``per_type_features`` get a 1-hot identity block
    over their nodes (ascending node order).
    """
    node_type = np.asarray(node_type)
    n = len(node_type)
    if num_types is None:
        num_types = int(node_type.max()) + 1 if n else 0
    blocks = []
    for t in range(num_types):
        members = np.flatnonzero(node_type == t)
        if t in per_type_features:
            nodes, block = per_type_features[t]
            nodes = np.asarray(nodes, dtype=np.int64)
            block = np.asarray(block, dtype=np.float64)
            if block.ndim != 2 or block.shape[0] != len(nodes):
                raise ValueError(f"type {t}: block shape {block.shape} does not match {len(nodes)} nodes")
            if len(np.unique(nodes)) != len(nodes):
                raise ValueError(f"type {t}: node listed twice in its feature block")
            wrong = nodes[node_type[nodes] != t] if len(nodes) else nodes
            if len(wrong):
                raise ValueError(f"type {t}: node {wrong[0]} belongs to another type")
            missing = np.setdiff1d(members, nodes)
            if len(missing):
                raise ValueError(f"type {t}: node {missing[0]} missing from its feature block")
        else:
            nodes = members
            block = np.eye(len(members))
        blocks.append((nodes, block))

    width = sum(b.shape[1] for _, b in blocks)
    data = np.zeros((n, width))
    slices = {}
    col = 0
    for t, (nodes, block) in enumerate(blocks):
        w = block.shape[1]
        slices[t] = slice(col, col + w)
        if len(nodes):
            data[nodes, col:col + w] = block
        col += w
    data.setflags(write=False)
    return FeatureMatrix(data, slices)


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LabelSet:
    """Labels for a subset of nodes.

    ``y`` holds class ids (multiclass) or an ``(n, K)`` boolean matrix
    (multilabel), aligned with ``nodes``. ``split`` tags each labeled node
    with TRAIN, VALIDATION or TEST once :func:`split_labels` has run.
    """

    task: str
    num_classes: int
    nodes: np.ndarray
    y: np.ndarray
    split: np.ndarray | None = None

    def __post_init__(self):
        if self.task not in ("multiclass", "multilabel"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "multiclass" and len(self.y):
            if self.y.min() < 0 or self.y.max() >= self.num_classes:
                raise ValueError("class index out of range")

    @property
    def multilabel(self) -> bool:
        return self.task == "multilabel"

    def part(self, which) -> np.ndarray:
        """Positions (into ``nodes``) of one split part."""
        if self.split is None:
            raise ValueError("labels have not been split")
        code = SPLIT_NAMES[which] if isinstance(which, str) else which
        return np.flatnonzero(self.split == code)

    def mask_nodes(self, which) -> np.ndarray:
        return self.nodes[self.part(which)]

    def target_matrix(self, num_nodes: int) -> np.ndarray:
        """Dense ``(N, K)`` one-hot / multi-hot targets; unlabeled rows are zero."""
        Y = np.zeros((num_nodes, self.num_classes))
        if self.multilabel:
            Y[self.nodes] = self.y
        else:
            Y[self.nodes, self.y] = 1.0
        return Y

    def class_sets(self) -> list[tuple[int, ...]]:
        if self.multilabel:
            return [tuple(np.flatnonzero(row).tolist()) for row in self.y]
        return [(int(c),) for c in self.y]


def _largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    quota = total * weights / weights.sum()
    base = np.floor(quota).astype(np.int64)
    rest = total - base.sum()
    order = np.argsort(-(quota - base), kind="stable")
    base[order[:rest]] += 1
    return base


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_labels(labels: LabelSet, fractions: tuple[float, float] = (0.2, 0.1), seed: int = 0) -> LabelSet:
    """Random train/validation/test split, stratified per class for multiclass tasks."""
    f_train, f_val = fractions
    if f_train <= 0 or f_val <= 0 or f_train + f_val >= 1:
        raise ValueError("fractions must be positive and sum to less than 1")
    n = len(labels.nodes)
    rng = np.random.default_rng(seed)
    n_train = _round_half_up(f_train * n)
    n_val = _round_half_up(f_val * n)
    split = np.full(n, TEST, dtype=np.int8)

    if labels.multilabel:
        order = rng.permutation(n)
        split[order[:n_train]] = TRAIN
        split[order[n_train:n_train + n_val]] = VALIDATION
    else:
        sizes = np.bincount(labels.y, minlength=labels.num_classes).astype(float)
        present = sizes > 0
        train_per = np.zeros(labels.num_classes, dtype=np.int64)
        val_per = np.zeros(labels.num_classes, dtype=np.int64)
        train_per[present] = _largest_remainder(n_train, sizes[present])
        val_per[present] = _largest_remainder(n_val, sizes[present])
        for c in range(labels.num_classes):
            members = np.flatnonzero(labels.y == c)
            members = members[rng.permutation(len(members))]
            a, b = train_per[c], train_per[c] + val_per[c]
            split[members[:a]] = TRAIN
            split[members[a:b]] = VALIDATION

    out = replace(labels, split=split)
    train_classes = out.y[split == TRAIN]
    if labels.multilabel:
        seen = train_classes.any(axis=0) if len(train_classes) else np.zeros(labels.num_classes, bool)
    else:
        seen = np.bincount(train_classes, minlength=labels.num_classes) > 0
    if not seen.all():
        c = int(np.flatnonzero(~seen)[0])
        raise ValueError(f"class {c} has no training examples after the split; too few labels")
    return out


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    graph: HeteroGraph
    features: FeatureMatrix
    labels: LabelSet | None = None
    raw_features: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)


def load_graph(path) -> HeteroGraph:
    return load_dataset(path).graph


def load_dataset(path) -> Dataset:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return parse_dataset(fh, name=str(path))


def parse_dataset(lines: Iterable[str], name: str = "<input>") -> Dataset:
    num_nodes = None
    type_names: list[str] | None = None
    task = None
    num_classes = 0
    node_type: dict[int, int] = {}
    node_line: dict[int, int] = {}
    edges: list[tuple[int, int, bool]] = []
    edge_lines: list[int] = []
    feats: dict[int, tuple[list[int], list[list[float]], int]] = {}
    labels: dict[int, list[int]] = {}
    block: tuple[int, int] | None = None  # (type id, width) of an open FEAT block

    def fail(lineno, msg, cls=GraphFormatError):
        raise cls(f"{name}:{lineno}: {msg}")

    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0]
        if key not in _KEYWORDS:
            if block is None:
                fail(lineno, f"unknown record {key!r}")
            t, width = block
            try:
                node = int(tok[0])
                row = [float(v) for v in tok[1:]]
            except ValueError:
                fail(lineno, "malformed feature row")
            if len(row) != width:
                fail(lineno, f"feature row has {len(row)} values, expected {width}")
            feats[t][0].append(node)
            feats[t][1].append(row)
            continue
        block = None
        try:
            if key == "N":
                num_nodes = int(tok[1])
                if num_nodes < 0:
                    fail(lineno, "negative node count")
            elif key == "TYPES":
                type_names = tok[1:]
                if not type_names or len(set(type_names)) != len(type_names):
                    fail(lineno, "TYPES needs unique names")
            elif key == "TASK":
                task = tok[1]
                num_classes = int(tok[2])
                if task not in ("multiclass", "multilabel") or num_classes <= 0:
                    fail(lineno, "TASK must be 'multiclass K' or 'multilabel K'")
            elif key == "NODE":
                if type_names is None:
                    fail(lineno, "NODE before TYPES")
                node = int(tok[1])
                if tok[2] not in type_names:
                    fail(lineno, f"unknown node type {tok[2]!r}", GraphValidationError)
                if node in node_type:
                    fail(lineno, f"node {node} declared twice", GraphValidationError)
                node_type[node] = type_names.index(tok[2])
                node_line[node] = lineno
            elif key == "EDGE":
                if len(tok) not in (3, 4) or (len(tok) == 4 and tok[3] != "directed"):
                    fail(lineno, "EDGE <src> <dst> [directed]")
                edges.append((int(tok[1]), int(tok[2]), len(tok) == 4))
                edge_lines.append(lineno)
            elif key == "FEAT":
                if type_names is None or tok[1] not in type_names:
                    fail(lineno, f"FEAT for unknown type {tok[1]!r}")
                t = type_names.index(tok[1])
                if t in feats:
                    fail(lineno, f"second FEAT block for type {tok[1]}")
                width = int(tok[2])
                feats[t] = ([], [], width)
                block = (t, width)
            elif key == "LABEL":
                node = int(tok[1])
                classes = [int(c) for c in tok[2].split(",") if c != ""] if len(tok) > 2 else []
                if node in labels:
                    fail(lineno, f"node {node} labeled twice", GraphValidationError)
                labels[node] = classes
                node_line.setdefault(-1 - node, lineno)
        except (IndexError, ValueError) as exc:
            if isinstance(exc, GraphFormatError):
                raise
            fail(lineno, f"malformed {key} record")

    if num_nodes is None:
        raise GraphFormatError(f"{name}: missing 'N <count>' header")
    if type_names is None:
        type_names = ["node"]
    for node, ln in node_line.items():
        if 0 <= node and node >= num_nodes:
            fail(ln, f"node index out of range: {node} (N={num_nodes})", GraphValidationError)
    types = np.zeros(num_nodes, dtype=np.int64)
    if len(type_names) > 1 or node_type:
        missing = [i for i in range(num_nodes) if i not in node_type]
        if missing and len(type_names) > 1:
            raise GraphValidationError(f"{name}: node {missing[0]} has no NODE record")
        for node, t in node_type.items():
            types[node] = t

    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    directed = np.array([e[2] for e in edges], dtype=bool)
    bad = validate_edges(num_nodes, src, dst, directed)
    if bad is not None:
        idx, msg = bad
        fail(edge_lines[idx], msg, GraphValidationError)
    graph = HeteroGraph.from_arrays(num_nodes, src, dst, directed, types, type_names)

    raw = {}
    for t, (nodes, rows, width) in feats.items():
        nodes_arr = np.asarray(nodes, dtype=np.int64)
        block_arr = np.asarray(rows, dtype=np.float64).reshape(len(rows), width)
        if len(nodes_arr) and (nodes_arr.min() < 0 or nodes_arr.max() >= num_nodes):
            raise GraphValidationError(f"{name}: feature row for out-of-range node")
        raw[t] = (nodes_arr, block_arr)
    try:
        features = build_feature_matrix(types, raw, len(type_names))
    except ValueError as exc:
        raise GraphValidationError(f"{name}: {exc}") from None

    label_set = None
    if task is not None:
        for node, classes in labels.items():
            if not 0 <= node < num_nodes:
                fail(node_line[-1 - node], f"label for out-of-range node {node}", GraphValidationError)
            if any(c < 0 or c >= num_classes for c in classes):
                fail(node_line[-1 - node], f"class out of range for node {node}", GraphValidationError)
            if task == "multiclass" and len(classes) != 1:
                fail(node_line[-1 - node], "multiclass label needs exactly one class", GraphValidationError)
        nodes = np.array(sorted(labels), dtype=np.int64)
        if task == "multiclass":
            y = np.array([labels[i][0] for i in nodes], dtype=np.int64)
        else:
            y = np.zeros((len(nodes), num_classes), dtype=bool)
            for r, i in enumerate(nodes):
                y[r, labels[i]] = True
        label_set = LabelSet(task, num_classes, nodes, y)
    elif labels:
        raise GraphFormatError(f"{name}: LABEL records without a TASK header")
    return Dataset(graph, features, label_set, raw)


def format_dataset(ds: Dataset) -> str:
    g = ds.graph
    out = [f"N {g.num_nodes}", "TYPES " + " ".join(g.type_names)]
    if ds.labels is not None:
        out.append(f"TASK {ds.labels.task} {ds.labels.num_classes}")
    if len(g.type_names) > 1:
        out.extend(f"NODE {i} {g.type_names[t]}" for i, t in enumerate(g.node_type.tolist()))
    for s, d, directed in g.edge_list():
        out.append(f"EDGE {s} {d} directed" if directed else f"EDGE {s} {d}")
    for t in sorted(ds.raw_features):
        nodes, block = ds.raw_features[t]
        out.append(f"FEAT {g.type_names[t]} {block.shape[1]}")
        for node, row in zip(nodes.tolist(), block):
            out.append(f"{node} " + " ".join(repr(float(v)) for v in row))
    if ds.labels is not None:
        for node, classes in zip(ds.labels.nodes.tolist(), ds.labels.class_sets()):
            out.append(f"LABEL {node} " + ",".join(map(str, classes)))
    return "\n".join(out) + "\n"


def save_dataset(ds: Dataset, path) -> None:
    Path(path).write_text(format_dataset(ds), encoding="utf-8")
