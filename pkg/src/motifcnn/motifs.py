"""Motif patterns, semantic roles, instance enumeration and motif-adjacency tensors.

A motif is a small connected pattern (at most 5 nodes) with a target
position, a context position and auxiliary positions. Non-target positions
are grouped into roles: the orbits of the pattern's automorphism group
restricted to automorphisms that fix the target. Instances are non-induced,
injective, type- and direction-consistent embeddings; two embeddings that
differ by such an automorphism are the same instance.

Motif files are JSON::

    {"name": "APV", "nodes": [{"id": 0, "type": "A"}, {"id": 1, "type": "P"},
     {"id": 2, "type": "V"}], "edges": [[0, 1], [1, 2]],
     "target": 0, "context": 2, "aux": [1]}

A node without ``"type"`` (or with type ``"*"``) matches nodes of any type.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .graph import HeteroGraph

log = logging.getLogger(__name__)

WILDCARD = "*"
MAX_MOTIF_NODES = 5
DEFAULT_INSTANCE_CAP = 10**8


class MotifError(ValueError):
    """Invalid motif specification."""


class InstanceLimitError(MemoryError):
    """Enumeration produced more instances than the configured cap."""


class MotifInstance(NamedTuple):
    target: int
    mapping: tuple[int, ...]  # motif local id -> graph node


@dataclass(frozen=True, eq=False)
class Motif:
    types: tuple[str, ...]
    edges: tuple[tuple[int, int, bool], ...]
    target: int
    context: int
    aux: tuple[int, ...]
    name: str = "motif"
    roles: tuple[int, ...] | None = None

    def __post_init__(self):
        n = len(self.types)
        if not 2 <= n <= MAX_MOTIF_NODES:
            raise MotifError(f"motifs need 2..{MAX_MOTIF_NODES} nodes, got {n}")
        if self.target == self.context:
            raise MotifError("target and context must differ")
        for x in (self.target, self.context, *self.aux):
            if not 0 <= x < n:
                raise MotifError(f"local id {x} out of range")
        if self.target in self.aux or self.context in self.aux or len(set(self.aux)) != len(self.aux):
            raise MotifError("aux must be distinct from target and context")
        und_pairs, dir_pairs = set(), set()
        for s, d, directed in self.edges:
            if s == d or not (0 <= s < n and 0 <= d < n):
                raise MotifError(f"bad motif edge ({s}, {d})")
            pair = (min(s, d), max(s, d))
            if directed:
                clash = (s, d) in dir_pairs or pair in und_pairs
                dir_pairs.add((s, d))
            else:
                clash = pair in und_pairs or (s, d) in dir_pairs or (d, s) in dir_pairs
                und_pairs.add(pair)
            if clash:
                raise MotifError(f"duplicate motif edge ({s}, {d})")
        # connectivity, ignoring direction
        reach = {self.target}
        frontier = [self.target]
        while frontier:
            x = frontier.pop()
            for s, d, _ in self.edges:
                for a, b in ((s, d), (d, s)):
                    if a == x and b not in reach:
                        reach.add(b)
                        frontier.append(b)
        if len(reach) != n:
            raise MotifError("motif pattern must be connected")

    # -- construction ----------------------------------------------------

    @classmethod
    def from_dict(cls, spec: dict, name: str | None = None) -> "Motif":
        try:
            nodes = sorted(spec["nodes"], key=lambda d: d["id"])
            ids = [d["id"] for d in nodes]
            if ids != list(range(len(ids))):
                raise MotifError("motif node ids must be 0..n-1")
            types = tuple(str(d.get("type", WILDCARD)) for d in nodes)
            edges = []
            for e in spec["edges"]:
                if len(e) == 3 and e[2] != "directed":
                    raise MotifError(f"unknown edge flag {e[2]!r}")
                edges.append((int(e[0]), int(e[1]), len(e) == 3))
            target, context = int(spec["target"]), int(spec["context"])
            if "aux" in spec:
                aux = tuple(int(a) for a in spec["aux"])
            else:
                aux = tuple(i for i in ids if i not in (target, context))
        except (KeyError, TypeError, IndexError) as exc:
            raise MotifError(f"malformed motif spec: {exc}") from None
        if "roles" in spec or "role_map" in spec:
            raise MotifError("role maps are derived from the pattern, not supplied")
        motif = cls(types, tuple(_canonical_edges(edges)), target, context, aux,
                    name or spec.get("name", "motif"))
        return compute_role_map(motif)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "nodes": [{"id": i, "type": t} for i, t in enumerate(self.types)],
            "edges": [[s, d, "directed"] if dr else [s, d] for s, d, dr in self.edges],
            "target": self.target,
            "context": self.context,
            "aux": list(self.aux),
        }

    def content_hash(self) -> str:
        body = self.to_dict()
        body.pop("name")
        return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]

    # -- structure -------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.types)

    @property
    def num_roles(self) -> int:
        if self.roles is None:
            raise MotifError("role map not computed")
        return max(self.roles)

    def role_positions(self) -> list[list[int]]:
        """Local ids per role (index 0 is role 1)."""
        out = [[] for _ in range(self.num_roles)]
        for x, r in enumerate(self.roles):
            if x != self.target:
                out[r - 1].append(x)
        return out

    @cached_property
    def automorphisms(self) -> tuple[tuple[int, ...], ...]:
        """Type- and edge-preserving permutations fixing the target (identity first)."""
        n = self.size
        edge_set = set(self.edges)
        others = [x for x in range(n) if x != self.target]
        out = []
        for perm in itertools.permutations(others):
            sigma = [0] * n
            sigma[self.target] = self.target
            for x, y in zip(others, perm):
                sigma[x] = y
            if any(self.types[x] != self.types[sigma[x]] for x in range(n)):
                continue
            mapped = set(_canonical_edges((sigma[s], sigma[d], dr) for s, d, dr in self.edges))
            if mapped == edge_set:
                out.append(tuple(sigma))
        out.sort(key=lambda s: s != tuple(range(n)))
        return tuple(out)

    @property
    def context_shares_role(self) -> bool:
        return self.roles is not None and any(
            self.roles[x] == self.roles[self.context] for x in self.aux
        )

    def is_triangle(self) -> bool:
        return (
            self.size == 3
            and len(self.edges) == 3
            and not any(dr for _, _, dr in self.edges)
            and len(set(self.types)) == 1
        )

    def is_path3(self) -> bool:
        return self.size == 3 and len(self.edges) == 2


def _canonical_edges(edges) -> list[tuple[int, int, bool]]:
    out = [(s, d, True) if dr else (min(s, d), max(s, d), False) for s, d, dr in edges]
    return sorted(out)


def compute_role_map(motif: Motif) -> Motif:
    """Assign roles as orbits of non-target positions under target-fixing automorphisms.

    The orbit holding the context is role 1; the remaining orbits are
    numbered by their smallest local id.
    """
    n = motif.size
    orbit = {}
    for x in range(n):
        if x == motif.target or x in orbit:
            continue
        members = sorted({sigma[x] for sigma in motif.automorphisms})
        for y in members:
            orbit[y] = members[0]
    reps = sorted(set(orbit.values()), key=lambda r: (orbit[motif.context] != r, r))
    role_of = {r: k + 1 for k, r in enumerate(reps)}
    roles = tuple(0 if x == motif.target else role_of[orbit[x]] for x in range(n))
    out = replace(motif, roles=roles)
    if out.num_roles > 1 + len(motif.aux):
        raise MotifError(
            f"{out.num_roles} roles exceed 1 + |aux| = {1 + len(motif.aux)}; "
            "list every non-target, non-context node in aux"
        )
    if out.context_shares_role:
        log.info("motif %s: context shares its role with an auxiliary node", motif.name)
    return out


def load_motif(path) -> Motif:
    path = Path(path)
    try:
        spec = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MotifError(f"{path}: {exc}") from None
    return Motif.from_dict(spec, name=spec.get("name", path.stem))


def edge_motif(src_type: str = WILDCARD, dst_type: str = WILDCARD, directed: bool = False,
               name: str = "edge") -> Motif:
    """Two-node motif: target 0, context 1."""
    return compute_role_map(Motif((src_type, dst_type), ((0, 1, directed),), 0, 1, (), name))


def triangle_motif(node_type: str = WILDCARD, name: str = "triangle") -> Motif:
    return compute_role_map(
        Motif((node_type,) * 3, ((0, 1, False), (0, 2, False), (1, 2, False)), 0, 1, (2,), name)
    )


def path_motif(types: Sequence[str] = (WILDCARD,) * 3, target: int = 0, context: int = 2,
               name: str = "path") -> Motif:
    """Three-node path ``0 - 1 - 2``."""
    aux = tuple(x for x in range(3) if x not in (target, context))
    return compute_role_map(Motif(tuple(types), ((0, 1, False), (1, 2, False)), target, context, aux, name))


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def _resolve_types(g: HeteroGraph, motif: Motif) -> list[int | None] | None:
    """Graph type id per motif position (None = wildcard); None if a type is absent."""
    out = []
    for t in motif.types:
        if t == WILDCARD:
            out.append(None)
        elif t in g.type_names:
            out.append(g.type_names.index(t))
        else:
            return None
    return out


def _instance_sort_key(motif: Motif):
    positions = motif.role_positions()

    def key(inst: MotifInstance):
        m = inst.mapping
        return (inst.target, tuple(tuple(sorted(m[x] for x in pos)) for pos in positions), m)

    return key


def _plan(motif: Motif):
    """Matching order from the target plus, per step, the anchor edge and the checks."""
    order = [motif.target]
    steps = []
    while len(order) < motif.size:
        best = None
        for x in range(motif.size):
            if x in order:
                continue
            links = []
            for s, d, dr in motif.edges:
                if s == x and d in order:
                    links.append((order.index(d), "in" if dr else "und"))   # x -> d: x is a predecessor of d
                elif d == x and s in order:
                    links.append((order.index(s), "out" if dr else "und"))  # s -> x: x is a successor of s
            if links and (best is None or len(links) > len(best[1])):
                best = (x, links)
        x, links = best
        # anchor on the first link; the rest become membership checks
        steps.append((x, links[0], links[1:]))
        order.append(x)
    return order, steps


class _Matcher:
    def __init__(self, g: HeteroGraph, motif: Motif, cap: int):
        self.g = g
        self.motif = motif
        self.cap = cap
        self.types = _resolve_types(g, motif)
        self.node_type = g.node_type.tolist()
        self.order, self.steps = _plan(motif)
        self.lists = dict(zip(("und", "out", "in"), g.adjacency_lists))
        self.sets = dict(zip(("und", "out", "in"), g.adjacency_sets))
        self.auts = motif.automorphisms[1:]

    def canonical(self, m: tuple[int, ...]) -> bool:
        for sigma in self.auts:
            other = tuple(m[s] for s in sigma)
            if other < m:
                return False
        return True

    def for_target(self, u: int) -> list[MotifInstance]:
        if self.types is None:
            return []
        tt = self.types[self.motif.target]
        if tt is not None and self.node_type[u] != tt:
            return []
        n = self.motif.size
        found = []
        assign = [None] * len(self.order)
        assign[0] = u
        node_type = self.node_type
        types = self.types
        order = self.order

        def rec(depth):
            if depth == n:
                m = [0] * n
                for pos, x in enumerate(order):
                    m[x] = assign[pos]
                m = tuple(m)
                if self.canonical(m):
                    found.append(MotifInstance(u, m))
                    if len(found) > self.cap:
                        raise InstanceLimitError(f"more than {self.cap} instances")
                return
            x, (anchor, kind), checks = self.steps[depth - 1]
            want = types[x]
            used = assign[:depth]
            for v in self.lists[kind][assign[anchor]]:
                if want is not None and node_type[v] != want:
                    continue
                if v in used:
                    continue
                if all(assign[a] in self.sets[k][v] for a, k in _flip(checks)):
                    assign[depth] = v
                    rec(depth + 1)
            assign[depth] = None

        rec(1)
        return found


def _flip(checks):
    # a check (anchor, kind) asks "v in lists[kind][assign[anchor]]"; test the
    # equivalent membership from v's side: und stays und, out <-> in
    swap = {"und": "und", "out": "in", "in": "out"}
    return [(a, swap[k]) for a, k in checks]


def _chunks(items: list, parts: int) -> list[list]:
    parts = max(1, min(parts, len(items) or 1))
    size = -(-len(items) // parts) if items else 0
    return [items[i:i + size] for i in range(0, len(items), size)] if items else [[]]


def _run_partitioned(fn, targets: list[int], threads: int) -> list[MotifInstance]:
    chunks = _chunks(targets, threads)
    if threads <= 1 or len(chunks) == 1:
        results = [fn(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, chunks))
    return [inst for part in results for inst in part]


def enumerate_instances(
    g: HeteroGraph,
    motif: Motif,
    target: int | None = None,
    threads: int = 1,
    cap: int = DEFAULT_INSTANCE_CAP,
) -> list[MotifInstance]:
    """All instances of ``motif`` in ``g`` (or those with the given target).

    Output is sorted by target, then by the per-role sorted node tuples,
    independent of ``threads``.
    """
    if motif.roles is None:
        motif = compute_role_map(motif)
    matcher = _Matcher(g, motif, cap)
    targets = [target] if target is not None else list(range(g.num_nodes))

    def work(chunk):
        out = []
        for u in chunk:
            out.extend(matcher.for_target(u))
            if len(out) > cap:
                raise InstanceLimitError(f"more than {cap} instances of motif {motif.name}")
        return out

    found = _run_partitioned(work, targets, threads)
    if len(found) > cap:
        raise InstanceLimitError(f"more than {cap} instances of motif {motif.name}")
    found.sort(key=_instance_sort_key(motif))
    return found


def enumerate_triangles(
    g: HeteroGraph,
    motif: Motif | None = None,
    threads: int = 1,
    cap: int = DEFAULT_INSTANCE_CAP,
) -> list[MotifInstance]:
    """Triangle instances by degree-ordered forward neighbor intersection.

    Each triangle is listed once per member as target. Returns exactly what
    :func:`enumerate_instances` returns for the same triangle motif.
    """
    motif = motif or triangle_motif()
    if motif.roles is None:
        motif = compute_role_map(motif)
    if not motif.is_triangle():
        raise MotifError("enumerate_triangles needs an undirected single-type triangle motif")
    types = _resolve_types(g, motif)
    if types is None:
        return []
    want = types[0]
    und = g.adjacency_lists[0]
    node_type = g.node_type.tolist()
    ok = [want is None or t == want for t in node_type]
    deg = [len(r) for r in und]
    rank = sorted(range(g.num_nodes), key=lambda i: (deg[i], i))
    pos = [0] * g.num_nodes
    for r, i in enumerate(rank):
        pos[i] = r
    fwd = [
        frozenset(v for v in und[u] if ok[v] and pos[v] > pos[u]) if ok[u] else frozenset()
        for u in range(g.num_nodes)
    ]
    t = motif.target
    p, q = [x for x in range(3) if x != t]

    def emit(a, b, c, out):
        for tgt, x, y in ((a, b, c), (b, a, c), (c, a, b)):
            m = [0, 0, 0]
            m[t] = tgt
            m[p], m[q] = (x, y) if x < y else (y, x)
            out.append(MotifInstance(tgt, tuple(m)))

    def work(chunk):
        out = []
        for u in chunk:
            fu = fwd[u]
            for v in fu:
                for w in fu & fwd[v]:
                    emit(u, v, w, out)
            if len(out) > cap:
                raise InstanceLimitError(f"more than {cap} triangle instances")
        return out

    found = _run_partitioned(work, list(range(g.num_nodes)), threads)
    if len(found) > cap:
        raise InstanceLimitError(f"more than {cap} triangle instances")
    found.sort(key=_instance_sort_key(motif))
    return found


def enumerate_wedges(
    g: HeteroGraph,
    motif: Motif,
    threads: int = 1,
    cap: int = DEFAULT_INSTANCE_CAP,
) -> list[MotifInstance]:
    """Instances of a 3-node path motif by scanning neighbor pairs of each center node."""
    if motif.roles is None:
        motif = compute_role_map(motif)
    if not motif.is_path3():
        raise MotifError("enumerate_wedges needs a 3-node path motif")
    types = _resolve_types(g, motif)
    if types is None:
        return []
    touch = {x: [] for x in range(3)}
    for s, d, dr in motif.edges:
        touch[s].append((d, "out" if dr else "und"))
        touch[d].append((s, "in" if dr else "und"))
    center = next(x for x in range(3) if len(touch[x]) == 2)
    (a, kind_a), (b, kind_b) = sorted(touch[center])
    lists = dict(zip(("und", "out", "in"), g.adjacency_lists))
    node_type = g.node_type.tolist()
    tc, ta, tb = types[center], types[a], types[b]
    symmetric = len(motif.automorphisms) > 1
    tpos = motif.target

    def work(chunk):
        out = []
        for x in chunk:
            if tc is not None and node_type[x] != tc:
                continue
            cand_a = [y for y in lists[kind_a][x] if ta is None or node_type[y] == ta]
            if not cand_a:
                continue
            cand_b = [z for z in lists[kind_b][x] if tb is None or node_type[z] == tb]
            for y in cand_a:
                for z in cand_b:
                    if y == z or (symmetric and z < y):
                        continue
                    m = [0, 0, 0]
                    m[center], m[a], m[b] = x, y, z
                    m = tuple(m)
                    out.append(MotifInstance(m[tpos], m))
            if len(out) > cap:
                raise InstanceLimitError(f"more than {cap} wedge instances")
        return out

    found = _run_partitioned(work, list(range(g.num_nodes)), threads)
    if len(found) > cap:
        raise InstanceLimitError(f"more than {cap} wedge instances")
    found.sort(key=_instance_sort_key(motif))
    return found


def brute_force_instances(g: HeteroGraph, motif: Motif, max_cells: int = 5 * 10**7) -> list[MotifInstance]:
    """Exhaustive reference enumeration over all ``N^|V_M|`` assignments.

    Embeddings are grouped by target plus, for every role, the sorted
    tuple of nodes filling that role. The lexicographically smallest
    embedding represents each group.
    """
    n, N = motif.size, g.num_nodes
    if N ** n > max_cells:
        raise InstanceLimitError(f"brute force over {N}^{n} assignments exceeds the cap")
    if motif.roles is None:
        motif = compute_role_map(motif)
    if N == 0:
        return []
    und = np.zeros((N, N), dtype=bool)
    out = np.zeros((N, N), dtype=bool)
    for s, d, dr in g.edge_list():
        if dr:
            out[s, d] = True
        else:
            und[s, d] = und[d, s] = True

    def axis(x, arr1d):
        shape = [1] * n
        shape[x] = N
        return arr1d.reshape(shape)

    def pair(x, y, mat):
        shape = [1] * n
        shape[x], shape[y] = N, N
        return mat.reshape(shape) if x < y else mat.T.reshape(shape)

    ok = np.ones((N,) * n, dtype=bool)
    for x, t in enumerate(motif.types):
        if t != WILDCARD:
            match = g.node_type == (g.type_names.index(t) if t in g.type_names else -1)
            ok = ok & axis(x, match)
    neq = ~np.eye(N, dtype=bool)
    for x, y in itertools.combinations(range(n), 2):
        ok = ok & pair(x, y, neq)
    for s, d, dr in motif.edges:
        ok = ok & pair(s, d, out if dr else und)

    positions = motif.role_positions()
    groups = {}
    for m in map(tuple, np.argwhere(ok).tolist()):
        key = (m[motif.target],) + tuple(tuple(sorted(m[x] for x in pos)) for pos in positions)
        if key not in groups or m < groups[key]:
            groups[key] = m
    found = [MotifInstance(m[motif.target], m) for m in groups.values()]
    found.sort(key=_instance_sort_key(motif))
    return found


def find_instances(g: HeteroGraph, motif: Motif, threads: int = 1, cap: int = DEFAULT_INSTANCE_CAP):
    """Dispatch to the triangle or wedge enumerator when the pattern allows it."""
    if motif.roles is None:
        motif = compute_role_map(motif)
    if motif.is_triangle():
        return enumerate_triangles(g, motif, threads, cap)
    if motif.is_path3():
        return enumerate_wedges(g, motif, threads, cap)
    return enumerate_instances(g, motif, threads=threads, cap=cap)


# ---------------------------------------------------------------------------
# Motif-adjacency tensor
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MotifTensor:
    """Per-role count matrices ``A_k`` (int64 CSR) and instance counts ``D``."""

    roles: tuple[sp.csr_matrix, ...]
    counts: np.ndarray
    motif: Motif | None = None

    @property
    def num_roles(self) -> int:
        return len(self.roles)

    @property
    def num_nodes(self) -> int:
        return len(self.counts)

    @property
    def total_instances(self) -> int:
        return int(self.counts.sum())

    @cached_property
    def float_roles(self) -> tuple[sp.csr_matrix, ...]:
        return tuple(A.astype(np.float64) for A in self.roles)

    @cached_property
    def inverse_counts(self) -> np.ndarray:
        """``1 / D_ii`` with zero where a node has no instances."""
        c = self.counts.astype(np.float64)
        out = np.zeros_like(c)
        np.divide(1.0, c, out=out, where=c > 0)
        return out

    def dense(self) -> np.ndarray:
        return np.stack([A.toarray() for A in self.roles])

    def permute(self, perm) -> "MotifTensor":
        perm = np.asarray(perm)
        P = sp.csr_matrix((np.ones(len(perm), dtype=np.int64), (perm, np.arange(len(perm)))),
                          shape=(len(perm),) * 2)
        roles = tuple(sp.csr_matrix(P @ A @ P.T) for A in self.roles)
        for A in roles:
            A.sort_indices()
        counts = np.empty_like(self.counts)
        counts[perm] = self.counts
        return MotifTensor(roles, counts, self.motif)


def tensor_from_instances(instances: Sequence[MotifInstance], motif: Motif, num_nodes: int) -> MotifTensor:
    K = motif.num_roles
    counts = np.zeros(num_nodes, dtype=np.int64)
    if instances:
        arr = np.array([inst.mapping for inst in instances], dtype=np.int64)
        tgt = arr[:, motif.target]
        np.add.at(counts, tgt, 1)
    roles = []
    for k, pos in enumerate(motif.role_positions(), 1):
        if instances:
            rows = np.concatenate([tgt] * len(pos))
            cols = np.concatenate([arr[:, x] for x in pos])
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
        A = sp.coo_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)),
                          shape=(num_nodes, num_nodes)).tocsr()
        A.sum_duplicates()
        A.sort_indices()
        roles.append(A)
    assert len(roles) == K
    return MotifTensor(tuple(roles), counts, motif)


def build_motif_tensor(
    g: HeteroGraph,
    motif: Motif,
    cap: int = DEFAULT_INSTANCE_CAP,
    threads: int = 1,
) -> MotifTensor:
    instances = find_instances(g, motif, threads=threads, cap=cap)
    return tensor_from_instances(instances, motif if motif.roles else compute_role_map(motif), g.num_nodes)


def write_tensor(tensor: MotifTensor, out_dir, prefix: str) -> list[Path]:
    """One ``i j count`` triplet file per role plus ``i L_i`` diagonal file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, A in enumerate(tensor.roles, 1):
        coo = A.tocoo()
        order = np.lexsort((coo.col, coo.row))
        path = out_dir / f"{prefix}.role{k}.txt"
        with open(path, "w", encoding="utf-8") as fh:
            for i, j, c in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{i} {j} {c}\n")
        paths.append(path)
    path = out_dir / f"{prefix}.diag.txt"
    with open(path, "w", encoding="utf-8") as fh:
        for i, c in enumerate(tensor.counts.tolist()):
            fh.write(f"{i} {c}\n")
    paths.append(path)
    return paths


def read_tensor(in_dir, prefix: str, motif: Motif | None = None) -> MotifTensor:
    in_dir = Path(in_dir)
    diag = np.loadtxt(in_dir / f"{prefix}.diag.txt", dtype=np.int64, ndmin=2)
    N = len(diag)
    counts = np.zeros(N, dtype=np.int64)
    counts[diag[:, 0]] = diag[:, 1]
    roles = []
    k = 1
    while (path := in_dir / f"{prefix}.role{k}.txt").exists():
        trip = np.loadtxt(path, dtype=np.int64, ndmin=2).reshape(-1, 3)
        A = sp.csr_matrix((trip[:, 2], (trip[:, 0], trip[:, 1])), shape=(N, N))
        A.sort_indices()
        roles.append(A)
        k += 1
    if motif is not None and motif.roles is not None and len(roles) != motif.num_roles:
        raise MotifError(f"{prefix}: found {len(roles)} role files, motif has {motif.num_roles} roles")
    return MotifTensor(tuple(roles), counts, motif)
