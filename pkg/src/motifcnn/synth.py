"""Synthetic datasets for desk-scale experiments and tests."""
from __future__ import annotations

import numpy as np

from .graph import Dataset, HeteroGraph, LabelSet, build_feature_matrix
from .motifs import Motif, compute_role_map, edge_motif, path_motif, triangle_motif


def random_graph(n: int, p: float, num_types: int = 1, directed_fraction: float = 0.0,
                 seed=None) -> HeteroGraph:
    """G(n, p) over unordered pairs; each edge becomes directed (random orientation)
    with probability ``directed_fraction``. Node types are drawn uniformly."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    src, dst = iu[keep], ju[keep]
    directed = rng.random(len(src)) < directed_fraction
    flip = directed & (rng.random(len(src)) < 0.5)
    src, dst = np.where(flip, dst, src), np.where(flip, src, dst)
    types = rng.integers(0, num_types, size=n)
    names = [chr(ord("A") + t) for t in range(num_types)]
    return HeteroGraph.from_arrays(n, src, dst, directed, types, names)


def random_gnm(n: int, m: int, seed=None) -> HeteroGraph:
    """Uniform random simple undirected graph with exactly ``m`` edges."""
    rng = np.random.default_rng(seed)
    total = n * (n - 1) // 2
    if m > total:
        raise ValueError("too many edges requested")
    picked = np.unique(rng.integers(0, total, size=int(m * 1.2) + 16))
    while len(picked) < m:
        picked = np.unique(np.concatenate([picked, rng.integers(0, total, size=m)]))
    picked = rng.permutation(picked)[:m]
    # unrank pair index -> (i, j), i < j, row-major over the upper triangle
    i = (n - 2 - np.floor(np.sqrt(-8.0 * picked + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5)).astype(np.int64)
    j = picked + i + 1 - total + (n - i) * ((n - i) - 1) // 2
    return HeteroGraph.from_arrays(n, i, j)


def planted_hetero(
    num_authors: int = 300,
    num_venues: int = 20,
    num_classes: int = 4,
    papers_per_author: tuple[int, int] = (3, 5),
    coauthors: tuple[int, int] = (0, 2),
    homophily: float = 0.0,
    noise: float = 0.1,
    feature_noise: float = 0.2,
    extra_feature_dims: int = 4,
    max_citations: int = 3,
    seed=0,
) -> Dataset:
    """Author/paper/venue graph where an author's class is the majority class of
    the venues of the author's papers.

    Links: author - paper, paper - venue, paper -> paper (citations). Only
    venues carry features (a noisy class indicator); authors and papers fall
    back to 1-hot features. ``noise`` is the chance that a paper led by an
    author is published at a venue outside the author's latent class; each paper gets
    a uniform number of extra co-authors in the ``coauthors`` range, drawn
    from the lead author's latent class with probability ``homophily``.
    """
    if num_authors < 1 or num_venues < num_classes or num_classes < 2:
        raise ValueError("need authors, at least two classes and a venue per class")
    if not 0.0 <= noise < 1.0:
        raise ValueError("noise must be in [0, 1)")
    lo, hi = papers_per_author
    if not 1 <= lo <= hi:
        raise ValueError("papers_per_author must satisfy 1 <= lo <= hi")
    rng = np.random.default_rng(seed)
    C = num_classes
    venue_class = np.arange(num_venues) % C
    by_class = [np.flatnonzero(venue_class == c) for c in range(C)]
    latent = rng.integers(0, C, size=num_authors)
    members = [np.flatnonzero(latent == c) for c in range(C)]

    paper_authors: list[list[int]] = []
    paper_venue: list[int] = []
    for a in range(num_authors):
        for _ in range(rng.integers(lo, hi + 1)):
            c = latent[a]
            if rng.random() < noise:
                c = rng.choice([k for k in range(C) if k != latent[a]])
            paper_venue.append(int(rng.choice(by_class[c])))
            authors = [a]
            for _ in range(int(rng.integers(coauthors[0], coauthors[1] + 1))):
                pool = members[latent[a]] if rng.random() < homophily else np.arange(num_authors)
                cand = int(rng.choice(pool))
                if cand not in authors:
                    authors.append(cand)
            paper_authors.append(authors)
    num_papers = len(paper_venue)

    A0, P0, V0 = 0, num_authors, num_authors + num_papers
    N = V0 + num_venues
    node_type = np.concatenate([
        np.zeros(num_authors, dtype=np.int64),
        np.ones(num_papers, dtype=np.int64),
        np.full(num_venues, 2, dtype=np.int64),
    ])
    edges = []
    votes = np.zeros((num_authors, C), dtype=np.int64)
    for p, (authors, v) in enumerate(zip(paper_authors, paper_venue)):
        for a in authors:
            edges.append((A0 + a, P0 + p, False))
            votes[a, venue_class[v]] += 1
        edges.append((P0 + p, V0 + v, False))
    for p in range(num_papers):
        k = int(rng.integers(0, max_citations + 1))
        cited = rng.choice(num_papers - 1, size=min(k, num_papers - 1), replace=False) if num_papers > 1 else []
        for q in cited:
            q = int(q) + (q >= p)
            edges.append((P0 + p, P0 + q, True))
    # mutual citations would be two directed edges, which is allowed; drop exact repeats
    edges = list(dict.fromkeys(edges))

    labels = np.empty(num_authors, dtype=np.int64)
    for a in range(num_authors):
        top = np.flatnonzero(votes[a] == votes[a].max())
        labels[a] = latent[a] if latent[a] in top else top[0]

    graph = HeteroGraph.from_edges(N, edges, node_type, ("A", "P", "V"))
    width = C + extra_feature_dims
    venue_feats = rng.normal(0.0, feature_noise, size=(num_venues, width))
    venue_feats[np.arange(num_venues), venue_class] += 1.0
    raw = {2: (np.arange(V0, N), venue_feats)}
    features = build_feature_matrix(node_type, raw, 3)
    label_set = LabelSet("multiclass", C, np.arange(num_authors), labels)
    return Dataset(graph, features, label_set, raw)


def sbm_homo(n: int = 200, p_in: float = 0.2, p_out: float = 0.02, feature_dim: int = 8,
             feature_noise: float = 1.0, signal: float = 0.5, seed=0) -> Dataset:
    """Two-block stochastic block model with noisy class-mean features."""
    if n < 4 or not (0 <= p_out <= 1 and 0 <= p_in <= 1):
        raise ValueError("invalid SBM sizes or probabilities")
    rng = np.random.default_rng(seed)
    block = np.arange(n) % 2
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    graph = HeteroGraph.from_arrays(n, iu[keep], ju[keep], type_names=("node",))
    means = np.zeros((2, feature_dim))
    means[0, 0], means[1, 0] = signal, -signal
    feats = means[block] + rng.normal(0.0, feature_noise, size=(n, feature_dim))
    raw = {0: (np.arange(n), feats)}
    features = build_feature_matrix(graph.node_type, raw, 1)
    label_set = LabelSet("multiclass", 2, np.arange(n), block.astype(np.int64))
    return Dataset(graph, features, label_set, raw)


def planted_motifs() -> dict[str, Motif]:
    """Relevant motifs for the author/paper/venue schema, keyed by file stem."""
    square = Motif(("A", "P", "P", "V"), ((0, 1, False), (0, 2, False), (1, 3, False), (2, 3, False)),
               0, 3, (1, 2), "APPV")
    coauthor = path_motif(("A", "P", "A"), target=0, context=2, name="APA")
    return {
        "apv": path_motif(("A", "P", "V"), target=0, context=2, name="APV"),
        "apa": coauthor,
        "appv": compute_role_map(square),
        "edge": edge_motif(name="edge"),
    }


def sbm_motifs() -> dict[str, Motif]:
    return {"edge": edge_motif(name="edge"), "triangle": triangle_motif(name="triangle")}
