import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np
from tqdm.auto import tqdm

from concept_ordering.errors import ConfigError, EmptySeedError, InvalidPairError
from concept_ordering.utils import ensure_parent_dir, make_rng, open_text

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WalkConfig:
    max_path_concepts: int = 5
    walks_per_start: int = 100
    seed: int = 0
    vocabulary: frozenset = None
    self_avoiding: bool = True
    undirected: bool = True

    def __post_init__(self):
        if self.max_path_concepts < 2:
            raise ConfigError(f"max_path_concepts must be >= 2, got {self.max_path_concepts}")
        if self.walks_per_start < 1:
            raise ConfigError(f"walks_per_start must be >= 1, got {self.walks_per_start}")
        if not self.undirected:
            raise ConfigError("Only undirected traversal is supported")
        if self.vocabulary is not None:
            object.__setattr__(self, "vocabulary", frozenset(self.vocabulary))

    def describe(self):
        return {
            "max_path_concepts": self.max_path_concepts,
            "walks_per_start": self.walks_per_start,
            "seed": self.seed,
            "self_avoiding": self.self_avoiding,
            "undirected": self.undirected,
            "vocabulary_size": None if self.vocabulary is None else len(self.vocabulary),
        }


class PrecedenceCounts:
    """#(a -> b): number of sampled paths in which a occurs before b."""

    def __init__(self, counts=None):
        self.counts = Counter()
        for (a, b), n in (counts or {}).items():
            self.add(a, b, n)

    def add(self, a, b, n=1):
        if a == b:
            raise InvalidPairError(f"Diagonal precedence pair ({a!r}, {a!r})")
        if n < 0:
            raise ValueError(f"Negative count {n} for ({a!r}, {b!r})")
        if n:
            self.counts[(a, b)] += n

    def update(self, increments):
        for (a, b), n in increments.items():
            self.add(a, b, n)

    def __getitem__(self, pair):
        return self.counts.get(pair, 0)

    def __len__(self):
        return len(self.counts)

    def __eq__(self, other):
        if not isinstance(other, PrecedenceCounts):
            return NotImplemented
        return self.counts == other.counts

    def __repr__(self):
        return f"PrecedenceCounts({len(self.counts)} pairs, total={self.total()})"

    def items(self):
        return sorted(self.counts.items())

    def total(self):
        return sum(self.counts.values())

    def concepts(self):
        return sorted({c for pair in self.counts for c in pair})

    def to_tsv(self, path):
        ensure_parent_dir(path)
        with open_text(path, "wt") as f:
            for (a, b), n in self.items():
                f.write(f"{a}\t{b}\t{n}\n")

    @classmethod
    def from_tsv(cls, path):
        counts = cls()
        with open_text(path) as f:
            for line in f:
                if not line.strip():
                    continue
                a, b, n = line.rstrip("\n").split("\t")
                counts.add(a, b, int(n))
        return counts


def merge_counts(a, b):
    merged = PrecedenceCounts()
    merged.counts = a.counts + b.counts
    return merged


def count_path_pairs(path, vocabulary=None):
    """Pair increments of one path: +1 per ordered pair of distinct
    in-vocabulary concepts, by first occurrence, at most once per path.
    """
    ordered = []
    seen = set()
    for concept in path:
        if concept in seen:
            continue
        seen.add(concept)
        if vocabulary is None or concept in vocabulary:
            ordered.append(concept)
    increments = Counter()
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            increments[(a, b)] += 1
    return increments


def _walk(graph, start, rng, max_len, self_avoiding):
    path = [start]
    visited = {start}
    current = start
    while len(path) < max_len:
        nbrs = graph.neighbor_ids(current)
        degree = len(nbrs)
        if degree == 0:
            break
        if not self_avoiding:
            current = int(nbrs[rng.integers(degree)])
        elif degree > 2 * len(visited):
            # most neighbors are unvisited; rejection keeps the choice uniform
            while True:
                current = int(nbrs[rng.integers(degree)])
                if current not in visited:
                    break
        else:
            candidates = [n for n in nbrs.tolist() if n not in visited]
            if not candidates:
                break
            current = candidates[rng.integers(len(candidates))]
        path.append(current)
        visited.add(current)
    return path


def _vocabulary_mask(graph, vocabulary):
    mask = np.ones(graph.vertex_count, dtype=bool)
    if vocabulary is not None:
        mask[:] = False
        for concept in vocabulary:
            vertex = graph.index.get(concept)
            if vertex is not None:
                mask[vertex] = True
    return mask


def _sample_indexed(graph, indexed_starts, cfg, progress=False):
    """Walk from (global_index, vertex) pairs; returns label-keyed counts."""
    mask = _vocabulary_mask(graph, cfg.vocabulary)
    id_counts = Counter()
    for global_index, vertex in tqdm(indexed_starts, desc="Sampling walks",
                                     disable=not progress):
        rng = make_rng(cfg.seed, global_index)
        for _ in range(cfg.walks_per_start):
            path = _walk(graph, vertex, rng, cfg.max_path_concepts, cfg.self_avoiding)
            ordered = [v for v in dict.fromkeys(path) if mask[v]]
            for i, a in enumerate(ordered):
                for b in ordered[i + 1:]:
                    id_counts[(a, b)] += 1

    counts = PrecedenceCounts()
    labels = graph.labels
    counts.counts = Counter({(labels[a], labels[b]): n for (a, b), n in id_counts.items()})
    return counts


def _resolve_starts(graph, starts):
    indexed = []
    missing = 0
    for i, concept in enumerate(starts):
        vertex = graph.index.get(concept)
        if vertex is None:
            missing += 1
        else:
            indexed.append((i, vertex))
    if missing:
        logger.warning("%d of %d start concepts are not in the graph and were skipped",
                       missing, len(starts))
    if not indexed:
        raise EmptySeedError(f"None of the {len(starts)} start concepts occur in the graph")
    return indexed


def sample_walks(graph, starts, cfg):
    """Sample cfg.walks_per_start walks from every start present in `graph`.

    Each walk extends by a uniform choice among unvisited neighbors until
    it holds cfg.max_path_concepts vertices or gets stuck. The walks of
    start k draw from a generator seeded with mix_seed(cfg.seed, k), so the
    result is a pure function of (graph, starts order, cfg).
    """
    indexed = _resolve_starts(graph, starts)
    return _sample_indexed(graph, indexed, cfg,
                           progress=logger.isEnabledFor(logging.INFO))


_worker_graph = None


def _init_worker(graph):
    global _worker_graph
    _worker_graph = graph


def _sample_shard(indexed_starts, cfg):
    return _sample_indexed(_worker_graph, indexed_starts, cfg)


def shard(items, n_shards):
    size = max(1, math.ceil(len(items) / n_shards))
    return [items[i:i + size] for i in range(0, len(items), size)]


def sample_walks_parallel(graph, starts, cfg, workers=1):
    """sample_walks over a process pool; identical output for any `workers`."""
    if workers <= 1:
        return sample_walks(graph, starts, cfg)

    indexed = _resolve_starts(graph, starts)
    shards = shard(indexed, workers * 4)
    total = PrecedenceCounts()
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(graph,)) as pool:
        futures = [pool.submit(_sample_shard, block, cfg) for block in shards]
        for future in tqdm(as_completed(futures), total=len(futures),
                           desc=f"Sampling walks ({workers} workers)",
                           disable=not logger.isEnabledFor(logging.INFO)):
            total = merge_counts(total, future.result())
    return total


def vocabulary_from_instances(instances, graph, matcher):
    """Start concepts and counted vocabulary for a corpus.

    Starts are graph vertices found in the reference sentences (a token
    counts through any of its candidate lemmas) plus the instance concepts
    present in the graph; the vocabulary is the set of instance concepts.
    Both are returned sorted.
    """
    vocabulary = set()
    starts = set()
    for instance in instances:
        vocabulary.update(instance.concepts)
        for sentence in instance.references:
            for token in matcher.tokenize(sentence).tokens:
                starts.update(c for c in matcher.lemma_candidates(token) if c in graph)
    starts.update(c for c in vocabulary if c in graph)
    return sorted(starts), sorted(vocabulary)
