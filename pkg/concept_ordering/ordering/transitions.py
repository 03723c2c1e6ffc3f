import json
import math

import numpy as np

from concept_ordering.errors import (ConfigError, InvalidOrderingError,
                                     InvalidPairError, SnapshotFormatError)
from concept_ordering.utils import ensure_parent_dir, open_text

DEFAULT_PROB = 0.5
HEADER_PREFIX = "#"


def _log(p):
    return math.log(p) if p > 0.0 else -math.inf


class TransitionTable:
    """Pairwise transition probabilities p(j | i) estimated from precedence counts.

    Observed pairs store both directions; unobserved pairs read as
    `default_prob`. `support[(i, j)]` is #(i->j) + #(j->i) for both orders.
    """

    def __init__(self, probs=None, support=None, default_prob=DEFAULT_PROB,
                 alpha=0.0, metadata=None):
        if not 0.0 <= default_prob <= 1.0:
            raise ConfigError(f"default_prob must lie in [0, 1], got {default_prob}")
        self.probs = dict(probs or {})
        self.support = dict(support or {})
        self.default_prob = default_prob
        self.alpha = alpha
        self.metadata = dict(metadata or {})

    def __len__(self):
        return len(self.probs)

    def __contains__(self, pair):
        return pair in self.probs

    def __eq__(self, other):
        if not isinstance(other, TransitionTable):
            return NotImplemented
        return (self.probs == other.probs and self.support == other.support
                and self.default_prob == other.default_prob)

    def prob(self, i, j):
        if i == j:
            raise InvalidPairError(f"Transition from {i!r} to itself is undefined")
        return self.probs.get((i, j), self.default_prob)

    def is_confident(self, i, j, min_support=1):
        return self.support.get((i, j), 0) >= min_support

    def reversed(self):
        """Table with every pair's probability swapped: p'(j | i) = p(i | j)."""
        return TransitionTable(probs={(j, i): p for (i, j), p in self.probs.items()},
                               support=dict(self.support),
                               default_prob=self.default_prob,
                               alpha=self.alpha,
                               metadata=dict(self.metadata, reversed=True))

    def log_matrix(self, concepts):
        """m x m matrix of log p(concepts[b] | concepts[a]); -inf on the diagonal."""
        m = len(concepts)
        matrix = np.full((m, m), -np.inf)
        for a, i in enumerate(concepts):
            for b, j in enumerate(concepts):
                if a != b:
                    matrix[a, b] = _log(self.prob(i, j))
        return matrix

    def describe(self):
        return dict(self.metadata, default_prob=self.default_prob, alpha=self.alpha,
                    stored_pairs=len(self.probs))

    def to_tsv(self, path):
        ensure_parent_dir(path)
        header = json.dumps(self.describe(), sort_keys=True)
        with open_text(path, "wt") as f:
            f.write(f"{HEADER_PREFIX} {header}\n")
            for (i, j), p in sorted(self.probs.items()):
                f.write(f"{i}\t{j}\t{p!r}\t{self.support.get((i, j), 0)}\n")

    @classmethod
    def from_tsv(cls, path):
        probs, support = {}, {}
        with open_text(path) as f:
            first = f.readline()
            if not first.startswith(HEADER_PREFIX):
                raise SnapshotFormatError(f"{path} has no transition table header")
            meta = json.loads(first[len(HEADER_PREFIX):])
            for line in f:
                if not line.strip():
                    continue
                i, j, p, n = line.rstrip("\n").split("\t")
                probs[(i, j)] = float(p)
                support[(i, j)] = int(n)
        default_prob = meta.pop("default_prob", DEFAULT_PROB)
        alpha = meta.pop("alpha", 0.0)
        meta.pop("stored_pairs", None)
        return cls(probs, support, default_prob=default_prob, alpha=alpha, metadata=meta)


def estimate(counts, alpha=0.0, default_prob=DEFAULT_PROB, metadata=None):
    """p(j | i) = #(i->j) / (#(i->j) + #(j->i)), optionally add-alpha smoothed.

    Pairs never observed in either order are not stored.
    """
    if alpha < 0:
        raise ConfigError(f"alpha must be >= 0, got {alpha}")
    probs, support = {}, {}
    raw = counts.counts
    for (i, j) in raw:
        if (i, j) in probs:
            continue
        forward, backward = raw.get((i, j), 0), raw.get((j, i), 0)
        total = forward + backward
        if total == 0:
            continue
        denominator = total + 2 * alpha
        probs[(i, j)] = (forward + alpha) / denominator
        probs[(j, i)] = (backward + alpha) / denominator
        support[(i, j)] = support[(j, i)] = total
    return TransitionTable(probs, support, default_prob=default_prob, alpha=alpha,
                           metadata=metadata)


def transition_prob(table, i, j):
    return table.prob(i, j)


def check_distinct(ordering):
    seen = set()
    for concept in ordering:
        if concept in seen:
            raise InvalidOrderingError(f"Concept {concept!r} occurs twice in {list(ordering)}")
        seen.add(concept)


def sequence_log_prob(table, ordering):
    """log p(x) = sum of log p(x_k | x_{k-1}) under a first-order Markov chain.

    Summed left to right; a single concept scores 0.0 (empty product).
    """
    check_distinct(ordering)
    score = 0.0
    for prev, nxt in zip(ordering, ordering[1:]):
        score += _log(table.prob(prev, nxt))
    return score
