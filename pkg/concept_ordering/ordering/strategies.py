import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from concept_ordering.errors import InvalidInputError, InvalidOrderingError, InvalidSetError, SetTooLargeError
from concept_ordering.lexical import LexicalMatcher
from concept_ordering.utils import make_rng

MAX_EXHAUSTIVE = 10
# permutations enumerated per numpy block; larger sets fix a prefix per block
BLOCK_SIZE = 8
ORDERING_TOKEN = "[ORDERING]"
NOT_FOUND_FLAG = "concept-not-found-in-reference"


class Strategy(str, Enum):
    ORIGINAL = "original"
    RANDOM = "random"
    PROBABILISTIC = "probabilistic"
    EXAMPLE = "example"


class InputFormat(str, Enum):
    SPACE = "space"
    COMMA = "comma"
    TOKEN = "token"


@dataclass(frozen=True)
class Ordering:
    concepts: tuple
    strategy: Strategy
    score: float = None
    flags: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "concepts", tuple(self.concepts))
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "flags", tuple(self.flags))
        if (self.score is not None) != (self.strategy is Strategy.PROBABILISTIC):
            raise InvalidOrderingError(
                f"A score is attached exactly to probabilistic orderings, "
                f"got strategy={self.strategy.value} score={self.score}")

    def to_dict(self):
        return {
            "concepts": list(self.concepts),
            "strategy": self.strategy.value,
            "score": self.score,
            "flags": list(self.flags),
        }


def check_concept_set(concepts, min_size=1):
    concepts = list(concepts)
    if len(concepts) < min_size:
        raise InvalidSetError(f"Concept set needs at least {min_size} concepts, got {concepts}")
    duplicates = sorted({c for c in concepts if concepts.count(c) > 1})
    if duplicates:
        raise InvalidSetError(f"Duplicate concepts {duplicates} in {concepts}")
    return concepts


def order_original(set_as_given):
    return Ordering(check_concept_set(set_as_given), Strategy.ORIGINAL)


def order_random(concepts, seed):
    """Fisher-Yates shuffle driven by numpy's PCG64 generator seeded with `seed`."""
    concepts = check_concept_set(concepts)
    rng = make_rng(seed)
    for i in range(len(concepts) - 1, 0, -1):
        j = int(rng.integers(i + 1))
        concepts[i], concepts[j] = concepts[j], concepts[i]
    return Ordering(concepts, Strategy.RANDOM)


def _permutation_blocks(m):
    """Yield int arrays of permutations of range(m), lexicographic overall."""
    prefix_len = max(0, m - BLOCK_SIZE)
    for prefix in itertools.permutations(range(m), prefix_len):
        rest = [i for i in range(m) if i not in prefix]
        tails = np.array(list(itertools.permutations(rest)), dtype=np.intp).reshape(-1, len(rest))
        head = np.broadcast_to(np.array(prefix, dtype=np.intp), (len(tails), prefix_len))
        yield np.hstack([head, tails])


def _block_scores(log_matrix, perms):
    # accumulate column by column so the sum runs left to right like sequence_log_prob
    scores = np.zeros(len(perms))
    for k in range(perms.shape[1] - 1):
        scores += log_matrix[perms[:, k], perms[:, k + 1]]
    return scores


def order_probabilistic(table, concepts):
    """Exact argmax of the Markov-chain log-probability over all m! orderings.

    Candidates are enumerated in lexicographic order of the concept
    sequence and only a strictly better score replaces the incumbent, so
    ties go to the lexicographically smallest sequence.
    """
    concepts = check_concept_set(concepts, min_size=2)
    if len(concepts) > MAX_EXHAUSTIVE:
        raise SetTooLargeError(
            f"Exhaustive search supports at most {MAX_EXHAUSTIVE} concepts, got {len(concepts)}")
    labels = sorted(concepts)
    log_matrix = table.log_matrix(labels)

    best_score, best_perm = None, None
    for perms in _permutation_blocks(len(labels)):
        scores = _block_scores(log_matrix, perms)
        k = int(np.argmax(scores))
        if best_score is None or scores[k] > best_score:
            best_score, best_perm = float(scores[k]), perms[k]
    return Ordering([labels[i] for i in best_perm], Strategy.PROBABILISTIC, score=best_score)


def order_example(reference_sentence, concepts, matcher=None):
    """Order concepts by their first matched token in a reference sentence.

    Unmatched concepts follow in input order, each with a flag.
    """
    concepts = check_concept_set(concepts)
    matcher = matcher or LexicalMatcher()
    sentence = matcher.tokenize(reference_sentence)
    positions = {c: matcher.match_position(c, sentence) for c in concepts}
    matched = sorted((c for c in concepts if positions[c] is not None),
                     key=lambda c: positions[c])
    unmatched = [c for c in concepts if positions[c] is None]
    flags = [f"{NOT_FOUND_FLAG}:{c}" for c in unmatched]
    return Ordering(matched + unmatched, Strategy.EXAMPLE, flags=flags)


def _check_permutation(unordered, ordered):
    if len(set(ordered)) != len(ordered) or sorted(unordered) != sorted(ordered):
        raise InvalidOrderingError(
            f"Ordering {list(ordered)} is not a permutation of {list(unordered)}")


def format_input(unordered, ordering, fmt):
    ordered = list(ordering.concepts if isinstance(ordering, Ordering) else ordering)
    _check_permutation(list(unordered), ordered)
    fmt = InputFormat(fmt)
    if fmt is InputFormat.SPACE:
        return " ".join(ordered)
    if fmt is InputFormat.COMMA:
        return ", ".join(ordered)
    return f"{' '.join(unordered)} {ORDERING_TOKEN} {' '.join(ordered)} {ORDERING_TOKEN}"


def parse_input(text, fmt):
    """Inverse of format_input: returns (unordered or None, ordered)."""
    fmt = InputFormat(fmt)
    if fmt is InputFormat.SPACE:
        return None, text.split(" ")
    if fmt is InputFormat.COMMA:
        return None, text.split(", ")
    parts = text.split(f" {ORDERING_TOKEN}")
    if len(parts) != 3 or parts[2] != "":
        raise InvalidInputError(f"Expected two {ORDERING_TOKEN} markers in {text!r}")
    unordered = parts[0].split(" ")
    ordered = parts[1].strip().split(" ")
    _check_permutation(unordered, ordered)
    return unordered, ordered
