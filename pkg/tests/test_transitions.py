import itertools
import math
import random

import pytest

from concept_ordering.errors import ConfigError, InvalidOrderingError, InvalidPairError
from concept_ordering.graph import PrecedenceCounts
from concept_ordering.ordering import TransitionTable, estimate, sequence_log_prob, transition_prob


def test_estimate_ratio():
    table = estimate(PrecedenceCounts({("a", "b"): 3, ("b", "a"): 1}))
    assert transition_prob(table, "a", "b") == 0.75
    assert transition_prob(table, "b", "a") == 0.25
    assert table.support[("a", "b")] == table.support[("b", "a")] == 4


def test_estimate_symmetric_and_unseen():
    table = estimate(PrecedenceCounts({("a", "b"): 7, ("b", "a"): 7}))
    assert transition_prob(table, "a", "b") == 0.5
    assert transition_prob(table, "a", "zebra") == 0.5
    assert ("a", "zebra") not in table
    assert not table.is_confident("a", "zebra")


def test_one_direction_only():
    table = estimate(PrecedenceCounts({("a", "b"): 5}))
    assert transition_prob(table, "a", "b") == 1.0
    assert transition_prob(table, "b", "a") == 0.0
    assert sequence_log_prob(table, ["b", "a"]) == -math.inf


def test_diagonal_lookup_is_invalid():
    with pytest.raises(InvalidPairError):
        transition_prob(estimate(PrecedenceCounts()), "x", "x")


def test_add_alpha_smoothing():
    table = estimate(PrecedenceCounts({("a", "b"): 3, ("b", "a"): 1}), alpha=1.0)
    assert transition_prob(table, "a", "b") == pytest.approx(4 / 6)
    assert transition_prob(table, "b", "a") == pytest.approx(2 / 6)
    with pytest.raises(ConfigError):
        estimate(PrecedenceCounts(), alpha=-1)


def test_default_prob_range():
    with pytest.raises(ConfigError):
        TransitionTable(default_prob=1.5)


def _random_counts(rng, concepts):
    counts = PrecedenceCounts()
    for i, j in itertools.permutations(concepts, 2):
        if rng.random() < 0.6:
            counts.add(i, j, rng.randint(1, 1000))
    return counts


def test_complementary_probabilities_and_scaling():
    rng = random.Random(1)
    concepts = ["a", "b", "c", "d"]
    for _ in range(10000):
        counts = _random_counts(rng, concepts)
        table = estimate(counts)
        for (i, j), p in table.probs.items():
            assert 0.0 <= p <= 1.0
            assert abs(p + table.probs[(j, i)] - 1.0) <= math.ulp(1.0)
        k = rng.randint(2, 50)
        scaled = PrecedenceCounts({pair: n * k for pair, n in counts.counts.items()})
        assert estimate(scaled).probs == table.probs


def test_sequence_log_prob():
    uniform = estimate(PrecedenceCounts())
    assert sequence_log_prob(uniform, ["a", "b", "c"]) == pytest.approx(math.log(0.25))
    table = TransitionTable({("a", "b"): 0.9, ("b", "c"): 0.8})
    assert sequence_log_prob(table, ["a", "b", "c"]) == pytest.approx(math.log(0.72))
    assert sequence_log_prob(table, ["a"]) == 0.0
    with pytest.raises(InvalidOrderingError):
        sequence_log_prob(table, ["a", "a", "b"])


def test_reversal_duality():
    rng = random.Random(5)
    concepts = ["a", "b", "c", "d", "e"]
    for _ in range(500):
        probs = {}
        for i, j in itertools.combinations(concepts, 2):
            p = rng.random()
            probs[(i, j)], probs[(j, i)] = p, 1.0 - p
        table = TransitionTable(probs)
        order = rng.sample(concepts, len(concepts))
        assert sequence_log_prob(table, order[::-1]) == pytest.approx(
            sequence_log_prob(table.reversed(), order))


def test_table_tsv_round_trip(tmp_path):
    table = estimate(PrecedenceCounts({("a", "b"): 1, ("b", "a"): 2, ("a", "c"): 3}),
                     metadata={"walk": {"seed": 3}})
    path = tmp_path / "table.tsv"
    table.to_tsv(path)
    first = path.read_text().splitlines()[0]
    assert first.startswith("# {")
    loaded = TransitionTable.from_tsv(path)
    assert loaded == table
    assert loaded.metadata == {"walk": {"seed": 3}}
    assert loaded.prob("b", "a") == 2 / 3
