import os

import pytest

from concept_ordering.dataset import Instance
from concept_ordering.graph import ConceptGraph, RelationFilter, read_graph_dump
from concept_ordering.lexical import LexicalMatcher

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture
def dump_path():
    return fixture_path("conceptnet_sample.csv")


@pytest.fixture
def commongen_path():
    return fixture_path("commongen_dev_sample.jsonl")


@pytest.fixture
def fixture_graph(dump_path):
    graph, _ = read_graph_dump(dump_path, RelationFilter(deny=["Antonym"]))
    return graph


@pytest.fixture
def path_graph():
    """a - b - c - d - e"""
    return ConceptGraph.from_edges([("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")])


@pytest.fixture
def matcher():
    return LexicalMatcher()


@pytest.fixture
def instances():
    return [
        Instance.create(["ball", "batter", "pitcher", "throw"],
                        ["The pitcher throws the ball, and the batter hits a home run!"]),
        Instance.create(["throw", "daughter", "stream", "rock", "daddy"],
                        ["Daddy and daughter throwing rocks into stream"]),
        Instance.create(["dog", "throw", "frisbee", "catch"],
                        ["A dog catches a frisbee thrown by its owner.",
                         "A man throws a frisbee and the dog catches it."]),
    ]
