import io
import random

import pytest

from concept_ordering.errors import EmptyGraphError, SnapshotFormatError
from concept_ordering.graph import (ConceptGraph, RelationFilter, load_graph,
                                    load_graph_snapshot, neighbors, normalize_concept,
                                    read_graph_dump, save_graph)
from concept_ordering.errors import ConfigError
from concept_ordering.graph.conceptnet import is_concept_id


@pytest.mark.parametrize("raw, expected", [
    ("/c/en/throw", "throw"),
    ("/c/en/throw/v/wn/contact", "throw"),
    ("/c/en/Dog", "dog"),
    ("/c/fr/chien", None),
    ("/c/en/ice_cream", None),
    ("/c/en/x-ray", "x-ray"),
    ("/c/en/2pac", None),
    ("/c/en", None),
    ("frisbee", "frisbee"),
    ("-ski", None),
])
def test_normalize_concept(raw, expected):
    assert normalize_concept(raw) == expected


def _rows(*triples):
    return io.StringIO("".join(f"/a/x\t/r/{r}\t{s}\t{e}\t{{}}\n" for r, s, e in triples))


def test_load_graph_three_rows():
    graph, summary = load_graph(_rows(("RelatedTo", "/c/en/dog", "/c/en/frisbee"),
                                      ("IsA", "/c/en/dog", "/c/en/animal"),
                                      ("RelatedTo", "/c/en/chien", "/c/fr/os")))
    assert graph.labels == ["animal", "dog", "frisbee"]
    assert graph.edge_count == 2
    assert summary.rows_read == 3
    assert summary.rows_dropped == 1
    assert neighbors(graph, "dog") == ["animal", "frisbee"]
    assert neighbors(graph, "cat") == []


def test_neighbors_are_symmetric(fixture_graph):
    for concept in fixture_graph.labels:
        for other in fixture_graph.neighbors(concept):
            assert concept in fixture_graph.neighbors(other)
            assert other != concept


def test_fixture_dump_summary(dump_path):
    graph, summary = read_graph_dump(dump_path, RelationFilter(deny=["Antonym"]),
                                     dump_version="5.7.0")
    assert summary.rows_read == 20
    assert summary.rows_skipped == 2
    assert summary.rows_filtered == 2
    assert summary.rows_dropped == 2
    assert summary.self_loops == 1
    assert summary.vertices == 15
    assert summary.edges == 12
    assert summary.dump_version == "5.7.0"
    assert summary.relations == {"CapableOf": 1, "IsA": 1, "RelatedTo": 11}
    assert "valley" not in graph
    assert graph.neighbors("dog") == ["animal", "catch", "frisbee"]


def test_relation_filter_allow_and_unfiltered(dump_path):
    graph, _ = read_graph_dump(dump_path)
    assert graph.edge_count == 14
    assert "batter" in graph.neighbors("pitcher")

    graph, summary = read_graph_dump(dump_path, RelationFilter(allow=["/r/IsA"]))
    assert graph.labels == ["animal", "dog"]
    assert summary.relation_filter == {"allow": ["IsA"], "deny": []}


def test_relation_filter_rejects_overlap():
    with pytest.raises(ConfigError):
        RelationFilter(allow=["IsA"], deny=["IsA"])


def test_bare_triples_are_accepted():
    graph, _ = load_graph(io.StringIO("/r/RelatedTo\t/c/en/ski\t/c/en/snow\n"))
    assert graph.labels == ["ski", "snow"]


def test_empty_graph_raises():
    with pytest.raises(EmptyGraphError):
        load_graph(io.StringIO("only one field\n\n"))


def test_from_edges_drops_duplicates_and_loops():
    graph = ConceptGraph.from_edges([("b", "a"), ("a", "b"), ("a", "a"), ("c", "a")])
    assert graph.edge_count == 2
    assert graph.neighbors("a") == ["b", "c"]
    assert graph.degree("a") == 2
    assert graph.degree("zzz") == 0


def test_snapshot_round_trip(tmp_path, fixture_graph):
    path = tmp_path / "graph.npz"
    save_graph(fixture_graph, path)
    loaded = load_graph_snapshot(path)
    assert loaded.labels == fixture_graph.labels
    assert (loaded.indptr == fixture_graph.indptr).all()
    assert (loaded.indices == fixture_graph.indices).all()
    assert loaded.summary == fixture_graph.summary


def test_snapshot_rejects_other_files(tmp_path):
    path = tmp_path / "not-a-graph.npz"
    path.write_text("hello")
    with pytest.raises(SnapshotFormatError):
        load_graph_snapshot(path)


def test_loading_twice_is_identical(dump_path):
    with open(dump_path, encoding="utf-8") as f:
        text = f.read()
    first, first_summary = load_graph(io.StringIO(text))
    second, second_summary = load_graph(io.StringIO(text))
    assert first_summary.to_dict() == second_summary.to_dict()
    assert first.labels == second.labels
    assert first.indptr.tolist() == second.indptr.tolist()
    assert first.indices.tolist() == second.indices.tolist()


_TERMS = ["dog", "Dog", "ice_cream", "x-ray", "2pac", "-ski", "ski-", "a--b", "café", "Run", "frisbee", ""]


def _random_row(rng):
    def uri():
        return f"/c/{rng.choice(['en', 'en', 'en', 'fr'])}/{rng.choice(_TERMS)}" + rng.choice(["", "/n", "/v/wn/x"])
    return f"/a/x\t/r/{rng.choice(['RelatedTo', 'IsA', 'Antonym'])}\t{uri()}\t{uri()}\t{{}}\n"


@pytest.mark.parametrize("seed", range(40))
def test_labels_are_concept_ids_on_random_slices(dump_path, seed):
    rng = random.Random(seed)
    with open(dump_path, encoding="utf-8") as f:
        lines = [line + "\n" for line in f.read().splitlines()]
    start = rng.randrange(len(lines))
    rows = lines[start:start + rng.randint(1, len(lines))]
    rows += [_random_row(rng) for _ in range(rng.randint(0, 15))]
    rng.shuffle(rows)
    try:
        graph, summary = load_graph(io.StringIO("".join(rows)))
    except EmptyGraphError:
        return
    assert all(is_concept_id(label) for label in graph.labels)
    assert graph.labels == sorted(set(graph.labels))
    assert summary.vertices == len(graph.labels)
    for concept in graph.labels:
        assert concept not in graph.neighbors(concept)
