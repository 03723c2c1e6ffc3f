import json

import pytest

from concept_ordering.dataset import (Instance, detect_layout, group_rows, import_commongen,
                                      instance_id, load_instances, write_instances)
from concept_ordering.errors import AdapterError, EmptyCorpusError, ValidationError


def test_import_commongen_release_layout(commongen_path, tmp_path):
    out = tmp_path / "dev.jsonl"
    instances, stats = import_commongen(commongen_path, "dev", out_path=out)
    assert stats["layout"] == "release"
    assert stats["rows"] == 10
    assert stats["concept_sets"] == 7
    assert stats["instances"] == 7
    assert stats["references"] == 11
    assert stats["published_concept_sets"] == 993

    ski = instances[0]
    assert ski.concepts == ("ski", "mountain", "skier")
    assert len(ski.references) == 3
    baseball = next(i for i in instances if "pitcher" in i.concepts)
    assert baseball.references == (
        "The pitcher throws the ball, and the batter hits a home run!",
        "The batter watches the pitcher throw the ball.")

    assert load_instances(out) == instances


def test_import_rejects_unknown_split(commongen_path):
    with pytest.raises(AdapterError):
        import_commongen(commongen_path, "validation")


def test_hub_layout_groups_by_index():
    rows = [
        {"concept_set_idx": 0, "concepts": ["ski", "mountain"], "target": "Skiing on a mountain."},
        {"concept_set_idx": 0, "concepts": ["ski", "mountain"], "target": "A mountain to ski."},
        {"concept_set_idx": 1, "concepts": ["dog", "frisbee"], "target": " "},
    ]
    assert detect_layout(rows[0].keys()) == "hub"
    groups = group_rows(rows, "hub")
    assert groups[0]["references"] == ["Skiing on a mountain.", "A mountain to ski."]
    assert groups[1]["references"] == []


def test_detect_layout_reports_fields():
    with pytest.raises(AdapterError) as err:
        detect_layout(["words", "sentence"])
    assert err.value.detected_fields == ["sentence", "words"]


def test_instance_id_ignores_order():
    assert instance_id(["b", "a"]) == instance_id(["a", "b"])
    assert len(instance_id(["a", "b"])) == 12


@pytest.mark.parametrize("concepts, references", [
    (["solo"], ["A sentence."]),
    (["dog", "dog"], ["A sentence."]),
    (["dog", "Hot_Dog"], ["A sentence."]),
    (["dog", "cat"], []),
    ([f"c{chr(97 + i)}" for i in range(11)], ["A sentence."]),
])
def test_invalid_instances(concepts, references):
    with pytest.raises(ValidationError):
        Instance.create(concepts, references)


def _write(path, records):
    path.write_text("".join((r if isinstance(r, str) else json.dumps(r)) + "\n" for r in records))


def test_load_instances_strict_and_lenient(tmp_path, caplog):
    path = tmp_path / "mixed.jsonl"
    _write(path, [
        {"id": "ok1", "concepts": ["dog", "frisbee"], "references": ["A dog and a frisbee."]},
        {"id": "bad", "concepts": ["dog"], "references": ["A dog."]},
        "{not json",
        {"id": "ok2", "concepts": ["ski", "mountain"], "references": ["Ski the mountain."]},
    ])
    with pytest.raises(ValidationError) as err:
        load_instances(path)
    assert ":2:" in str(err.value)
    assert [line for line, _ in err.value.issues] == [2, 3]

    instances = load_instances(path, lenient=True)
    assert [i.id for i in instances] == ["ok1", "ok2"]
    assert "skipped" in caplog.text


def test_load_instances_empty(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("\n")
    with pytest.raises(EmptyCorpusError):
        load_instances(path)


def test_write_and_reload_gzip(tmp_path, instances):
    path = tmp_path / "instances.jsonl.gz"
    write_instances(instances, path)
    assert load_instances(path) == instances
