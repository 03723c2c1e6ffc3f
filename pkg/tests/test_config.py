import pytest

from concept_ordering.config import RunConfig, load_config_file
from concept_ordering.errors import ConfigError, UsageError


def test_toml_and_json_keys_are_normalized(tmp_path):
    toml = tmp_path / "run.toml"
    toml.write_text('walks-per-start = 50\nseed = 7\n')
    assert load_config_file(toml) == {"walks_per_start": 50, "seed": 7}

    as_json = tmp_path / "run.json"
    as_json.write_text('{"max-path": 4}')
    assert load_config_file(as_json) == {"max_path": 4}


@pytest.mark.parametrize("name, text", [("bad.toml", "seed = = 1"), ("bad.json", "{"), ("list.json", "[1]")])
def test_unreadable_config(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config_file(path)


def test_run_config_validation(tmp_path):
    existing = tmp_path / "in.jsonl"
    existing.write_text("")
    assert RunConfig("order", inputs={"instances": existing, "table": None}).validate()
    with pytest.raises(UsageError):
        RunConfig("order", inputs={"instances": tmp_path / "missing"}).validate()
    with pytest.raises(UsageError):
        RunConfig("order", workers=0).validate()
