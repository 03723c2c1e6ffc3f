import hashlib
import json
import logging
import os
from dataclasses import dataclass

import datasets

from concept_ordering.errors import AdapterError, EmptyCorpusError, ValidationError
from concept_ordering.graph.conceptnet import is_concept_id
from concept_ordering.utils import dump_json_line, ensure_parent_dir, open_text

logger = logging.getLogger(__name__)

MIN_CONCEPTS = 2
MAX_CONCEPTS = 10

# concept sets per split in the public release
PUBLISHED_SPLIT_SIZES = {"train": 32651, "dev": 993, "test": 1497}

# field map of the supported source layouts
LAYOUTS = {
    "release": {"concepts": "concept_set", "references": "scene"},
    "hub": {"group": "concept_set_idx", "concepts": "concepts", "references": "target"},
    "canonical": {"id": "id", "concepts": "concepts", "references": "references"},
}


def instance_id(concepts):
    key = " ".join(sorted(concepts))
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class Instance:
    id: str
    concepts: tuple
    references: tuple

    def __post_init__(self):
        object.__setattr__(self, "concepts", tuple(self.concepts))
        object.__setattr__(self, "references", tuple(self.references))
        problems = validate_instance(self.concepts, self.references)
        if problems:
            raise ValidationError(f"Invalid instance {self.id}: {'; '.join(problems)}")

    @classmethod
    def create(cls, concepts, references, id=None):
        return cls(id or instance_id(concepts), concepts, references)

    def to_dict(self):
        return {"id": self.id, "concepts": list(self.concepts), "references": list(self.references)}


def validate_instance(concepts, references):
    problems = []
    if not isinstance(concepts, (list, tuple)) or not all(isinstance(c, str) for c in concepts):
        return ["concepts must be a list of strings"]
    if not MIN_CONCEPTS <= len(concepts) <= MAX_CONCEPTS:
        problems.append(f"expected {MIN_CONCEPTS}-{MAX_CONCEPTS} concepts, got {len(concepts)}")
    duplicates = sorted({c for c in concepts if concepts.count(c) > 1})
    if duplicates:
        problems.append(f"duplicate concepts {duplicates}")
    malformed = [c for c in concepts if not is_concept_id(c)]
    if malformed:
        problems.append(f"malformed concepts {malformed}")
    if not isinstance(references, (list, tuple)) or not references:
        problems.append("references must be a non-empty list")
    elif not all(isinstance(s, str) and s.strip() for s in references):
        problems.append("references must be non-blank strings")
    return problems


def load_instances(path, lenient=False):
    """Read canonical JSONL; invalid lines abort the load unless `lenient`."""
    instances, issues = [], []
    with open_text(path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                issues.append((line_no, f"invalid JSON: {e.msg}"))
                continue
            if not isinstance(record, dict):
                issues.append((line_no, "expected a JSON object"))
                continue
            concepts = record.get("concepts")
            references = record.get("references")
            problems = validate_instance(concepts, references)
            if problems:
                issues.append((line_no, "; ".join(problems)))
                continue
            instances.append(Instance.create(concepts, references, id=record.get("id")))

    if issues and not lenient:
        line_no, problem = issues[0]
        raise ValidationError(f"{path}:{line_no}: {problem} ({len(issues)} invalid lines)",
                              issues=issues)
    for line_no, problem in issues:
        logger.warning("%s:%d skipped: %s", path, line_no, problem)
    if not instances:
        raise EmptyCorpusError(f"No valid instances in {path}")
    return instances


def write_instances(instances, path):
    ensure_parent_dir(path)
    with open_text(path, "wt") as f:
        for instance in instances:
            f.write(dump_json_line(instance.to_dict()) + "\n")


def _read_rows(src_path):
    if os.path.isdir(src_path):
        data = datasets.load_from_disk(src_path)
        if isinstance(data, datasets.DatasetDict):
            raise AdapterError(f"{src_path} holds several splits {list(data)} - "
                               "point at a single split directory",
                               detected_fields=list(data))
        return data
    return datasets.load_dataset("json", data_files=str(src_path), split="train")


def detect_layout(fields):
    fields = set(fields)
    for name, field_map in LAYOUTS.items():
        required = {v for k, v in field_map.items() if k in ("concepts", "references")}
        if required <= fields:
            return name
    raise AdapterError(
        f"Unknown CommonGen layout - detected fields {sorted(fields)}; expected one of "
        + ", ".join(f"{name}: {sorted(m.values())}" for name, m in LAYOUTS.items()),
        detected_fields=fields)


def _as_list(value):
    if value is None:
        return []
    if isinstance(value, str):
        return [value]
    return list(value)


def group_rows(rows, layout):
    """Group source rows by concept set, keeping first-seen order."""
    field_map = LAYOUTS[layout]
    groups = {}
    for row in rows:
        concepts = row[field_map["concepts"]]
        if isinstance(concepts, str):
            concepts = concepts.split("#") if "#" in concepts else concepts.split()
        concepts = [c.strip().lower() for c in concepts]
        if "group" in field_map and row.get(field_map["group"]) is not None:
            key = ("group", row[field_map["group"]])
        else:
            key = ("set", tuple(sorted(concepts)))
        entry = groups.setdefault(key, {"concepts": concepts, "references": [], "id": None})
        if layout == "canonical" and row.get("id"):
            entry["id"] = row["id"]
        for sentence in _as_list(row[field_map["references"]]):
            sentence = (sentence or "").strip()
            if sentence and sentence not in entry["references"]:
                entry["references"].append(sentence)
    return list(groups.values())


def import_commongen(src_path, split, out_path=None):
    """Convert a CommonGen split to canonical instances.

    Returns (instances, stats); writes canonical JSONL when `out_path` is given.
    """
    if split not in PUBLISHED_SPLIT_SIZES:
        raise AdapterError(f"Unknown split {split} - options are {sorted(PUBLISHED_SPLIT_SIZES)}")
    rows = _read_rows(src_path)
    layout = detect_layout(rows.column_names)
    groups = group_rows(rows, layout)

    instances, invalid, unreferenced = [], 0, 0
    for group in groups:
        if not group["references"]:
            unreferenced += 1
            continue
        problems = validate_instance(group["concepts"], group["references"])
        if problems:
            invalid += 1
            logger.warning("Skipping concept set %s: %s", group["concepts"], "; ".join(problems))
            continue
        instances.append(Instance.create(group["concepts"], group["references"], id=group["id"]))

    stats = {
        "split": split,
        "layout": layout,
        "rows": len(rows),
        "concept_sets": len(groups),
        "instances": len(instances),
        "references": sum(len(i.references) for i in instances),
        "without_references": unreferenced,
        "invalid": invalid,
        "published_concept_sets": PUBLISHED_SPLIT_SIZES[split],
    }
    logger.info("Imported %s split (%s layout): %d rows, %d concept sets, %d instances "
                "(published: %d concept sets)", split, layout, stats["rows"],
                stats["concept_sets"], stats["instances"], stats["published_concept_sets"])
    if not instances:
        raise EmptyCorpusError(f"No usable instances in {src_path} ({split} split)")
    if out_path is not None:
        write_instances(instances, out_path)
    return instances, stats
