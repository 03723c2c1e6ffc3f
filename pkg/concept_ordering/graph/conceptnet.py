import json
import logging
import re
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np
from tqdm.auto import tqdm

from concept_ordering.errors import ConfigError, EmptyGraphError, SnapshotFormatError
from concept_ordering.utils import ensure_parent_dir, open_text

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT_VERSION = 1

_CONCEPT_RE = re.compile(r"^[a-z]+(?:-[a-z]+)*$")


def is_concept_id(label):
    return isinstance(label, str) and bool(_CONCEPT_RE.match(label))


def normalize_concept(raw_uri_or_label):
    """Map a ConceptNet node URI or a bare label to a concept id.

    "/c/en/throw/v/wn/contact" -> "throw"; non-English nodes, multiword
    terms and anything outside lowercase ASCII letters with internal
    hyphens map to None.
    """
    raw = raw_uri_or_label.strip()
    if raw.startswith("/c/"):
        parts = raw.split("/")
        # ['', 'c', <lang>, <term>, ...]
        if len(parts) < 4 or parts[2] != "en":
            return None
        term = parts[3]
    else:
        term = raw
    term = term.lower()
    if "_" in term or not is_concept_id(term):
        return None
    return term


def relation_name(raw):
    raw = raw.strip()
    if raw.startswith("/r/"):
        raw = raw[3:]
    return raw


@dataclass(frozen=True)
class RelationFilter:
    allow: frozenset = None
    deny: frozenset = frozenset()

    def __post_init__(self):
        if self.allow is not None:
            object.__setattr__(self, "allow", frozenset(map(relation_name, self.allow)))
            overlap = self.allow & frozenset(map(relation_name, self.deny))
            if overlap:
                raise ConfigError(f"Relations both allowed and denied: {sorted(overlap)}")
        object.__setattr__(self, "deny", frozenset(map(relation_name, self.deny)))

    def accepts(self, relation):
        if relation in self.deny:
            return False
        return self.allow is None or relation in self.allow

    def describe(self):
        return {
            "allow": "all" if self.allow is None else sorted(self.allow),
            "deny": sorted(self.deny),
        }


@dataclass
class LoadSummary:
    rows_read: int = 0
    rows_skipped: int = 0
    rows_filtered: int = 0
    rows_dropped: int = 0
    self_loops: int = 0
    vertices: int = 0
    edges: int = 0
    relations: dict = field(default_factory=dict)
    relation_filter: dict = field(default_factory=dict)
    source: str = None
    dump_version: str = None

    def to_dict(self):
        return asdict(self)


class ConceptGraph:
    """Immutable undirected concept graph in CSR form.

    Vertex `v` has neighbors `indices[indptr[v]:indptr[v + 1]]`, sorted
    ascending. Vertices are numbered in label order, so sorting neighbors
    by index sorts them by label.
    """

    def __init__(self, labels, indptr, indices, summary=None):
        self.labels = list(labels)
        self.index = {label: i for i, label in enumerate(self.labels)}
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int32)
        self.summary = summary if summary is not None else LoadSummary(
            vertices=len(self.labels), edges=len(self.indices) // 2)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def vertex_count(self):
        return len(self.labels)

    @property
    def edge_count(self):
        return len(self.indices) // 2

    def __contains__(self, concept):
        return concept in self.index

    def __len__(self):
        return len(self.labels)

    def neighbor_ids(self, vertex):
        return self.indices[self.indptr[vertex]:self.indptr[vertex + 1]]

    def neighbors(self, concept):
        vertex = self.index.get(concept)
        if vertex is None:
            return []
        return [self.labels[n] for n in self.neighbor_ids(vertex)]

    def degree(self, concept):
        vertex = self.index.get(concept)
        if vertex is None:
            return 0
        return int(self.indptr[vertex + 1] - self.indptr[vertex])

    @classmethod
    def from_edges(cls, edges, summary=None):
        """Build from (label, label) pairs; duplicates and self-loops dropped."""
        pairs = set()
        for a, b in edges:
            if a == b:
                continue
            pairs.add((a, b) if a < b else (b, a))
        labels = sorted({label for pair in pairs for label in pair})
        index = {label: i for i, label in enumerate(labels)}

        if pairs:
            edge_array = np.array([(index[a], index[b]) for a, b in pairs], dtype=np.int64)
        else:
            edge_array = np.zeros((0, 2), dtype=np.int64)
        src = np.concatenate([edge_array[:, 0], edge_array[:, 1]])
        dst = np.concatenate([edge_array[:, 1], edge_array[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]

        indptr = np.zeros(len(labels) + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=len(labels)), out=indptr[1:])

        if summary is not None:
            summary.vertices = len(labels)
            summary.edges = len(pairs)
        return cls(labels, indptr, dst.astype(np.int32), summary=summary)


def neighbors(graph, c):
    return graph.neighbors(c)


def _parse_row(line):
    """Return (relation, start, end) or None for a malformed row.

    Full dump rows are `assertion, relation, start, end, metadata`; bare
    `relation, start, end` rows are accepted too.
    """
    fields = line.rstrip("\n").split("\t")
    if len(fields) >= 4:
        rel, start, end = fields[1], fields[2], fields[3]
    elif len(fields) == 3:
        rel, start, end = fields
    else:
        return None
    rel, start, end = relation_name(rel), start.strip(), end.strip()
    if not rel or not start or not end:
        return None
    return rel, start, end


def load_graph(edge_stream, relation_filter=None, source=None, dump_version=None):
    """Parse a tab-separated ConceptNet assertion stream into a ConceptGraph.

    Returns (graph, summary). Malformed rows are counted and skipped.
    """
    relation_filter = relation_filter or RelationFilter()
    summary = LoadSummary(relation_filter=relation_filter.describe(),
                          source=source,
                          dump_version=dump_version)
    relations = Counter()
    edges = []

    for line in tqdm(edge_stream, desc="Reading edges", unit=" rows",
                     disable=not logger.isEnabledFor(logging.INFO)):
        if not line.strip():
            continue
        summary.rows_read += 1
        row = _parse_row(line)
        if row is None:
            summary.rows_skipped += 1
            continue
        rel, start, end = row
        if not relation_filter.accepts(rel):
            summary.rows_filtered += 1
            continue
        a, b = normalize_concept(start), normalize_concept(end)
        if a is None or b is None:
            summary.rows_dropped += 1
            continue
        if a == b:
            summary.self_loops += 1
            continue
        relations[rel] += 1
        edges.append((a, b))

    if not edges:
        raise EmptyGraphError(
            f"No usable edges in {source or 'edge stream'} "
            f"({summary.rows_read} rows read, {summary.rows_skipped} malformed)")

    summary.relations = dict(sorted(relations.items()))
    graph = ConceptGraph.from_edges(edges, summary=summary)
    logger.info("Loaded graph: %d vertices, %d edges (%d rows read, %d skipped, "
                "%d filtered, %d dropped)", summary.vertices, summary.edges,
                summary.rows_read, summary.rows_skipped, summary.rows_filtered,
                summary.rows_dropped)
    return graph, summary


def read_graph_dump(path, relation_filter=None, dump_version=None):
    with open_text(path) as f:
        return load_graph(f, relation_filter=relation_filter,
                          source=str(path), dump_version=dump_version)


def save_graph(graph, path):
    header = {
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "summary": graph.summary.to_dict(),
    }
    ensure_parent_dir(path)
    with open(path, "wb") as f:
        np.savez_compressed(f,
                            header=np.array(json.dumps(header, sort_keys=True)),
                            labels=np.array(graph.labels, dtype=str),
                            indptr=graph.indptr,
                            indices=graph.indices)


def load_graph_snapshot(path):
    try:
        archive = np.load(path, allow_pickle=False)
    except ValueError:
        raise SnapshotFormatError(f"{path} is not a concept graph snapshot")
    if not hasattr(archive, "files"):
        raise SnapshotFormatError(f"{path} is not a concept graph snapshot")
    with archive as data:
        try:
            header = json.loads(str(data["header"]))
        except KeyError:
            raise SnapshotFormatError(f"{path} is not a concept graph snapshot")
        version = header.get("format_version")
        if version != SNAPSHOT_FORMAT_VERSION:
            raise SnapshotFormatError(
                f"Unsupported snapshot version {version} in {path} - "
                f"expected {SNAPSHOT_FORMAT_VERSION}")
        labels = data["labels"].tolist()
        indptr = data["indptr"]
        indices = data["indices"]
    summary = LoadSummary(**header["summary"])
    return ConceptGraph(labels, indptr, indices, summary=summary)
