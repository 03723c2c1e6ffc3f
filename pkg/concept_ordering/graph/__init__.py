from .conceptnet import (ConceptGraph, LoadSummary, RelationFilter, load_graph,
                         load_graph_snapshot, neighbors, normalize_concept, read_graph_dump,
                         save_graph)
from .walks import (PrecedenceCounts, WalkConfig, count_path_pairs, merge_counts, sample_walks,
                    sample_walks_parallel, vocabulary_from_instances)
