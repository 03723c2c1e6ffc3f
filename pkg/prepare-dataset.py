import sys

from concept_ordering.config import configure_logging
from concept_ordering.dataset import import_commongen

# Path to your CommonGen release (JSONL file or a saved `datasets` split directory)
source_path = "./dataset/commongen.dev.jsonl"
split = "dev"
out_path = "./dataset/dev.instances.jsonl"

if len(sys.argv) > 1:
    source_path = sys.argv[1]
if len(sys.argv) > 2:
    split = sys.argv[2]
if len(sys.argv) > 3:
    out_path = sys.argv[3]

configure_logging()
instances, stats = import_commongen(source_path, split, out_path=out_path)

print(f"Dataset prepared and saved to {out_path}")
print(f"Concept sets: {stats['instances']} (published {split} split: {stats['published_concept_sets']})")
print(f"Reference sentences: {stats['references']}")
