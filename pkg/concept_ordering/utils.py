import gzip
import json
import os

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x):
    # finalizer of the SplitMix64 generator (Steele, Lea & Flood)
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(seed, index):
    """Derive the sub-seed of item `index` from a 64-bit run seed.

    sub_seed = splitmix64(seed XOR splitmix64(index)); depends only on the
    pair, so sharding items across workers never changes a sub-seed.
    """
    return splitmix64((seed & MASK64) ^ splitmix64(index & MASK64))


def make_rng(seed, index=None):
    if index is not None:
        seed = mix_seed(seed, index)
    return np.random.default_rng(seed & MASK64)


def open_text(path, mode="rt"):
    path = os.fspath(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode, encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def ensure_parent_dir(path):
    parent = os.path.dirname(os.path.abspath(os.fspath(path)))
    os.makedirs(parent, exist_ok=True)


def sibling_path(path, suffix):
    """`out/orders.txt` + `.meta.jsonl` -> `out/orders.meta.jsonl`."""
    root, _ = os.path.splitext(os.fspath(path))
    return root + suffix


def read_jsonl(path):
    with open_text(path) as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            yield line_no, json.loads(line)


def dump_json_line(record):
    return json.dumps(record, ensure_ascii=False, separators=(", ", ": "))


def write_jsonl(path, records):
    ensure_parent_dir(path)
    with open_text(path, "wt") as f:
        for record in records:
            f.write(dump_json_line(record) + "\n")


def write_lines(path, lines):
    ensure_parent_dir(path)
    with open_text(path, "wt") as f:
        for line in lines:
            f.write(line + "\n")
