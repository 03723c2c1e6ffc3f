import json
import logging
from bisect import bisect
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from tabulate import tabulate

from concept_ordering.errors import InvalidInputError
from concept_ordering.lexical import LexicalMatcher
from concept_ordering.utils import ensure_parent_dir

logger = logging.getLogger(__name__)

TAU_UNDEFINED_FLAG = "tau-undefined"
MISSING_CONCEPT_FLAG = "concept-missing"
INCLUSION_RULE = ("mean_tau averages records with a defined tau (>= 2 concepts shared "
                  "by candidate and reference); mean_coverage averages all records")
TAU_DECIMALS = 3
COVERAGE_DECIMALS = 1


def count_inversions(ranks):
    inversions = 0
    sorted_so_far = []
    for i, r in enumerate(ranks):
        j = bisect(sorted_so_far, r)
        inversions += i - j
        sorted_so_far.insert(j, r)
    return inversions


def kendall_tau(candidate, reference):
    """(concordant - discordant) / (n(n-1)/2) between two permutations.

    Returns None when n < 2.
    """
    candidate, reference = list(candidate), list(reference)
    if (len(set(candidate)) != len(candidate) or len(set(reference)) != len(reference)
            or set(candidate) != set(reference)):
        raise InvalidInputError(
            f"kendall_tau needs two permutations of one set, got {candidate} and {reference}")
    n = len(candidate)
    if n < 2:
        return None
    position = {c: i for i, c in enumerate(reference)}
    discordant = count_inversions([position[c] for c in candidate])
    pairs = n * (n - 1) // 2
    return (pairs - 2 * discordant) / pairs


def best_tau(candidate, references):
    if not references:
        raise InvalidInputError("best_tau needs at least one reference ordering")
    taus = [kendall_tau(candidate, reference) for reference in references]
    defined = [t for t in taus if t is not None]
    return max(defined) if defined else None


@dataclass
class EvalRecord:
    instance_id: str
    tau: float = None
    coverage: float = 0.0
    shared_concepts: int = 0
    strategy: str = None
    flags: list = field(default_factory=list)

    def __post_init__(self):
        if self.tau is not None and not -1.0 <= self.tau <= 1.0:
            raise InvalidInputError(f"tau {self.tau} outside [-1, 1]")
        if not 0.0 <= self.coverage <= 1.0:
            raise InvalidInputError(f"coverage {self.coverage} outside [0, 1]")

    @property
    def tau_defined(self):
        return self.tau is not None

    def to_dict(self):
        return asdict(self)


def _matched_ordering(sentence, concepts, matcher):
    positions = {c: matcher.match_position(c, sentence) for c in concepts}
    matched = [c for c in concepts if positions[c] is not None]
    return sorted(matched, key=lambda c: positions[c])


def coverage(sentence, concepts, matcher=None):
    concepts = list(concepts)
    if not concepts:
        raise InvalidInputError("coverage needs a non-empty concept set")
    matcher = matcher or LexicalMatcher()
    sentence = matcher.tokenize(sentence) if isinstance(sentence, str) else sentence
    found = sum(1 for c in concepts if matcher.match_position(c, sentence) is not None)
    return found / len(concepts)


def _restrict(ordering, keep):
    return [c for c in ordering if c in keep]


def _tau_against_references(candidate, reference_orderings):
    """Best tau over references, each compared on the concepts both contain.

    The shared count is the one behind the returned tau; when no reference
    shares two concepts it is the largest overlap seen.
    """
    best, best_shared, most_shared = None, 0, 0
    for reference in reference_orderings:
        shared = set(candidate) & set(reference)
        most_shared = max(most_shared, len(shared))
        if len(shared) < 2:
            continue
        tau = kendall_tau(_restrict(candidate, shared), _restrict(reference, shared))
        if best is None or tau > best:
            best, best_shared = tau, len(shared)
    return best, (best_shared if best is not None else most_shared)


def extract_and_score(generated_sentence, input_set, reference_sentences,
                      matcher=None, instance_id=None, strategy=None):
    """Score a generated sentence: tau of its concept order and coverage."""
    if not reference_sentences:
        raise InvalidInputError(f"Instance {instance_id} has no reference sentences")
    matcher = matcher or LexicalMatcher()
    concepts = list(input_set)
    generated = matcher.tokenize(generated_sentence)
    candidate = _matched_ordering(generated, concepts, matcher)
    references = [_matched_ordering(matcher.tokenize(s), concepts, matcher)
                  for s in reference_sentences]

    tau, shared = _tau_against_references(candidate, references)
    flags = [f"{MISSING_CONCEPT_FLAG}:{c}" for c in concepts if c not in candidate]
    if tau is None:
        flags.append(TAU_UNDEFINED_FLAG)
    return EvalRecord(instance_id=instance_id,
                      tau=tau,
                      coverage=len(candidate) / len(concepts),
                      shared_concepts=shared,
                      strategy=strategy,
                      flags=flags)


def score_ordering(ordering, instance, matcher=None):
    """tau of a concept ordering against the reference orderings of an instance."""
    matcher = matcher or LexicalMatcher()
    references = [_matched_ordering(matcher.tokenize(s), instance.concepts, matcher)
                  for s in instance.references]
    candidate = list(ordering.concepts)
    tau, shared = _tau_against_references(candidate, references)
    flags = list(ordering.flags)
    if tau is None:
        flags.append(TAU_UNDEFINED_FLAG)
    return EvalRecord(instance_id=instance.id,
                      tau=tau,
                      coverage=1.0,
                      shared_concepts=shared,
                      strategy=ordering.strategy.value,
                      flags=flags)


@dataclass
class EvalReport:
    records: int = 0
    mean_tau: float = None
    mean_coverage: float = None
    undefined_tau: int = 0
    degraded: int = 0
    by_strategy: dict = field(default_factory=dict)
    inclusion_rule: str = INCLUSION_RULE

    def to_dict(self):
        return asdict(self)

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            ensure_parent_dir(path)
            with open(path, "w", encoding="utf-8") as f:
                f.write(text + "\n")
        return text

    def rows(self):
        rows = [{"strategy": name, **summary} for name, summary in sorted(self.by_strategy.items())]
        rows.append({"strategy": "all", "records": self.records, "mean_tau": self.mean_tau,
                     "mean_coverage": self.mean_coverage, "undefined_tau": self.undefined_tau,
                     "degraded": self.degraded})
        return rows

    def to_table(self):
        return tabulate(self.rows(), headers="keys", tablefmt="simple",
                        floatfmt=("", "", f".{TAU_DECIMALS}f", f".{COVERAGE_DECIMALS}f"),
                        missingval="-")

    def to_csv(self, path):
        ensure_parent_dir(path)
        pd.DataFrame(self.rows()).to_csv(path, index=False)


def _summarize(records):
    taus = [r.tau for r in records if r.tau is not None]
    return {
        "records": len(records),
        "mean_tau": round(float(np.mean(taus)), TAU_DECIMALS) if taus else None,
        "mean_coverage": (round(100.0 * float(np.mean([r.coverage for r in records])),
                                COVERAGE_DECIMALS) if records else None),
        "undefined_tau": len(records) - len(taus),
        "degraded": sum(1 for r in records if r.flags),
    }


def aggregate(records):
    records = list(records)
    groups = {}
    for record in records:
        if record.strategy is not None:
            groups.setdefault(record.strategy, []).append(record)
    by_strategy = {name: _summarize(group) for name, group in groups.items()}
    report = EvalReport(**_summarize(records), by_strategy=by_strategy)
    if report.undefined_tau:
        logger.warning("%d of %d records have undefined tau and are left out of mean_tau",
                       report.undefined_tau, report.records)
    return report


def records_frame(records):
    frame = pd.DataFrame([r.to_dict() for r in records])
    if not frame.empty:
        frame["flags"] = frame["flags"].map(";".join)
    return frame
