import argparse
import json
import logging
import sys
from dataclasses import replace

from tabulate import tabulate

from concept_ordering.config import RunConfig, configure_logging, load_config_file
from concept_ordering.dataset import PUBLISHED_SPLIT_SIZES, import_commongen, load_instances
from concept_ordering.errors import ConceptOrderingError, UsageError
from concept_ordering.generation import (GeneratorSpec, TranscriptRecorder, build_prompt,
                                         generate_batch, load_generator_spec, make_generator,
                                         prompt_completion_pairs)
from concept_ordering.graph import (RelationFilter, WalkConfig, load_graph_snapshot,
                                    read_graph_dump, sample_walks_parallel, save_graph,
                                    vocabulary_from_instances)
from concept_ordering.lexical import LexicalMatcher
from concept_ordering.metrics import (aggregate, extract_and_score, records_frame,
                                      score_ordering)
from concept_ordering.ordering import (InputFormat, Ordering, Strategy, TransitionTable,
                                       estimate, format_input, order_instances,
                                       training_pairs)
from concept_ordering.utils import (ensure_parent_dir, read_jsonl, sibling_path, write_jsonl,
                                    write_lines)

logger = logging.getLogger("concept_ordering")

MISSING_GENERATION_FLAG = "generation-missing"

# checked after --config is merged, so a config file can supply them
REQUIRED_FLAGS = {
    "build-graph": ("dump", "out"),
    "build-transitions": ("graph", "vocab", "out"),
    "order": ("instances", "strategy", "out"),
    "generate": ("instances", "orderings", "out"),
    "evaluate": ("instances",),
    "export-training": ("instances", "strategy", "out"),
    "import-commongen": ("src", "split", "out"),
}


def _emit(args, payload):
    """Machine-readable output goes to stdout only with --stdout."""
    if args.stdout:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _summary_table(values):
    return tabulate([(k, v) for k, v in values.items() if not isinstance(v, dict)],
                    tablefmt="plain")


def _read_vocabulary(path, graph, matcher):
    """(starts, vocabulary) from instances JSONL, or one concept per line for both."""
    if str(path).endswith((".jsonl", ".jsonl.gz")):
        return vocabulary_from_instances(load_instances(path, lenient=True), graph, matcher)
    with open(path, encoding="utf-8") as f:
        concepts = sorted({line.strip() for line in f if line.strip()})
    return concepts, concepts


def cmd_build_graph(args):
    RunConfig("build-graph", inputs={"dump": args.dump}).validate()
    relation_filter = RelationFilter(allow=args.allow_relation or None,
                                     deny=frozenset(args.deny_relation or ()))
    graph, summary = read_graph_dump(args.dump, relation_filter, dump_version=args.dump_version)
    save_graph(graph, args.out)
    summary_path = args.summary or sibling_path(args.out, ".summary.json")
    ensure_parent_dir(summary_path)
    with open(summary_path, "w", encoding="utf-8") as f:
        json.dump(summary.to_dict(), f, indent=2, sort_keys=True)
    print(_summary_table(summary.to_dict()), file=sys.stderr)
    _emit(args, summary.to_dict())


def cmd_build_transitions(args):
    cfg = RunConfig("build-transitions",
                    inputs={"graph": args.graph, "vocab": args.vocab, "starts": args.starts},
                    seed=args.seed, workers=args.workers).validate()
    graph = load_graph_snapshot(args.graph)
    matcher = LexicalMatcher.from_path(args.lemma_dict)
    starts, vocabulary = _read_vocabulary(args.vocab, graph, matcher)
    if args.starts:
        starts, _ = _read_vocabulary(args.starts, graph, matcher)
    walk = WalkConfig(max_path_concepts=args.max_path,
                      walks_per_start=args.walks_per_start,
                      seed=cfg.seed,
                      vocabulary=frozenset(vocabulary),
                      self_avoiding=not args.allow_revisit)
    counts = sample_walks_parallel(graph, starts, walk, workers=cfg.workers)
    if args.counts:
        counts.to_tsv(args.counts)

    metadata = {
        "walk": walk.describe(),
        "graph": graph.summary.to_dict(),
        "starts": len(starts),
        "starts_in_graph": sum(1 for s in starts if s in graph),
        "observed_pairs": len(counts),
        "paths_counted": counts.total(),
    }
    if args.created_at:
        metadata["created_at"] = args.created_at
    table = estimate(counts, alpha=args.alpha, default_prob=args.default_prob, metadata=metadata)
    table.to_tsv(args.out)
    logger.info("Wrote %d transition probabilities to %s", len(table), args.out)
    _emit(args, table.describe())


def _load_table(path):
    return TransitionTable.from_tsv(path) if path else None


def cmd_order(args):
    strategy = Strategy(args.strategy)
    if strategy is Strategy.PROBABILISTIC and not args.table:
        raise UsageError("--strategy probabilistic requires --table")
    RunConfig("order", inputs={"instances": args.instances, "table": args.table},
              strategy=strategy, seed=args.seed, workers=args.workers).validate()
    instances = load_instances(args.instances, lenient=args.lenient)
    orderings = order_instances(instances, strategy,
                                table=_load_table(args.table),
                                seed=args.seed,
                                matcher=LexicalMatcher.from_path(args.lemma_dict),
                                reference_index=args.reference_index,
                                workers=args.workers)
    lines = [format_input(i.concepts, o, args.format) for i, o in zip(instances, orderings)]
    write_lines(args.out, lines)
    sidecar = args.sidecar or sibling_path(args.out, ".meta.jsonl")
    write_jsonl(sidecar, [dict(id=i.id, **o.to_dict(), formatted=line)
                          for i, o, line in zip(instances, orderings, lines)])
    flagged = sum(1 for o in orderings if o.flags)
    if flagged:
        logger.warning("%d of %d orderings carry flags (see %s)", flagged, len(orderings), sidecar)
    if args.stdout:
        print("\n".join(lines))


def _generator_spec(args):
    spec = load_generator_spec(args.generator_spec) if args.generator_spec else GeneratorSpec()
    overrides = {k: v for k, v in (("endpoint", args.endpoint), ("model", args.model),
                                   ("prompt_style", args.prompt_style),
                                   ("concurrency", args.concurrency)) if v is not None}
    return replace(spec, **overrides)


def _read_orderings(path):
    return {record["id"]: Ordering(record["concepts"], record["strategy"],
                                   score=record.get("score"), flags=record.get("flags", ()))
            for _, record in read_jsonl(path)}


def cmd_generate(args):
    RunConfig("generate", inputs={"instances": args.instances, "orderings": args.orderings,
                                  "replay": args.replay}).validate()
    spec = _generator_spec(args)
    logger.info("Generator spec: %s", spec.describe())
    instances = load_instances(args.instances, lenient=args.lenient)
    orderings = _read_orderings(args.orderings)
    fmt = InputFormat.COMMA if spec.prompt_style == "alignment" else InputFormat(args.format)
    prompts = {i.id: build_prompt(spec, format_input(i.concepts, orderings[i.id], fmt))
               for i in instances if i.id in orderings}
    if len(prompts) < len(instances):
        logger.warning("%d instances have no ordering in %s", len(instances) - len(prompts),
                       args.orderings)
    generator = make_generator(args.generator, spec, fmt=fmt, replay_path=args.replay)
    recorder = TranscriptRecorder(args.record, model=spec.model) if args.record else None
    generations = generate_batch(spec, prompts, generator, recorder=recorder)
    write_jsonl(args.out, [{"id": key, "strategy": orderings[key].strategy.value,
                            "prompt": prompts[key], "generation": text}
                           for key, text in generations.items()])


def cmd_evaluate(args):
    if bool(args.generations) == bool(args.orderings):
        raise UsageError("evaluate needs exactly one of --generations or --orderings")
    if not args.out and not args.stdout:
        raise UsageError("evaluate needs --out or --stdout")
    RunConfig("evaluate", inputs={"instances": args.instances, "generations": args.generations,
                                  "orderings": args.orderings}).validate()
    matcher = LexicalMatcher.from_path(args.lemma_dict)
    instances = load_instances(args.instances, lenient=args.lenient)

    records = []
    if args.orderings:
        orderings = _read_orderings(args.orderings)
        for instance in instances:
            if instance.id in orderings:
                records.append(score_ordering(orderings[instance.id], instance, matcher))
            else:
                logger.warning("No ordering for instance %s", instance.id)
    else:
        generations = {record["id"]: record for _, record in read_jsonl(args.generations)}
        for instance in instances:
            record = generations.get(instance.id, {})
            text = record.get("generation", record.get("text", ""))
            scored = extract_and_score(text, instance.concepts, instance.references, matcher,
                                       instance_id=instance.id, strategy=record.get("strategy"))
            if not record:
                scored.flags.append(MISSING_GENERATION_FLAG)
            records.append(scored)

    report = aggregate(records)
    if args.out:
        report.to_json(args.out)
        write_jsonl(args.records or sibling_path(args.out, ".records.jsonl"),
                    [r.to_dict() for r in records])
    if args.csv:
        records_frame(records).to_csv(args.csv, index=False)
        report.to_csv(sibling_path(args.csv, ".summary.csv"))
    print(report.to_table(), file=sys.stderr)
    _emit(args, report.to_dict())


def cmd_export_training(args):
    strategy = Strategy(args.strategy)
    if strategy is Strategy.PROBABILISTIC and not args.table:
        raise UsageError("--strategy probabilistic requires --table")
    RunConfig("export-training", inputs={"instances": args.instances, "table": args.table},
              strategy=strategy, seed=args.seed).validate()
    instances = load_instances(args.instances, lenient=args.lenient)
    pairs = training_pairs(instances, strategy, args.format, table=_load_table(args.table),
                           seed=args.seed, matcher=LexicalMatcher.from_path(args.lemma_dict))
    if args.prompt_completion:
        spec = _generator_spec(args)
        pairs = prompt_completion_pairs(spec, pairs)
    write_jsonl(args.out, pairs)


def cmd_import_commongen(args):
    RunConfig("import-commongen", inputs={"src": args.src}).validate()
    _, stats = import_commongen(args.src, args.split, out_path=args.out)
    print(_summary_table(stats), file=sys.stderr)
    _emit(args, stats)


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="TOML or JSON file with defaults for any flag")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--stdout", action="store_true",
                        help="Write machine-readable output to stdout")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return common


def _add_instance_args(parser):
    parser.add_argument("--instances", type=str)
    parser.add_argument("--lenient", action="store_true",
                        help="Skip invalid instance lines instead of aborting")
    parser.add_argument("--lemma-dict", type=str, default=None,
                        help="inflected<TAB>lemma file overriding the suffix rules")


def _add_generator_args(parser):
    parser.add_argument("--generator-spec", type=str, default=None,
                        help="JSON file with GeneratorSpec fields")
    parser.add_argument("--endpoint", type=str, default=None)
    parser.add_argument("--model", type=str, default=None)
    parser.add_argument("--prompt-style", choices=["completion", "alignment"], default=None)
    parser.add_argument("--concurrency", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="concept_ordering",
        description="Concept ordering for keyword-to-sentence generation.")
    common = _common_parser()
    subparsers = parser.add_subparsers(dest="command", required=True)
    formats = [f.value for f in InputFormat]
    strategies = [s.value for s in Strategy]

    p = subparsers.add_parser("build-graph", parents=[common],
                              help="Parse a ConceptNet dump into a graph snapshot")
    p.add_argument("--dump", type=str)
    p.add_argument("--out", type=str)
    p.add_argument("--summary", type=str, default=None)
    p.add_argument("--allow-relation", action="append", default=None)
    p.add_argument("--deny-relation", action="append", default=None)
    p.add_argument("--dump-version", type=str, default=None)
    p.set_defaults(func=cmd_build_graph)

    p = subparsers.add_parser("build-transitions", parents=[common],
                              help="Sample walks and estimate transition probabilities")
    p.add_argument("--graph", type=str)
    p.add_argument("--vocab", type=str,
                   help="Counted concepts: one per line, or instances JSONL")
    p.add_argument("--starts", type=str, default=None,
                   help="Walk starts, same formats as --vocab; defaults to the starts --vocab implies")
    p.add_argument("--out", type=str)
    p.add_argument("--counts", type=str, default=None)
    p.add_argument("--max-path", type=int, default=5)
    p.add_argument("--walks-per-start", type=int, default=100)
    p.add_argument("--allow-revisit", action="store_true")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--default-prob", type=float, default=0.5)
    p.add_argument("--created-at", type=str, default=None)
    p.add_argument("--lemma-dict", type=str, default=None)
    p.set_defaults(func=cmd_build_transitions)

    p = subparsers.add_parser("order", parents=[common], help="Order concept sets")
    _add_instance_args(p)
    p.add_argument("--strategy", choices=strategies)
    p.add_argument("--table", type=str, default=None)
    p.add_argument("--format", choices=formats, default=InputFormat.SPACE.value)
    p.add_argument("--reference-index", type=int, default=0)
    p.add_argument("--out", type=str)
    p.add_argument("--sidecar", type=str, default=None)
    p.set_defaults(func=cmd_order)

    p = subparsers.add_parser("generate", parents=[common],
                              help="Turn orderings into sentences with a generator")
    _add_instance_args(p)
    _add_generator_args(p)
    p.add_argument("--orderings", type=str)
    p.add_argument("--format", choices=formats, default=InputFormat.SPACE.value)
    p.add_argument("--generator", choices=["stub", "http", "replay"], default="stub")
    p.add_argument("--replay", type=str, default=None)
    p.add_argument("--record", type=str, default=None)
    p.add_argument("--out", type=str)
    p.set_defaults(func=cmd_generate)

    p = subparsers.add_parser("evaluate", parents=[common],
                              help="Kendall tau and coverage against references")
    _add_instance_args(p)
    p.add_argument("--generations", type=str, default=None)
    p.add_argument("--orderings", type=str, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--records", type=str, default=None)
    p.add_argument("--csv", type=str, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = subparsers.add_parser("export-training", parents=[common],
                              help="Write source/target pairs for fine-tuning")
    _add_instance_args(p)
    _add_generator_args(p)
    p.add_argument("--strategy", choices=strategies)
    p.add_argument("--table", type=str, default=None)
    p.add_argument("--format", choices=formats, default=InputFormat.TOKEN.value)
    p.add_argument("--prompt-completion", action="store_true")
    p.add_argument("--out", type=str)
    p.set_defaults(func=cmd_export_training)

    p = subparsers.add_parser("import-commongen", parents=[common],
                              help="Convert a CommonGen split to canonical JSONL")
    p.add_argument("--src", type=str)
    p.add_argument("--split", choices=sorted(PUBLISHED_SPLIT_SIZES))
    p.add_argument("--out", type=str)
    p.set_defaults(func=cmd_import_commongen)

    return parser


def _apply_config(subparser, path):
    """File values become subparser defaults; flags on the command line still win."""
    defaults = {key.replace("-", "_"): value for key, value in load_config_file(path).items()}
    actions = {action.dest: action for action in subparser._actions}
    unknown = sorted(set(defaults) - set(actions))
    if unknown:
        raise UsageError(f"Unknown keys in {path}: {unknown}")
    for key, value in defaults.items():
        choices = actions[key].choices
        if choices is not None and value not in choices:
            raise UsageError(f"{path}: {key} = {value!r} is not one of {sorted(choices)}")
    subparser.set_defaults(**defaults)


def parse_args(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    if args.config:
        commands = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        _apply_config(commands.choices[args.command], args.config)
        args = parser.parse_args(argv)

    missing = [f"--{dest.replace('_', '-')}" for dest in REQUIRED_FLAGS[args.command]
               if getattr(args, dest) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required arguments {', '.join(missing)} "
                         f"(on the command line or in --config)")
    return args


def main(argv=None):
    try:
        args = parse_args(argv)
    except ConceptOrderingError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    configure_logging(args.verbose, args.quiet)
    try:
        args.func(args)
    except ConceptOrderingError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
