import logging
from concurrent.futures import ProcessPoolExecutor

from tqdm.auto import tqdm

from concept_ordering.errors import ConfigError
from concept_ordering.lexical import LexicalMatcher
from concept_ordering.ordering.strategies import (Strategy, format_input, order_example,
                                                  order_original, order_probabilistic,
                                                  order_random)
from concept_ordering.utils import mix_seed

logger = logging.getLogger(__name__)


def order_instance(instance, index, strategy, table=None, seed=0, matcher=None,
                   reference_index=0):
    strategy = Strategy(strategy)
    if strategy is Strategy.ORIGINAL:
        return order_original(instance.concepts)
    if strategy is Strategy.RANDOM:
        return order_random(instance.concepts, mix_seed(seed, index))
    if strategy is Strategy.PROBABILISTIC:
        if table is None:
            raise ConfigError("Probabilistic ordering needs a transition table")
        return order_probabilistic(table, instance.concepts)
    reference = instance.references[min(reference_index, len(instance.references) - 1)]
    return order_example(reference, instance.concepts, matcher)


_worker_state = {}


def _init_worker(state):
    _worker_state.update(state)


def _order_indexed(item):
    index, instance = item
    return order_instance(instance, index, **_worker_state)


def order_instances(instances, strategy, table=None, seed=0, matcher=None,
                    reference_index=0, workers=1):
    """Order every instance; output order follows input order for any `workers`."""
    strategy = Strategy(strategy)
    if strategy is Strategy.PROBABILISTIC and table is None:
        raise ConfigError("Probabilistic ordering needs a transition table")
    matcher = matcher or LexicalMatcher()
    state = dict(strategy=strategy, table=table, seed=seed, matcher=matcher,
                 reference_index=reference_index)
    items = list(enumerate(instances))
    progress = dict(total=len(items), desc=f"Ordering ({strategy.value})",
                    disable=not logger.isEnabledFor(logging.INFO))

    if workers <= 1:
        return [order_instance(instance, index, **state)
                for index, instance in tqdm(items, **progress)]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(state,)) as pool:
        chunksize = max(1, len(items) // (workers * 8))
        return list(tqdm(pool.map(_order_indexed, items, chunksize=chunksize), **progress))


def training_pairs(instances, strategy, fmt, table=None, seed=0, matcher=None):
    """One {id, source, target} pair per reference sentence.

    Example orderings come from each pair's own target sentence; Random
    orderings are reshuffled per pair.
    """
    strategy = Strategy(strategy)
    matcher = matcher or LexicalMatcher()
    for index, instance in enumerate(instances):
        shared = None
        if strategy in (Strategy.ORIGINAL, Strategy.PROBABILISTIC):
            shared = order_instance(instance, index, strategy, table=table, seed=seed)
        for k, target in enumerate(instance.references):
            if shared is not None:
                ordering = shared
            elif strategy is Strategy.RANDOM:
                ordering = order_random(instance.concepts, mix_seed(mix_seed(seed, index), k))
            else:
                ordering = order_example(target, instance.concepts, matcher)
            yield {
                "id": instance.id,
                "source": format_input(instance.concepts, ordering, fmt),
                "target": target,
                "strategy": strategy.value,
                "flags": list(ordering.flags),
            }
