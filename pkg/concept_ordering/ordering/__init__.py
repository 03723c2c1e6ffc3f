from .transitions import TransitionTable, estimate, sequence_log_prob, transition_prob
from .strategies import (InputFormat, Ordering, Strategy, format_input, order_example,
                         order_original, order_probabilistic, order_random, parse_input)
from .batch import order_instance, order_instances, training_pairs
