"""Networks that sample Markov chains through a random input value.

A deterministic feed-forward network is trained on input vectors augmented
with a uniform random value r; the cumulative intervals of the per-input
outcome statistics turn r into a switch, so the decoded outputs reproduce
the training distribution without any post-hoc sampling.
"""

from importlib import resources

from .errors import FormatError, InputError, McnnError, ShapeError
from .markov import (
    AugmentedPair,
    CumulativeIntervals,
    DiscreteDistribution,
    EmpiricalConditional,
    MarkovChain,
    augment,
    canonical_key,
    chain_step,
    cumulative,
    estimate_empirical,
    generate_pairs,
    sample_index,
    simulate_chain,
)
from .nn import (
    Dataset,
    LayerSpec,
    Network,
    TrainConfig,
    argmax_decode,
    backprop,
    forward,
    init_network,
    load_model,
    mse_loss,
    save_model,
    sgd_step,
    train,
)

__version__ = "0.1.0"


def bundled_corpus(name: str) -> str:
    """Read one of the packaged demo corpora ('rhymes' or 'fables')."""
    return (
        resources.files("mcnn.corpora").joinpath(f"{name}.txt").read_text("utf-8")
    )
