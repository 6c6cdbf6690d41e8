"""Character- and word-level text synthesis with learned next-symbol switching.

Characters feed the network as a window of 7 codes scaled into [0, 1]; the
target is a 256-way one-hot decision.  The word model replaces the window
with a dictionary-sized vector whose recent words carry larger weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import markov, nn
from .errors import InputError
from .nn import Dataset, Network, TrainConfig

CHAR_SPACE = 256
REPLACEMENT_CODE = ord("?")
DEFAULT_CONTEXT = 7
DEFAULT_WINDOW = 6


@dataclass(frozen=True)
class CharDatasetSpec:
    corpus: str
    context_len: int = DEFAULT_CONTEXT

    def __post_init__(self) -> None:
        if self.context_len < 1:
            raise InputError("context_len must be positive")
        if len(self.corpus) <= self.context_len:
            raise InputError("corpus must be longer than the context window")


def char_code(ch: str) -> int:
    code = ord(ch)
    return code if code < CHAR_SPACE else REPLACEMENT_CODE


def clean_corpus(text: str) -> str:
    """Map characters outside the 256-code space to '?'."""
    return "".join(chr(char_code(c)) for c in text)


def encode_context(text: str) -> np.ndarray:
    """Character codes scaled by 1/255 so they stay inside sigmoid range."""
    return np.array([char_code(c) for c in text], dtype=np.float64) / 255.0


def one_hot_code(code: int) -> np.ndarray:
    v = np.zeros(CHAR_SPACE)
    v[code] = 1.0
    return v


def build_char_dataset(spec: CharDatasetSpec) -> Dataset:
    """One pair per corpus position: 7 scaled codes in, next-char one-hot out."""
    corpus = clean_corpus(spec.corpus)
    k = spec.context_len
    inputs = np.empty((len(corpus) - k, k))
    targets = np.zeros((len(corpus) - k, CHAR_SPACE))
    for p in range(k, len(corpus)):
        inputs[p - k] = encode_context(corpus[p - k : p])
        targets[p - k, char_code(corpus[p])] = 1.0
    return Dataset(inputs, targets)


def char_conditionals(spec: CharDatasetSpec) -> markov.EmpiricalConditional:
    data = build_char_dataset(spec)
    return markov.estimate_empirical(zip(data.inputs, data.targets))


def train_char_net(
    corpus: str,
    context_len: int = DEFAULT_CONTEXT,
    hidden: tuple[int, ...] = (256,),
    train_config: TrainConfig | None = None,
    pairs_per_input: int = 4,
    seed: int = 0,
) -> tuple[Network, list[float]]:
    """Fit the next-character switch network from a raw corpus string."""
    emp = char_conditionals(CharDatasetSpec(corpus, context_len))
    seeds = np.random.SeedSequence(seed).generate_state(2)
    pairs = markov.generate_pairs(emp, pairs_per_input, int(seeds[0]))
    data = markov.pairs_to_dataset(pairs)
    if train_config is None:
        train_config = TrainConfig(
            learning_rate=0.5, epochs=200, batch_size=64, rng_seed=int(seeds[1])
        )
    net = nn.init_network(
        nn.layered_specs([context_len + 1, *hidden, CHAR_SPACE]), int(seeds[1])
    )
    return nn.train(net, data, train_config)


def next_char(net: Network, context: str, r: float) -> str:
    """Single synthesis step from the trailing context window."""
    k = net.in_dim - 1
    x = markov.augment(encode_context(context[-k:]), r)
    return chr(nn.argmax_decode(nn.forward(net, x)))


def synthesize_chars(net: Network, seed_text: str, length: int, rng_seed: int | None = None) -> str:
    """Continue ``seed_text`` by ``length`` characters, one fresh r per step."""
    k = net.in_dim - 1
    if len(seed_text) < k:
        raise InputError(f"seed text must have at least {k} characters")
    if length < 0:
        raise InputError("length must be non-negative")
    rng = np.random.default_rng(rng_seed)
    out = list(clean_corpus(seed_text))
    for _ in range(length):
        context = "".join(out[-k:])
        out.append(next_char(net, context, float(rng.random())))
    return "".join(out)


# --- word-level model -------------------------------------------------------


@dataclass
class WordDictionary:
    """Ordered distinct tokens with a reverse index."""

    words: list[str]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.index:
            self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise InputError("dictionary words must be distinct")

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def from_tokens(cls, tokens: list[str]) -> "WordDictionary":
        seen: dict[str, int] = {}
        for t in tokens:
            if t not in seen:
                seen[t] = len(seen)
        return cls(list(seen.keys()))


def tokenize(text: str) -> list[str]:
    """Whitespace split; punctuation stays attached to its word."""
    return text.split()


def word_context_vector(context: list[str], dictionary: WordDictionary) -> np.ndarray:
    """Dictionary-sized vector with positional weights 1/(7-i), i=1 oldest.

    The token nearest the predicted word gets weight 1, the oldest 1/6;
    a token repeated inside the window keeps its largest weight.
    """
    if len(context) != DEFAULT_WINDOW:
        raise InputError(f"context must hold exactly {DEFAULT_WINDOW} tokens")
    vec = np.zeros(len(dictionary))
    for p, token in enumerate(context):
        if token not in dictionary.index:
            raise InputError(f"token {token!r} is not in the dictionary")
        weight = 1.0 / (DEFAULT_WINDOW - p)  # i = p + 1  =>  1/(7 - i)
        j = dictionary.index[token]
        vec[j] = max(vec[j], weight)
    return vec


def build_word_dataset(
    tokens: list[str], dictionary: WordDictionary, window: int = DEFAULT_WINDOW
) -> Dataset:
    """Window-weighted context vectors in, next-token one-hot out."""
    if window != DEFAULT_WINDOW:
        raise InputError("the positional weighting is defined for a 6-token window")
    if len(tokens) <= window:
        raise InputError("token sequence must be longer than the window")
    n = len(tokens) - window
    inputs = np.empty((n, len(dictionary)))
    targets = np.zeros((n, len(dictionary)))
    for p in range(window, len(tokens)):
        inputs[p - window] = word_context_vector(tokens[p - window : p], dictionary)
        targets[p - window, dictionary.index[tokens[p]]] = 1.0
    return Dataset(inputs, targets)


def train_word_net(
    tokens: list[str],
    dictionary: WordDictionary | None = None,
    hidden: tuple[int, ...] = (64, 64, 64),
    train_config: TrainConfig | None = None,
    pairs_per_input: int = 3,
    seed: int = 0,
) -> tuple[Network, list[float], WordDictionary]:
    """Fit the next-word network; returns the dictionary used for encoding."""
    if dictionary is None:
        dictionary = WordDictionary.from_tokens(tokens)
    data = build_word_dataset(tokens, dictionary)
    emp = markov.estimate_empirical(zip(data.inputs, data.targets))
    seeds = np.random.SeedSequence(seed).generate_state(2)
    pairs = markov.generate_pairs(emp, pairs_per_input, int(seeds[0]))
    aug = markov.pairs_to_dataset(pairs)
    if train_config is None:
        train_config = TrainConfig(
            learning_rate=0.5, epochs=150, batch_size=32, rng_seed=int(seeds[1])
        )
    net = nn.init_network(
        nn.layered_specs([len(dictionary) + 1, *hidden, len(dictionary)]), int(seeds[1])
    )
    trained, history = nn.train(net, aug, train_config)
    return trained, history, dictionary


def synthesize_words(
    net: Network,
    seed_tokens: list[str],
    dictionary: WordDictionary,
    length: int,
    rng_seed: int | None = None,
) -> list[str]:
    """Continue a token sequence by ``length`` words."""
    if len(seed_tokens) < DEFAULT_WINDOW:
        raise InputError(f"need at least {DEFAULT_WINDOW} seed tokens")
    if length < 0:
        raise InputError("length must be non-negative")
    rng = np.random.default_rng(rng_seed)
    out = list(seed_tokens)
    for _ in range(length):
        vec = word_context_vector(out[-DEFAULT_WINDOW:], dictionary)
        x = markov.augment(vec, float(rng.random()))
        out.append(dictionary.words[nn.argmax_decode(nn.forward(net, x))])
    return out
