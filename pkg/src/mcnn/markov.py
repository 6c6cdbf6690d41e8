"""Markov chains, empirical conditionals and random-value-augmented pairs.

The bridge from "statistics observed in data" to "training pairs a
deterministic network can learn": per-input outcome frequencies become
cumulative intervals on [0, 1), and a uniform random value r prepended to
the input selects the outcome whose interval contains it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import FormatError, InputError, ShapeError
from .nn import Dataset, format_real

CHAIN_FORMAT = "mcnn-chain-v1"

SUM_TOL = 1e-9


def canonical_key(v: Sequence[float]) -> str:
    """Exact, deterministic text key for a discrete vector."""
    return ",".join(format_real(float(x)) for x in v)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probabilities over c outcomes; non-negative, summing to one."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ShapeError("distribution must be a non-empty vector")
        if (probs < 0).any():
            raise InputError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > SUM_TOL:
            raise InputError(f"probabilities sum to {probs.sum()}, not 1")

    def __len__(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class CumulativeIntervals:
    """Prefix-sum boundaries b_0..b_c; outcome k owns [b_{k-1}, b_k)."""

    boundaries: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.boundaries, dtype=np.float64)
        object.__setattr__(self, "boundaries", b)
        if b.ndim != 1 or b.size < 2:
            raise ShapeError("need at least two boundaries")
        if b[0] != 0.0:
            raise InputError("first boundary must be 0")
        if abs(b[-1] - 1.0) > SUM_TOL:
            raise InputError("last boundary must be 1")
        if (np.diff(b) < 0).any():
            raise InputError("boundaries must be non-decreasing")

    @property
    def n_outcomes(self) -> int:
        return self.boundaries.size - 1


def cumulative(dist: DiscreteDistribution) -> CumulativeIntervals:
    """Cumulative interval boundaries of a distribution; the top is forced to 1."""
    b = np.concatenate(([0.0], np.cumsum(dist.probs)))
    b[-1] = 1.0
    # cumsum rounding can momentarily exceed 1 before the final clamp
    np.minimum(b, 1.0, out=b)
    return CumulativeIntervals(b)


def sample_index(intervals: CumulativeIntervals, r: float) -> int:
    """Outcome index whose interval [b_{k-1}, b_k) contains r.

    r = 1 maps to the last outcome with positive mass.  Outcomes of zero
    probability own empty intervals and are never returned.
    """
    if not 0.0 <= r <= 1.0:
        raise InputError(f"r must lie in [0, 1], got {r}")
    b = intervals.boundaries
    if r == 1.0:
        widths = np.diff(b)
        positive = np.nonzero(widths > 0)[0]
        if positive.size == 0:
            raise InputError("intervals carry no mass")
        return int(positive[-1])
    # rightmost boundary <= r starts the owning half-open interval
    return int(np.searchsorted(b, r, side="right")) - 1


def augment(x: Sequence[float], r: float) -> np.ndarray:
    """Prepend the random value r to an input vector."""
    if not 0.0 <= r <= 1.0:
        raise InputError(f"r must lie in [0, 1], got {r}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("input must be a vector")
    return np.concatenate(([r], x))


@dataclass(frozen=True)
class AugmentedPair:
    """One training pair: input [r | x] and its selected target."""

    input: np.ndarray
    target: np.ndarray

    @property
    def r(self) -> float:
        return float(self.input[0])


@dataclass
class ConditionalEntry:
    """Observed outcomes for one input: vectors, counts and their frequencies."""

    input: np.ndarray
    outcomes: np.ndarray  # (k, target_dim)
    outcome_keys: list[str]
    counts: np.ndarray  # (k,) positive ints
    distribution: DiscreteDistribution


@dataclass
class EmpiricalConditional:
    """Per-input-key discrete outcome distributions estimated from pairs."""

    table: dict[str, ConditionalEntry]

    def __len__(self) -> int:
        return len(self.table)

    def entry(self, x: Sequence[float]) -> ConditionalEntry:
        key = canonical_key(x)
        if key not in self.table:
            raise InputError(f"no observations for input {key}")
        return self.table[key]

    @classmethod
    def from_conditionals(
        cls, conditionals: Iterable[tuple[Sequence[float], Sequence[tuple[Sequence[float], float]]]]
    ) -> "EmpiricalConditional":
        """Build an exact table from (input, [(outcome, probability), ...]) rows.

        Zero-probability outcomes are dropped; the rest are rescaled onto
        integer pseudo-counts so the type invariants hold exactly.
        """
        table: dict[str, ConditionalEntry] = {}
        for x, outcome_probs in conditionals:
            x = np.asarray(x, dtype=np.float64)
            kept = [(np.asarray(o, dtype=np.float64), p) for o, p in outcome_probs if p > 0]
            if not kept:
                raise InputError("every input needs at least one positive-probability outcome")
            probs = np.array([p for _, p in kept], dtype=np.float64)
            probs = probs / probs.sum()
            table[canonical_key(x)] = ConditionalEntry(
                input=x,
                outcomes=np.array([o for o, _ in kept]),
                outcome_keys=[canonical_key(o) for o, _ in kept],
                counts=np.ones(len(kept), dtype=np.int64),
                distribution=DiscreteDistribution(probs),
            )
        return cls(table)


def estimate_empirical(
    pairs: Iterable[tuple[Sequence[float], Sequence[float]]]
) -> EmpiricalConditional:
    """Relative-frequency estimate of p(target | input) over discrete vectors.

    Inputs and outcomes are keyed by their canonical serialization; outcome
    order within an input is first-appearance order, so the result is
    deterministic for a fixed pair sequence.
    """
    inputs: dict[str, np.ndarray] = {}
    outcome_vecs: dict[str, list[np.ndarray]] = {}
    outcome_keys: dict[str, list[str]] = {}
    counts: dict[str, list[int]] = {}
    n = 0
    for x, y in pairs:
        n += 1
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        xk = canonical_key(x)
        yk = canonical_key(y)
        if xk not in inputs:
            inputs[xk] = x
            outcome_vecs[xk] = []
            outcome_keys[xk] = []
            counts[xk] = []
        keys = outcome_keys[xk]
        if yk in keys:
            counts[xk][keys.index(yk)] += 1
        else:
            keys.append(yk)
            outcome_vecs[xk].append(y)
            counts[xk].append(1)
    if n == 0:
        raise InputError("cannot estimate from an empty pair sequence")

    table: dict[str, ConditionalEntry] = {}
    for xk, x in inputs.items():
        c = np.array(counts[xk], dtype=np.int64)
        table[xk] = ConditionalEntry(
            input=x,
            outcomes=np.array(outcome_vecs[xk]),
            outcome_keys=outcome_keys[xk],
            counts=c,
            distribution=DiscreteDistribution(c / c.sum()),
        )
    return EmpiricalConditional(table)


def generate_pairs(
    emp: EmpiricalConditional,
    pairs_per_input: int,
    seed: int | None = None,
    r_stream: Iterator[float] | None = None,
    weight_by_counts: bool = False,
) -> list[AugmentedPair]:
    """Draw augmented training pairs that realize the empirical conditionals.

    For each input key, ``pairs_per_input`` pairs are emitted (scaled by the
    key's share of observations when ``weight_by_counts`` is set, minimum
    one).  Each pair draws r uniform on [0, 1), prepends it to the input and
    picks the target by locating r in the cumulative intervals.  Given a
    seed, the output is fully deterministic; ``r_stream`` overrides the
    random draws for testing.
    """
    if len(emp) == 0:
        raise InputError("empirical table is empty")
    if pairs_per_input < 1:
        raise InputError("pairs_per_input must be positive")
    if r_stream is None:
        rng = np.random.default_rng(seed)
        draw = lambda: float(rng.random())
    else:
        it = iter(r_stream)
        draw = lambda: float(next(it))

    total = sum(int(e.counts.sum()) for e in emp.table.values())
    out: list[AugmentedPair] = []
    for entry in emp.table.values():
        if weight_by_counts:
            share = int(entry.counts.sum()) / total
            n_pairs = max(1, round(pairs_per_input * len(emp) * share))
        else:
            n_pairs = pairs_per_input
        intervals = cumulative(entry.distribution)
        for _ in range(n_pairs):
            r = draw()
            k = sample_index(intervals, r)
            out.append(AugmentedPair(augment(entry.input, r), entry.outcomes[k].copy()))
    return out


def pairs_to_dataset(pairs: Sequence[AugmentedPair]) -> Dataset:
    if not pairs:
        raise InputError("no pairs to collect")
    return Dataset(
        np.array([p.input for p in pairs]), np.array([p.target for p in pairs])
    )


# --- Markov chains ----------------------------------------------------------


@dataclass
class MarkovChain:
    """States plus a column-stochastic transition matrix.

    ``transition[i][j]`` is the probability of moving to state i from
    state j, so each column j is the outgoing distribution of state j.
    """

    state_labels: list[str]
    transition: np.ndarray

    def __post_init__(self) -> None:
        self.transition = np.asarray(self.transition, dtype=np.float64)
        n = len(self.state_labels)
        if self.transition.shape != (n, n):
            raise ShapeError(
                f"transition must be {n}x{n}, got {self.transition.shape}"
            )
        if ((self.transition < 0) | (self.transition > 1)).any():
            raise InputError("transition entries must lie in [0, 1]")
        sums = self.transition.sum(axis=0)
        if np.abs(sums - 1.0).max() > SUM_TOL:
            raise InputError(f"columns must sum to 1, got sums {sums}")

    @property
    def n_states(self) -> int:
        return len(self.state_labels)

    def column(self, state: int) -> DiscreteDistribution:
        if not 0 <= state < self.n_states:
            raise InputError(f"state {state} out of range")
        col = self.transition[:, state].copy()
        col /= col.sum()  # absorb drift below SUM_TOL
        return DiscreteDistribution(col)


def chain_step(chain: MarkovChain, state: int, r: float) -> int:
    """Inverse-CDF transition: locate r in the cumulative column of ``state``."""
    return sample_index(cumulative(chain.column(state)), r)


def simulate_chain(
    chain: MarkovChain, start: int, n_steps: int, seed: int | None = None
) -> list[int]:
    """Walk the chain for n_steps with fresh uniform draws; includes the start."""
    if not 0 <= start < chain.n_states:
        raise InputError(f"start state {start} out of range")
    if n_steps < 0:
        raise InputError("n_steps must be non-negative")
    rng = np.random.default_rng(seed)
    states = [start]
    current = start
    for _ in range(n_steps):
        current = chain_step(chain, current, float(rng.random()))
        states.append(current)
    return states


def save_chain(chain: MarkovChain) -> bytes:
    rows = ",".join(
        "[" + ",".join(format_real(v) for v in row) + "]" for row in chain.transition
    )
    labels = ",".join(json.dumps(s) for s in chain.state_labels)
    doc = f'{{"format":"{CHAIN_FORMAT}","states":[{labels}],"transition":[{rows}]}}'
    return doc.encode("utf-8")


def load_chain(data: bytes | str) -> MarkovChain:
    """Parse a chain document; columns must sum to 1 within 1e-6."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHAIN_FORMAT:
        raise FormatError("unknown chain format")
    try:
        labels = [str(s) for s in doc["states"]]
        transition = np.array(doc["transition"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed chain document: {exc}") from exc
    n = len(labels)
    if transition.shape != (n, n):
        raise FormatError(f"transition must be {n}x{n}, got {transition.shape}")
    sums = transition.sum(axis=0)
    if np.abs(sums - 1.0).max() > 1e-6:
        raise FormatError(f"columns must sum to 1 within 1e-6, got {sums}")
    # renormalize drift below the file tolerance so the type invariant holds
    transition = transition / sums
    return MarkovChain(labels, transition)


def write_chain(chain: MarkovChain, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_chain(chain))


def read_chain(path) -> MarkovChain:
    with open(path, "rb") as fh:
        return load_chain(fh.read())
