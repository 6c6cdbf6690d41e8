"""Orientation-changing lattice random walkers driven by a trained network.

A walker in d dimensions has 2d states, one per signed axis direction, and
never repeats its previous direction.  The transition chain is known in
closed form, which makes the trained network checkable against an exact
oracle.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from . import markov, nn
from .errors import InputError
from .markov import DiscreteDistribution, EmpiricalConditional, MarkovChain
from .nn import Network, TrainConfig

AXIS_LABELS = ("+x", "-x", "+y", "-y", "+z", "-z")


@dataclass
class WalkerModel:
    """Chain plus per-state displacement vectors for a 2D or 3D walker."""

    dimension: int
    chain: MarkovChain
    step_vectors: np.ndarray  # (2d, d) signed unit steps

    @property
    def n_states(self) -> int:
        return 2 * self.dimension


@dataclass
class Trajectory:
    points: np.ndarray  # (len(states) + 1, d) integer lattice coordinates


def build_walker_chain(dimension: int) -> WalkerModel:
    """No-repeat walker chain: zero diagonal, uniform 1/(2d-1) elsewhere."""
    if dimension not in (2, 3):
        raise InputError("walker dimension must be 2 or 3")
    n = 2 * dimension
    transition = np.full((n, n), 1.0 / (n - 1))
    np.fill_diagonal(transition, 0.0)
    chain = MarkovChain(list(AXIS_LABELS[:n]), transition)
    steps = np.zeros((n, dimension), dtype=np.int64)
    for axis in range(dimension):
        steps[2 * axis, axis] = 1
        steps[2 * axis + 1, axis] = -1
    return WalkerModel(dimension, chain, steps)


def one_hot(index: int, size: int) -> np.ndarray:
    if not 0 <= index < size:
        raise InputError(f"index {index} out of range for size {size}")
    v = np.zeros(size)
    v[index] = 1.0
    return v


def chain_conditionals(chain: MarkovChain) -> EmpiricalConditional:
    """Exact per-state conditional table: one-hot states to one-hot successors."""
    n = chain.n_states
    rows = []
    for j in range(n):
        outcomes = [(one_hot(i, n), chain.transition[i, j]) for i in range(n)]
        rows.append((one_hot(j, n), outcomes))
    return EmpiricalConditional.from_conditionals(rows)


def simulated_conditionals(chain: MarkovChain, n_steps: int, seed: int) -> EmpiricalConditional:
    """Conditional table estimated from a single simulated chain run."""
    states = markov.simulate_chain(chain, 0, n_steps, seed)
    n = chain.n_states
    pairs = [
        (one_hot(a, n), one_hot(b, n)) for a, b in zip(states, states[1:])
    ]
    return markov.estimate_empirical(pairs)


def default_walker_training(dimension: int) -> tuple[tuple[int, ...], TrainConfig, int]:
    """(hidden widths, train config, pairs per state) tuned per dimension.

    The 3D switch has five interval boundaries per state and needs the
    longer schedule to pin them tightly enough for 20k-step statistics.
    """
    if dimension == 2:
        return (48, 24), TrainConfig(learning_rate=1.5, epochs=1200, batch_size=128), 2000
    return (64, 32), TrainConfig(learning_rate=1.2, epochs=3000, batch_size=160), 2500


def train_walker_net(
    model: WalkerModel,
    hidden: tuple[int, ...] | None = None,
    train_config: TrainConfig | None = None,
    pairs_per_state: int | None = None,
    seed: int = 0,
    from_simulation: int | None = None,
) -> tuple[Network, list[float]]:
    """Train a network that maps (r, one-hot state) to the successor one-hot.

    The conditional table comes from the exact chain columns, or from
    ``from_simulation`` oracle steps when given.  Returns the network and
    its loss history.
    """
    default_hidden, default_cfg, default_pairs = default_walker_training(model.dimension)
    if hidden is None:
        hidden = default_hidden
    if pairs_per_state is None:
        pairs_per_state = default_pairs

    seeds = np.random.SeedSequence(seed).generate_state(3)
    if from_simulation is None:
        emp = chain_conditionals(model.chain)
    else:
        emp = simulated_conditionals(model.chain, from_simulation, int(seeds[0]))
    pairs = markov.generate_pairs(emp, pairs_per_state, int(seeds[1]))
    data = markov.pairs_to_dataset(pairs)

    n = model.n_states
    if train_config is None:
        train_config = TrainConfig(
            learning_rate=default_cfg.learning_rate,
            epochs=default_cfg.epochs,
            batch_size=default_cfg.batch_size,
            rng_seed=int(seeds[2]),
        )
    net = nn.init_network(nn.layered_specs([n + 1, *hidden, n]), int(seeds[2]))
    return nn.train(net, data, train_config)


def run_net_walk(net: Network, start_state: int, n_steps: int, seed: int | None = None) -> list[int]:
    """Drive a walk by feeding the decoded output back as the next input state.

    Every step draws a fresh uniform r; the raw output is re-binarized to a
    one-hot before the next iteration.
    """
    n = net.out_dim
    if net.in_dim != n + 1:
        raise InputError(f"network dims {net.in_dim}->{n} are not an augmented walker net")
    if not 0 <= start_state < n:
        raise InputError(f"start state {start_state} out of range")
    if n_steps < 0:
        raise InputError("n_steps must be non-negative")
    rng = np.random.default_rng(seed)
    states = [start_state]
    current = start_state
    for _ in range(n_steps):
        r = float(rng.random())
        y = nn.forward(net, markov.augment(one_hot(current, n), r))
        current = nn.argmax_decode(y)
        states.append(current)
    return states


def states_to_trajectory(states: list[int], model: WalkerModel) -> Trajectory:
    """Cumulative displacement from the origin; every state contributes a step."""
    points = np.zeros((len(states) + 1, model.dimension), dtype=np.int64)
    pos = np.zeros(model.dimension, dtype=np.int64)
    for i, s in enumerate(states):
        if not 0 <= s < model.n_states:
            raise InputError(f"state {s} out of range")
        pos = pos + model.step_vectors[s]
        points[i + 1] = pos
    return Trajectory(points)


def visit_frequencies(states: list[int], n_states: int | None = None) -> DiscreteDistribution:
    """Normalized visit counts over the state set."""
    if not states:
        raise InputError("state sequence is empty")
    if n_states is None:
        n_states = max(states) + 1
    counts = np.bincount(np.asarray(states), minlength=n_states)
    if len(counts) > n_states:
        raise InputError("state index exceeds n_states")
    return DiscreteDistribution(counts / counts.sum())


def empirical_transition(states: list[int], n_states: int | None = None) -> np.ndarray:
    """Column-normalized bigram counts; unvisited columns stay all-zero."""
    if len(states) < 2:
        raise InputError("need at least one transition")
    if n_states is None:
        n_states = max(states) + 1
    counts = np.zeros((n_states, n_states))
    for a, b in zip(states, states[1:]):
        counts[b, a] += 1
    col_sums = counts.sum(axis=0)
    empty = np.nonzero(col_sums == 0)[0]
    if empty.size:
        warnings.warn(f"states never left from: {empty.tolist()}", stacklevel=2)
    with np.errstate(invalid="ignore"):
        out = np.where(col_sums > 0, counts / np.where(col_sums > 0, col_sums, 1), 0.0)
    return out


def write_trajectory_csv(traj: Trajectory, path) -> None:
    dim = traj.points.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "x", "y"] + (["z"] if dim == 3 else []))
        for i, p in enumerate(traj.points):
            writer.writerow([i, *map(int, p)])


def write_frequency_csv(states: list[int], model: WalkerModel, path) -> None:
    freqs = visit_frequencies(states, model.n_states)
    counts = np.bincount(np.asarray(states), minlength=model.n_states)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state", "label", "visits", "frequency"])
        for s in range(model.n_states):
            writer.writerow(
                [s, model.chain.state_labels[s], int(counts[s]), format_freq(freqs.probs[s])]
            )


def format_freq(v: float) -> str:
    return format(float(v), ".6f")
