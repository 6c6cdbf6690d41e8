"""Tic-Tac-Toe: rules engine, scripted player, data harvesting and network play.

Cell encoding is -1 for the black player X, 0 for empty, +1 for the white
player O, row-major (index = 3*row + col).  Training pairs are the winning
player's (board-before, board-after) reactions, both multiplied by the
mover's sign so the learner always acts as +1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import markov, nn
from .errors import FormatError, InputError
from .markov import DiscreteDistribution, EmpiricalConditional
from .nn import Network, TrainConfig

X = -1  # black, typically the human / rule player
O = +1  # white, the network's side

LINES = (
    (0, 1, 2), (3, 4, 5), (6, 7, 8),  # rows
    (0, 3, 6), (1, 4, 7), (2, 5, 8),  # columns
    (0, 4, 8), (2, 4, 6),  # diagonals
)

CORNERS = (0, 2, 6, 8)
EDGES = (1, 3, 5, 7)
CENTER = 4

DATASET_MAGIC = b"MCTT"
DATASET_VERSION = 1
_RECORD_LEN = 18


class GameOutcome(str, Enum):
    X_WINS = "x_wins"
    O_WINS = "o_wins"
    DRAW = "draw"
    ONGOING = "ongoing"


@dataclass
class Move:
    board_before: np.ndarray
    mover: int
    cell: int


@dataclass
class GameRecord:
    moves: list[Move]
    outcome: GameOutcome


def as_board(cells: Sequence[int]) -> np.ndarray:
    board = np.asarray(cells, dtype=np.int64)
    if board.shape != (9,):
        raise InputError("a board has exactly 9 cells")
    if not np.isin(board, (-1, 0, 1)).all():
        raise InputError("cells must be -1, 0 or +1")
    return board


def validate_board(cells: Sequence[int]) -> np.ndarray:
    """Check the reachable-position invariants, returning the board array."""
    board = as_board(cells)
    n_x = int((board == X).sum())
    n_o = int((board == O).sum())
    if abs(n_x - n_o) > 1:
        raise InputError(f"mark counts differ by more than one ({n_x} X vs {n_o} O)")
    if _has_line(board, X) and _has_line(board, O):
        raise InputError("both players cannot have winning lines")
    return board


def _has_line(board: np.ndarray, player: int) -> bool:
    return any(all(board[c] == player for c in line) for line in LINES)


def winner(cells: Sequence[int]) -> GameOutcome:
    """Outcome of a board: a completed line, a full draw, or ongoing."""
    board = validate_board(cells)
    if _has_line(board, X):
        return GameOutcome.X_WINS
    if _has_line(board, O):
        return GameOutcome.O_WINS
    if (board != 0).all():
        return GameOutcome.DRAW
    return GameOutcome.ONGOING


def empty_cells(board: np.ndarray) -> list[int]:
    return [i for i in range(9) if board[i] == 0]


def apply_move(board: np.ndarray, player: int, cell: int) -> np.ndarray:
    if not 0 <= cell < 9 or board[cell] != 0:
        raise InputError(f"cell {cell} is not playable")
    out = board.copy()
    out[cell] = player
    return out


def _completing_cell(board: np.ndarray, player: int) -> int | None:
    """Lowest-index empty cell that completes a line for ``player``."""
    for cell in empty_cells(board):
        for line in LINES:
            if cell in line and all(
                board[c] == player for c in line if c != cell
            ):
                return cell
    return None


def _threat_count(board: np.ndarray, player: int) -> int:
    """Lines holding two of the player's marks plus one empty cell."""
    count = 0
    for line in LINES:
        vals = [board[c] for c in line]
        if vals.count(player) == 2 and vals.count(0) == 1:
            count += 1
    return count


def rule_based_move(board: Sequence[int], player: int, rng) -> int:
    """The scripted player: win, block, fork, otherwise a random empty cell.

    Rules 1-3 resolve ties toward the smallest cell index; only the final
    fallback consumes randomness from ``rng`` (a seed or a Generator).
    """
    board = as_board(board)
    if player not in (X, O):
        raise InputError("player must be -1 or +1")
    if winner(board) is not GameOutcome.ONGOING:
        raise InputError("game is already decided")
    empties = empty_cells(board)
    if not empties:
        raise InputError("board is full")

    cell = _completing_cell(board, player)
    if cell is not None:
        return cell
    cell = _completing_cell(board, -player)
    if cell is not None:
        return cell
    for c in empties:
        if _threat_count(apply_move(board, player, c), player) >= 2:
            return c
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return empties[int(rng.integers(len(empties)))]


def _game_rng(seed: int, game_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(game_index,)))


def canonical_pair(move: Move) -> tuple[np.ndarray, np.ndarray]:
    """Mover-perspective (before, after) vectors: the mover always plays +1."""
    before = (move.mover * move.board_before).astype(np.float64)
    after = before.copy()
    after[move.cell] = 1.0
    return before, after


def simulate_training_games(
    n_games: int, seed: int = 0
) -> tuple[list[GameRecord], list[tuple[np.ndarray, np.ndarray]]]:
    """Rule player vs rule player with alternating first mover.

    Every decided game contributes the winner's canonicalized reactions;
    draws contribute nothing.
    """
    if n_games < 1:
        raise InputError("n_games must be positive")
    records: list[GameRecord] = []
    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    for g in range(n_games):
        rng = _game_rng(seed, g)
        first = X if g % 2 == 0 else O
        record = _play_rules_game(first, rng)
        records.append(record)
        if record.outcome in (GameOutcome.X_WINS, GameOutcome.O_WINS):
            sign = X if record.outcome is GameOutcome.X_WINS else O
            pairs.extend(
                canonical_pair(m) for m in record.moves if m.mover == sign
            )
    return records, pairs


def _play_rules_game(first: int, rng: np.random.Generator) -> GameRecord:
    board = np.zeros(9, dtype=np.int64)
    mover = first
    moves: list[Move] = []
    outcome = GameOutcome.ONGOING
    while outcome is GameOutcome.ONGOING:
        cell = rule_based_move(board, mover, rng)
        moves.append(Move(board.copy(), mover, cell))
        board = apply_move(board, mover, cell)
        outcome = winner(board)
        mover = -mover
    return GameRecord(moves, outcome)


def network_move(net: Network, board: Sequence[int], player: int, r: float) -> int:
    """Decode the network's reaction as an argmax over the empty cells only."""
    board = as_board(board)
    if player not in (X, O):
        raise InputError("player must be -1 or +1")
    if winner(board) is not GameOutcome.ONGOING:
        raise InputError("game is already decided")
    empties = empty_cells(board)
    if not empties:
        raise InputError("no empty cell to play")
    x = markov.augment((player * board).astype(np.float64), r)
    y = nn.forward(net, x)
    return empties[int(np.argmax(y[empties]))]


def play_game(net: Network, first_mover: str, seed: int | None = None) -> GameRecord:
    """One game between the network (playing +1) and the rule player (-1)."""
    if first_mover not in ("net", "rules"):
        raise InputError("first_mover must be 'net' or 'rules'")
    rng = np.random.default_rng(seed)
    board = np.zeros(9, dtype=np.int64)
    mover_is_net = first_mover == "net"
    moves: list[Move] = []
    outcome = GameOutcome.ONGOING
    while outcome is GameOutcome.ONGOING:
        if mover_is_net:
            cell = network_move(net, board, O, float(rng.random()))
            mover = O
        else:
            cell = rule_based_move(board, X, rng)
            mover = X
        moves.append(Move(board.copy(), mover, cell))
        board = apply_move(board, mover, cell)
        outcome = winner(board)
        mover_is_net = not mover_is_net
    return GameRecord(moves, outcome)


def evaluate(net: Network, n_games: int, seed: int = 0) -> tuple[int, int, int]:
    """(wins, draws, losses) for the network over games with alternating starter."""
    if n_games < 1:
        raise InputError("n_games must be positive")
    wins = draws = losses = 0
    for g in range(n_games):
        record = play_game(net, "net" if g % 2 == 0 else "rules", _game_rng(seed, g))
        if record.outcome is GameOutcome.O_WINS:
            wins += 1
        elif record.outcome is GameOutcome.DRAW:
            draws += 1
        else:
            losses += 1
    return wins, draws, losses


def rules_baseline(n_games: int, seed: int = 0) -> tuple[int, int, int]:
    """Rule player in the network's seat: the +1 side's (wins, draws, losses)."""
    if n_games < 1:
        raise InputError("n_games must be positive")
    wins = draws = losses = 0
    for g in range(n_games):
        rng = _game_rng(seed, g)
        record = _play_rules_game(O if g % 2 == 0 else X, rng)
        if record.outcome is GameOutcome.O_WINS:
            wins += 1
        elif record.outcome is GameOutcome.DRAW:
            draws += 1
        else:
            losses += 1
    return wins, draws, losses


def reaction_distribution(
    net: Network, board: Sequence[int], player: int, trials: int, seed: int | None = None
) -> DiscreteDistribution:
    """Frequency of each cell over repeated network moves with fresh r draws."""
    if trials < 1:
        raise InputError("trials must be positive")
    board = as_board(board)
    rng = np.random.default_rng(seed)
    counts = np.zeros(9)
    for _ in range(trials):
        counts[network_move(net, board, player, float(rng.random()))] += 1
    return DiscreteDistribution(counts / trials)


def empirical_reaction(
    emp: EmpiricalConditional, board: Sequence[int], player: int
) -> DiscreteDistribution:
    """Training-data reaction distribution for a board, as per-cell mass."""
    board = as_board(board)
    entry = emp.entry((player * board).astype(np.float64))
    probs = np.zeros(9)
    for outcome, p in zip(entry.outcomes, entry.distribution.probs):
        changed = np.nonzero(outcome != entry.input)[0]
        if changed.size != 1:
            raise InputError("outcome differs from its input in more than one cell")
        probs[int(changed[0])] += p
    return DiscreteDistribution(probs)


# --- training pipeline ------------------------------------------------------

DEFAULT_HIDDEN = (80, 30)


def train_ttt_net(
    pairs: list[tuple[np.ndarray, np.ndarray]],
    hidden: tuple[int, ...] = DEFAULT_HIDDEN,
    train_config: TrainConfig | None = None,
    pairs_per_input: int = 6,
    seed: int = 0,
    weight_by_counts: bool = False,
) -> tuple[Network, list[float], EmpiricalConditional]:
    """Estimate reaction conditionals from winner pairs and fit the network."""
    if not pairs:
        raise InputError("no training pairs")
    emp = markov.estimate_empirical(pairs)
    seeds = np.random.SeedSequence(seed).generate_state(2)
    aug = markov.generate_pairs(
        emp, pairs_per_input, int(seeds[0]), weight_by_counts=weight_by_counts
    )
    data = markov.pairs_to_dataset(aug)
    if train_config is None:
        train_config = TrainConfig(
            learning_rate=0.5, epochs=60, batch_size=64, rng_seed=int(seeds[1])
        )
    net = nn.init_network(nn.layered_specs([10, *hidden, 9]), int(seeds[1]))
    trained, history = nn.train(net, data, train_config)
    return trained, history, emp


def convergence_diagnostic(
    pairs: list[tuple[np.ndarray, np.ndarray]],
    hidden: tuple[int, ...] = DEFAULT_HIDDEN,
    train_config: TrainConfig | None = None,
    pairs_per_input: int = 6,
    seed: int = 0,
) -> tuple[list[float], list[float]]:
    """Epoch-loss curves on identical data with and without the random input.

    The classical run sees the same generated pairs with the r column
    stripped, so any difference in the curves comes from the extra input.
    """
    emp = markov.estimate_empirical(pairs)
    seeds = np.random.SeedSequence(seed).generate_state(2)
    aug = markov.generate_pairs(emp, pairs_per_input, int(seeds[0]))
    data = markov.pairs_to_dataset(aug)
    plain = nn.Dataset(data.inputs[:, 1:], data.targets)
    if train_config is None:
        train_config = TrainConfig(
            learning_rate=0.5, epochs=60, batch_size=64, rng_seed=int(seeds[1])
        )
    mc_net = nn.init_network(nn.layered_specs([10, *hidden, 9]), int(seeds[1]))
    classical = nn.init_network(nn.layered_specs([9, *hidden, 9]), int(seeds[1]))
    _, mc_history = nn.train(mc_net, data, train_config)
    _, classical_history = nn.train(classical, plain, train_config)
    return mc_history, classical_history


# --- dataset files ----------------------------------------------------------


def write_pairs(pairs: list[tuple[np.ndarray, np.ndarray]], path) -> None:
    """Length-prefixed binary record stream of canonicalized (before, after) pairs."""
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<BI", DATASET_VERSION, len(pairs)))
        for before, after in pairs:
            payload = np.concatenate([before, after]).astype(np.int8).tobytes()
            fh.write(struct.pack("<B", _RECORD_LEN))
            fh.write(payload)


def read_pairs(path) -> list[tuple[np.ndarray, np.ndarray]]:
    with open(path, "rb") as fh:
        blob = fh.read()
    header = struct.calcsize("<BI")
    if blob[:4] != DATASET_MAGIC:
        raise FormatError("not a ttt dataset file (bad magic)")
    version, count = struct.unpack("<BI", blob[4 : 4 + header])
    if version != DATASET_VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    pairs = []
    offset = 4 + header
    for _ in range(count):
        if offset >= len(blob):
            raise FormatError("dataset file truncated")
        (rec_len,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        if rec_len != _RECORD_LEN or offset + rec_len > len(blob):
            raise FormatError("dataset record is malformed")
        rec = np.frombuffer(blob[offset : offset + rec_len], dtype=np.int8)
        offset += rec_len
        pairs.append((rec[:9].astype(np.float64), rec[9:].astype(np.float64)))
    if offset != len(blob):
        raise FormatError("trailing bytes after the declared records")
    return pairs
