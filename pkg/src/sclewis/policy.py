"""Sender/receiver action-value tables and the one-shot Q-learning trainer.

The game has no successor state, so learning is the stateless bandit update
``q <- q + alpha * (u - q)`` applied to the sender cell ``(t, s)`` and the
receiver cell ``(s, k_b, r)`` with the shared payoff ``u``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .game import ConfigError, GameConfig, make_rng, sample_rounds

LEARNING = "learning"
FROZEN = "frozen"

# Environment and exploration variates are drawn in fixed-size blocks so the
# stream layout (and hence every result) is independent of ``rounds``' chunking.
_BLOCK = 1 << 16


@dataclass
class SenderPolicy:
    q: np.ndarray
    mode: str = LEARNING

    @classmethod
    def zeros(cls, config: GameConfig) -> "SenderPolicy":
        return cls(np.zeros((config.n_types, config.n_signals)))

    def freeze(self) -> np.ndarray:
        return freeze(self.q)


@dataclass
class ReceiverPolicy:
    q: np.ndarray
    mode: str = LEARNING

    @classmethod
    def zeros(cls, config: GameConfig) -> "ReceiverPolicy":
        return cls(np.zeros((config.n_signals, config.n_knowledge, config.n_responses)))

    def freeze(self) -> np.ndarray:
        return freeze(self.q)


@dataclass(frozen=True)
class EpsilonGreedy:
    e0: float = 1.0
    decay: float = 0.9995
    e_min: float = 0.01

    def __post_init__(self) -> None:
        if not 0.0 <= self.e_min <= self.e0 <= 1.0:
            raise ValueError(f"need 0 <= e_min <= e0 <= 1, got e0={self.e0}, e_min={self.e_min}")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")


@dataclass(frozen=True)
class TrainParams:
    learning_rate: float = 0.05
    exploration: EpsilonGreedy = field(default_factory=EpsilonGreedy)
    rounds: int = 50_000
    curve_window: int = 1_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must lie in (0, 1], got {self.learning_rate}")
        if self.rounds < 1 or self.curve_window < 1:
            raise ValueError("rounds and curve_window must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def replace(self, **changes: Any) -> "TrainParams":
        doc = self.to_dict()
        doc.update(changes)
        return TrainParams.from_dict(doc)

    def to_dict(self) -> dict[str, Any]:
        return {
            "learning_rate": self.learning_rate,
            "exploration": {
                "e0": self.exploration.e0,
                "decay": self.exploration.decay,
                "e_min": self.exploration.e_min,
            },
            "rounds": self.rounds,
            "curve_window": self.curve_window,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "TrainParams":
        exploration = doc.get("exploration", {})
        if isinstance(exploration, EpsilonGreedy):
            greedy = exploration
        else:
            greedy = EpsilonGreedy(**exploration)
        return cls(
            learning_rate=float(doc.get("learning_rate", 0.05)),
            exploration=greedy,
            rounds=int(doc.get("rounds", 50_000)),
            curve_window=int(doc.get("curve_window", 1_000)),
            seed=int(doc.get("seed", 0)),
        )


@dataclass
class TrainResult:
    sender: SenderPolicy
    receiver: ReceiverPolicy
    curve: list[tuple[int, float]]
    final_srsa_estimate: float

    @property
    def sender_map(self) -> np.ndarray:
        return self.sender.freeze()

    @property
    def receiver_map(self) -> np.ndarray:
        return self.receiver.freeze()


def _choose(row: Sequence[float], u: float, v: float, explore_rate: float) -> int:
    # u decides explore vs exploit; v picks uniformly within the chosen set.
    n = len(row)
    if u < explore_rate:
        return min(int(v * n), n - 1)
    best = max(row)
    ties = [i for i, x in enumerate(row) if x == best]
    if len(ties) == 1:
        return ties[0]
    return ties[min(int(v * len(ties)), len(ties) - 1)]


def select_action(q_row: Sequence[float], explore_rate: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice with uniform random tie-breaking among maxima."""
    if len(q_row) == 0:
        raise ValueError("q_row must be nonempty")
    if not 0.0 <= explore_rate <= 1.0:
        raise ValueError(f"explore_rate must lie in [0, 1], got {explore_rate}")
    u, v = rng.random(2)
    return _choose([float(x) for x in q_row], float(u), float(v), explore_rate)


def q_update(q_cell: float, payoff: float, learning_rate: float) -> float:
    if not 0.0 < learning_rate <= 1.0:
        raise ValueError(f"learning_rate must lie in (0, 1], got {learning_rate}")
    return q_cell + learning_rate * (payoff - q_cell)


def freeze(q: np.ndarray) -> np.ndarray:
    """Greedy map over the last axis; ties go to the lowest index."""
    return np.argmax(np.asarray(q), axis=-1).astype(np.int64)


def train(config: GameConfig, params: TrainParams) -> TrainResult:
    rng = make_rng(params.seed)
    alpha = params.learning_rate
    greedy = params.exploration
    n_types, n_signals, n_knowledge = config.n_types, config.n_signals, config.n_knowledge

    q_s = [[0.0] * n_signals for _ in range(n_types)]
    q_r = [[[0.0] * config.n_responses for _ in range(n_knowledge)] for _ in range(n_signals)]
    payoffs = np.empty(params.rounds, dtype=np.int8)
    rate = greedy.e0

    done = 0
    while done < params.rounds:
        size = min(_BLOCK, params.rounds - done)
        _, types, k_bs = sample_rounds(config, rng, size)
        draws = rng.random((4, size))
        us_s, vs_s, us_r, vs_r = (row.tolist() for row in draws)
        types, k_bs = types.tolist(), k_bs.tolist()
        block = [0] * size
        for i in range(size):
            t = types[i]
            row_s = q_s[t]
            s = _choose(row_s, us_s[i], vs_s[i], rate)
            row_r = q_r[s][k_bs[i]]
            r = _choose(row_r, us_r[i], vs_r[i], rate)
            u = 1 if r == t else 0
            row_s[s] += alpha * (u - row_s[s])
            row_r[r] += alpha * (u - row_r[r])
            block[i] = u
            rate = max(greedy.e_min, rate * greedy.decay)
        payoffs[done:done + size] = block
        done += size

    window = params.curve_window
    ends = list(range(window, params.rounds + 1, window))
    if not ends or ends[-1] != params.rounds:
        ends.append(params.rounds)
    csum = np.concatenate([[0], np.cumsum(payoffs, dtype=np.int64)])
    curve = []
    for end in ends:
        start = max(0, end - window)
        curve.append((end, float(csum[end] - csum[start]) / (end - start)))

    return TrainResult(
        sender=SenderPolicy(np.array(q_s), FROZEN),
        receiver=ReceiverPolicy(np.array(q_r), FROZEN),
        curve=curve,
        final_srsa_estimate=curve[-1][1],
    )


def canonical_sender(config: GameConfig) -> np.ndarray:
    """Send each type's rank within its knowledge support, modulo M.

    A type is ranked inside the first support that contains it. For disjoint
    supports no larger than M this is injective on every support.
    """
    psi = np.zeros(config.n_types, dtype=np.int64)
    seen: set[int] = set()
    for k in range(config.n_knowledge):
        rank = 0
        for t in np.flatnonzero(config.type_given_knowledge[k] > 0):
            if int(t) in seen:
                continue
            psi[t] = rank % config.n_signals
            seen.add(int(t))
            rank += 1
    return psi


def canonical_receiver(config: GameConfig, sender: np.ndarray) -> np.ndarray:
    """Decode ``(s, k)`` as if ``k`` were the sender's instance.

    Picks the most probable type in support ``k`` that ``sender`` maps to
    ``s``; falls back to the most probable type overall sending ``s``, then to
    type 0. Ties go to the lowest index.
    """
    sender = np.asarray(sender)
    joint_kt = config.knowledge_prior[:, None] * config.type_given_knowledge
    marginal = joint_kt.sum(axis=0)
    phi = np.zeros((config.n_signals, config.n_knowledge), dtype=np.int64)
    for s in range(config.n_signals):
        senders = sender == s
        for k in range(config.n_knowledge):
            local = np.where(senders & (config.type_given_knowledge[k] > 0), joint_kt[k], -1.0)
            if local.max() >= 0:
                phi[s, k] = int(np.argmax(local))
            elif senders.any():
                phi[s, k] = int(np.argmax(np.where(senders, marginal, -1.0)))
    return phi


def canonical_policies(config: GameConfig) -> tuple[np.ndarray, np.ndarray]:
    sender = canonical_sender(config)
    return sender, canonical_receiver(config, sender)


def check_frozen_shapes(config: GameConfig, sender: np.ndarray, receiver: np.ndarray) -> None:
    if sender.shape != (config.n_types,):
        raise ConfigError(f"sender map has shape {sender.shape}, expected ({config.n_types},)")
    if receiver.shape != (config.n_signals, config.n_knowledge):
        raise ConfigError(
            f"receiver map has shape {receiver.shape}, "
            f"expected ({config.n_signals}, {config.n_knowledge})"
        )
    if sender.size and (sender.min() < 0 or sender.max() >= config.n_signals):
        raise ConfigError("sender map contains out-of-range signal indices")
    if receiver.size and (receiver.min() < 0 or receiver.max() >= config.n_responses):
        raise ConfigError("receiver map contains out-of-range response indices")


def policies_to_dict(sender: np.ndarray, receiver: np.ndarray) -> dict[str, Any]:
    return {
        "sender": [int(s) for s in sender],
        "receiver": [[int(r) for r in row] for row in receiver],
    }


def policies_from_dict(doc: dict[str, Any]) -> tuple[np.ndarray, np.ndarray]:
    try:
        sender = np.asarray(doc["sender"], dtype=np.int64)
        receiver = np.asarray(doc["receiver"], dtype=np.int64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed policy document: {exc}") from exc
    if sender.ndim != 1 or receiver.ndim != 2:
        raise ConfigError("sender must be a flat array and receiver a [signal][knowledge] array")
    return sender, receiver


def policies_from_json(text: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("policy document must be a JSON object")
    return policies_from_dict(doc)
