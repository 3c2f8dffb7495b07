"""Game types and the stochastic environment.

A round draws the sender's knowledge instance ``k_a``, a type ``t`` from the
type distribution attached to ``k_a``, and the receiver's instance ``k_b``
through the knowledge channel: ``k_b = k_a`` with probability ``1 - epsilon``,
otherwise ``k_b`` is an independent uniform draw over all ``L`` instances
(which may itself coincide with ``k_a``).

All indices are 0-based.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

MASS_TOL = 1e-12

# PCG64 is the documented bit generator for every stochastic operation.
RNG_ALGORITHM = "numpy.random.PCG64"


class ConfigError(ValueError):
    """Raised when a game configuration or a policy shape is invalid."""


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class GameConfig:
    n_types: int
    n_signals: int
    n_knowledge: int
    knowledge_prior: np.ndarray
    type_given_knowledge: np.ndarray
    epsilon: float = 0.0
    n_responses: int = field(default=-1)

    def __post_init__(self) -> None:
        prior = np.array(self.knowledge_prior, dtype=float)
        pi = np.array(self.type_given_knowledge, dtype=float)
        n_responses = self.n_types if self.n_responses == -1 else self.n_responses
        object.__setattr__(self, "knowledge_prior", prior)
        object.__setattr__(self, "type_given_knowledge", pi)
        object.__setattr__(self, "n_responses", int(n_responses))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        prior.setflags(write=False)
        pi.setflags(write=False)
        self._validate()

    def _validate(self) -> None:
        for name in ("n_types", "n_signals", "n_knowledge"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.n_responses != self.n_types:
            raise ConfigError(
                f"n_responses ({self.n_responses}) must equal n_types ({self.n_types})"
            )
        if self.knowledge_prior.shape != (self.n_knowledge,):
            raise ConfigError(
                f"knowledge_prior has shape {self.knowledge_prior.shape}, "
                f"expected ({self.n_knowledge},)"
            )
        if self.type_given_knowledge.shape != (self.n_knowledge, self.n_types):
            raise ConfigError(
                f"type_given_knowledge has shape {self.type_given_knowledge.shape}, "
                f"expected ({self.n_knowledge}, {self.n_types})"
            )
        if not np.all(np.isfinite(self.knowledge_prior)) or np.any(self.knowledge_prior < 0):
            raise ConfigError("knowledge_prior entries must be finite and non-negative")
        if abs(self.knowledge_prior.sum() - 1.0) > MASS_TOL:
            raise ConfigError(f"knowledge_prior sums to {self.knowledge_prior.sum()!r}, not 1")
        pi = self.type_given_knowledge
        if not np.all(np.isfinite(pi)) or np.any(pi < 0):
            raise ConfigError("type_given_knowledge entries must be finite and non-negative")
        row_sums = pi.sum(axis=1)
        bad = np.flatnonzero(np.abs(row_sums - 1.0) > MASS_TOL)
        if bad.size:
            raise ConfigError(f"type_given_knowledge row {int(bad[0])} sums to {row_sums[bad[0]]!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")

    @property
    def signal_rate(self) -> float:
        """Bits per signal, ``log2(M)``."""
        return float(np.log2(self.n_signals))

    def type_marginal(self) -> np.ndarray:
        return self.knowledge_prior @ self.type_given_knowledge

    def channel_matrix(self) -> np.ndarray:
        """``Pr(k_b | k_a)`` as an L x L row-stochastic matrix."""
        n = self.n_knowledge
        return (1.0 - self.epsilon) * np.eye(n) + self.epsilon / n

    def agreement_probability(self) -> float:
        """``Pr(k_b == k_a) = 1 - eps + eps / L``."""
        return 1.0 - self.epsilon + self.epsilon / self.n_knowledge

    def partition(self) -> "Partition":
        return Partition.from_config(self)

    def with_epsilon(self, epsilon: float) -> "GameConfig":
        return GameConfig(
            n_types=self.n_types,
            n_signals=self.n_signals,
            n_knowledge=self.n_knowledge,
            knowledge_prior=self.knowledge_prior,
            type_given_knowledge=self.type_given_knowledge,
            epsilon=epsilon,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_types": int(self.n_types),
            "n_signals": int(self.n_signals),
            "n_knowledge": int(self.n_knowledge),
            "n_responses": int(self.n_responses),
            "knowledge_prior": [float(x) for x in self.knowledge_prior],
            "type_given_knowledge": [[float(x) for x in row] for row in self.type_given_knowledge],
            "epsilon": float(self.epsilon),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "GameConfig":
        if not isinstance(doc, dict):
            raise ConfigError("game config must be a JSON object")
        required = ("n_types", "n_signals", "n_knowledge", "knowledge_prior",
                    "type_given_knowledge")
        missing = [k for k in required if k not in doc]
        if missing:
            raise ConfigError(f"game config is missing fields: {', '.join(missing)}")
        unknown = set(doc) - set(required) - {"n_responses", "epsilon"}
        if unknown:
            raise ConfigError(f"game config has unknown fields: {', '.join(sorted(unknown))}")
        try:
            return cls(
                n_types=doc["n_types"],
                n_signals=doc["n_signals"],
                n_knowledge=doc["n_knowledge"],
                knowledge_prior=np.asarray(doc["knowledge_prior"], dtype=float),
                type_given_knowledge=np.asarray(doc["type_given_knowledge"], dtype=float),
                epsilon=doc.get("epsilon", 0.0),
                n_responses=doc.get("n_responses", doc["n_types"]),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed game config: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GameConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)


@dataclass(frozen=True)
class Round:
    k_a: int
    k_b: int
    t: int
    s: int
    r: int
    payoff: int

    def __post_init__(self) -> None:
        if self.payoff != int(self.r == self.t):
            raise ValueError("payoff must be 1 exactly when r == t")


@dataclass(frozen=True)
class Partition:
    """Support sets of the type distribution, one per knowledge instance."""

    supports: tuple[frozenset[int], ...]
    n_types: int

    @classmethod
    def from_config(cls, config: GameConfig) -> "Partition":
        supports = tuple(
            frozenset(int(t) for t in np.flatnonzero(row > 0))
            for row in config.type_given_knowledge
        )
        return cls(supports=supports, n_types=config.n_types)

    @property
    def is_disjoint(self) -> bool:
        total = sum(len(s) for s in self.supports)
        return total == len(frozenset().union(*self.supports))

    @property
    def covers(self) -> bool:
        return frozenset().union(*self.supports) == frozenset(range(self.n_types))

    @property
    def assignment(self) -> dict[int, int]:
        """Type index -> knowledge index; only defined for disjoint supports."""
        if not self.is_disjoint:
            raise ValueError("assignment is only defined for disjoint supports")
        return {t: k for k, support in enumerate(self.supports) for t in support}


def payoff(t: int, r: int, n_types: int | None = None) -> int:
    if t < 0 or r < 0 or (n_types is not None and (t >= n_types or r >= n_types)):
        raise ValueError(f"index out of range: t={t}, r={r}, n_types={n_types}")
    return 1 if r == t else 0


def sample_round_inputs(config: GameConfig, rng: np.random.Generator) -> tuple[int, int, int]:
    """Draw one ``(k_a, t, k_b)`` triple."""
    k_a = int(rng.choice(config.n_knowledge, p=config.knowledge_prior))
    t = int(rng.choice(config.n_types, p=config.type_given_knowledge[k_a]))
    if rng.random() < config.epsilon:
        k_b = int(rng.integers(config.n_knowledge))
    else:
        k_b = k_a
    return k_a, t, k_b


def _inverse_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, cdf.shape[-1] - 1)


def sample_rounds(
    config: GameConfig, rng: np.random.Generator, size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised draw of ``size`` independent ``(k_a, t, k_b)`` triples.

    Same law as :func:`sample_round_inputs`, consuming the stream in blocks.
    """
    prior_cdf = np.cumsum(config.knowledge_prior)
    k_a = _inverse_cdf(prior_cdf, rng.random(size))
    type_cdf = np.cumsum(config.type_given_knowledge, axis=1)
    u = rng.random(size)
    t = np.empty(size, dtype=np.int64)
    for k in range(config.n_knowledge):
        sel = k_a == k
        if sel.any():
            t[sel] = _inverse_cdf(type_cdf[k], u[sel])
    noisy = rng.random(size) < config.epsilon
    k_b = np.where(noisy, rng.integers(0, config.n_knowledge, size), k_a)
    return k_a.astype(np.int64), t, k_b.astype(np.int64)


def disjoint_config(
    partition_sizes: Sequence[int],
    n_signals: int,
    epsilon: float = 0.0,
    knowledge_prior: Sequence[float] | None = None,
    type_weights: Sequence[Sequence[float]] | None = None,
) -> GameConfig:
    """Config whose type supports are consecutive disjoint blocks.

    Block ``k`` holds ``partition_sizes[k]`` types. Without ``type_weights``
    each block is uniform; otherwise ``type_weights[k]`` (length
    ``partition_sizes[k]``) is normalised into block ``k``.
    """
    sizes = [int(s) for s in partition_sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise ConfigError("partition sizes must be positive")
    n_knowledge = len(sizes)
    n_types = sum(sizes)
    if knowledge_prior is None:
        prior = np.full(n_knowledge, 1.0 / n_knowledge)
    else:
        prior = np.asarray(knowledge_prior, dtype=float)
        prior = prior / prior.sum()
    pi = np.zeros((n_knowledge, n_types))
    start = 0
    for k, size in enumerate(sizes):
        if type_weights is None:
            pi[k, start:start + size] = 1.0 / size
        else:
            w = np.asarray(type_weights[k], dtype=float)
            if w.shape != (size,):
                raise ConfigError(f"type_weights[{k}] must have length {size}")
            pi[k, start:start + size] = w / w.sum()
        start += size
    return GameConfig(
        n_types=n_types,
        n_signals=n_signals,
        n_knowledge=n_knowledge,
        knowledge_prior=prior,
        type_given_knowledge=pi,
        epsilon=epsilon,
    )


def uniform_disjoint_config(l: int, m: int, epsilon: float = 0.0) -> GameConfig:  # noqa: E741
    """``N = l*m`` types split into ``l`` blocks of ``m``, everything uniform."""
    if l < 1 or m < 1:
        raise ConfigError(f"l and m must be >= 1, got l={l}, m={m}")
    return disjoint_config([m] * l, m, epsilon)
