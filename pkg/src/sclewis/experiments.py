"""Training runs, classic-game demonstrations and epsilon sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .game import GameConfig, uniform_disjoint_config
from .infotheory import (
    LemmaReport,
    check_lemma1,
    fano_bound,
    joint_from_policies,
    sender_matrix,
    srsa,
    verify_lemma2,
)
from .policy import TrainParams, TrainResult, train

OPTIMAL = "optimal"
PARTIAL_POOLING = "partial_pooling"
POOLING = "pooling"

DEFAULT_EPSILONS = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass
class LearningRun:
    config: GameConfig
    params: TrainParams
    result: TrainResult
    exact_srsa: float
    reports: list[LemmaReport]


def lemma_reports(config: GameConfig, sender: np.ndarray, receiver: np.ndarray) -> list[LemmaReport]:
    joint = joint_from_policies(config, sender, receiver)
    return [check_lemma1(config), verify_lemma2(joint, sender, config), fano_bound(joint)]


def run_learning_curve(config: GameConfig, params: TrainParams) -> LearningRun:
    result = train(config, params)
    sender, receiver = result.sender_map, result.receiver_map
    joint = joint_from_policies(config, sender, receiver)
    return LearningRun(
        config=config,
        params=params,
        result=result,
        exact_srsa=srsa(joint),
        reports=lemma_reports(config, sender, receiver),
    )


def classic_config(n: int) -> GameConfig:
    """Lewis game without knowledge bases: one instance, N = M = n, uniform types."""
    if n < 2:
        raise ValueError(f"classic game needs n >= 2, got {n}")
    return uniform_disjoint_config(1, n, 0.0)


def partial_pooling_maps(n: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Randomised partial-pooling equilibrium of the three-type classic game.

    Types 0 and 1 share signal 0; type 2 sends signal 1 or 2 with equal odds.
    Signal 0 is read as type 0 or 1 with equal odds; signals 1 and 2 as type 2.
    """
    if n != 3:
        raise ValueError("the partial pooling example is defined for n = 3")
    sender = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.5, 0.5]])
    receiver = np.zeros((3, 1, 3))
    receiver[0, 0] = [0.5, 0.5, 0.0]
    receiver[1, 0] = [0.0, 0.0, 1.0]
    receiver[2, 0] = [0.0, 0.0, 1.0]
    return sender, receiver


def classify_equilibrium(
    config: GameConfig, sender: np.ndarray, receiver: np.ndarray, tol: float = 1e-12
) -> tuple[str, float]:
    """Label a policy pair by its exact SRSA and whether signals are shared.

    A sender is non-injective when some signal carries positive probability
    under two different types.
    """
    value = srsa(joint_from_policies(config, sender, receiver))
    p_s = sender_matrix(config, sender)
    shared = bool(np.any((p_s > 0).sum(axis=0) > 1))
    if value >= 1.0 - tol:
        return OPTIMAL, value
    if shared and value > 1.0 / config.n_types + tol:
        return PARTIAL_POOLING, value
    return POOLING, value


@dataclass
class ClassicRun:
    n: int
    result: TrainResult
    classification: str
    exact_srsa: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "classification": self.classification,
            "exact_srsa": self.exact_srsa,
            "final_srsa_estimate": self.result.final_srsa_estimate,
            "sender": [int(s) for s in self.result.sender_map],
            "receiver": [[int(r) for r in row] for row in self.result.receiver_map],
        }


def run_classic_game(n: int, params: TrainParams) -> ClassicRun:
    config = classic_config(n)
    result = train(config, params)
    label, value = classify_equilibrium(config, result.sender_map, result.receiver_map)
    return ClassicRun(n=n, result=result, classification=label, exact_srsa=value)


@dataclass(frozen=True)
class SweepConfig:
    l: int = 3  # noqa: E741
    m: int = 3
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    replicates: int = 10
    train_params: TrainParams = field(default_factory=TrainParams)
    master_seed: int = 0

    def __post_init__(self) -> None:
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if not eps:
            raise ValueError("epsilons must be nonempty")
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly increasing")
        if eps[0] < 0.0 or eps[-1] > 1.0:
            raise ValueError("epsilons must lie in [0, 1]")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.l < 1 or self.m < 1:
            raise ValueError("l and m must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict[str, Any]:
        return {
            "l": self.l,
            "m": self.m,
            "epsilons": list(self.epsilons),
            "replicates": self.replicates,
            "train_params": self.train_params.to_dict(),
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SweepConfig":
        return cls(
            l=int(doc.get("l", 3)),
            m=int(doc.get("m", 3)),
            epsilons=tuple(doc.get("epsilons", DEFAULT_EPSILONS)),
            replicates=int(doc.get("replicates", 10)),
            train_params=TrainParams.from_dict(doc.get("train_params", {})),
            master_seed=int(doc.get("master_seed", 0)),
        )


@dataclass(frozen=True)
class SweepRecord:
    epsilon: float
    srsa_mean: float
    srsa_std: float
    replicate_values: tuple[float, ...]
    theoretical_optimum: float

    @property
    def n_replicates(self) -> int:
        return len(self.replicate_values)


@dataclass
class SweepResult:
    records: list[SweepRecord]
    sweep: SweepConfig

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["epsilon", "srsa_mean", "srsa_std", "theoretical_optimum", "n_replicates"])
        for rec in self.records:
            writer.writerow([repr(rec.epsilon), repr(rec.srsa_mean), repr(rec.srsa_std),
                             repr(rec.theoretical_optimum), rec.n_replicates])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {
            "sweep": self.sweep.to_dict(),
            "records": [
                {
                    "epsilon": rec.epsilon,
                    "srsa_mean": rec.srsa_mean,
                    "srsa_std": rec.srsa_std,
                    "theoretical_optimum": rec.theoretical_optimum,
                    "n_replicates": rec.n_replicates,
                    "replicate_values": list(rec.replicate_values),
                }
                for rec in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def child_seed(master_seed: int, epsilon_index: int, replicate: int) -> int:
    """Order-independent 64-bit seed for one (epsilon, replicate) cell."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(epsilon_index, replicate))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def theoretical_optimum(epsilon: float, n_knowledge: int) -> float:
    """SRSA of the canonical pair: Pr(K_A = K_B) = 1 - eps (1 - 1/L)."""
    return 1.0 - epsilon * (1.0 - 1.0 / n_knowledge)


def _replicate(job: tuple[int, int, int, int, float, TrainParams]) -> tuple[int, int, float]:
    i, j, l, m, eps, params = job  # noqa: E741
    result = train(uniform_disjoint_config(l, m, eps), params)
    return i, j, result.final_srsa_estimate


def run_epsilon_sweep(sweep: SweepConfig, jobs: int = 1) -> SweepResult:
    """Train every (epsilon, replicate) cell and aggregate per epsilon.

    ``jobs > 1`` fans replicates out to worker processes; results are
    identical to the serial run because each cell carries its own seed.
    """
    cells = [
        (i, j, sweep.l, sweep.m, eps,
         sweep.train_params.replace(seed=child_seed(sweep.master_seed, i, j)))
        for i, eps in enumerate(sweep.epsilons)
        for j in range(sweep.replicates)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_replicate, cells))
    else:
        outputs = [_replicate(c) for c in cells]

    values: dict[int, dict[int, float]] = {}
    for i, j, v in outputs:
        values.setdefault(i, {})[j] = v

    records = []
    for i, eps in enumerate(sweep.epsilons):
        vals = tuple(values[i][j] for j in range(sweep.replicates))
        mean = math.fsum(vals) / len(vals)
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        records.append(SweepRecord(eps, mean, std, vals, theoretical_optimum(eps, sweep.l)))
    return SweepResult(records=records, sweep=sweep)


def curve_to_csv(curve: Sequence[tuple[int, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["round", "windowed_payoff"])
    for round_index, value in curve:
        writer.writerow([round_index, repr(value)])
    return buf.getvalue()
