"""Exact joint distribution over (K_A, K_B, T, S, R) and the lemma checks.

Every quantity here comes from dense enumeration of the factorisation

    Pr(k_a) Pr(k_b | k_a) Pr(t | k_a) Pr(s | t) Pr(r | s, k_b)

so nothing is sampled. Information is measured in bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .game import MASS_TOL, ConfigError, GameConfig

VARIABLES = ("K_A", "K_B", "T", "S", "R")
_AXIS = {name: axis for axis, name in enumerate(VARIABLES)}

IDENTITY_TOL = 1e-10


def _axes(names: Iterable[str]) -> tuple[int, ...]:
    if isinstance(names, str):
        names = (names,)
    axes = []
    for name in names:
        key = name.upper()
        if key not in _AXIS:
            raise ValueError(f"unknown variable {name!r}; expected one of {VARIABLES}")
        axes.append(_AXIS[key])
    return tuple(sorted(set(axes)))


def _entropy_of(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


@dataclass(frozen=True, eq=False)
class JointDistribution:
    table: np.ndarray

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=float)
        if table.ndim != 5:
            raise ConfigError(f"joint table must have 5 axes, got {table.ndim}")
        if np.any(table < 0) or abs(table.sum() - 1.0) > MASS_TOL:
            raise ConfigError("joint table must be non-negative with total mass 1")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def dims(self) -> dict[str, int]:
        return dict(zip(VARIABLES, self.table.shape))

    def marginal(self, names: Iterable[str]) -> np.ndarray:
        keep = _axes(names)
        drop = tuple(a for a in range(5) if a not in keep)
        return self.table.sum(axis=drop)

    def entropy(self, names: Iterable[str]) -> float:
        return entropy(self, names)

    def conditional_entropy(self, x: Iterable[str], given: Iterable[str]) -> float:
        """H(X | Z); outcomes of Z with zero mass contribute nothing."""
        xs, zs = _axes(x), _axes(given)
        if not zs:
            return entropy(self, _names(xs))
        return entropy(self, _names(set(xs) | set(zs))) - entropy(self, _names(zs))

    def mutual_information(self, x: Iterable[str], y: Iterable[str]) -> float:
        return conditional_mutual_information(self, x, y, ())


def _names(axes: Iterable[int]) -> tuple[str, ...]:
    return tuple(VARIABLES[a] for a in sorted(axes))


def entropy(joint: JointDistribution, names: Iterable[str]) -> float:
    """Shannon entropy in bits of the marginal on ``names``."""
    axes = _axes(names)
    if not axes:
        raise ValueError("entropy needs at least one variable")
    return _entropy_of(joint.marginal(_names(axes)).ravel())


def conditional_mutual_information(
    joint: JointDistribution,
    x: Iterable[str],
    y: Iterable[str],
    z: Iterable[str] = (),
) -> float:
    """I(X; Y | Z) = H(X, Z) + H(Y, Z) - H(X, Y, Z) - H(Z).

    Round-off below ``-1e-12`` is an error; anything above is clamped at 0.
    """
    xs, ys, zs = set(_axes(x)), set(_axes(y)), set(_axes(z))
    if not xs or not ys:
        raise ValueError("x and y must be nonempty")
    if xs & ys or xs & zs or ys & zs:
        raise ValueError("x, y and z must be pairwise disjoint")

    def h(axes: set[int]) -> float:
        return entropy(joint, _names(axes)) if axes else 0.0

    value = h(xs | zs) + h(ys | zs) - h(xs | ys | zs) - h(zs)
    if value < -MASS_TOL:
        raise ArithmeticError(f"conditional mutual information is negative: {value}")
    return max(value, 0.0)


def sender_matrix(config: GameConfig, sender: np.ndarray) -> np.ndarray:
    """Pr(s | t) as an N x M matrix from a deterministic or stochastic map."""
    sender = np.asarray(sender)
    n, m = config.n_types, config.n_signals
    if sender.ndim == 1:
        if sender.shape != (n,):
            raise ConfigError(f"sender map has shape {sender.shape}, expected ({n},)")
        if not np.issubdtype(sender.dtype, np.integer):
            raise ConfigError("deterministic sender map must hold integer signals")
        if sender.min() < 0 or sender.max() >= m:
            raise ConfigError("sender map contains out-of-range signal indices")
        out = np.zeros((n, m))
        out[np.arange(n), sender] = 1.0
        return out
    if sender.shape != (n, m):
        raise ConfigError(f"stochastic sender has shape {sender.shape}, expected ({n}, {m})")
    sender = sender.astype(float)
    if np.any(sender < 0) or np.any(np.abs(sender.sum(axis=1) - 1.0) > MASS_TOL):
        raise ConfigError("stochastic sender rows must be probability vectors")
    return sender


def receiver_tensor(config: GameConfig, receiver: np.ndarray) -> np.ndarray:
    """Pr(r | s, k_b) as an M x L x N tensor."""
    receiver = np.asarray(receiver)
    m, l, n = config.n_signals, config.n_knowledge, config.n_responses
    if receiver.ndim == 2:
        if receiver.shape != (m, l):
            raise ConfigError(f"receiver map has shape {receiver.shape}, expected ({m}, {l})")
        if not np.issubdtype(receiver.dtype, np.integer):
            raise ConfigError("deterministic receiver map must hold integer responses")
        if receiver.min() < 0 or receiver.max() >= n:
            raise ConfigError("receiver map contains out-of-range response indices")
        out = np.zeros((m, l, n))
        s_idx, k_idx = np.indices((m, l))
        out[s_idx, k_idx, receiver] = 1.0
        return out
    if receiver.shape != (m, l, n):
        raise ConfigError(f"stochastic receiver has shape {receiver.shape}, expected ({m}, {l}, {n})")
    receiver = receiver.astype(float)
    if np.any(receiver < 0) or np.any(np.abs(receiver.sum(axis=2) - 1.0) > MASS_TOL):
        raise ConfigError("stochastic receiver rows must be probability vectors")
    return receiver


def joint_from_policies(
    config: GameConfig, sender: np.ndarray, receiver: np.ndarray
) -> JointDistribution:
    """Enumerate the five-way joint induced by a config and a policy pair.

    ``sender`` is either a length-N signal map or an N x M stochastic matrix;
    ``receiver`` is either an M x L response map or an M x L x N tensor.
    """
    p_s = sender_matrix(config, sender)
    p_r = receiver_tensor(config, receiver)
    table = np.einsum(
        "a,ab,at,ts,sbr->abtsr",
        config.knowledge_prior,
        config.channel_matrix(),
        config.type_given_knowledge,
        p_s,
        p_r,
    )
    return JointDistribution(table)


def srsa(joint: JointDistribution) -> float:
    """Pr(T = R)."""
    tr = joint.marginal(("T", "R"))
    return float(np.trace(tr))


@dataclass
class LemmaReport:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    tolerance: float
    vacuous: bool = False
    applicable: bool = True
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """True unless the lemma applies and is violated."""
        return self.satisfied or not self.applicable

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "lhs": _json_float(self.lhs),
            "rhs": _json_float(self.rhs),
            "satisfied": bool(self.satisfied),
            "tolerance": self.tolerance,
            "vacuous": bool(self.vacuous),
            "applicable": bool(self.applicable),
            "details": self.details,
        }


def _json_float(x: float) -> float | str:
    # JSON has no infinities
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def check_lemma1(config: GameConfig) -> LemmaReport:
    """Counting condition L * M >= N needed for perfect agreement."""
    lhs = config.n_knowledge * config.n_signals
    rhs = config.n_types
    return LemmaReport("lemma1", float(lhs), float(rhs), lhs >= rhs, 0.0)


def is_error_free_encoding(config: GameConfig, sender: np.ndarray) -> bool:
    """Whether ``(K_A, S)`` pins down ``T``: the map is injective on every support."""
    sender = np.asarray(sender)
    if sender.ndim != 1:
        raise ValueError("error-free encoding is defined for deterministic senders")
    for k in range(config.n_knowledge):
        if config.knowledge_prior[k] <= 0:
            continue
        signals = sender[config.type_given_knowledge[k] > 0]
        if len(np.unique(signals)) != len(signals):
            return False
    return True


def verify_lemma2(
    joint: JointDistribution, sender: np.ndarray, config: GameConfig
) -> LemmaReport:
    """Check I(T; R) = H(S) + I(K_A; K_B | S).

    The identity is derived with T paired one-to-one with (K_A, S) and the
    decoded type R paired one-to-one with (K_B, S). The first pairing needs an
    error-free encoder and a type that determines its knowledge instance; the
    second needs a receiver that is injective on the reachable (S, K_B)
    pairs. When either pairing fails the report is marked not applicable.
    """
    lhs = joint.mutual_information(("T",), ("R",))
    rhs = entropy(joint, ("S",)) + conditional_mutual_information(joint, ("K_A",), ("K_B",), ("S",))
    error_free = is_error_free_encoding(config, sender)
    k_a_from_t = joint.conditional_entropy(("K_A",), ("T",))
    decoder_ambiguity = joint.conditional_entropy(("K_B", "S"), ("R",))
    applicable = (
        error_free and k_a_from_t <= IDENTITY_TOL and decoder_ambiguity <= IDENTITY_TOL
    )
    return LemmaReport(
        "lemma2",
        lhs,
        rhs,
        abs(lhs - rhs) <= IDENTITY_TOL,
        IDENTITY_TOL,
        applicable=applicable,
        details={
            "error_free_encoding": error_free,
            "H(K_A|T)": k_a_from_t,
            "H(K_B,S|R)": decoder_ambiguity,
        },
    )


def fano_bound(joint: JointDistribution) -> LemmaReport:
    """SRSA <= 1 - (H(K_A | K_B, S) - 1) / log2(N - 1).

    The bound rests on K_A being a function of T, so it is marked not
    applicable when H(K_A | T) > 0 (overlapping supports). It is vacuous when
    N = 2 or when the right-hand side is at least 1.
    """
    n = joint.table.shape[_AXIS["T"]]
    lhs = srsa(joint)
    residual = joint.conditional_entropy(("K_A",), ("K_B", "S"))
    details: dict[str, Any] = {"H(K_A|K_B,S)": residual}
    if n < 2:
        return LemmaReport("lemma3", lhs, 1.0, lhs <= 1.0 + MASS_TOL, MASS_TOL,
                           vacuous=True, applicable=False, details=details)
    if n == 2:
        rhs = 1.0
    else:
        rhs = 1.0 - (residual - 1.0) / math.log2(n - 1)
    k_a_from_t = joint.conditional_entropy(("K_A",), ("T",))
    details["H(K_A|T)"] = k_a_from_t
    return LemmaReport(
        "lemma3",
        lhs,
        rhs,
        lhs <= rhs + MASS_TOL,
        MASS_TOL,
        vacuous=n == 2 or rhs >= 1.0,
        applicable=k_a_from_t <= IDENTITY_TOL,
        details=details,
    )


@dataclass(frozen=True)
class RateReport:
    r_a: float
    h_t: float
    h_t_given_ka: float
    a1_holds: bool
    encodable: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "r_a": self.r_a,
            "h_t": self.h_t,
            "h_t_given_ka": self.h_t_given_ka,
            "a1_holds": self.a1_holds,
            "encodable": self.encodable,
        }


def rate_conditions(config: GameConfig) -> RateReport:
    r_a = config.signal_rate
    h_t = _entropy_of(config.type_marginal())
    h_t_given_ka = sum(
        float(p) * _entropy_of(row)
        for p, row in zip(config.knowledge_prior, config.type_given_knowledge)
        if p > 0
    )
    # exact-boundary comparisons (e.g. log2 3 vs log2 3) must not flip on round-off
    return RateReport(
        r_a=r_a,
        h_t=h_t,
        h_t_given_ka=h_t_given_ka,
        a1_holds=r_a < h_t - IDENTITY_TOL,
        encodable=r_a >= h_t_given_ka - IDENTITY_TOL,
    )

