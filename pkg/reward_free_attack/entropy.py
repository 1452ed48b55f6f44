"""
Shannon and Renyi entropy of action distributions, and the victim action tables.

All logarithms are natural (nats). Distributions range over the legal
actions of a state only.

:copyright: (c) 2026 by the reward-free-attack authors.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from scipy.special import xlogy

from reward_free_attack.errors import RewardFreeAttackError

_LOG = logging.getLogger(__name__)

ProbVector = npt.NDArray[np.float64]

_SUM_TOLERANCE = 1e-9


class EntropyError(RewardFreeAttackError):
    """Invalid distribution, order or table access."""


@dataclass(frozen=True)
class EntropyKind:
    """Shannon entropy (``order`` None) or Renyi entropy of a positive order != 1."""

    order: float | None = None

    @classmethod
    def shannon(cls) -> "EntropyKind":
        return cls(None)

    @classmethod
    def renyi(cls, order: float) -> "EntropyKind":
        _check_order(order)
        return cls(order)

    @classmethod
    def of_order(cls, order: float) -> "EntropyKind":
        """Renyi of ``order``, or Shannon for the order-1 limit."""
        return cls.shannon() if order == 1.0 else cls.renyi(order)

    def __call__(self, p: Sequence[float] | ProbVector) -> float:
        if self.order is None:
            return shannon_entropy(p)
        return renyi_entropy(p, self.order)

    def __str__(self) -> str:
        return "shannon" if self.order is None else f"renyi({self.order:g})"


def as_prob_vector(p: Sequence[float] | ProbVector) -> ProbVector:
    """Validate and convert to a float array."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise EntropyError("A distribution needs at least one entry", "invalid-distribution")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise EntropyError(f"Negative or non-finite probability in {arr.tolist()}", "invalid-distribution")
    total = float(arr.sum())
    if abs(total - 1.0) > _SUM_TOLERANCE:
        raise EntropyError(f"Probabilities sum to {total!r}, not 1", "invalid-distribution")
    return arr


def _check_order(order: float) -> None:
    if not order > 0.0 or order == 1.0 or not math.isfinite(order):
        raise EntropyError(
            f"Renyi order must be positive and != 1 (use Shannon for the limit), got {order!r}",
            "invalid-order",
        )


def shannon_entropy(p: Sequence[float] | ProbVector) -> float:
    """-sum p_i ln p_i with 0 ln 0 := 0."""
    arr = as_prob_vector(p)
    return max(0.0, float(-xlogy(arr, arr).sum()))


def renyi_entropy(p: Sequence[float] | ProbVector, order: float) -> float:
    """(1 / (1 - order)) ln sum p_i^order."""
    _check_order(order)
    arr = as_prob_vector(p)
    value = math.log(float(np.power(arr, order).sum())) / (1.0 - order)
    return max(0.0, value)


def empirical_distribution(counts: Sequence[int]) -> ProbVector:
    """Normalize action counts into a distribution."""
    arr = np.asarray(counts, dtype=np.float64)
    if arr.ndim != 1 or np.any(arr < 0):
        raise EntropyError(f"Counts must be a nonnegative vector, got {list(counts)}", "invalid-distribution")
    total = arr.sum()
    if total <= 0:
        raise EntropyError("No observations in counts", "empty-counts")
    return arr / total


@dataclass
class ActionCountTable:
    """Per-state victim action counts, keyed by the state the victim faced.

    Slot ``i`` of a vector counts the i-th legal action of that state.
    """

    counts: dict[bytes, list[int]] = field(default_factory=dict)
    total_observations: int = 0

    def __contains__(self, key: bytes) -> bool:
        return key in self.counts

    def __len__(self) -> int:
        return len(self.counts)

    def observations(self, key: bytes) -> int:
        return sum(self.counts.get(key, ()))

    def items(self) -> Iterator[tuple[bytes, list[int]]]:
        for key in sorted(self.counts):
            yield key, self.counts[key]

    def merge(self, other: "ActionCountTable") -> "ActionCountTable":
        """Add another table's counts entry-wise (in place); returns self."""
        for key, vector in other.items():
            mine = self.counts.get(key)
            if mine is None:
                self.counts[key] = list(vector)
            elif len(mine) != len(vector):
                raise EntropyError(
                    f"Cannot merge counts of arity {len(vector)} into {len(mine)} for {key.hex()}",
                    "action-arity-mismatch",
                )
            else:
                for i, c in enumerate(vector):
                    mine[i] += c
        self.total_observations += other.total_observations
        return self


@dataclass
class EntropyTable:
    """Per-state entropy values in nats."""

    entropies: dict[bytes, float] = field(default_factory=dict)

    def __getitem__(self, key: bytes) -> float:
        return self.entropies[key]

    def __setitem__(self, key: bytes, value: float) -> None:
        self.entropies[key] = value

    def __contains__(self, key: bytes) -> bool:
        return key in self.entropies

    def __len__(self) -> int:
        return len(self.entropies)

    def keys(self) -> Iterable[bytes]:
        return self.entropies.keys()

    def items(self) -> Iterator[tuple[bytes, float]]:
        for key in sorted(self.entropies):
            yield key, self.entropies[key]


def record_victim_action(table: ActionCountTable, key: bytes, action_slot: int, n_actions: int) -> ActionCountTable:
    """Count one victim action at ``key``; creates the zero vector on first visit."""
    if n_actions < 1 or not 0 <= action_slot < n_actions:
        raise EntropyError(f"Action slot {action_slot} outside [0, {n_actions})", "slot-out-of-range")
    vector = table.counts.get(key)
    if vector is None:
        vector = [0] * n_actions
        table.counts[key] = vector
    elif len(vector) != n_actions:
        raise EntropyError(
            f"State {key.hex()} has {len(vector)} action slots, got n_actions={n_actions}",
            "action-arity-mismatch",
        )
    vector[action_slot] += 1
    table.total_observations += 1
    return table


def table_entropy(table: ActionCountTable, key: bytes, kind: EntropyKind) -> float:
    """Entropy of the empirical victim distribution at ``key``."""
    vector = table.counts.get(key)
    if vector is None or not any(vector):
        raise EntropyError(f"No victim observations at {key.hex()}", "unknown-state")
    return kind(empirical_distribution(vector))


def entropy_table_distance(h0: EntropyTable, h1: EntropyTable) -> float:
    """Sum of absolute per-state differences of two tables over the same states."""
    if h0.keys() != h1.keys():
        raise EntropyError(
            f"Entropy tables cover different states ({len(h0)} vs {len(h1)} keys)",
            "key-set-mismatch",
        )
    return math.fsum(abs(h0[k] - h1[k]) for k in h0.keys())
