"""Majorana braid + T generator set and gate-sequence evaluation.

Six generators: B12 = diag(1, i), B23 = (1/sqrt2)[[1, -i], [-i, 1]], the
non-topological T = diag(1, exp(i pi/4)), and their inverses.  B34 coincides
with B12 and is not exposed separately.

Order convention, fixed project-wide: sequences are written in circuit time
(first gate acts first), so evaluate([g1, ..., gn]) = M(gn) ... M(g1).

Text encoding: whitespace-separated tokens "B12 B12' B23 B23' T T'" with the
apostrophe marking an inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

__all__ = [
    "GATE_IDS",
    "GateSequence",
    "generator_matrix",
    "inverse_id",
    "evaluate",
    "random_sequence",
    "sequence_to_tokens",
    "sequence_from_tokens",
    "t_count",
    "bloch_closure",
]

B12 = "B12"
B12_INV = "B12'"
B23 = "B23"
B23_INV = "B23'"
T = "T"
T_INV = "T'"

GATE_IDS = (B12, B12_INV, B23, B23_INV, T, T_INV)

_B12 = np.array([[1, 0], [0, 1j]], dtype=complex)
_B23 = np.array([[1, -1j], [-1j, 1]], dtype=complex) / np.sqrt(2)
_T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)

_MATRICES = {
    B12: _B12,
    B12_INV: _B12.conj().T,
    B23: _B23,
    B23_INV: _B23.conj().T,
    T: _T,
    T_INV: _T.conj().T,
}

_INVERSES = {B12: B12_INV, B12_INV: B12, B23: B23_INV, B23_INV: B23, T: T_INV, T_INV: T}

_T_GATES = frozenset({T, T_INV})


def generator_matrix(gate_id: str) -> np.ndarray:
    """2x2 unitary of one generator."""
    try:
        return _MATRICES[gate_id].copy()
    except KeyError:
        raise ValueError(f"unknown gate id {gate_id!r}; expected one of {GATE_IDS}")


def inverse_id(gate_id: str) -> str:
    try:
        return _INVERSES[gate_id]
    except KeyError:
        raise ValueError(f"unknown gate id {gate_id!r}")


@dataclass
class GateSequence:
    """Ordered gate ids in circuit time, with a cached product unitary."""

    ids: tuple
    cached_unitary: Optional[np.ndarray] = field(default=None, repr=False)

    def __init__(self, ids: Iterable[str] = (), cached_unitary=None):
        ids = tuple(ids)
        for g in ids:
            if g not in _MATRICES:
                raise ValueError(f"unknown gate id {g!r}")
        self.ids = ids
        self.cached_unitary = cached_unitary

    def __len__(self):
        return len(self.ids)

    def inverse(self) -> "GateSequence":
        return GateSequence(tuple(inverse_id(g) for g in reversed(self.ids)))

    def __add__(self, other: "GateSequence") -> "GateSequence":
        return GateSequence(self.ids + other.ids)


def evaluate(seq: GateSequence) -> np.ndarray:
    """Product M(gn) ... M(g1) of the sequence; identity when empty.  Cached."""
    if seq.cached_unitary is not None:
        return seq.cached_unitary
    u = np.eye(2, dtype=complex)
    for g in seq.ids:
        u = _MATRICES[g] @ u
    seq.cached_unitary = u
    return u


def random_sequence(length: int, rng) -> GateSequence:
    """Uniform i.i.d. draw over the six generators; no cancellation pruning.

    Accepts a seed or a numpy Generator.  Adjacent inverse pairs are kept on
    purpose (benchmark datasets are raw random sequences), so the effective
    target length can be below the nominal one.
    """
    if length < 0:
        raise ValueError("length must be nonnegative")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    picks = rng.integers(0, len(GATE_IDS), size=length)
    return GateSequence(tuple(GATE_IDS[i] for i in picks))


def sequence_to_tokens(seq: GateSequence) -> str:
    return " ".join(seq.ids)


def sequence_from_tokens(text: str) -> GateSequence:
    return GateSequence(tuple(text.split()))


def t_count(seq: GateSequence) -> int:
    """Number of T or T' gates in the sequence."""
    return sum(1 for g in seq.ids if g in _T_GATES)


def bloch_closure(generators: Iterable[str], budget: int = 2000):
    """Closure of the given generators as Bloch rotations, up to `budget`.

    Returns (elements, closed): the distinct SO(3) images found (keyed by
    rounded matrices, which separates the discrete rotation group cleanly)
    and whether the closure reached a fixed point within the budget.
    {B12, B23} closes at the 24-element rotation Clifford group, while adding
    T never closes.
    """
    from .linalg import su2_to_bloch

    gens = [su2_to_bloch(generator_matrix(g)) for g in generators]

    def key(r):
        return tuple(np.round(r, 9).ravel())

    seen = {key(np.eye(3)): np.eye(3)}
    frontier = [np.eye(3)]
    while frontier:
        nxt = []
        for r in frontier:
            for g in gens:
                cand = g @ r
                k = key(cand)
                if k not in seen:
                    if len(seen) >= budget:
                        return list(seen.values()), False
                    seen[k] = cand
                    nxt.append(cand)
        frontier = nxt
    return list(seen.values()), True
