"""Gate-appending environment for the unitary compiler agent.

State: the unitary built so far (product of chosen generators).  Action:
one of the six generators, appended in circuit order.  Observation: the
phase-normalized residual current^dag . target flattened into 8 reals, which
makes the optimal policy a function of the observation alone (appending a
right-multiplies the product, so the residual updates to M(a)^dag . residual
independent of the absolute state).

Reward (success scale c, step index n, generator count L of the target):
    r = c * (1 + max(0, 1 - n / (L + 10)))      if distance < tolerance
    r = -distance / max_steps                    otherwise
minus t_cost whenever the chosen action is T or T'.

Episodes end on success or when n reaches max_steps.  The emitted sequence
is the reversed action log, which evaluates exactly to the built unitary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..gates import GATE_IDS, GateSequence, generator_matrix
from ..linalg import fidelity_distance, phase_normalize

__all__ = ["OBSERVATION_SIZE", "CompileEnv", "observation_vector", "step_reward"]

OBSERVATION_SIZE = 8

_GEN = {g: generator_matrix(g) for g in GATE_IDS}
_T_ACTIONS = frozenset({"T", "T'"})


def observation_vector(current: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Phase-normalized residual current^dag target as 8 reals (norm sqrt(2))."""
    residual = phase_normalize(current.conj().T @ target)
    return np.concatenate([residual.real.ravel(), residual.imag.ravel()])


def step_reward(distance_after: float, action_was_t: bool, n: int,
                target_gen_length: int, max_steps: int, tolerance: float,
                success_scale: float, t_cost: float) -> float:
    """Weighted reward: shaped success/failure term minus the T-gate cost."""
    if distance_after < tolerance:
        r = success_scale * (1.0 + max(0.0, 1.0 - n / (target_gen_length + 10.0)))
    else:
        r = -distance_after / max_steps
    if action_was_t:
        r -= t_cost
    return r


@dataclass
class CompileEnv:
    """One compilation episode; owns no shared state, safe to run in parallel."""

    target: np.ndarray
    target_gen_length: int
    max_steps: int = 130
    tolerance: float = 1e-3
    success_scale: float = 10.0
    t_cost: float = 0.0

    current: np.ndarray = field(default=None, repr=False)
    step_index: int = 0
    done: bool = False
    actions: list = field(default_factory=list, repr=False)
    distance: float = field(default=None)

    def __post_init__(self):
        self.reset()

    def reset(self) -> np.ndarray:
        self.current = np.eye(2, dtype=complex)
        self.step_index = 0
        self.done = False
        self.actions = []
        self.distance = fidelity_distance(self.current, self.target)
        return self.observation()

    def observation(self) -> np.ndarray:
        return observation_vector(self.current, self.target)

    def step(self, action: str):
        """Apply one generator; returns (observation, reward, done)."""
        if self.done:
            raise RuntimeError("step() called on a finished episode")
        if action not in _GEN:
            raise ValueError(f"unknown action {action!r}")
        self.current = self.current @ _GEN[action]
        self.actions.append(action)
        self.step_index += 1
        self.distance = fidelity_distance(self.current, self.target)
        reward = step_reward(
            self.distance, action in _T_ACTIONS, self.step_index,
            self.target_gen_length, self.max_steps, self.tolerance,
            self.success_scale, self.t_cost,
        )
        self.done = self.distance < self.tolerance or self.step_index >= self.max_steps
        return self.observation(), reward, self.done

    @property
    def success(self) -> bool:
        return self.distance < self.tolerance

    def sequence(self) -> GateSequence:
        """Actions as a circuit-time sequence whose evaluation is `current`.

        The product grows by right-multiplication, so the first action is the
        leftmost matrix factor, i.e. the last gate in circuit time; hence the
        reversal here.
        """
        return GateSequence(tuple(reversed(self.actions)),
                            cached_unitary=self.current.copy())
