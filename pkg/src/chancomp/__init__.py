"""chancomp: single-qubit channel decomposition and braid+T gate compilation.

Decomposes CPTP channels into epsilon-parametrized elementary channels plus
one orthogonal Bloch map, and compiles unitaries into Majorana braid + T
sequences with either a Solovay-Kitaev baseline or a PPO-trained agent with
weighted T-gate cost.
"""

__version__ = "0.1.0"

from .channel import AffineChannel, channel_distance, compose, from_kraus, is_cptp
from .decomposer import (
    build_elementary_set,
    decompose_channel,
    length_bound,
    replay_plan,
    t_count_lower_bound,
)
from .gates import GateSequence, evaluate, generator_matrix, random_sequence
from .linalg import bloch_to_su2, fidelity_distance, phase_normalize, su2_to_bloch
