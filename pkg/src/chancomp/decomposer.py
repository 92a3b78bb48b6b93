"""Constructive decomposition of a channel into elementary channels + one Bloch map.

Pipeline: factorize the target's distortion (real SVD), greedily expand the
frame magnitudes and shifts in base (1 - delta) with delta = epsilon / 7,
assemble the corresponding sequence over the 14-member elementary set, and
fold every rotation / sign correction into a single final orthogonal map.
The plan's error is certified by measurement: the composed sequence is
replayed and its channel distance to the target recorded.

The final map is chosen by exhaustive search over the eight diagonal sign
dressings of post . signs . pre; for targets whose right singular frame is
the coordinate frame this reproduces the exact orthogonal factor and the
certified error stays below (1 + sqrt(3))/2 * delta, comfortably inside the
epsilon budget.  Targets with a nontrivial right singular frame are outside
what a diagonal stage plus one output map can express; their plans still
replay as well as the structure allows and carry an honest certified_error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    AffineChannel,
    channel_distance,
    compose,
    factorize,
    identity_channel,
    is_cptp,
)

__all__ = [
    "ElementarySet",
    "DigitPlan",
    "ChannelPlan",
    "build_elementary_set",
    "greedy_bits",
    "digit_expand",
    "assemble_step1",
    "decompose_channel",
    "replay_plan",
    "plan_record_lines",
    "length_bound",
    "t_count_lower_bound",
]

# Shift patterns (x, y, z in units of delta) for ids 1..14; ids 1-8 contract
# all axes by (1-delta), 9-12 contract y and z, 13-14 contract z only.
_SHIFT_BITS = {
    1: (0, 0, 0),
    2: (1, 0, 0),
    3: (0, 1, 0),
    4: (0, 0, 1),
    5: (1, 1, 0),
    6: (1, 0, 1),
    7: (0, 1, 1),
    8: (1, 1, 1),
    9: (0, 0, 0),
    10: (0, 1, 0),
    11: (0, 0, 1),
    12: (0, 1, 1),
    13: (0, 0, 0),
    14: (0, 0, 1),
}

_FULL_BY_BITS = {bits: i for i, bits in _SHIFT_BITS.items() if i <= 8}
_MID_BY_BITS = {bits[1:]: i for i, bits in _SHIFT_BITS.items() if 9 <= i <= 12}
_TAIL_BY_BITS = {bits[2]: i for i, bits in _SHIFT_BITS.items() if i >= 13}


@dataclass(frozen=True)
class ElementarySet:
    """The 14 epsilon-parametrized elementary maps, indexed 1..14."""

    epsilon: float
    delta: float
    channels: tuple

    def channel(self, idx: int) -> AffineChannel:
        if not 1 <= idx <= 14:
            raise ValueError(f"elementary id {idx} out of range 1..14")
        return self.channels[idx - 1]


def _check_epsilon(epsilon: float, upper_inclusive: bool = False) -> float:
    delta = epsilon / 7.0
    ok = 0.0 < delta and (delta <= 0.5 if upper_inclusive else delta < 0.5)
    if not ok:
        bound = "<=" if upper_inclusive else "<"
        raise ValueError(
            f"epsilon {epsilon} out of range: need 0 < epsilon/7 {bound} 0.5 "
            "for the base-(1-delta) expansion to form a delta-net"
        )
    return delta


def build_elementary_set(epsilon: float) -> ElementarySet:
    """The 14 elementary maps with delta = epsilon / 7.

    Members 1-4 and 9 are CPTP.  The members with multi-axis shifts (5-8),
    with a shift transverse to a preserved direction (10-12, 14), or with two
    preserved directions (13) are not completely positive maps on their own;
    the construction uses them only inside compositions whose overall result
    approximates a CPTP target.
    """
    delta = _check_epsilon(epsilon)
    channels = []
    for idx in range(1, 15):
        if idx <= 8:
            diag = (1.0 - delta, 1.0 - delta, 1.0 - delta)
        elif idx <= 12:
            diag = (1.0, 1.0 - delta, 1.0 - delta)
        else:
            diag = (1.0, 1.0, 1.0 - delta)
        shift = delta * np.array(_SHIFT_BITS[idx], dtype=float)
        channels.append(AffineChannel(np.diag(diag), shift))
    return ElementarySet(epsilon=epsilon, delta=delta, channels=tuple(channels))


def _digit_count(magnitude: float, delta: float) -> int:
    """k = ceil(min(log_{1-d}|m|, log_{1-d}d)); gives |m - (1-d)^k| < d."""
    log_base = math.log(1.0 - delta)
    k_cap = math.log(delta) / log_base
    if magnitude <= delta:
        k = k_cap
    else:
        k = min(math.log(magnitude) / log_base, k_cap)
    # Guard against ceil(1.0 + fp noise) on exact powers.
    return max(0, math.ceil(k - 1e-12))


def greedy_bits(target_shift: float, k: int, delta: float) -> str:
    """Greedy 0/1 digits: bit j set iff the remainder is >= delta*(1-delta)^(j-1).

    The realized sum delta * sum_j bits_j (1-delta)^(j-1) never overshoots and,
    for feasible targets, lands within delta of target_shift.
    """
    bits = []
    remaining = max(target_shift, 0.0)
    weight = delta
    for _ in range(k):
        if remaining >= weight - 1e-15:
            bits.append("1")
            remaining -= weight
        else:
            bits.append("0")
        weight *= 1.0 - delta
    return "".join(bits)


def digit_expand(target_shift: float, magnitude: float, delta: float):
    """Digit count and greedy bits for one axis of the step-1 sequence.

    Returns (k, bits) with k = ceil(min(log_{1-d} magnitude, log_{1-d} d)) and
    bits chosen greedily so the realized shift is within delta of the target.
    """
    if not 0.0 < delta <= 0.5:
        raise ValueError(f"delta {delta} out of range (0, 0.5]")
    if not 0.0 <= magnitude <= 1.0 + 1e-12:
        raise ValueError(f"magnitude {magnitude} out of range [0, 1]")
    if not -1e-12 <= target_shift <= 1.0 - magnitude + 1e-12:
        raise ValueError(
            f"target shift {target_shift} outside feasible interval "
            f"[0, {1.0 - magnitude}]"
        )
    k = _digit_count(magnitude, delta)
    return k, greedy_bits(target_shift, k, delta)


@dataclass(frozen=True)
class DigitPlan:
    """Per-axis digit counts and bit strings for the step-1 sequence."""

    k: tuple
    bits_x: str
    bits_y: str
    bits_z: str

    def __post_init__(self):
        k1, k2, k3 = self.k
        if not (0 <= k1 <= k2 <= k3):
            raise ValueError(f"digit counts must be sorted ascending, got {self.k}")
        if (len(self.bits_x), len(self.bits_y), len(self.bits_z)) != (k1, k2, k3):
            raise ValueError("bit string lengths must match digit counts")


def assemble_step1(plan: DigitPlan, elem: ElementarySet):
    """Elementary ids realizing the digit plan, in application order.

    Table position j holds the channel whose shift bits are the j-th digits;
    the composed shift equals delta * sum_j s_j (1-delta)^(j-1) only when
    position 1 acts last, so the returned list is the reversed table.
    """
    k1, k2, k3 = plan.k
    table = []
    for j in range(1, k3 + 1):
        bz = int(plan.bits_z[j - 1])
        if j <= k1:
            key = (int(plan.bits_x[j - 1]), int(plan.bits_y[j - 1]), bz)
            table.append(_FULL_BY_BITS[key])
        elif j <= k2:
            table.append(_MID_BY_BITS[(int(plan.bits_y[j - 1]), bz)])
        else:
            table.append(_TAIL_BY_BITS[bz])
    return list(reversed(table))


def _compose_ids(ids, elem: ElementarySet) -> AffineChannel:
    out = identity_channel()
    for idx in ids:
        out = compose(elem.channel(idx), out)
    return out


@dataclass(frozen=True)
class ChannelPlan:
    """Decomposition result: elementary ids, final Bloch map, certified error."""

    elementary_ids: tuple
    final_map: np.ndarray
    orientation_reversing: bool
    certified_error: float
    target: AffineChannel
    epsilon: float
    delta: float


def replay_plan(plan: ChannelPlan) -> AffineChannel:
    """Compose the plan's elementary channels in order, then its final map."""
    elem = build_elementary_set(plan.epsilon)
    stage = _compose_ids(plan.elementary_ids, elem)
    return compose(AffineChannel(plan.final_map, np.zeros(3)), stage)


def plan_record_lines(plan: ChannelPlan):
    """The plan-file record: key = value lines (see FORMATS.md)."""
    return [
        "target = " + " ".join(f"{v:.17g}" for v in plan.target.flat()),
        f"epsilon = {plan.epsilon:.17g}",
        f"delta = {plan.delta:.17g}",
        "elementary_ids = " + " ".join(str(i) for i in plan.elementary_ids),
        "final_map = " + " ".join(f"{v:.17g}" for v in plan.final_map.ravel()),
        f"orientation_reversing = {int(plan.orientation_reversing)}",
        f"certified_error = {plan.certified_error:.17g}",
    ]


_SIGN_CANDIDATES = [
    np.array(s, dtype=float)
    for s in [
        (1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1),
        (1, -1, -1), (-1, 1, -1), (-1, -1, 1), (-1, -1, -1),
    ]
]


def decompose_channel(target: AffineChannel, epsilon: float) -> ChannelPlan:
    """Decompose a CPTP channel into elementary channels plus one Bloch map.

    The elementary stage approximates the factorized frame's magnitudes and
    nonnegative shift; the final map is post . diag(q) . pre with the sign
    vector q chosen (over all eight candidates) to minimize the measured
    replay distance.  certified_error is that measured distance, and the
    sequence length never exceeds length_bound(epsilon).
    """
    delta = _check_epsilon(epsilon)
    ok, witness = is_cptp(target)
    if not ok:
        raise ValueError(f"target is not CPTP (Choi min eigenvalue {witness:.3g})")
    fact = factorize(target)

    ks = []
    bits = []
    for mag, shift in zip(fact.diag_magnitudes, fact.shift_in_frame):
        shift = min(shift, max(1.0 - mag, 0.0))
        k, b = digit_expand(shift, mag, delta)
        ks.append(k)
        bits.append(b)
    # Descending magnitudes make the digit counts ascending, as the table needs.
    plan = DigitPlan(k=tuple(ks), bits_x=bits[0], bits_y=bits[1], bits_z=bits[2])

    elem = build_elementary_set(epsilon)
    ids = tuple(assemble_step1(plan, elem))
    stage = _compose_ids(ids, elem)

    best = None
    for q in _SIGN_CANDIDATES:
        candidate = fact.post_rotation @ np.diag(q * fact.diag_signs) @ fact.pre_rotation
        replayed = compose(AffineChannel(candidate, np.zeros(3)), stage)
        err = channel_distance(replayed, target)
        if best is None or err < best[0] - 1e-15:
            best = (err, candidate)
    err, final_map = best

    return ChannelPlan(
        elementary_ids=ids,
        final_map=final_map,
        orientation_reversing=bool(np.linalg.det(final_map) < 0),
        certified_error=float(err),
        target=target,
        epsilon=float(epsilon),
        delta=float(delta),
    )


def length_bound(epsilon: float) -> int:
    """ceil(log_{1-delta} delta) + 1 with delta = epsilon/7.

    Upper bound on the number of elementary channels in any plan; the +1
    accounts for the single final map.  Scales as (1/delta) ln(1/delta).
    """
    delta = _check_epsilon(epsilon, upper_inclusive=True)
    return max(0, math.ceil(math.log(delta) / math.log(1.0 - delta) - 1e-12)) + 1


def t_count_lower_bound(dim: int, group_order: int, epsilon: float) -> float:
    """Worst-case count of the non-group gate: (d^2-1) log2(1/eps) / log2(|G|).

    The Omega-expression with constant 1, reported as an indicative figure.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    if group_order < 2:
        raise ValueError("group_order must be at least 2")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    return (dim**2 - 1) * math.log2(1.0 / epsilon) / math.log2(group_order)
