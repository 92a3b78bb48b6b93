"""Solovay-Kitaev baseline compiler over the braid + T generator set.

An epsilon-net enumerates all generator sequences up to a fixed depth
(breadth first, pruning adjacent inverse pairs, deduplicating matrices equal
up to global phase while keeping the shortest sequence).  Lookups run on a
KD-tree over sign-doubled SU(2) quaternion embeddings, which returns exactly
the nearest neighbour under the phase-invariant Frobenius distance; a linear
scan oracle lives in the tests.  Refinement uses the standard balanced
group-commutator step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .gates import GATE_IDS, GateSequence, evaluate, generator_matrix, inverse_id
from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, fidelity_distance, require_unitary

__all__ = [
    "EpsilonNet",
    "SKResult",
    "NET_FORMAT_VERSION",
    "build_net",
    "base_approx",
    "gc_decompose",
    "sk_compile",
    "save_net",
    "load_net",
    "load_or_build_net",
    "su2_quaternion",
    "frobenius_phase_distance",
    "phase_aligned_frobenius",
]

NET_FORMAT_VERSION = 1
_MAX_DEPTH = 12

_GEN_MATS = {g: generator_matrix(g) for g in GATE_IDS}


def su2_quaternion(u: np.ndarray) -> np.ndarray:
    """Canonical-sign quaternion of a 2x2 unitary (global phase removed).

    Projects to SU(2) by dividing out sqrt(det), reads off
    (Re a, Im a, Re b, Im b) from the first row, and fixes the overall +-q
    ambiguity by making the first component of magnitude > 1e-8 positive.
    """
    det = np.linalg.det(u)
    su2 = u / np.sqrt(det)
    q = np.array([su2[0, 0].real, su2[0, 0].imag, su2[0, 1].real, su2[0, 1].imag])
    for comp in q:
        if abs(comp) > 1e-8:
            if comp < 0:
                q = -q
            break
    return q


def frobenius_phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """min over phases of ||e^{i phi} u - v||_F = sqrt(2d - 2|Tr(u v^dag)|).

    Fine for ordering, but the closed form bottoms out near sqrt(machine eps);
    use phase_aligned_frobenius when resolving agreement below ~1e-7 matters.
    """
    d = u.shape[0]
    return float(np.sqrt(max(0.0, 2 * d - 2 * abs(np.trace(u @ v.conj().T)))))


def phase_aligned_frobenius(u: np.ndarray, v: np.ndarray) -> float:
    """||e^{i phi*} u - v||_F with the optimal phase, computed elementwise.

    Equals frobenius_phase_distance mathematically but stays accurate down to
    machine precision because no cancellation under a square root occurs.
    """
    t = np.trace(v.conj().T @ u)
    if abs(t) > 1e-12:
        u = u * (t.conjugate() / abs(t))
    return float(np.linalg.norm(u - v, "fro"))


@dataclass
class EpsilonNet:
    """Sequences of length <= depth with their unitaries and a lookup index."""

    depth: int
    entries: list  # list of GateSequence with cached_unitary set
    quaternions: np.ndarray  # (N, 4) canonical-sign embeddings
    _tree: cKDTree = field(default=None, repr=False)

    def __len__(self):
        return len(self.entries)

    def tree(self) -> cKDTree:
        # Doubling with -q makes plain Euclidean NN equal quotient-metric NN.
        if self._tree is None:
            doubled = np.vstack([self.quaternions, -self.quaternions])
            self._tree = cKDTree(doubled)
        return self._tree


def build_net(depth: int) -> EpsilonNet:
    """Breadth-first net of all <=depth sequences, deduplicated up to phase.

    Pruning: a sequence never contains an adjacent (g, g^-1) pair, so at most
    6 * 5^(depth-1) + 1 entries exist before deduplication.  Among sequences
    with the same unitary (up to phase, tolerance ~1e-9) the first-seen
    shortest one is kept.  Deterministic.
    """
    if not 1 <= depth <= _MAX_DEPTH:
        raise ValueError(f"depth must be in 1..{_MAX_DEPTH} (memory guard)")

    entries = []
    quats = []
    seen = {}

    def try_add(ids: tuple, mat: np.ndarray) -> bool:
        q = su2_quaternion(mat)
        key = tuple(np.round(q, 6))
        if key in seen:
            return False
        seen[key] = len(entries)
        entries.append(GateSequence(ids, cached_unitary=mat))
        quats.append(q)
        return True

    try_add((), np.eye(2, dtype=complex))
    frontier = [((), np.eye(2, dtype=complex))]
    for _ in range(depth):
        nxt = []
        for ids, mat in frontier:
            banned = inverse_id(ids[-1]) if ids else None
            for g in GATE_IDS:
                if g == banned:
                    continue
                new_ids = ids + (g,)
                new_mat = _GEN_MATS[g] @ mat
                if try_add(new_ids, new_mat):
                    nxt.append((new_ids, new_mat))
        frontier = nxt
    return EpsilonNet(depth=depth, entries=entries, quaternions=np.array(quats))


def base_approx(net: EpsilonNet, target: np.ndarray):
    """Net entry minimizing the phase-invariant Frobenius distance to target."""
    target = require_unitary(target, name="target")
    q = su2_quaternion(target)
    _, idx = net.tree().query(q)
    idx %= len(net.entries)
    seq = net.entries[idx]
    return seq, seq.cached_unitary


def _su2_axis_angle(u: np.ndarray):
    """(axis, angle) of u as a rotation; angle in [0, pi], trace made >= 0."""
    det = np.linalg.det(u)
    su2 = u / np.sqrt(det)
    if su2[0, 0].real + su2[1, 1].real < 0:
        su2 = -su2
    cos_half = np.clip((su2[0, 0].real + su2[1, 1].real) / 2.0, -1.0, 1.0)
    theta = 2.0 * np.arccos(cos_half)
    vec = np.array(
        [
            -(su2[0, 1].imag + su2[1, 0].imag),
            su2[1, 0].real - su2[0, 1].real,
            su2[1, 1].imag - su2[0, 0].imag,
        ]
    ) / 2.0
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        return np.array([0.0, 0.0, 1.0]), float(theta)
    return vec / norm, float(theta)


def _rotation_su2(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    gen = axis[0] * SIGMA_X + axis[1] * SIGMA_Y + axis[2] * SIGMA_Z
    return np.cos(angle / 2) * np.eye(2, dtype=complex) - 1j * np.sin(angle / 2) * gen


def _axis_aligner(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Unitary whose Bloch rotation maps unit vector src onto dst."""
    dot = float(np.clip(src @ dst, -1.0, 1.0))
    if dot > 1.0 - 1e-12:
        return np.eye(2, dtype=complex)
    if dot < -1.0 + 1e-12:
        perp = np.cross(src, [1.0, 0.0, 0.0])
        if np.linalg.norm(perp) < 1e-6:
            perp = np.cross(src, [0.0, 1.0, 0.0])
        return _rotation_su2(perp / np.linalg.norm(perp), np.pi)
    axis = np.cross(src, dst)
    return _rotation_su2(axis / np.linalg.norm(axis), np.arccos(dot))


def gc_decompose(delta: np.ndarray):
    """Balanced group commutator: V W V^dag W^dag = delta up to global phase.

    V and W are rotations by the same angle phi about orthogonal axes, with
    sin(theta/2) = 2 sin^2(phi/2) sqrt(1 - sin^4(phi/2)) linking phi to
    delta's rotation angle theta.  Requires delta near the identity
    (fidelity distance < 0.1).
    """
    delta = require_unitary(delta, name="delta")
    if fidelity_distance(delta, np.eye(2)) >= 0.1:
        raise ValueError("gc_decompose needs delta with fidelity distance < 0.1 from I")
    axis, theta = _su2_axis_angle(delta)
    if theta < 1e-12:
        eye = np.eye(2, dtype=complex)
        return eye, eye
    # sin^2(phi/2) solves 4 s^2 (1 - s^2) = sin^2(theta/2); take the small root.
    sin_half_sq = 0.5 * (1.0 - np.cos(theta / 2.0))
    phi = 2.0 * np.arcsin(np.sqrt(np.sqrt(sin_half_sq)))
    v = _rotation_su2([1.0, 0.0, 0.0], phi)
    w = _rotation_su2([0.0, 1.0, 0.0], phi)
    comm = v @ w @ v.conj().T @ w.conj().T
    m_axis, _ = _su2_axis_angle(comm)
    s = _axis_aligner(m_axis, axis)
    sd = s.conj().T
    return s @ v @ sd, s @ w @ sd


@dataclass
class SKResult:
    sequence: GateSequence
    achieved_distance: float
    recursion_level: int
    fallback: bool = False


def sk_compile(net: EpsilonNet, target: np.ndarray, level: int) -> SKResult:
    """Solovay-Kitaev recursion: base lookup at level 0, commutator refinement above."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    target = require_unitary(target, name="target")
    seq, mat, fallback = _sk_recurse(net, target, level)
    return SKResult(
        sequence=seq,
        achieved_distance=fidelity_distance(mat, target),
        recursion_level=level,
        fallback=fallback,
    )


def _sk_recurse(net: EpsilonNet, target: np.ndarray, level: int):
    if level == 0:
        seq, mat = base_approx(net, target)
        return seq, mat, False
    seq_prev, mat_prev, fb = _sk_recurse(net, target, level - 1)
    delta = target @ mat_prev.conj().T
    if fidelity_distance(delta, np.eye(2)) < 1e-14:
        return seq_prev, mat_prev, fb
    axis, theta = _su2_axis_angle(delta)
    if theta < 1e-9:
        # Axis extraction degenerates; refining would add noise, not accuracy.
        return seq_prev, mat_prev, True
    v, w = gc_decompose(delta)
    seq_v, mat_v, fb_v = _sk_recurse(net, v, level - 1)
    seq_w, mat_w, fb_w = _sk_recurse(net, w, level - 1)
    # Circuit order: prev acts first, then W^-1, V^-1, W, V (matrix product
    # V W V^-1 W^-1 prev reads right to left).
    seq = seq_prev + seq_w.inverse() + seq_v.inverse() + seq_w + seq_v
    mat = mat_v @ mat_w @ mat_v.conj().T @ mat_w.conj().T @ mat_prev
    seq.cached_unitary = mat
    return seq, mat, fb or fb_v or fb_w


def save_net(net: EpsilonNet, path) -> None:
    """Versioned compressed dump of (sequence tokens, unitary, quaternion)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tokens = np.array([" ".join(s.ids) for s in net.entries])
    mats = np.array([s.cached_unitary for s in net.entries])
    np.savez_compressed(
        path,
        version=np.array([NET_FORMAT_VERSION]),
        depth=np.array([net.depth]),
        tokens=tokens,
        matrices=mats,
        quaternions=net.quaternions,
    )


def load_net(path) -> EpsilonNet:
    data = np.load(Path(path), allow_pickle=False)
    version = int(data["version"][0])
    if version != NET_FORMAT_VERSION:
        raise ValueError(
            f"net cache version {version} unsupported (expected {NET_FORMAT_VERSION})"
        )
    depth = int(data["depth"][0])
    mats = data["matrices"]
    entries = [
        GateSequence(tuple(tok.split()) if tok else (), cached_unitary=mats[i])
        for i, tok in enumerate(data["tokens"])
    ]
    return EpsilonNet(depth=depth, entries=entries, quaternions=data["quaternions"])


def load_or_build_net(depth: int, cache_dir) -> EpsilonNet:
    """Load the depth-keyed cached net if present, else build and cache it."""
    cache = Path(cache_dir) / f"sknet-depth{depth}.npz"
    if cache.exists():
        net = load_net(cache)
        if net.depth == depth:
            return net
    net = build_net(depth)
    save_net(net, cache)
    return net
