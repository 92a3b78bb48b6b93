"""Affine (Pauli-transfer) representation of single-qubit channels.

A channel acts on Bloch vectors as a -> T a + t with T the 3x3 distortion
matrix and t the center shift.  This module provides construction from Kraus
operators, composition, the halved trace-norm distance

    D(E1, E2) = (1/2) max_{|a| <= 1} |(T1 - T2) a + (t1 - t2)|,

a Choi-matrix CPTP check, and the real-SVD factorization that feeds the
elementary-channel decomposer.

Choi convention: Choi(E) = (E (x) id)(|Phi+><Phi+|) with unnormalized
|Phi+> = |00> + |11>; E is completely positive iff Choi >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .linalg import PAULIS, su2_to_bloch, random_unitary

__all__ = [
    "AffineChannel",
    "ChannelFactorization",
    "CptpCheck",
    "identity_channel",
    "from_kraus",
    "compose",
    "channel_distance",
    "max_output_deviation",
    "is_cptp",
    "choi_matrix",
    "factorize",
    "random_cptp",
    "random_aligned_cptp",
]

_SV_TOL = 1e-9


@dataclass(frozen=True)
class AffineChannel:
    """Single-qubit channel as a Bloch-sphere affine map a -> T a + t."""

    distortion: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        t = np.array(self.distortion, dtype=float)
        s = np.array(self.shift, dtype=float).reshape(3)
        if t.shape != (3, 3):
            raise ValueError("distortion must be 3x3")
        smax = np.linalg.norm(t, 2)
        if smax > 1.0 + _SV_TOL:
            raise ValueError(f"distortion has singular value {smax:.6g} > 1")
        t.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "distortion", t)
        object.__setattr__(self, "shift", s)

    def apply(self, a: np.ndarray) -> np.ndarray:
        return self.distortion @ np.asarray(a, dtype=float) + self.shift

    def flat(self) -> np.ndarray:
        """Row-major T followed by t: the 12-float serialization order."""
        return np.concatenate([self.distortion.ravel(), self.shift])

    @staticmethod
    def from_flat(values) -> "AffineChannel":
        v = np.asarray(values, dtype=float).reshape(12)
        return AffineChannel(v[:9].reshape(3, 3), v[9:])


def identity_channel() -> AffineChannel:
    return AffineChannel(np.eye(3), np.zeros(3))


class CptpCheck(NamedTuple):
    ok: bool
    min_eigenvalue: float


@dataclass(frozen=True)
class ChannelFactorization:
    """Real SVD of a channel: T = post . diag(signs * magnitudes) . pre.

    Both rotations have det +1; sign information from the SVD and from the
    rotated shift is carried separately so the decomposer can budget it into
    its final orthogonal map.
    """

    pre_rotation: np.ndarray
    post_rotation: np.ndarray
    diag_magnitudes: np.ndarray
    diag_signs: np.ndarray
    shift_in_frame: np.ndarray
    shift_signs: np.ndarray

    def reassemble(self) -> AffineChannel:
        sigma = np.diag(self.diag_signs * self.diag_magnitudes)
        t = self.post_rotation @ sigma @ self.pre_rotation
        shift = self.post_rotation @ (self.shift_signs * self.shift_in_frame)
        return AffineChannel(t, shift)


def from_kraus(operators) -> AffineChannel:
    """Transfer matrix of the map rho -> sum_k K_k rho K_k^dag.

    T_ij = (1/2) Tr[s_i E(s_j)], t_i = (1/2) Tr[s_i E(I)].  Rejects Kraus sets
    that are not trace preserving (sum K^dag K = I within 1e-9).
    """
    ops = [np.asarray(k, dtype=complex) for k in operators]
    if not ops or any(k.shape != (2, 2) for k in ops):
        raise ValueError("expected a nonempty list of 2x2 Kraus operators")
    total = sum(k.conj().T @ k for k in ops)
    if np.linalg.norm(total - np.eye(2), "fro") > 1e-9:
        raise ValueError("Kraus set is not trace preserving")

    def ap(x):
        return sum(k @ x @ k.conj().T for k in ops)

    t = np.empty((3, 3))
    for j, sj in enumerate(PAULIS):
        out = ap(sj)
        for i, si in enumerate(PAULIS):
            t[i, j] = 0.5 * np.trace(si @ out).real
    out0 = ap(np.eye(2, dtype=complex))
    shift = np.array([0.5 * np.trace(si @ out0).real for si in PAULIS])
    return AffineChannel(t, shift)


def compose(later: AffineChannel, earlier: AffineChannel) -> AffineChannel:
    """Channel applying `earlier` first: a -> T2 (T1 a + t1) + t2."""
    return AffineChannel(
        later.distortion @ earlier.distortion,
        later.distortion @ earlier.shift + later.shift,
    )


def max_output_deviation(m: np.ndarray, v: np.ndarray) -> float:
    """max_{|a| <= 1} |M a + v|, solved exactly via the secular equation.

    Stationary points of the boundary maximum satisfy (M^T M - mu I) a = -M^T v
    with mu >= lambda_max(M^T M); the unique such mu is found by safeguarded
    root finding, with the degenerate v ~ 0 case reducing to the largest
    singular value of M and the "hard case" (no component of M^T v along the
    top eigenspace) filled in from that eigenspace.
    """
    m = np.asarray(m, dtype=float)
    v = np.asarray(v, dtype=float).reshape(3)
    vnorm = np.linalg.norm(v)
    sig_max = np.linalg.norm(m, 2) if np.any(m) else 0.0
    if vnorm < 1e-15:
        return float(sig_max)

    lam, q = np.linalg.eigh(m.T @ m)  # ascending
    b = q.T @ (m.T @ v)
    lam_top = lam[-1]
    top = lam > lam_top - 1e-12 * max(lam_top, 1.0)

    def objective(a):
        return float(np.linalg.norm(m @ a + v))

    def norm2_at(mu):
        return float(np.sum((b / (mu - lam)) ** 2))

    b_top = np.linalg.norm(b[top])
    if b_top < 1e-14 * max(vnorm, 1.0):
        # Hard case: solve on the complement, pad with top eigenvector.
        a_perp = np.where(top, 0.0, b / np.where(top, 1.0, lam_top - lam))
        rem = 1.0 - float(np.sum(a_perp**2))
        if rem >= 0.0:
            e_top = np.zeros(3)
            e_top[np.argmax(top)] = 1.0
            a = q @ (a_perp + np.sqrt(rem) * e_top)
            a_alt = q @ (a_perp - np.sqrt(rem) * e_top)
            return max(objective(a), objective(a_alt))
        # Falls through: the perpendicular part alone already exceeds the ball,
        # so the secular root lies strictly above lam_top after all.

    lo = lam_top + 1e-14 * max(lam_top, 1.0)
    hi = lam_top + np.linalg.norm(b) + 1e-12
    while norm2_at(lo) < 1.0:  # root bracketing: push lo toward lam_top
        lo = lam_top + (lo - lam_top) / 16.0
        if lo - lam_top < 1e-300:
            break
    if norm2_at(lo) < 1.0:
        # Numerically at the boundary: treat as hard case with full padding.
        e_top = np.zeros(3)
        e_top[np.argmax(top)] = 1.0
        return objective(q @ e_top)
    mu = brentq(lambda x: norm2_at(x) - 1.0, lo, hi, xtol=1e-15, rtol=1e-15)
    a = q @ (b / (mu - lam))
    return objective(a)


def channel_distance(e1: AffineChannel, e2: AffineChannel) -> float:
    """Halved worst-case Bloch deviation (1/2) max_{|a|<=1} |dT a + dt|."""
    return 0.5 * max_output_deviation(
        e1.distortion - e2.distortion, e1.shift - e2.shift
    )


def choi_matrix(e: AffineChannel) -> np.ndarray:
    """Choi matrix (E (x) id)(|Phi+><Phi+|), |Phi+> = |00> + |11> unnormalized."""
    t, s = e.distortion, e.shift
    eye = np.eye(2, dtype=complex)

    def ap(x):
        coeffs = [0.5 * np.trace(p @ x) for p in PAULIS]
        ident = 0.5 * np.trace(x)
        out = ident * (eye + sum(si * pi for si, pi in zip(s, PAULIS)))
        for j in range(3):
            img = sum(t[i, j] * PAULIS[i] for i in range(3))
            out = out + coeffs[j] * img
        return out

    basis = [
        (k, l, np.outer(np.eye(2)[:, k], np.eye(2)[:, l]).astype(complex))
        for k in range(2)
        for l in range(2)
    ]
    choi = np.zeros((4, 4), dtype=complex)
    for k, l, ekl in basis:
        choi += np.kron(ap(ekl), ekl)
    return choi


def is_cptp(e: AffineChannel, tol: float = 1e-9) -> CptpCheck:
    """Complete positivity via the minimum Choi eigenvalue (witness returned)."""
    eigs = np.linalg.eigvalsh(choi_matrix(e))
    min_eig = float(eigs[0])
    return CptpCheck(min_eig >= -tol, min_eig)


def _canonical_subspace_basis(projector: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of a subspace from its projector.

    Gram-Schmidt over projected standard basis vectors in index order, with
    each vector's first significant entry made positive.  Used to break SVD
    ties so factorizations (hence plans) are reproducible.
    """
    cols = []
    for i in range(3):
        w = projector[:, i].copy()
        for c in cols:
            w -= (c @ w) * c
        n = np.linalg.norm(w)
        if n > 1e-7:
            w /= n
            lead = np.argmax(np.abs(w) > 1e-9)
            if w[lead] < 0:
                w = -w
            cols.append(w)
    return np.array(cols).T


def factorize(e: AffineChannel) -> ChannelFactorization:
    """Real SVD T = W Sigma V^T canonicalized to orientation-+1 rotations.

    Magnitudes come out sorted descending; sign flips needed to make W and V
    proper rotations move into diag_signs (their product equals sign(det T)).
    The shift is expressed in the output frame, split into nonnegative
    magnitudes and signs.  Degenerate singular groups get a deterministic
    basis so equal inputs give bit-equal factorizations.
    """
    ok, witness = is_cptp(e)
    if not ok:
        raise ValueError(f"factorize requires a CPTP channel (Choi min eig {witness:.3g})")
    t = e.distortion
    w, sig, vt = np.linalg.svd(t)

    # Canonicalize degenerate singular-value groups.
    groups = []
    start = 0
    for i in range(1, 4):
        if i == 3 or abs(sig[i] - sig[start]) > 1e-10 * max(1.0, sig[0]):
            groups.append((start, i))
            start = i
    for lo, hi in groups:
        if hi - lo == 1 and sig[lo] > 1e-10:
            # Unique direction: only fix the sign pairing deterministically.
            u_col = w[:, lo]
            lead = np.argmax(np.abs(u_col) > 1e-9)
            if u_col[lead] < 0:
                w[:, lo] = -w[:, lo]
                vt[lo, :] = -vt[lo, :]
            continue
        v_block = vt[lo:hi, :].T
        basis_v = _canonical_subspace_basis(v_block @ v_block.T)
        if sig[lo] > 1e-10:
            vt[lo:hi, :] = basis_v.T
            w[:, lo:hi] = (t @ basis_v) / sig[lo]
        else:
            # Null group: both sides free; canonicalize independently.
            u_block = w[:, lo:hi]
            vt[lo:hi, :] = basis_v.T
            w[:, lo:hi] = _canonical_subspace_basis(u_block @ u_block.T)

    signs = np.ones(3)
    if np.linalg.det(w) < 0:
        w[:, 2] *= -1.0
        signs[2] *= -1.0
    if np.linalg.det(vt) < 0:
        vt[2, :] *= -1.0
        signs[2] *= -1.0

    t_frame = w.T @ e.shift
    shift_signs = np.where(t_frame < 0, -1.0, 1.0)
    return ChannelFactorization(
        pre_rotation=vt,
        post_rotation=w,
        diag_magnitudes=np.clip(sig, 0.0, 1.0),
        diag_signs=signs,
        shift_in_frame=np.abs(t_frame),
        shift_signs=shift_signs,
    )


def random_cptp(rng: np.random.Generator, kraus_rank: int = 4) -> AffineChannel:
    """Random CPTP channel from a Haar-random Stinespring isometry.

    The isometry is the first two columns of a Haar unitary on a
    (2*kraus_rank)-dimensional space; its 2x2 blocks are the Kraus operators.
    """
    if not 1 <= kraus_rank <= 4:
        raise ValueError("kraus_rank must be in 1..4")
    u = random_unitary(rng, dim=2 * kraus_rank)
    iso = u[:, :2]
    ops = [iso[2 * k : 2 * k + 2, :] for k in range(kraus_rank)]
    return from_kraus(ops)


def random_aligned_cptp(rng: np.random.Generator) -> AffineChannel:
    """Random CPTP channel whose right singular frame is the coordinate frame.

    Built as (rotation) o (diagonal contraction + axis-aligned nonnegative
    shift); this is exactly the family a diagonal elementary-channel stage
    followed by a single orthogonal Bloch map can represent, and it is the
    seeded target family used by the decomposition certification tests.
    """
    for _ in range(256):
        mags = np.sort(rng.uniform(0.0, 1.0, size=3))[::-1]
        room = 1.0 - mags
        shift = rng.uniform(0.0, 1.0, size=3) * room * rng.uniform(0.0, 1.0)
        diag = AffineChannel(np.diag(mags), shift)
        rot = su2_to_bloch(random_unitary(rng))
        if rng.uniform() < 0.5:
            # Orientation-reversing frame; unlike a proper rotation this can
            # break complete positivity, hence the check on the full channel.
            rot = rot @ np.diag([1.0, 1.0, -1.0])
        candidate = AffineChannel(rot @ diag.distortion, rot @ diag.shift)
        if is_cptp(candidate).ok:
            return candidate
    raise RuntimeError("failed to sample a CPTP channel (should not happen)")
