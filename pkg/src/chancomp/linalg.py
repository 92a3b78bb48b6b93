"""Small fixed-size complex linear algebra shared by every other module.

Covers 2x2 unitary handling, the SU(2) <-> SO(3) correspondence on the Bloch
sphere, canonical global-phase normalization, and the average-gate-fidelity
distance used by both compilers.

Conventions fixed project-wide:
  - fidelity distance d(U, V) = 1 - F with F = (|Tr(U V^dag)|^2 + d) / (d(d+1)),
    the closed form of the Haar-averaged gate fidelity.
  - Bloch rotation of a unitary: R_ij = (1/2) Tr[sigma_i U sigma_j U^dag].
  - phase canonicalization: the entry of largest magnitude is made real
    nonnegative.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "PAULIS",
    "OrientationReversingError",
    "is_unitary",
    "require_unitary",
    "fidelity_distance",
    "su2_to_bloch",
    "bloch_to_su2",
    "phase_normalize",
    "random_unitary",
    "random_rotation",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

_I2 = np.eye(2, dtype=complex)


class OrientationReversingError(ValueError):
    """Raised when a det = -1 Bloch map is asked for a unitary it cannot have."""


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    """True if u^dag u = I within Frobenius tolerance."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), "fro") <= tol


def require_unitary(u: np.ndarray, tol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    """Return u as a complex array, raising ValueError if it is not unitary."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, tol):
        raise ValueError(f"{name} is not unitary within tolerance {tol}")
    return u


def fidelity_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Average-gate-fidelity distance d(U, V) = 1 - F(U, V) in [0, 1].

    F(U, V) = (|Tr(U V^dag)|^2 + d) / (d(d+1)) equals the Haar average of
    |<psi| U V^dag |psi>|^2 over pure states.  Symmetric and invariant under a
    global phase on either argument; zero iff U = V up to global phase.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    d = u.shape[0]
    overlap = abs(np.trace(u @ v.conj().T)) ** 2
    fid = (overlap + d) / (d * (d + 1))
    # Clamp fp residue so exact matches report exactly 0.
    return float(min(max(1.0 - fid, 0.0), 1.0))


def su2_to_bloch(u: np.ndarray) -> np.ndarray:
    """Bloch-sphere rotation of a 2x2 unitary: R_ij = (1/2) Tr[s_i u s_j u^dag].

    The result is orthogonal with det +1; the global phase of u drops out.
    """
    u = require_unitary(u)
    if u.shape != (2, 2):
        raise ValueError("su2_to_bloch expects a 2x2 unitary")
    ud = u.conj().T
    r = np.empty((3, 3), dtype=float)
    for j, sj in enumerate(PAULIS):
        conj = u @ sj @ ud
        for i, si in enumerate(PAULIS):
            r[i, j] = 0.5 * np.trace(si @ conj).real
    return r


def _require_rotation(r: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    if np.linalg.norm(r.T @ r - np.eye(3), "fro") > tol:
        raise ValueError("matrix is not orthogonal within tolerance")
    return r


def bloch_to_su2(r: np.ndarray) -> np.ndarray:
    """Unitary (canonical phase) whose Bloch rotation is r; det(r) must be +1.

    Uses axis-angle extraction: the angle comes from the trace, the axis from
    the antisymmetric part, with the theta = pi case recovered from the
    symmetric part.  Raises OrientationReversingError for det = -1 input.
    """
    r = _require_rotation(r)
    if np.linalg.det(r) < 0:
        raise OrientationReversingError(
            "Bloch map has det -1; no unitary realizes an orientation-reversing map"
        )
    cos_t = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    theta = float(np.arccos(cos_t))
    # Antisymmetric part holds sin(theta) * axis.
    ax = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) / 2.0
    sin_t = np.linalg.norm(ax)
    if sin_t > 1e-7:
        axis = ax / sin_t
    elif cos_t > 0:  # theta ~ 0: any axis works
        axis = np.array([0.0, 0.0, 1.0])
        theta = 0.0
    else:
        # theta ~ pi: (r + I)/2 = n n^T, take the dominant column.
        m = (r + np.eye(3)) / 2.0
        col = int(np.argmax(np.diag(m)))
        axis = m[:, col] / np.sqrt(max(m[col, col], 1e-300))
        axis /= np.linalg.norm(axis)
        theta = float(np.pi)
    u = np.cos(theta / 2.0) * _I2 - 1j * np.sin(theta / 2.0) * (
        axis[0] * SIGMA_X + axis[1] * SIGMA_Y + axis[2] * SIGMA_Z
    )
    return _canonical_corner_phase(u)


def _canonical_corner_phase(u: np.ndarray) -> np.ndarray:
    """Fix the global phase so u[0,0] is real nonnegative (u[1,0] as fallback)."""
    anchor = u[0, 0] if abs(u[0, 0]) >= 1e-12 else u[1, 0]
    ang = np.angle(anchor)
    if abs(ang) < 1e-15:
        return u
    return u * np.exp(-1j * ang)


def phase_normalize(u: np.ndarray) -> np.ndarray:
    """Multiply u by a global phase so its largest-magnitude entry is real >= 0.

    Idempotent; ties broken by row-major order within a relative 1e-12 window
    (2x2 unitaries tie |u01| = |u10| structurally, so a bare argmax would
    flip between calls on fp noise).  This is the project-wide canonical
    representative used for observations and file dumps.
    """
    u = np.asarray(u, dtype=complex)
    mags = np.abs(u).ravel()
    top = float(mags.max())
    if top < 1e-300:
        return u
    idx = int(np.argmax(mags >= top * (1.0 - 1e-12)))
    entry = u.flat[idx]
    ang = np.angle(entry)
    if abs(ang) < 1e-14:
        return u
    return u * np.exp(-1j * ang)


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-random SO(3) rotation (Bloch image of a Haar-random unitary)."""
    return su2_to_bloch(random_unitary(rng))
