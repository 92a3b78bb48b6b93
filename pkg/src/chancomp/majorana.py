"""Explicit Majorana-operator identity checks for the braid gate set.

Majorana operators are built by the Jordan-Wigner construction: for mode m,
b_{2m-1} = Z^(m-1) X I..., b_{2m} = Z^(m-1) Y I...  A logical qubit lives in
the even-parity sector of two modes, |0>_L = |00>, |1>_L = |11>.

Checked identities:
  - anticommutators {b_i, b_j} = 2 delta_ij (four and eight operators);
  - Pauli operators in the logical sector: sx = -i b2 b3, sy = -i b3 b1,
    sz = -i b1 b2 (the cyclic sign convention; writing sy = -i b1 b3 flips
    its sign and contradicts sx sy sz = i I);
  - the Hadamard braiding sequence B23^2 B12^-1 B23 B12^-1 B23^2;
  - the controlled-phase product exp((pi/4) b3 b4) exp((pi/4) b5 b6)
    exp((i pi/4) b3 b4 b5 b6) exp(-i pi/4) restricted to the two-qubit
    logical sector, equal to diag(1, 1, 1, -1) up to global phase.  (With
    the quadratic exponents negated the flip lands on |00> instead of |11>,
    i.e. the X(x)X conjugate of the controlled phase.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gates import GateSequence, evaluate
from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, fidelity_distance

__all__ = ["IdentityCheck", "majorana_operators", "verify_majorana_identities"]

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_H_BRAIDS = GateSequence(("B23", "B23", "B12'", "B23", "B12'", "B23", "B23"))


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def _kron_all(factors) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for f in factors:
        out = np.kron(out, f)
    return out


def majorana_operators(n_modes: int):
    """Jordan-Wigner Majorana operators b_1 .. b_{2 n_modes} on n_modes qubits."""
    eye = np.eye(2, dtype=complex)
    ops = []
    for mode in range(n_modes):
        for local in (SIGMA_X, SIGMA_Y):
            factors = [SIGMA_Z] * mode + [local] + [eye] * (n_modes - mode - 1)
            ops.append(_kron_all(factors))
    return ops


def _logical_basis(n_qubits: int):
    """Even-parity basis vectors: each logical qubit is |00> / |11> on two modes."""
    dim = 4**n_qubits
    vecs = []
    for bits in range(2**n_qubits):
        index = 0
        for q in range(n_qubits):
            bit = (bits >> (n_qubits - 1 - q)) & 1
            index = index * 4 + (3 if bit else 0)  # |11> = 3, |00> = 0 per pair
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        vecs.append(v)
    return np.array(vecs).T  # dim x 2^n_qubits


def _restrict(op: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return basis.conj().T @ op @ basis


def _max_anticommutator_deviation(ops) -> float:
    dim = ops[0].shape[0]
    worst = 0.0
    for i, bi in enumerate(ops):
        for j, bj in enumerate(ops):
            acomm = bi @ bj + bj @ bi
            expected = 2.0 * np.eye(dim) if i == j else np.zeros((dim, dim))
            worst = max(worst, float(np.max(np.abs(acomm - expected))))
    return worst


def _phase_aligned_deviation(actual: np.ndarray, expected: np.ndarray) -> float:
    """max |actual - e^{i phi} expected| with phi chosen from the largest entry."""
    idx = int(np.argmax(np.abs(expected)))
    if abs(actual.flat[idx]) < 1e-14:
        return float(np.max(np.abs(actual - expected)))
    phase = actual.flat[idx] / expected.flat[idx]
    phase /= abs(phase)
    return float(np.max(np.abs(actual - phase * expected)))


def verify_majorana_identities(tolerance: float = 1e-10):
    """Run every identity check and return the list of IdentityCheck results."""
    checks = []

    b4 = majorana_operators(2)
    checks.append(
        IdentityCheck("anticommutators (4 majoranas)",
                      _max_anticommutator_deviation(b4), tolerance)
    )
    b8 = majorana_operators(4)
    checks.append(
        IdentityCheck("anticommutators (8 majoranas)",
                      _max_anticommutator_deviation(b8), tolerance)
    )

    basis1 = _logical_basis(1)
    b1, b2, b3 = b4[0], b4[1], b4[2]
    pauli_pairs = [
        ("sigma_x = -i b2 b3", -1j * b2 @ b3, SIGMA_X),
        ("sigma_y = -i b3 b1", -1j * b3 @ b1, SIGMA_Y),
        ("sigma_z = -i b1 b2", -1j * b1 @ b2, SIGMA_Z),
    ]
    for name, op, expected in pauli_pairs:
        dev = float(np.max(np.abs(_restrict(op, basis1) - expected)))
        checks.append(IdentityCheck(name, dev, tolerance))

    checks.append(
        IdentityCheck("H from braids", fidelity_distance(evaluate(_H_BRAIDS), _H),
                      tolerance)
    )

    checks.append(
        IdentityCheck("controlled-phase product (logical sector)",
                      _controlled_phase_deviation(b8), tolerance)
    )
    return checks


def _controlled_phase_deviation(b8) -> float:
    b3, b4_, b5, b6 = b8[2], b8[3], b8[4], b8[5]
    theta = np.pi / 4

    def exp_antiinv(t, a):  # A^2 = -I: exp(t A) = cos t + sin t A
        return np.cos(t) * np.eye(a.shape[0]) + np.sin(t) * a

    def exp_inv(t, a):  # A^2 = +I: exp(i t A) = cos t + i sin t A
        return np.cos(t) * np.eye(a.shape[0]) + 1j * np.sin(t) * a

    quartic = b3 @ b4_ @ b5 @ b6
    product = (
        exp_antiinv(theta, b3 @ b4_)
        @ exp_antiinv(theta, b5 @ b6)
        @ exp_inv(theta, quartic)
        * np.exp(-1j * theta)
    )
    basis2 = _logical_basis(2)
    restricted = _restrict(product, basis2)
    cz = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
    return _phase_aligned_deviation(restricted, cz)
