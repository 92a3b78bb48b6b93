import numpy as np
import pytest

from chancomp.gates import GateSequence, evaluate, inverse_id, random_sequence
from chancomp.linalg import fidelity_distance, random_unitary
from chancomp.sk import (
    base_approx,
    build_net,
    frobenius_phase_distance,
    gc_decompose,
    load_net,
    load_or_build_net,
    phase_aligned_frobenius,
    save_net,
    sk_compile,
    su2_quaternion,
)


@pytest.fixture(scope="module")
def net4():
    return build_net(4)


@pytest.fixture(scope="module")
def net6():
    return build_net(6)


def linear_scan(net, target):
    """Exhaustive lookup oracle."""
    dists = [frobenius_phase_distance(e.cached_unitary, target) for e in net.entries]
    return int(np.argmin(dists)), min(dists)


class TestBuildNet:
    def test_depth_one_has_seven_entries(self):
        assert len(build_net(1)) == 7

    def test_depth_two_bound(self):
        net = build_net(2)
        assert len(net) <= 6 * 5 + 7

    def test_entry_count_bound(self, net4):
        assert len(net4) <= 6 * 5**3 + 1 + 6  # sequences of length <= 4

    def test_no_adjacent_inverse_pairs(self, net6):
        for entry in net6.entries:
            for a, b in zip(entry.ids, entry.ids[1:]):
                assert b != inverse_id(a)

    def test_soundness_every_entry_reevaluates(self, net4):
        for entry in net4.entries:
            fresh = evaluate(GateSequence(entry.ids))
            assert np.max(np.abs(fresh - entry.cached_unitary)) < 1e-12

    def test_no_phase_duplicates(self, net4):
        qs = net4.quaternions
        grams = np.abs(qs @ qs.T)
        np.fill_diagonal(grams, 0.0)
        assert grams.max() < 1.0 - 1e-9  # |<q1,q2>| = 1 iff equal up to phase

    def test_determinism(self):
        a, b = build_net(3), build_net(3)
        assert [e.ids for e in a.entries] == [e.ids for e in b.entries]
        assert np.array_equal(a.quaternions, b.quaternions)

    def test_depth_guard(self):
        with pytest.raises(ValueError, match="depth"):
            build_net(0)
        with pytest.raises(ValueError, match="depth"):
            build_net(13)


class TestBaseApprox:
    def test_exact_member(self, net6):
        target = evaluate(GateSequence(("B12", "B23")))
        seq, mat = base_approx(net6, target)
        assert fidelity_distance(mat, target) < 1e-12

    def test_identity(self, net6):
        seq, mat = base_approx(net6, np.eye(2, dtype=complex))
        assert seq.ids == ()

    def test_matches_linear_scan(self):
        net = build_net(8)
        rng = np.random.default_rng(0)
        for _ in range(100):
            target = random_unitary(rng)
            _, mat = base_approx(net, target)
            got = frobenius_phase_distance(mat, target)
            _, best = linear_scan(net, target)
            assert got == pytest.approx(best, abs=1e-9)


class TestGcDecompose:
    def test_identity_case(self):
        v, w = gc_decompose(np.eye(2, dtype=complex))
        assert np.array_equal(v, np.eye(2))
        assert np.array_equal(w, np.eye(2))

    def test_small_z_rotation(self):
        delta = np.diag([np.exp(-0.005j), np.exp(0.005j)])
        v, w = gc_decompose(delta)
        comm = v @ w @ v.conj().T @ w.conj().T
        assert phase_aligned_frobenius(comm, delta) < 1e-8

    def test_commutator_identity_random(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            theta = rng.uniform(1e-5, 0.6)
            gen = (
                axis[0] * np.array([[0, 1], [1, 0]])
                + axis[1] * np.array([[0, -1j], [1j, 0]])
                + axis[2] * np.diag([1, -1])
            )
            delta = np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * gen
            v, w = gc_decompose(delta)
            comm = v @ w @ v.conj().T @ w.conj().T
            assert phase_aligned_frobenius(comm, delta) < 1e-8

    def test_balanced_rotations(self):
        from chancomp.sk import _su2_axis_angle

        rng = np.random.default_rng(2)
        for _ in range(30):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            theta = rng.uniform(1e-3, 0.5)
            gen = (
                axis[0] * np.array([[0, 1], [1, 0]])
                + axis[1] * np.array([[0, -1j], [1j, 0]])
                + axis[2] * np.diag([1, -1])
            )
            delta = np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * gen
            v, w = gc_decompose(delta)
            ax_v, ang_v = _su2_axis_angle(v)
            ax_w, ang_w = _su2_axis_angle(w)
            assert abs(ang_v - ang_w) < 1e-8
            assert abs(float(ax_v @ ax_w)) < 1e-8  # orthogonal axes

    def test_far_from_identity_rejected(self):
        with pytest.raises(ValueError, match="fidelity distance"):
            gc_decompose(np.array([[0, 1], [1, 0]], dtype=complex))


class TestSkCompile:
    def test_net_member_any_level(self, net6):
        target = evaluate(GateSequence(("B23", "T", "B12")))
        for level in (0, 1, 2):
            result = sk_compile(net6, target, level)
            assert result.achieved_distance < 1e-12

    def test_sequence_reevaluates_to_distance(self, net6):
        rng = np.random.default_rng(3)
        for _ in range(10):
            target = random_unitary(rng)
            result = sk_compile(net6, target, 2)
            fresh = evaluate(GateSequence(result.sequence.ids))
            assert fidelity_distance(fresh, target) == pytest.approx(
                result.achieved_distance, abs=1e-10
            )

    def test_median_improves_with_level(self, net6):
        rng = np.random.default_rng(11)
        targets = [random_unitary(rng) for _ in range(50)]
        medians = [
            float(np.median([sk_compile(net6, t, lvl).achieved_distance
                             for t in targets]))
            for lvl in (0, 1, 2)
        ]
        assert medians[0] > medians[1] > medians[2]

    def test_length_growth_bound(self, net6):
        rng = np.random.default_rng(4)
        target = random_unitary(rng)
        for level in (0, 1, 2, 3):
            result = sk_compile(net6, target, level)
            assert len(result.sequence) <= 5**level * net6.depth

    def test_negative_level_rejected(self, net6):
        with pytest.raises(ValueError, match="level"):
            sk_compile(net6, np.eye(2, dtype=complex), -1)


class TestNetCache:
    def test_roundtrip(self, net4, tmp_path):
        path = tmp_path / "net.npz"
        save_net(net4, path)
        loaded = load_net(path)
        assert loaded.depth == net4.depth
        assert [e.ids for e in loaded.entries] == [e.ids for e in net4.entries]
        assert np.array_equal(loaded.quaternions, net4.quaternions)
        rng = np.random.default_rng(5)
        t = random_unitary(rng)
        _, m1 = base_approx(net4, t)
        _, m2 = base_approx(loaded, t)
        assert np.allclose(m1, m2)

    def test_load_or_build_caches(self, tmp_path):
        net1 = load_or_build_net(3, tmp_path)
        assert (tmp_path / "sknet-depth3.npz").exists()
        net2 = load_or_build_net(3, tmp_path)
        assert [e.ids for e in net1.entries] == [e.ids for e in net2.entries]

    def test_version_check(self, net4, tmp_path):
        path = tmp_path / "net.npz"
        save_net(net4, path)
        data = dict(np.load(path, allow_pickle=False))
        data["version"] = np.array([99])
        np.savez(path, **data)
        with pytest.raises(ValueError, match="version"):
            load_net(path)


class TestQuaternion:
    def test_phase_invariance(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            u = random_unitary(rng)
            q1 = su2_quaternion(u)
            q2 = su2_quaternion(np.exp(0.7j) * u)
            assert np.allclose(q1, q2, atol=1e-10)

    def test_inner_product_tracks_trace(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            u, v = random_unitary(rng), random_unitary(rng)
            qu, qv = su2_quaternion(u), su2_quaternion(v)
            lhs = 2 * abs(float(qu @ qv))
            rhs = abs(np.trace(u @ v.conj().T))
            assert lhs == pytest.approx(rhs, abs=1e-9)
