import numpy as np
import pytest

from chancomp.channel import (
    AffineChannel,
    channel_distance,
    compose,
    factorize,
    from_kraus,
    identity_channel,
    is_cptp,
    max_output_deviation,
    random_aligned_cptp,
    random_cptp,
)
from chancomp.linalg import PAULIS, random_rotation

AD_GAMMA = 0.36
AD_KRAUS = [
    np.diag([1.0, np.sqrt(1 - AD_GAMMA)]).astype(complex),
    np.array([[0.0, 0.6], [0.0, 0.0]], dtype=complex),
]


def fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * i / n)
    theta = np.pi * (1 + 5**0.5) * i
    return np.stack(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)], axis=1
    )


def grid_distance(e1, e2, n=10**4):
    """Dense sphere-grid oracle: lower bound converging to the true maximum."""
    pts = fibonacci_sphere(n)
    dm = e1.distortion - e2.distortion
    dv = e1.shift - e2.shift
    return 0.5 * float(np.max(np.linalg.norm(pts @ dm.T + dv, axis=1)))


class TestFromKraus:
    def test_identity(self):
        e = from_kraus([np.eye(2, dtype=complex)])
        assert np.allclose(e.distortion, np.eye(3))
        assert np.allclose(e.shift, 0)

    def test_amplitude_damping(self):
        e = from_kraus(AD_KRAUS)
        assert np.allclose(e.distortion, np.diag([0.8, 0.8, 0.64]), atol=1e-12)
        assert np.allclose(e.shift, [0, 0, 0.36], atol=1e-12)

    def test_completely_depolarizing(self):
        ops = [0.5 * np.eye(2, dtype=complex)] + [0.5 * p for p in PAULIS]
        e = from_kraus(ops)
        assert np.allclose(e.distortion, 0, atol=1e-12)
        assert np.allclose(e.shift, 0, atol=1e-12)

    def test_pauli_reconstruction(self):
        # T and t reproduce E(sigma_j) for every Pauli input.
        e = from_kraus(AD_KRAUS)

        def apply_kraus(x):
            return sum(k @ x @ k.conj().T for k in AD_KRAUS)

        for j, sj in enumerate(PAULIS):
            expected = sum(e.distortion[i, j] * PAULIS[i] for i in range(3))
            assert np.max(np.abs(apply_kraus(sj) - expected)) < 1e-9
        img_id = np.eye(2) + sum(e.shift[i] * PAULIS[i] for i in range(3))
        assert np.max(np.abs(apply_kraus(np.eye(2, dtype=complex)) - img_id)) < 1e-9

    def test_non_trace_preserving_rejected(self):
        with pytest.raises(ValueError, match="trace"):
            from_kraus([0.9 * np.eye(2, dtype=complex)])


class TestCompose:
    def test_identity_neutral(self):
        rng = np.random.default_rng(0)
        e = random_cptp(rng)
        out = compose(e, identity_channel())
        assert np.allclose(out.distortion, e.distortion)
        assert np.allclose(out.shift, e.shift)

    def test_two_z_contractions(self):
        # a -> 0.5 a + 0.5 applied twice on z: T33 = 0.25, t3 = 0.75.
        step = AffineChannel(np.diag([1.0, 1.0, 0.5]), [0, 0, 0.5])
        out = compose(step, step)
        assert out.distortion[2, 2] == pytest.approx(0.25)
        assert out.shift[2] == pytest.approx(0.75)

    def test_depolarizing_after_rotation(self):
        rng = np.random.default_rng(1)
        r = random_rotation(rng)
        dep = AffineChannel(0.5 * np.eye(3), np.zeros(3))
        out = compose(dep, AffineChannel(r, np.zeros(3)))
        assert np.allclose(out.distortion, 0.5 * r)
        assert np.allclose(out.shift, 0)

    def test_determinant_monotonicity(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b = random_cptp(rng), random_cptp(rng)
            det_ab = abs(np.linalg.det(compose(a, b).distortion))
            bound = min(
                abs(np.linalg.det(a.distortion)), abs(np.linalg.det(b.distortion))
            )
            assert det_ab <= bound + 1e-12


class TestChannelDistance:
    def test_zero_on_equal(self):
        rng = np.random.default_rng(3)
        e = random_cptp(rng)
        assert channel_distance(e, e) == 0.0

    def test_identity_vs_depolarizing(self):
        dep = AffineChannel(np.zeros((3, 3)), np.zeros(3))
        assert channel_distance(identity_channel(), dep) == pytest.approx(0.5, abs=1e-10)
        assert grid_distance(identity_channel(), dep) == pytest.approx(0.5, abs=1e-4)

    def test_shifted_contraction(self):
        # Max at a = (0,0,-1): |(-0.2) + (-0.2)| / 2 = 0.2.
        e1 = AffineChannel(np.diag([0.2, 0.2, 0.2]), np.zeros(3))
        e2 = AffineChannel(np.zeros((3, 3)), [0, 0, 0.2])
        d = channel_distance(e1, e2)
        assert d == pytest.approx(0.2, abs=1e-10)
        assert d >= grid_distance(e1, e2) - 1e-9

    def test_against_grid_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            e1, e2 = random_cptp(rng), random_cptp(rng)
            exact = channel_distance(e1, e2)
            grid = grid_distance(e1, e2)
            assert exact >= grid - 1e-9  # grid never beats the true maximum
            assert exact <= grid + 5e-4  # and converges to it from below

    def test_metric_properties(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a, b, c = (random_cptp(rng) for _ in range(3))
            assert channel_distance(a, b) == channel_distance(b, a)
            assert channel_distance(a, c) <= (
                channel_distance(a, b) + channel_distance(b, c) + 1e-9
            )

    def test_degenerate_cases(self):
        # v = 0 reduces to half the largest singular value.
        m = np.diag([0.3, 0.2, 0.1])
        assert max_output_deviation(m, np.zeros(3)) == pytest.approx(0.3, abs=1e-12)
        # m = 0 reduces to |v|.
        assert max_output_deviation(np.zeros((3, 3)), [0.1, 0, 0]) == pytest.approx(0.1)
        # Hard case: shift orthogonal to the dominant singular direction.
        m = np.diag([0.8, 0.1, 0.1])
        v = np.array([0.0, 0.0, 0.05])
        got = max_output_deviation(m, v)
        pts = fibonacci_sphere(200000)
        grid = float(np.max(np.linalg.norm(pts @ m.T + v, axis=1)))
        assert got >= grid - 1e-9
        assert got == pytest.approx(grid, abs=1e-5)


class TestIsCptp:
    def test_identity(self):
        ok, witness = is_cptp(identity_channel())
        assert ok and witness >= -1e-12

    def test_transpose_like_rejected(self):
        ok, witness = is_cptp(AffineChannel(np.diag([1.0, 1.0, -1.0]), np.zeros(3)))
        assert not ok
        assert witness == pytest.approx(-1.0, abs=1e-9)

    def test_odd_sign_boundary_map(self):
        ok, witness = is_cptp(AffineChannel(-np.eye(3) / 3.0, np.zeros(3)))
        assert ok
        assert witness == pytest.approx(0.0, abs=1e-12)

    def test_random_kraus_channels_pass(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            assert is_cptp(random_cptp(rng)).ok


class TestFactorize:
    def test_unitary_channel(self):
        rng = np.random.default_rng(7)
        r = random_rotation(rng)
        f = factorize(AffineChannel(r, np.zeros(3)))
        assert np.allclose(f.diag_magnitudes, 1.0, atol=1e-12)
        assert np.allclose(f.diag_signs, 1.0)
        assert np.allclose(
            f.post_rotation @ np.diag(f.diag_magnitudes) @ f.pre_rotation, r, atol=1e-12
        )

    def test_amplitude_damping(self):
        f = factorize(from_kraus(AD_KRAUS))
        assert np.allclose(f.diag_magnitudes, [0.8, 0.8, 0.64], atol=1e-12)
        assert np.allclose(f.shift_in_frame, [0, 0, 0.36], atol=1e-12)
        assert np.allclose(f.diag_signs, 1.0)
        assert np.allclose(f.shift_signs, 1.0)

    def test_odd_sign_parity(self):
        f = factorize(AffineChannel(-np.eye(3) / 3.0, np.zeros(3)))
        assert np.allclose(f.diag_magnitudes, 1 / 3.0, atol=1e-12)
        assert np.prod(f.diag_signs) == -1.0

    def test_reassembly_and_sign_parity(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            e = random_cptp(rng)
            f = factorize(e)
            back = f.reassemble()
            assert np.max(np.abs(back.distortion - e.distortion)) < 1e-9
            assert np.max(np.abs(back.shift - e.shift)) < 1e-9
            assert np.all(np.diff(f.diag_magnitudes) <= 1e-12)
            det = np.linalg.det(e.distortion)
            if abs(det) > 1e-12:
                assert np.prod(f.diag_signs) == np.sign(det)
            assert np.linalg.det(f.pre_rotation) == pytest.approx(1.0, abs=1e-9)
            assert np.linalg.det(f.post_rotation) == pytest.approx(1.0, abs=1e-9)
            assert np.all(f.shift_in_frame >= 0)

    def test_non_cptp_rejected(self):
        with pytest.raises(ValueError, match="CPTP"):
            factorize(AffineChannel(np.diag([1.0, 1.0, -1.0]), np.zeros(3)))

    def test_deterministic_on_degenerate_spectrum(self):
        e = AffineChannel(0.5 * np.eye(3), [0.1, 0.0, 0.2])
        f1, f2 = factorize(e), factorize(e)
        assert np.array_equal(f1.pre_rotation, f2.pre_rotation)
        assert np.array_equal(f1.post_rotation, f2.post_rotation)


class TestLemmaOneProperty:
    def test_determinant_gap_forces_distance(self):
        # |det T1| - |det T2| > 6 eps with eps below T1's smallest eigenvalue
        # magnitude implies channel distance > eps.
        rng = np.random.default_rng(9)
        accepted = 0
        while accepted < 200:
            e1, e2 = random_cptp(rng), random_cptp(rng)
            d1 = abs(np.linalg.det(e1.distortion))
            d2 = abs(np.linalg.det(e2.distortion))
            if d1 < d2:
                e1, e2, d1, d2 = e2, e1, d2, d1
            min_eig = min(abs(v) for v in np.linalg.eigvals(e1.distortion))
            eps = 0.99 * min((d1 - d2) / 6.0, min_eig)
            if eps <= 1e-6:
                continue
            accepted += 1
            assert channel_distance(e1, e2) > eps

    def test_serialization_roundtrip(self):
        rng = np.random.default_rng(10)
        e = random_aligned_cptp(rng)
        back = AffineChannel.from_flat(e.flat())
        assert np.array_equal(back.distortion, e.distortion)
        assert np.array_equal(back.shift, e.shift)
