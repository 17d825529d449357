import numpy as np
import pytest

from ris_ofdm_ce.channel import (
    ChannelRealization,
    build_theta,
    cascade,
    cfr,
    composite_cir,
    gen_realization,
    gen_rician_cir,
)
from ris_ofdm_ce.numerics import seeded_rng


def random_phases(rng, shape):
    return np.exp(2j * np.pi * rng.random(shape))


class TestRician:
    def test_pure_los_limit(self):
        h = gen_rician_cir(seeded_rng(0), 1, k_factor=1e6)
        assert abs(abs(h[0]) - 1) < 1e-3

    def test_power_normalization(self):
        h = gen_rician_cir(seeded_rng(1), 12, size=(10_000,))
        p = np.mean(np.sum(np.abs(h) ** 2, axis=-1))
        assert 0.97 <= p <= 1.03

    def test_power_profile(self):
        h = gen_rician_cir(seeded_rng(2), 12, pdp_decay=0.2, size=(20_000,))
        emp = np.mean(np.abs(h) ** 2, axis=0)
        p = np.exp(-0.2 * np.arange(12))
        np.testing.assert_allclose(emp, p / p.sum(), rtol=0.05)

    def test_deterministic(self):
        a = gen_rician_cir(seeded_rng(7), 12)
        b = gen_rician_cir(seeded_rng(7), 12)
        assert a.tobytes() == b.tobytes()

    def test_rejects_zero_taps(self):
        with pytest.raises(ValueError):
            gen_rician_cir(seeded_rng(0), 0)

    def test_every_link_normalized(self):
        rng = seeded_rng(3)
        reals = [gen_realization(rng, 12, 4) for _ in range(10_000)]
        direct = np.mean([np.sum(np.abs(r.direct) ** 2) for r in reals])
        tx = np.mean([np.sum(np.abs(r.tx_ris) ** 2, axis=-1) for r in reals], axis=0)
        rx = np.mean([np.sum(np.abs(r.ris_rx) ** 2, axis=-1) for r in reals], axis=0)
        assert 0.97 <= direct <= 1.03
        assert np.all((tx >= 0.97) & (tx <= 1.03))
        assert np.all((rx >= 0.97) & (rx <= 1.03))


class TestCascade:
    def test_mask(self):
        a, b, c = 1 + 2j, -0.5j, 3.0
        np.testing.assert_array_equal(cascade([1, 0, 0], [a, b, c]), [a, 0, 0])

    def test_identity(self):
        h = gen_rician_cir(seeded_rng(0), 8)
        np.testing.assert_array_equal(cascade(np.ones(8), h), h)

    def test_elementwise_oracle(self):
        rng = seeded_rng(5)
        a, b = gen_rician_cir(rng, 12), gen_rician_cir(rng, 12)
        out = cascade(a, b)
        for k in range(12):
            assert abs(out[k] - a[k] * b[k]) <= 1e-15 * abs(a[k] * b[k])

    def test_commutes(self):
        rng = seeded_rng(6)
        a, b = gen_rician_cir(rng, 12), gen_rician_cir(rng, 12)
        assert cascade(a, b).tobytes() == cascade(b, a).tobytes()

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cascade(np.ones(3), np.ones(4))


class TestComposite:
    def test_no_reflection(self):
        rng = seeded_rng(0)
        direct = gen_rician_cir(rng, 6)
        real = ChannelRealization(direct, np.zeros((3, 6), complex), np.zeros((3, 6), complex))
        np.testing.assert_array_equal(composite_cir(real, random_phases(rng, 3)), direct)

    def test_single_path(self):
        rng = seeded_rng(1)
        a, b = gen_rician_cir(rng, 5, size=(1,)), gen_rician_cir(rng, 5, size=(1,))
        real = ChannelRealization(np.zeros(5, complex), a, b)
        np.testing.assert_allclose(composite_cir(real, [1.0]), a[0] * b[0], atol=0)

    def test_term_by_term_oracle(self):
        rng = seeded_rng(2)
        real = gen_realization(rng, 12, 8)
        phi = random_phases(rng, 8)
        acc = real.direct.copy()
        for m in reversed(range(8)):
            acc = acc + phi[m] * real.tx_ris[m] * real.ris_rx[m]
        assert np.max(np.abs(composite_cir(real, phi) - acc)) < 1e-12

    def test_linear_in_phases(self):
        rng = seeded_rng(3)
        real = gen_realization(rng, 12, 8)
        p1, p2 = random_phases(rng, 8), random_phases(rng, 8)
        d = real.direct
        # composite - direct is linear: check the superposition through a unit-modulus pair
        lhs = (composite_cir(real, p1) - d) + (composite_cir(real, p2) - d)
        rhs = real.cascaded.T @ (p1 + p2)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_bad_phase(self):
        real = gen_realization(seeded_rng(0), 4, 2)
        with pytest.raises(ValueError):
            composite_cir(real, [1.0, 0.5])

    def test_slot_broadcast(self):
        real = gen_realization(seeded_rng(4), 6, 3)
        theta = build_theta(3)
        per_slot = composite_cir(real, theta.theta[1:, :].T)
        for i, phi in enumerate(theta.phase_vectors):
            np.testing.assert_allclose(per_slot[i], composite_cir(real, phi), atol=1e-14)


class TestTheta:
    def test_m1(self):
        np.testing.assert_allclose(build_theta(1).theta, [[1, 1], [1, -1]], atol=1e-15)

    @pytest.mark.parametrize("m", [1, 2, 5, 8, 31, 64])
    def test_structure(self, m):
        t = build_theta(m)
        assert t.theta.shape == (m + 1, m + 1)
        assert np.all(t.theta[0] == 1)
        assert np.max(np.abs(np.abs(t.theta) - 1)) < 1e-12
        assert len(t.phase_vectors) == m + 1
        assert all(v.shape == (m,) for v in t.phase_vectors)

    def test_conditioning(self):
        t = build_theta(8).theta / 3.0
        assert abs(np.linalg.cond(t) - 1) < 1e-9

    @pytest.mark.parametrize("m", [1, 8, 16, 64])
    def test_inverse(self, m):
        t = build_theta(m).theta
        assert np.max(np.abs(t @ np.linalg.inv(t) - np.eye(m + 1))) < 1e-9

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            build_theta(0)


def test_cfr_is_unnormalized_dft():
    h = gen_rician_cir(seeded_rng(0), 12)
    k = np.arange(64)[:, None]
    l = np.arange(12)[None, :]
    expected = np.exp(-2j * np.pi * k * l / 64) @ h
    np.testing.assert_allclose(cfr(h, 64), expected, atol=1e-12)
