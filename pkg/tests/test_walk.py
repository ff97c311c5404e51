import numpy as np
import pytest

from gwalk import walk
from gwalk.errors import ConfigurationError, GeometryError
from gwalk.walk import (AngleProvider, SpinorField, WalkParams, array_angles,
                        coin_matrix, constant_angles, evolve, flat_angles,
                        plane_wave_transfer_matrix, pure_shear_angles,
                        shift_apply, spatial_nullity_terms, step, t_epsilon,
                        t_epsilon_compact, uniform_time_angles, w_block_apply)

RNG_ANGLE_RANGES = ((0.1, 0.7), (0.9, 1.4))  # keeps the cosine matrix well conditioned


def random_uniform_provider(rng):
    (a, b), (c, d) = RNG_ANGLE_RANGES
    return constant_angles(rng.uniform(a, b), rng.uniform(c, d),
                           rng.uniform(c, d), rng.uniform(a, b))


def random_history_provider(rng, times=3, shape=(1, 1)):
    """Space-uniform or per-site random angle history with safe conditioning."""
    (a, b), (c, d) = RNG_ANGLE_RANGES
    arrays = {
        (1, 1): rng.uniform(a, b, (times, *shape)),
        (2, 2): rng.uniform(a, b, (times, *shape)),
        (1, 2): rng.uniform(c, d, (times, *shape)),
        (2, 1): rng.uniform(c, d, (times, *shape)),
    }
    return array_angles(arrays)


class TestCoinMatrices:
    def test_q_zero_is_identity(self):
        assert np.allclose(coin_matrix("Q", 0.0), np.eye(2), atol=1e-15)

    def test_u_zero(self):
        assert np.allclose(coin_matrix("U", 0.0), [[-1, 0], [0, 1]], atol=1e-15)

    def test_pi_inverse_round_trips(self):
        pi = coin_matrix("PI")
        pi_inv = pi.conj().T
        assert np.abs(pi @ pi_inv - np.eye(2)).max() < 1e-14
        assert np.abs((pi @ pi_inv) @ (pi @ pi_inv) - np.eye(2)).max() < 1e-14

    @pytest.mark.parametrize("kind", ["U", "R", "Q"])
    def test_unitarity(self, kind):
        rng = np.random.default_rng(5)
        for theta in rng.uniform(-3, 3, 20):
            m = coin_matrix(kind, theta)
            assert np.abs(m.conj().T @ m - np.eye(2)).max() < 1e-12

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigurationError):
            coin_matrix("Z", 0.0)

    def test_r_conjugates_u_to_diagonal(self):
        # R^-1 U R = -sigma_z, the identity behind the double-jump blocks
        for theta in (0.3, 1.1, 2.5):
            r, u = coin_matrix("R", theta), coin_matrix("U", theta)
            assert np.abs(r.conj().T @ u @ r - np.diag([-1, 1])).max() < 1e-14


class TestShift:
    def test_delta_moves_down_axis1(self):
        f = SpinorField.delta((8, 8), (3, 0), component=0)
        out = shift_apply(f, 1)
        assert out.data[0, 2, 0] == 1.0
        assert np.count_nonzero(out.data) == 1

    def test_plus_component_moves_up_axis2(self):
        f = SpinorField.delta((8, 8), (0, 0), component=1)
        out = shift_apply(f, 2)
        assert out.data[1, 0, 1] == 1.0
        assert np.count_nonzero(out.data) == 1

    def test_plane_wave_eigenvalue(self):
        k1 = 2 * np.pi / 4
        f = SpinorField.plane_wave((4, 4), k1, 0.0, (1, 0))
        out = shift_apply(f, 1)
        np.testing.assert_allclose(out.data[0], np.exp(1j * k1) * f.data[0],
                                   atol=1e-14)

    def test_norm_exactly_preserved(self):
        # the shift is a pure permutation of amplitudes
        rng = np.random.default_rng(0)
        f = SpinorField.random((6, 8), rng)
        out = shift_apply(f, 1)
        assert sorted(out.data.ravel(), key=lambda z: (z.real, z.imag)) \
            == sorted(f.data.ravel(), key=lambda z: (z.real, z.imag))

    def test_bad_axis(self):
        f = SpinorField.zeros((4, 4))
        with pytest.raises(ConfigurationError):
            shift_apply(f, 3)


class TestSpinorField:
    def test_odd_shape_rejected(self):
        with pytest.raises(ConfigurationError):
            SpinorField.zeros((5, 4))

    def test_nonfinite_rejected(self):
        data = np.zeros((2, 4, 4), dtype=complex)
        data[0, 0, 0] = np.nan
        with pytest.raises(ConfigurationError):
            SpinorField(data)


class TestWBlock:
    def test_norm_preserved_any_theta(self):
        rng = np.random.default_rng(1)
        f = SpinorField.random((8, 8), rng)
        theta = rng.uniform(-np.pi, np.pi, (8, 8))
        out = w_block_apply(f, 1, theta)
        assert abs(out.norm() - f.norm()) < 1e-12

    def test_uniform_theta_commutes_with_translation_by_two(self):
        rng = np.random.default_rng(2)
        f = SpinorField.random((8, 8), rng)
        theta = 0.77
        shifted_then_block = w_block_apply(
            SpinorField(np.roll(f.data, 2, axis=1)), 1, theta)
        block_then_shifted = np.roll(w_block_apply(f, 1, theta).data, 2, axis=1)
        assert np.abs(shifted_then_block.data - block_then_shifted).max() < 1e-12

    def test_flat_step_matches_w0_on_plane_wave(self):
        from gwalk.spectral import mode_w0
        k1 = 2 * np.pi * 3 / 16
        phase = np.exp(1j * k1 * np.arange(16))[:, None] * np.ones((1, 16))
        for pol in ((1, 0), (0, 1), (0.6, 0.8j)):
            f = SpinorField.plane_wave((16, 16), k1, 0.0, pol)
            out = step(f, 0, flat_angles(), WalkParams())
            expected = mode_w0(2 * k1, 0.0) @ np.asarray(pol, dtype=complex)
            np.testing.assert_allclose(
                out.data, np.einsum("c,xy->cxy", expected, phase), atol=1e-12)


class TestTEpsilon:
    def test_diagonal_cosine_matrix_vanishes(self):
        provider = uniform_time_angles(lambda t: 0.3 + 0.2 * np.sin(t),
                                       np.pi / 2, np.pi / 2,
                                       lambda t: 0.8 - 0.1 * np.cos(t))
        assert abs(t_epsilon(provider, 2, 0, 0, WalkParams())) < 1e-14

    def test_time_independent_vanishes(self):
        rng = np.random.default_rng(3)
        provider = random_uniform_provider(rng)
        assert t_epsilon(provider, 0, 0, 0, WalkParams()) == 0.0

    def test_pure_shear_first_order_cancellation(self):
        xi = 1e-4
        g = lambda t: np.sin(0.1 * t)
        provider = pure_shear_angles(xi, g)
        max_d0g = abs(g(1.0) - g(0.0))
        val = t_epsilon(provider, 0, 0, 0, WalkParams())
        assert abs(val) <= 10.0 * xi ** 2 * max_d0g

    def test_compact_form_matches_direct(self):
        rng = np.random.default_rng(4)
        params = WalkParams(epsilon=0.37)
        for _ in range(10):
            provider = random_history_provider(rng)
            direct = t_epsilon(provider, 0, 0, 0, params)
            compact = t_epsilon_compact(provider, 0, 0, 0, params)
            assert abs(direct - compact) < 1e-12

    def test_compact_form_diagonal_and_constant(self):
        provider = uniform_time_angles(lambda t: 0.3 + 0.2 * np.sin(t),
                                       np.pi / 2, np.pi / 2,
                                       lambda t: 0.8 - 0.1 * np.cos(t))
        assert abs(t_epsilon_compact(provider, 1, 0, 0, WalkParams())) < 1e-12
        rng = np.random.default_rng(5)
        const = random_uniform_provider(rng)
        assert abs(t_epsilon_compact(const, 0, 0, 0, WalkParams())) < 1e-14

    def test_spatial_terms_vanish_identically(self):
        rng = np.random.default_rng(6)
        provider = random_history_provider(rng, times=2, shape=(6, 6))
        for site in ((0, 0), (2, 3), (5, 5)):
            k1, k2 = spatial_nullity_terms(provider, 0, *site, WalkParams())
            assert abs(k1) < 1e-12 and abs(k2) < 1e-12

    def test_singular_cosine_matrix_rejected(self):
        # equal rows make det C = 0
        provider = uniform_time_angles(0.4, 0.9, lambda t: 0.4 + 0.1 * t,
                                       lambda t: 0.9 + 0.1 * t)
        with pytest.raises(GeometryError, match="singular"):
            t_epsilon(provider, 0, 0, 0, WalkParams())

    def test_singular_error_names_offending_site(self):
        rng = np.random.default_rng(16)
        arrays = {
            (1, 1): rng.uniform(0.1, 0.7, (2, 6, 6)),
            (2, 2): rng.uniform(0.1, 0.7, (2, 6, 6)),
            (1, 2): rng.uniform(0.9, 1.4, (2, 6, 6)),
            (2, 1): rng.uniform(0.9, 1.4, (2, 6, 6)),
        }
        # make the cosine matrix rows equal at one site only
        for kl_a, kl_b in (((1, 1), (2, 1)), ((1, 2), (2, 2))):
            arrays[kl_b][0, 2, 3] = arrays[kl_a][0, 2, 3]
        provider = array_angles(arrays)
        with pytest.raises(GeometryError, match=r"\(2, 3\)"):
            t_epsilon(provider, 0, 2, 3, WalkParams())
        with pytest.raises(GeometryError, match=r"\(2, 3\)"):
            step(SpinorField.zeros((6, 6)), 0, provider, WalkParams())


class TestStep:
    def test_unitarity_random_angle_fields(self):
        rng = np.random.default_rng(7)
        params = WalkParams()
        for _ in range(5):
            provider = random_history_provider(rng, times=2, shape=(8, 8))
            f = SpinorField.random((8, 8), rng)
            out = step(f, 0, provider, params)
            assert abs(out.norm() - f.norm()) < 1e-12

    def test_flat_massless_plane_wave_phase(self):
        q = 2 * (2 * np.pi * 2 / 8)
        f = SpinorField.plane_wave((8, 8), q / 2, 0.0, (0, 1))
        out = step(f, 0, flat_angles(), WalkParams())
        np.testing.assert_allclose(out.data, np.exp(-1j * q) * f.data, atol=1e-12)

    def test_step_matches_first_order_mode_operator(self):
        from gwalk.spectral import mode_operator
        xi, g = 1e-3, 1.0
        provider = pure_shear_angles(xi, g)
        k1, k2 = 2 * np.pi * 3 / 16, 2 * np.pi * 5 / 16
        pol = np.array([0.3 - 0.4j, 0.8 + 0.1j])
        pol /= np.linalg.norm(pol)
        f = SpinorField.plane_wave((16, 16), k1, k2, pol)
        out = step(f, 0, provider, WalkParams(xi=xi))
        expected = mode_operator(xi, g, 2 * k1, 2 * k2).first_order() @ pol
        assert np.abs(out.data[:, 0, 0] - expected).max() < 10 * xi ** 2

    def test_translation_covariance_uniform_angles(self):
        rng = np.random.default_rng(8)
        provider = random_uniform_provider(rng)
        f = SpinorField.random((8, 8), rng)
        params = WalkParams()
        a = step(SpinorField(np.roll(f.data, (2, 4), axis=(1, 2))), 0, provider, params)
        b = np.roll(step(f, 0, provider, params).data, (2, 4), axis=(1, 2))
        assert np.abs(a.data - b).max() < 1e-12

    def test_transfer_matrix_oracle(self):
        # uniform angles: the step restricted to a plane wave is a 2x2 matrix
        rng = np.random.default_rng(9)
        provider = random_history_provider(rng, times=2)
        params = WalkParams(epsilon=0.8, mass=0.3)
        k1, k2 = 2 * np.pi * 1 / 8, 2 * np.pi * 3 / 8
        tm = plane_wave_transfer_matrix(provider, 0, k1, k2, params)
        for pol in ((1, 0), (0.5, 0.5j)):
            f = SpinorField.plane_wave((8, 8), k1, k2, pol)
            out = step(f, 0, provider, params)
            expected = tm @ np.asarray(pol, dtype=complex)
            assert np.abs(out.data[:, 0, 0] - expected).max() < 1e-12

    def test_transfer_matrix_requires_uniform(self):
        rng = np.random.default_rng(10)
        provider = random_history_provider(rng, times=2, shape=(4, 4))
        with pytest.raises(ConfigurationError):
            plane_wave_transfer_matrix(provider, 0, 0.1, 0.2, WalkParams())


class TestEvolve:
    def test_zero_steps_identity(self):
        rng = np.random.default_rng(11)
        f = SpinorField.random((6, 6), rng)
        out = evolve(f, 0, 0, flat_angles(), WalkParams())
        assert np.array_equal(out.data, f.data)

    def test_two_steps_equals_composition(self):
        rng = np.random.default_rng(12)
        provider = random_history_provider(rng, times=4, shape=(6, 6))
        params = WalkParams()
        f = SpinorField.random((6, 6), rng)
        a = evolve(f, 0, 2, provider, params)
        b = step(step(f, 0, provider, params), 1, provider, params)
        np.testing.assert_array_equal(a.data, b.data)

    def test_negative_steps_rejected(self):
        with pytest.raises(ConfigurationError):
            evolve(SpinorField.zeros((4, 4)), 0, -1, flat_angles(), WalkParams())

    def test_long_run_norm_drift(self):
        rng = np.random.default_rng(13)
        f = SpinorField.random((64, 64), rng)
        out = evolve(f, 0, 1000, flat_angles(), WalkParams())
        assert abs(out.norm() - f.norm()) < 1e-9

    def test_time_dependent_wave_matches_transfer_product(self):
        # several steps through a full wave (compression + shear, nonzero
        # mass-gate scalar) equal the product of per-step mode matrices
        from gwalk.geometry import GwParams, gw_angle_provider
        gw = GwParams(xi=1e-3, f=lambda t: np.cos(0.7 * t),
                      g=lambda t: np.sin(0.7 * t), k=1.5, k_prime=1.5)
        params = WalkParams(epsilon=0.3, mass=0.2, xi=1e-3)
        provider = gw_angle_provider(gw, epsilon=params.epsilon)
        k1, k2 = 2 * np.pi * 2 / 16, 2 * np.pi * 5 / 16
        pol = np.array([0.6 - 0.1j, 0.2 + 0.77j])
        pol /= np.linalg.norm(pol)
        f = SpinorField.plane_wave((16, 16), k1, k2, pol)
        steps = 5
        out = evolve(f, 0, steps, provider, params)
        amp = pol
        for j in range(steps):
            amp = plane_wave_transfer_matrix(provider, j, k1, k2, params) @ amp
        assert np.abs(out.data[:, 0, 0] - amp).max() < 1e-12
        assert abs(out.norm() - f.norm()) < 1e-12


class TestAngleProviders:
    def test_provider_is_deterministic(self):
        provider = pure_shear_angles(1e-3, lambda t: np.sin(t))
        a = provider.angle(3, 0, 0, (1, 2))
        b = provider.angle(3, 5, 7, (1, 2))
        assert a == b

    def test_array_provider_bounds_check(self):
        rng = np.random.default_rng(14)
        provider = random_history_provider(rng, times=2, shape=(4, 4))
        with pytest.raises(ConfigurationError, match="cover times"):
            provider.angle(2, 0, 0, (1, 1))

    def test_fields_shapes(self):
        provider = flat_angles()
        th = provider.fields(0, (4, 6))
        assert th[(1, 2)] == pytest.approx(np.pi / 2)
        rng = np.random.default_rng(15)
        arr_provider = random_history_provider(rng, times=2, shape=(4, 6))
        th = arr_provider.fields(0, (4, 6))
        assert th[(1, 1)].shape == (4, 6)
