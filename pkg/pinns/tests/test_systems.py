import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh

from pinns.exceptions import ParameterError
from pinns.solvers import exact_solution
from pinns.systems import (
    HEAT_SIZES, HarmonicOscillator, HeatSystem, IcScaling, heat_condition_number, heat_eigenvalues,
    heat_eigenvectors, make_benchmark_system, make_heat, make_shm, system_from_descriptor,
)


class HarmonicOscillatorTests(SimpleTestCase):
    def setUp(self):
        self.system = make_shm(1.0, 2 * math.pi)

    def test_exact_state_has_zero_residual(self):
        residual = self.system.residual(0.0, np.array([0.0, math.pi / 2]), np.array([-math.pi / 2, 0.0]))
        np.testing.assert_allclose(residual, [0.0, 0.0], atol=1e-15)

    def test_zero_state_has_zero_residual(self):
        np.testing.assert_array_equal(self.system.residual(1.0, np.zeros(2), np.zeros(2)), np.zeros(2))

    def test_generator_action(self):
        np.testing.assert_array_equal(self.system.residual(0.0, np.array([1.0, 0.0]), np.zeros(2)), [0.0, -1.0])
        np.testing.assert_array_equal(self.system.rhs(0.0, np.array([1.0, 0.0])), [0.0, 1.0])

    def test_assembled_generator(self):
        np.testing.assert_array_equal(self.system.assemble_generator().toarray(), [[0.0, -1.0], [1.0, 0.0]])
        self.assertEqual(self.system.spectral_norm(), 1.0)

    def test_defaults(self):
        np.testing.assert_array_equal(self.system.u0, [0.0, math.pi / 2])
        self.assertEqual(self.system.nu_ic, 1.0)
        self.assertEqual(self.system.complexity, 2.0)
        self.assertEqual(self.system.residual_trace_divisor(), 1.0)
        self.assertEqual(self.system.ic_trace_divisor(), 1.0)

    def test_invalid_parameters(self):
        with self.assertRaises(ParameterError):
            make_shm(0.0, 1.0)
        with self.assertRaises(ParameterError):
            make_shm(1.0, -1.0)


class HeatSystemTests(SimpleTestCase):
    def test_initial_condition_n4(self):
        system = make_heat(4)
        np.testing.assert_allclose(system.u0, [1.0, 1.8660254037844386, 0.1339745962155614, 1.0], atol=1e-12)
        self.assertEqual(system.horizon, 0.1)

    def test_steady_state_has_zero_residual(self):
        for n in (4, 7, 32):
            system = make_heat(n)
            residual = system.residual(0.0, np.ones(n), np.zeros(n))
            np.testing.assert_allclose(residual, np.zeros(n), atol=1e-9)
            np.testing.assert_array_equal(system.steady_state(), np.ones(n))

    def test_unequal_boundaries_steady_state(self):
        system = HeatSystem(6, u_left=0.0, u_right=2.0)
        steady = system.steady_state()
        np.testing.assert_allclose(system.rhs(0.0, steady), np.zeros(6), atol=1e-9)

    def test_matrix_free_matches_assembled(self):
        system = make_heat(9)
        A = system.assemble_generator().toarray()
        u = np.random.default_rng(0).standard_normal((3, 9))
        np.testing.assert_allclose(system.apply_generator(u), u @ A.T, rtol=1e-13)
        np.testing.assert_allclose(system.apply_generator_transpose(u), u @ A, rtol=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(3, 40), seed=st.integers(0, 2**32 - 1), t=st.floats(0.0, 0.1))
    def test_residual_is_affine(self, n, seed, t):
        system = make_heat(n)
        rng = np.random.default_rng(seed)
        u, u_t = rng.standard_normal(n), rng.standard_normal(n)
        lhs = system.residual(t, 2 * u, 2 * u_t) + system.residual(t, np.zeros(n), np.zeros(n))
        np.testing.assert_allclose(lhs, 2 * system.residual(t, u, u_t), rtol=1e-12, atol=1e-9 * (n - 1) ** 2)

    def test_scaling_switch(self):
        norm = abs(heat_eigenvalues(16)).max()
        ic_scaled = make_heat(16)
        self.assertAlmostEqual(ic_scaled.nu_ic, norm)
        self.assertEqual(ic_scaled.residual_scale, 1.0)
        residual_scaled = make_heat(16, scaling=IcScaling.RESIDUAL)
        self.assertEqual(residual_scaled.nu_ic, 1.0)
        self.assertAlmostEqual(residual_scaled.residual_scale, 1.0 / norm)

    def test_trace_divisors(self):
        system = make_heat(4)
        self.assertAlmostEqual(system.residual_trace_divisor(), 9.472, places=3)
        self.assertEqual(system.ic_trace_divisor(), 4.0)

    def test_too_few_points(self):
        with self.assertRaises(ParameterError):
            make_heat(2)


class EigenstructureTests(SimpleTestCase):
    def test_documented_eigenvalues(self):
        e = heat_eigenvalues(4)
        self.assertAlmostEqual(e[0], -3.4377, places=4)
        self.assertAlmostEqual(e[3], -32.562, places=3)

    def test_matches_dense_eigensolver(self):
        for n in (4, 8, 16):
            A = make_heat(n).assemble_generator().toarray()
            dense = eigh(A, eigvals_only=True)
            formula = np.sort(heat_eigenvalues(n))
            np.testing.assert_allclose(formula, dense, rtol=1e-9)

    def test_generator_symmetric(self):
        for n in (4, 9, 64):
            A = make_heat(n).assemble_generator().toarray()
            np.testing.assert_array_equal(A, A.T)

    def test_spectral_norm_matches_power_iteration(self):
        rng = np.random.default_rng(0)
        for n in (4, 16, 64):
            A = make_heat(n).assemble_generator().toarray()
            x = rng.standard_normal(n)
            # the top two eigenvalues sit close together at n = 64
            for _ in range(20000):
                x = A @ x
                x /= np.linalg.norm(x)
            estimate = abs(x @ A @ x)
            self.assertAlmostEqual(estimate / np.abs(heat_eigenvalues(n)).max(), 1.0, delta=1e-6)

    def test_eigenvectors_orthonormal(self):
        for n in (4, 11):
            V = heat_eigenvectors(n)
            np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
            A = make_heat(n).assemble_generator().toarray()
            np.testing.assert_allclose(A @ V, V * heat_eigenvalues(n), atol=1e-9 * n * n)

    def test_condition_numbers(self):
        self.assertAlmostEqual(heat_condition_number(4), 9.472, places=3)
        self.assertAlmostEqual(heat_condition_number(8), 32.16, places=2)
        for n in (4, 8, 16):
            dense = np.abs(eigh(make_heat(n).assemble_generator().toarray(), eigvals_only=True))
            self.assertAlmostEqual(heat_condition_number(n) / (dense.max() / dense.min()), 1.0, places=9)

    def test_condition_number_strictly_increasing(self):
        kappas = [heat_condition_number(n) for n in range(4, 513)]
        self.assertTrue(all(b > a for a, b in zip(kappas, kappas[1:])))


class ExactSolutionResidualTests(SimpleTestCase):
    def test_closed_forms_satisfy_the_systems(self):
        rng = np.random.default_rng(0)
        for system in (make_shm(1.0, 4 * math.pi), make_shm(2.5, 3.0), make_heat(4), make_heat(16)):
            t = rng.uniform(0.0, system.horizon, size=100)
            u, u_t = exact_solution(system, t)
            residual = system.residual(t, u, u_t)
            scale = max(1.0, system.spectral_norm())
            self.assertLessEqual(np.abs(residual).max(), 1e-9 * scale, msg=repr(system))


class FactoryTests(SimpleTestCase):
    def test_benchmark_complexity(self):
        shm = make_benchmark_system('shm', 4)
        self.assertIsInstance(shm, HarmonicOscillator)
        self.assertAlmostEqual(shm.horizon, 4 * math.pi)
        heat = make_benchmark_system('heat', 64)
        self.assertEqual(heat.n_points, 64)
        self.assertEqual(heat.horizon, 0.1)
        with self.assertRaises(ParameterError):
            make_benchmark_system('wave', 1)

    def test_descriptor_round_trip(self):
        for system in (make_shm(1.0, math.pi), make_heat(8, scaling=IcScaling.RESIDUAL)):
            rebuilt = system_from_descriptor(system.describe())
            self.assertEqual(rebuilt.describe(), system.describe())

    def test_heat_sizes(self):
        self.assertEqual(HEAT_SIZES, (4, 8, 16, 32, 64, 128, 256, 512))
