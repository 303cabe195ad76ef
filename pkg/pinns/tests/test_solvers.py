import csv
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from scipy.integrate import solve_ivp

from pinns.exceptions import ParameterError, StiffnessError
from pinns.solvers import (
    heat_spectral_solution, reference_solution, rk45_integrate, shm_closed_form,
)
from pinns.systems import HarmonicOscillator, make_heat, make_shm


class BrokenOscillator(HarmonicOscillator):
    """Right-hand side that turns NaN as soon as t leaves 0."""

    def rhs(self, t, u):
        if t > 0:
            return np.full_like(u, np.nan)
        return super().rhs(t, u)


class ClosedFormTests(SimpleTestCase):
    def test_initial_value_and_period(self):
        np.testing.assert_allclose(shm_closed_form(1.0, 0.0), [0.0, math.pi / 2])
        np.testing.assert_allclose(shm_closed_form(2.0, math.pi), [0.0, math.pi / 2], atol=1e-15)
        np.testing.assert_allclose(shm_closed_form(1.0, math.pi / 2), [-math.pi / 2, 0.0], atol=1e-15)

    def test_energy_constant(self):
        t = np.linspace(-10.0, 100.0, 1001)
        for omega in (1.0, 2.5):
            norms = np.linalg.norm(shm_closed_form(omega, t), axis=-1)
            np.testing.assert_allclose(norms, math.pi / 2, rtol=1e-14)

    def test_spectral_reconstructs_initial_condition(self):
        for n in (4, 16, 64):
            system = make_heat(n)
            np.testing.assert_allclose(heat_spectral_solution(system, 0.0), system.u0, atol=1e-10)

    def test_spectral_decays_to_steady_state(self):
        system = make_heat(4)
        np.testing.assert_allclose(heat_spectral_solution(system, 10 * system.horizon), np.ones(4), atol=1e-6)

    def test_spectral_shapes(self):
        system = make_heat(8)
        self.assertEqual(heat_spectral_solution(system, 0.05).shape, (8,))
        self.assertEqual(heat_spectral_solution(system, np.linspace(0, 0.1, 5)).shape, (5, 8))


class Rk45Tests(SimpleTestCase):
    def test_shm_quarter_period(self):
        system = make_shm(1.0, math.pi)
        trajectory = rk45_integrate(system, [math.pi / 2])
        np.testing.assert_allclose(trajectory.states[0], [-math.pi / 2, 0.0], atol=1e-8)

    def test_zero_point_is_exact_initial_condition(self):
        for system in (make_shm(1.0, math.pi), make_heat(8)):
            trajectory = rk45_integrate(system, [0.0])
            np.testing.assert_array_equal(trajectory.states[0], system.u0)
            self.assertEqual(trajectory.steps, 0)

    def test_shm_over_two_periods(self):
        system = make_shm(1.0, 4 * math.pi)
        t = np.linspace(0.0, 4 * math.pi, 257)
        trajectory = rk45_integrate(system, t, rtol=1e-10, atol=1e-12)
        self.assertLessEqual(np.abs(trajectory.states - shm_closed_form(1.0, t)).max(), 1e-8)

    def test_shm_over_two_periods_at_default_tolerance(self):
        # a 5(4) pair at rtol 1e-8 lands near 2.5e-8 from the closed form; scipy's RK45 is the yardstick
        system = make_shm(1.0, 4 * math.pi)
        t = np.linspace(0.0, 4 * math.pi, 257)
        ours = rk45_integrate(system, t, rtol=1e-8, atol=1e-10)
        theirs = solve_ivp(system.rhs, (0.0, system.horizon), system.u0, method='RK45',
                           t_eval=t, rtol=1e-8, atol=1e-10)
        exact = shm_closed_form(1.0, t)
        self.assertLessEqual(np.abs(ours.states - exact).max(), 1e-7)
        np.testing.assert_allclose(ours.states, theirs.y.T, atol=1e-9)

    def test_energy_drift_over_32pi(self):
        system = make_shm(1.0, 32 * math.pi)
        t = np.linspace(0.0, system.horizon, 2049)
        trajectory = rk45_integrate(system, t, rtol=1e-10, atol=1e-12)
        drift = np.abs(np.linalg.norm(trajectory.states, axis=-1) - math.pi / 2)
        self.assertLess(drift.max(), 1e-6)

    def test_tighter_tolerance_reduces_error(self):
        system = make_shm(1.0, 2 * math.pi)
        end = [2 * math.pi]
        loose = rk45_integrate(system, end, rtol=1e-6, atol=1e-8).states[0]
        tight = rk45_integrate(system, end, rtol=1e-6 / 32, atol=1e-8 / 32).states[0]
        exact = shm_closed_form(1.0, 2 * math.pi)
        self.assertLess(np.abs(tight - exact).max() * 4, np.abs(loose - exact).max())

    def test_heat_matches_spectral(self):
        for n in (4, 8, 16, 32):
            system = make_heat(n)
            t = np.linspace(0.0, 0.1, 11)
            trajectory = rk45_integrate(system, t, rtol=1e-10, atol=1e-12)
            np.testing.assert_allclose(trajectory.states, heat_spectral_solution(system, t), atol=1e-7)

    def test_agrees_with_scipy(self):
        system = make_shm(1.0, 8 * math.pi)
        t = np.linspace(0.0, system.horizon, 50)
        ours = rk45_integrate(system, t, rtol=1e-9, atol=1e-11)
        theirs = solve_ivp(system.rhs, (0.0, system.horizon), system.u0, method='RK45',
                           t_eval=t, rtol=1e-9, atol=1e-11)
        np.testing.assert_allclose(ours.states, theirs.y.T, atol=1e-7)

    def test_statistics_recorded(self):
        trajectory = rk45_integrate(make_shm(1.0, 2 * math.pi), [1.0, 2.0, 2 * math.pi])
        self.assertGreater(trajectory.steps, 0)
        self.assertGreaterEqual(trajectory.evaluations, 6 * trajectory.steps)
        self.assertEqual(trajectory.method, 'rk45')

    def test_rejects_bad_points(self):
        system = make_shm(1.0, math.pi)
        for points in ([], [0.5, 0.5], [1.0, 0.5], [-0.1], [4.0]):
            with self.assertRaises(ParameterError, msg=points):
                rk45_integrate(system, points)
        with self.assertRaises(ParameterError):
            rk45_integrate(system, [1.0], rtol=0.0)

    def test_step_underflow(self):
        system = BrokenOscillator(1.0, 1.0)
        with self.assertRaises(StiffnessError) as ctx:
            rk45_integrate(system, [0.5])
        self.assertEqual(ctx.exception.time, 0.0)


class ReferenceSolutionTests(SimpleTestCase):
    def test_auto_method_choice(self):
        self.assertEqual(reference_solution(make_shm(1.0, math.pi), [0.0, 1.0]).method, 'rk45')
        self.assertEqual(reference_solution(make_heat(8), [0.0, 0.05]).method, 'rk45')
        self.assertEqual(reference_solution(make_heat(128), [0.0, 0.05]).method, 'spectral')

    def test_explicit_methods(self):
        shm = reference_solution(make_shm(1.0, math.pi), [0.5, 1.0], method='closed_form')
        np.testing.assert_allclose(shm.states, shm_closed_form(1.0, np.array([0.5, 1.0])))
        with self.assertRaises(ParameterError):
            reference_solution(make_shm(1.0, math.pi), [0.5], method='spectral')
        with self.assertRaises(ParameterError):
            reference_solution(make_heat(4), [0.05], method='closed_form')
        with self.assertRaises(ParameterError):
            reference_solution(make_heat(4), [0.05], method='euler')

    def test_trajectory_csv(self):
        trajectory = reference_solution(make_heat(4), [0.0, 0.05, 0.1])
        with tempfile.TemporaryDirectory() as tmp:
            path = trajectory.to_csv(Path(tmp) / 'ref.csv')
            with open(path, newline='') as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ['t', 'u_1', 'u_2', 'u_3', 'u_4'])
        self.assertEqual(len(rows), 4)
        self.assertEqual(float(rows[2][0]), 0.05)
        self.assertEqual(float(rows[3][2]), trajectory.states[2, 1])
