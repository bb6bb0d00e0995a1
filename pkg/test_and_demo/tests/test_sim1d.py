import unittest
import sys
import os
sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))

import numpy as np
import pandas as pd

from src.errors import DivergenceError
from src.sim1d import (Sim1dParams, Sim1dState, SweepField, SweepSpec, SweepSummary,
                       contact_force_1d, derivatives_1d, detect_contact_break_1d,
                       mechanical_energy, modal_log_decrement, oracle_trajectory, run_sweep,
                       simulate_1d, step_1dof)


def _energies(trace: pd.DataFrame, params: Sim1dParams) -> np.ndarray:
    return np.array([mechanical_energy(Sim1dState(r.x_i, r.v_i, r.x_t, r.v_t, r.t), params)
                     for r in trace.itertuples(index=False)])


class TestContactForce(unittest.TestCase):

    def test_no_penetration(self):
        self.assertEqual(contact_force_1d(0.0, 0.0, 250.0, 20.0), 0.0)

    def test_penetration_spring(self):
        self.assertAlmostEqual(contact_force_1d(-0.01, 0.0, 250.0, 20.0), 2.5, places=12)

    def test_approach_damping(self):
        self.assertAlmostEqual(contact_force_1d(0.0, -0.5, 250.0, 20.0), 10.0, places=12)


class TestDerivatives(unittest.TestCase):

    def test_equilibrium(self):
        self.assertEqual(derivatives_1d(Sim1dState(), Sim1dParams(k_ri=500.0)), (0.0, 0.0, 0.0, 0.0))

    def test_target_acceleration_on_approach(self):
        params = Sim1dParams(m_t=15.0)
        _, _, _, a_t = derivatives_1d(Sim1dState(v_i=0.5), params)
        self.assertAlmostEqual(a_t, contact_force_1d(0.0, -0.5, 250.0, 20.0) / 15.0, places=12)

    def test_internal_forces_cancel(self):
        params = Sim1dParams(b_ri=0.0, k_ri=0.0)
        state = Sim1dState(x_i=0.003, v_i=0.4, x_t=0.001, v_t=0.1)
        _, a_i, _, a_t = derivatives_1d(state, params)
        self.assertAlmostEqual(params.m_ri * a_i + params.m_t * a_t, 0.0, places=12)

    def test_static_hold(self):
        """Friction holds a resting target while the contact force stays below f_f."""
        params = Sim1dParams(f_f=20.0)
        _, _, _, a_t = derivatives_1d(Sim1dState(v_i=0.5), params)
        self.assertEqual(a_t, 0.0)

    def test_invalid_params(self):
        with self.assertRaises(ValueError):
            Sim1dParams(m_t=0.0)
        with self.assertRaises(ValueError):
            Sim1dParams(b_c=-1.0)


class TestStep(unittest.TestCase):

    def test_zero_state_stays_at_rest(self):
        state = step_1dof(Sim1dState(), Sim1dParams(), 1e-3)
        self.assertEqual(state.as_array().tolist(), [0.0, 0.0, 0.0, 0.0])
        self.assertEqual(state.t, 1e-3)

    def test_momentum_conserved(self):
        params = Sim1dParams(b_ri=0.0, k_ri=0.0)
        trace = simulate_1d(params, Sim1dState(v_i=0.5), 5.0, 1e-3)
        momentum = params.m_ri * trace["v_i"] + params.m_t * trace["v_t"]
        p0 = params.m_ri * 0.5
        self.assertLess(float(np.max(np.abs(momentum - p0))) / p0, 1e-9)

    def test_contact_is_passive(self):
        params = Sim1dParams(b_ri=0.0, k_ri=0.0)
        trace = simulate_1d(params, Sim1dState(v_i=0.5), 5.0, 1e-3)
        energy = _energies(trace, params)
        self.assertTrue(np.all(energy[1:] <= energy[:-1] * (1.0 + 1e-6)))
        self.assertLess(energy[-1], energy[0])

    def test_matches_closed_form(self):
        spec = SweepSpec(Sim1dParams(m_t=15.0), SweepField.MANIP_STIFFNESS, (500.0,))
        params = spec.params_for(500.0)
        trace = simulate_1d(params, spec.initial_state(), 1.0, 1e-4)
        sampled = trace.iloc[::100]
        oracle = oracle_trajectory(params, spec.initial_state(), sampled["t"].tolist())
        error = np.max(np.abs(sampled["F_c"].to_numpy() - oracle["F_c"].to_numpy()))
        self.assertLess(error, 1e-6)

    def test_fourth_order_convergence(self):
        spec = SweepSpec(Sim1dParams(m_t=15.0), SweepField.MANIP_STIFFNESS, (500.0,))
        params = spec.params_for(500.0)
        times = [0.01 * k for k in range(101)]
        oracle = oracle_trajectory(params, spec.initial_state(), times)["F_c"].to_numpy()
        coarse = simulate_1d(params, spec.initial_state(), 1.0, 0.01)["F_c"].to_numpy()
        fine = simulate_1d(params, spec.initial_state(), 1.0, 0.005)["F_c"].to_numpy()[::2]
        ratio = np.max(np.abs(coarse - oracle)) / np.max(np.abs(fine - oracle))
        self.assertGreater(ratio, 12.0)
        self.assertLess(ratio, 20.0)

    def test_divergence_detected(self):
        with self.assertRaises(DivergenceError):
            simulate_1d(Sim1dParams(k_c=1e9), Sim1dState(v_i=0.5), 1.0, 1e-3)

    def test_nonpositive_dt_rejected(self):
        with self.assertRaises(ValueError):
            step_1dof(Sim1dState(), Sim1dParams(), 0.0)


class TestSweeps(unittest.TestCase):

    def test_stiffness_raises_peak_force(self):
        spec = SweepSpec(Sim1dParams(m_t=15.0, b_ri=100.0), SweepField.MANIP_STIFFNESS, (0.0, 500.0, 2000.0))
        results = run_sweep(spec)
        peaks = [trace["F_c"].max() for _, trace in results]
        self.assertEqual([value for value, _ in results], [0.0, 500.0, 2000.0])
        self.assertLess(peaks[0], peaks[1])
        self.assertLess(peaks[1], peaks[2])
        self.assertTrue(detect_contact_break_1d(results[-1][1]["F_c"].to_numpy(), spec.dt))

    def test_heavier_target_hits_harder(self):
        spec = SweepSpec(Sim1dParams(b_ri=100.0, k_ri=0.0), SweepField.MASS_RATIO, (0.3, 0.75, 1.5))
        results = run_sweep(spec)
        peaks = [trace["F_c"].max() for _, trace in results]
        # ratio 0.3 is the heaviest target
        self.assertGreater(peaks[0], peaks[1])
        self.assertGreater(peaks[1], peaks[2])
        self.assertLess(results[0][1]["F_c"].min(), 0.0)

    def test_damping_speeds_up_decay(self):
        spec = SweepSpec(Sim1dParams(m_t=25.0, k_ri=0.0), SweepField.MANIP_DAMPING, (10.0, 20.0, 40.0))
        decrements = [modal_log_decrement(spec.params_for(v)) for v in spec.values]
        self.assertLess(decrements[0], decrements[1])
        self.assertLess(decrements[1], decrements[2])
        summary = SweepSummary.from_results(spec, run_sweep(spec)).to_frame()
        self.assertEqual(summary["log_decrement"].tolist(), decrements)

    def test_heavy_damping_pins_the_arm(self):
        """Past about 100 N·s/m the arm follows its commanded motion and the contact rings longer."""
        decrements = [modal_log_decrement(Sim1dParams(m_t=25.0, k_ri=0.0, b_ri=b, v_ref=0.5))
                      for b in (20.0, 100.0, 300.0)]
        self.assertAlmostEqual(decrements[0], 2.944, delta=0.01)
        self.assertAlmostEqual(decrements[1], 3.821, delta=0.01)
        self.assertAlmostEqual(decrements[2], 1.651, delta=0.01)

    def test_single_value_sweep_matches_stepping(self):
        spec = SweepSpec(Sim1dParams(), SweepField.MANIP_STIFFNESS, (500.0,), duration=0.5)
        (_, trace), = run_sweep(spec)
        state = spec.initial_state()
        params = spec.params_for(500.0)
        for tick in range(1, 501):
            state = step_1dof(state, params, spec.dt, tick)
        last = trace.iloc[-1]
        self.assertEqual(last["x_i"], state.x_i)
        self.assertEqual(last["v_t"], state.v_t)
        self.assertEqual(len(trace), 501)

    def test_sweep_is_deterministic(self):
        spec = SweepSpec(Sim1dParams(), SweepField.MANIP_STIFFNESS, (0.0, 2000.0), duration=1.0)
        sequential = run_sweep(spec)
        threaded = run_sweep(spec, max_workers=2)
        for (v1, t1), (v2, t2) in zip(sequential, threaded):
            self.assertEqual(v1, v2)
            pd.testing.assert_frame_equal(t1, t2, check_exact=True)

    def test_divergence_tagged_with_value(self):
        spec = SweepSpec(Sim1dParams(k_c=1e9), SweepField.MANIP_STIFFNESS, (0.0, 500.0))
        with self.assertRaises(DivergenceError) as ctx:
            run_sweep(spec)
        self.assertEqual(ctx.exception.parameter_value, 0.0)
        self.assertGreater(ctx.exception.tick, 0)

    def test_spec_validation(self):
        with self.assertRaises(ValueError):
            SweepSpec(Sim1dParams(), SweepField.MANIP_STIFFNESS, ())
        with self.assertRaises(ValueError):
            SweepSpec(Sim1dParams(), SweepField.MANIP_STIFFNESS, (1.0, 3.0, 2.0))
        with self.assertRaises(ValueError):
            SweepSpec(Sim1dParams(), SweepField.MANIP_STIFFNESS, (1.0,), duration=0.005, dt=1e-3)


class TestContactBreaks(unittest.TestCase):

    def test_all_positive(self):
        self.assertEqual(detect_contact_break_1d([1.0, 2.0, 0.5]), [])

    def test_constructed_trace(self):
        (start, end), = detect_contact_break_1d([1.0, -1.0, -1.0, 2.0], dt=0.01)
        self.assertAlmostEqual(start, 0.01, places=12)
        self.assertAlmostEqual(end, 0.02, places=12)

    def test_empty_trace_rejected(self):
        with self.assertRaises(ValueError):
            detect_contact_break_1d([])


if __name__ == '__main__':
    unittest.main()
