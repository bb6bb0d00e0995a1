import unittest
import sys
import os
sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))

from dataclasses import replace

from src.control import (ControllerConfig, ControllerMode, ControllerState, DecouplingModel,
                         ForceControllerGains, ImpedanceGains, InertiaReductionGains, compose_control,
                         controller_step, decouple_cmd, force_pi_cmd, impedance_cmd, inertia_reduction_cmd)
from src.core import (FORCE_AXIS_SELECTOR, DiagonalSelector, PlanarPose, PlanarTwist, PlanarWrench,
                      ZERO_WRENCH)
from src.errors import DivergenceError
from src.plant2d import PlantParams, PlantState, WallContactPlant, step_plant

DT = 0.005


def _press(f: float) -> PlanarWrench:
    """Sensor reading while pressing with force f along tool +Z."""
    return PlanarWrench(f_z=-f)


class TestImpedance(unittest.TestCase):

    def setUp(self):
        self.gains = ImpedanceGains()

    def test_equilibrium(self):
        pose = PlanarPose(0.01, -0.2, 0.1)
        self.assertEqual(impedance_cmd(pose, pose, PlanarTwist(), self.gains), ZERO_WRENCH)

    def test_stiffness_term(self):
        w = impedance_cmd(PlanarPose(0.0, 0.0), PlanarPose(0.0, 0.01), PlanarTwist(), self.gains)
        self.assertAlmostEqual(w.f_z, 5.0, places=12)

    def test_damping_term(self):
        w = impedance_cmd(PlanarPose(), PlanarPose(), PlanarTwist(v_z=0.1), self.gains)
        self.assertAlmostEqual(w.f_z, -0.1, places=12)

    def test_negative_gain_rejected(self):
        with self.assertRaises(ValueError):
            ImpedanceGains(k_z=-1.0)


class TestForcePI(unittest.TestCase):

    def setUp(self):
        self.gains = ForceControllerGains(k_zp=1.0, k_zi=0.07, f_z_ref=0.8, integral_limit=10.0)

    def test_zero_error(self):
        command, integral = force_pi_cmd(0.8, self.gains, 0.0, DT)
        self.assertEqual(command, 0.0)
        self.assertEqual(integral, 0.0)

    def test_one_step(self):
        # e = -0.8, integral = -0.004, command = 0.8 + 0.07 * 0.004
        command, integral = force_pi_cmd(0.0, self.gains, 0.0, DT)
        self.assertAlmostEqual(integral, -0.004, places=15)
        self.assertAlmostEqual(command, 0.80028, places=12)

    def test_anti_windup(self):
        gains = replace(self.gains, f_z_ref=0.0)
        integral = 0.0
        for _ in range(10000):
            _, integral = force_pi_cmd(1.0, gains, integral, DT)
            self.assertLessEqual(abs(integral), 10.0)
        self.assertEqual(integral, 10.0)

    def test_integration_can_be_skipped(self):
        command, integral = force_pi_cmd(0.0, self.gains, 0.0, DT, integrate=False)
        self.assertEqual(integral, 0.0)
        self.assertAlmostEqual(command, 0.8, places=15)

    def test_invalid_dt(self):
        with self.assertRaises(ValueError):
            force_pi_cmd(0.0, self.gains, 0.0, 0.0)


class TestInertiaReduction(unittest.TestCase):

    def test_zero_wrench(self):
        self.assertEqual(inertia_reduction_cmd(ZERO_WRENCH, InertiaReductionGains()), ZERO_WRENCH)

    def test_feedback_gains(self):
        w = PlanarWrench(f_z=0.8, f_y=0.4, tau_x=0.1)
        command = inertia_reduction_cmd(w, InertiaReductionGains(k_yp=0.2, k_xp=0.5))
        self.assertEqual(command.f_z, 0.0)
        self.assertAlmostEqual(command.f_y, 0.08, places=15)
        self.assertAlmostEqual(command.tau_x, 0.05, places=15)

    def test_zero_gains_degenerate(self):
        w = PlanarWrench(f_z=3.0, f_y=-2.0, tau_x=0.7)
        self.assertEqual(inertia_reduction_cmd(w, InertiaReductionGains(0.0, 0.0)), ZERO_WRENCH)


class TestCompose(unittest.TestCase):

    def test_zero_parts(self):
        self.assertEqual(compose_control(ZERO_WRENCH, ZERO_WRENCH), ZERO_WRENCH)

    def test_off_axis_leakage_masked(self):
        force_part = PlanarWrench(f_z=0.8, f_y=99.0, tau_x=99.0)
        self.assertEqual(compose_control(force_part, ZERO_WRENCH, FORCE_AXIS_SELECTOR), PlanarWrench(f_z=0.8))

    def test_reconstruction(self):
        w = PlanarWrench(0.3, -0.4, 0.05)
        for selector in (DiagonalSelector(1, 0, 0), DiagonalSelector(0, 1, 1), DiagonalSelector(1, 1, 1)):
            self.assertEqual(compose_control(w, w, selector), w)

    def test_non_complementary_selectors_rejected(self):
        with self.assertRaises(ValueError):
            compose_control(ZERO_WRENCH, ZERO_WRENCH, FORCE_AXIS_SELECTOR, DiagonalSelector(1, 1, 1))


class TestDecouple(unittest.TestCase):

    def test_identity_decoupling(self):
        f_star = PlanarWrench(0.5, -0.3, 0.02)
        model = DecouplingModel(m_hat=(1.0, 2.0, 3.0), m_d=(1.0, 2.0, 3.0))
        self.assertEqual(decouple_cmd(f_star, model, ZERO_WRENCH), f_star)

    def test_half_inertia_doubles(self):
        f_star = PlanarWrench(0.5, -0.3, 0.02)
        model = DecouplingModel(m_hat=(1.0, 2.0, 0.6), m_d=(0.5, 1.0, 0.3))
        command = decouple_cmd(f_star, model, ZERO_WRENCH)
        for got, expected in zip(command.as_array(), f_star.scale(2.0).as_array()):
            self.assertAlmostEqual(got, expected, places=15)

    def test_measured_wrench_cancelled(self):
        model = DecouplingModel(m_hat=(1.0, 1.0, 1.0), m_d=(1.0, 1.0, 1.0))
        w = PlanarWrench(-0.8, 0.2, 0.01)
        self.assertEqual(decouple_cmd(ZERO_WRENCH, model, w), -w)

    def test_compensation_disabled(self):
        f_star = PlanarWrench(0.5, -0.3, 0.02)
        model = DecouplingModel(compensation_enabled=False)
        self.assertEqual(decouple_cmd(f_star, model, PlanarWrench(1.0, 1.0, 1.0)), f_star)

    def test_desired_inertia_on_plant(self):
        """F* = 1 N on a desired inertia of half the end-effector mass accelerates at 2/m."""
        params = PlantParams()
        m_ee = params.ee_mass
        model = DecouplingModel(m_hat=(m_ee, m_ee, params.ee_inertia), m_d=(0.5 * m_ee, m_ee, params.ee_inertia))
        command = decouple_cmd(PlanarWrench(f_z=1.0), model, ZERO_WRENCH)
        state = PlantState.initial(params, PlanarPose(0.0, -0.5, 0.0))
        for _ in range(5):
            state = step_plant(state, command, params, DT / 5)
        self.assertAlmostEqual(state.ee.twist.v_z / DT, 2.0 / m_ee, delta=0.02 * 2.0 / m_ee)

    def test_inertia_must_be_positive(self):
        with self.assertRaises(ValueError):
            DecouplingModel(m_d=(0.0, 1.0, 1.0))


class TestPressedWall(unittest.TestCase):

    def test_pi_holds_reference(self):
        config = ControllerConfig()
        plant = WallContactPlant(mass=7.5, k_c=250.0, b_c=20.0)
        integral = 0.0
        window = []
        for tick in range(2000):
            w = plant.read_sensor()
            f_z, integral = force_pi_cmd(-w.f_z, config.force, integral, DT)
            command = decouple_cmd(compose_control(PlanarWrench(f_z=f_z), ZERO_WRENCH), config.decoupling, w)
            force = plant.step(command, DT)
            if tick >= 1800:
                window.append(force)
        mean = sum(window) / len(window)
        self.assertAlmostEqual(mean, 0.8, delta=0.05 * 0.8)

    def _lateral_feedback(self, k_yp: float) -> float:
        decoupling = DecouplingModel(m_d=(0.5, 1.0, 0.3))
        gains = InertiaReductionGains(k_yp=k_yp, k_xp=0.0)
        plant = WallContactPlant(axis="y", bilateral=True, x0=0.001)
        largest = 0.0
        for _ in range(2000):
            w = plant.read_sensor()
            f_star = compose_control(ZERO_WRENCH, inertia_reduction_cmd(w, gains))
            plant.step(decouple_cmd(f_star, decoupling, w), DT)
            largest = max(largest, abs(plant.x))
        return largest

    def test_positive_feedback_diverges_at_high_gain(self):
        with self.assertRaises(DivergenceError):
            self._lateral_feedback(20.0)

    def test_positive_feedback_bounded_below_half(self):
        for k_yp in (2.0, 5.0):
            self.assertLess(self._lateral_feedback(k_yp), 0.002)


class TestControllerStep(unittest.TestCase):

    def setUp(self):
        self.config = ControllerConfig()
        self.pose = PlanarPose(0.02, -0.2, 0.0)
        self.state = ControllerState.start(self.pose)

    def test_free_space_is_impedance(self):
        state = self.state
        twist = PlanarTwist(0.0, 0.03, 0.0)
        for tick in range(50):
            t = tick * DT
            command, mode, state = controller_step(state, ZERO_WRENCH, self.pose, twist, self.config, t, DT)
            expected = impedance_cmd(self.pose, state.setpoint(t, self.config.chase_speed), twist,
                                     self.config.impedance)
            self.assertIs(mode, ControllerMode.FREE_SPACE_IMPEDANCE)
            self.assertEqual(command, expected)

    def test_chase_setpoint_advances(self):
        setpoint = self.state.setpoint(1.0, self.config.chase_speed)
        self.assertAlmostEqual(setpoint.z - self.pose.z, 0.08, places=12)
        self.assertEqual(setpoint.y, self.pose.y)

    def test_contact_detection_needs_consecutive_ticks(self):
        _, mode, state = controller_step(self.state, _press(0.5), self.pose, PlanarTwist(), self.config, 0.0, DT)
        self.assertIs(mode, ControllerMode.FREE_SPACE_IMPEDANCE)
        _, mode, state = controller_step(state, ZERO_WRENCH, self.pose, PlanarTwist(), self.config, DT, DT)
        self.assertIs(mode, ControllerMode.FREE_SPACE_IMPEDANCE)
        _, mode, state = controller_step(state, _press(0.5), self.pose, PlanarTwist(), self.config, 2 * DT, DT)
        _, mode, state = controller_step(state, _press(0.5), self.pose, PlanarTwist(), self.config, 3 * DT, DT)
        self.assertIs(mode, ControllerMode.CONTACT_FORCE_CONTROL)

    def test_integral_is_zero_on_entry(self):
        state = self.state
        for tick in range(2):
            _, mode, state = controller_step(state, _press(0.5), self.pose, PlanarTwist(), self.config,
                                             tick * DT, DT)
        self.assertIs(mode, ControllerMode.CONTACT_FORCE_CONTROL)
        self.assertEqual(state.integral, 0.0)
        # proportional part only
        self.assertAlmostEqual(state.f_star.f_z, -(0.5 - 0.8), places=15)
        _, _, state = controller_step(state, _press(0.5), self.pose, PlanarTwist(), self.config, 2 * DT, DT)
        self.assertAlmostEqual(state.integral, (0.5 - 0.8) * DT, places=15)

    def _in_contact(self, config: ControllerConfig) -> ControllerState:
        state = self.state
        for tick in range(2):
            _, _, state = controller_step(state, _press(0.5), self.pose, PlanarTwist(), config, tick * DT, DT)
        return state

    def test_contact_loss_debounce(self):
        state = self._in_contact(self.config)
        for tick in range(9):
            _, mode, state = controller_step(state, ZERO_WRENCH, self.pose, PlanarTwist(), self.config,
                                             (2 + tick) * DT, DT)
            self.assertIs(mode, ControllerMode.CONTACT_FORCE_CONTROL)
        _, mode, state = controller_step(state, ZERO_WRENCH, self.pose, PlanarTwist(), self.config, 11 * DT, DT)
        self.assertIs(mode, ControllerMode.FREE_SPACE_IMPEDANCE)
        # chase resumes from the current pose
        self.assertAlmostEqual(state.setpoint(11 * DT, self.config.chase_speed).z, self.pose.z, places=12)

    def test_force_only_has_no_lateral_command(self):
        config = replace(self.config, inertia_reduction=InertiaReductionGains(0.0, 0.0),
                         force=replace(self.config.force, f_z_ref=1.5))
        state = self._in_contact(config)
        w = PlanarWrench(f_z=-1.2, f_y=0.4, tau_x=0.03)
        for tick in range(20):
            _, _, state = controller_step(state, w, self.pose, PlanarTwist(), config, (2 + tick) * DT, DT)
            self.assertEqual(state.f_star.f_y, 0.0)
            self.assertEqual(state.f_star.tau_x, 0.0)

        uncompensated = replace(config, decoupling=replace(config.decoupling, compensation_enabled=False))
        state = self._in_contact(uncompensated)
        command, _, _ = controller_step(state, w, self.pose, PlanarTwist(), uncompensated, 2 * DT, DT)
        self.assertEqual(command.f_y, 0.0)
        self.assertEqual(command.tau_x, 0.0)

    def test_subspaces_do_not_interfere(self):
        w = PlanarWrench(f_z=-0.6, f_y=0.3, tau_x=0.02)
        base = self.config
        other_reduction = replace(base, inertia_reduction=InertiaReductionGains(1.3, 1.9))
        other_pi = replace(base, force=ForceControllerGains(k_zp=3.0, k_zi=0.5, f_z_ref=1.1))

        def f_star(config):
            state = self._in_contact(config)
            _, _, state = controller_step(state, w, self.pose, PlanarTwist(), config, 2 * DT, DT)
            return state.f_star

        reference = f_star(base)
        self.assertEqual(f_star(other_reduction).f_z, reference.f_z)
        self.assertEqual(f_star(other_pi).f_y, reference.f_y)
        self.assertEqual(f_star(other_pi).tau_x, reference.tau_x)


if __name__ == '__main__':
    unittest.main()
