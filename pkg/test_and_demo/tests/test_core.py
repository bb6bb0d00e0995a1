import math
import unittest
import sys
import os
sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))

from src.core import (FORCE_AXIS_SELECTOR, DiagonalSelector, PlanarPose, PlanarWrench, TimeStamp,
                      ZERO_WRENCH, normalize_angle, rotate_wrench, tool_to_world, world_to_tool,
                      wrench_project)


class TestPlanarWrench(unittest.TestCase):

    def test_negation_is_exact(self):
        w = PlanarWrench(0.1, -0.7, 3.3)
        self.assertEqual(w + (-w), ZERO_WRENCH)

    def test_non_finite_rejected(self):
        with self.assertRaises(ValueError):
            PlanarWrench(float("nan"), 0.0, 0.0)
        with self.assertRaises(ValueError):
            PlanarWrench(0.0, float("inf"), 0.0)


class TestWrenchProject(unittest.TestCase):

    def setUp(self):
        self.w = PlanarWrench(1.0, 2.0, 3.0)

    def test_zero_selector(self):
        self.assertEqual(wrench_project(self.w, DiagonalSelector(0, 0, 0)), ZERO_WRENCH)

    def test_identity_selector(self):
        self.assertEqual(wrench_project(self.w, DiagonalSelector(1, 1, 1)), self.w)

    def test_force_axis_selector(self):
        """Only the pressing axis survives the force-control selector."""
        w = PlanarWrench(f_z=0.5, f_y=-0.2, tau_x=0.1)
        self.assertEqual(wrench_project(w, FORCE_AXIS_SELECTOR), PlanarWrench(0.5, 0.0, 0.0))

    def test_projection_completeness(self):
        w = PlanarWrench(0.3, -1.7, 2.9e-3)
        for z in (0, 1):
            for y in (0, 1):
                for x in (0, 1):
                    selector = DiagonalSelector(z, y, x)
                    total = wrench_project(w, selector) + wrench_project(w, selector.complement())
                    self.assertEqual(total, w)

    def test_selector_entries_validated(self):
        with self.assertRaises(ValueError):
            DiagonalSelector(2, 0, 0)
        with self.assertRaises(ValueError):
            DiagonalSelector(1, 0.5, 0)


class TestRotation(unittest.TestCase):

    def test_identity_rotation(self):
        w = PlanarWrench(1.0, 0.0, 5.0)
        self.assertEqual(rotate_wrench(w, 0.0), w)

    def test_half_turn(self):
        rotated = rotate_wrench(PlanarWrench(1.0, 0.0, 0.0), math.pi)
        self.assertAlmostEqual(rotated.f_z, -1.0, delta=1e-12)
        self.assertAlmostEqual(rotated.f_y, 0.0, delta=1e-12)
        self.assertEqual(rotated.tau_x, 0.0)

    def test_force_norm_preserved(self):
        w = PlanarWrench(3.0, 4.0, 1.0)
        for theta in (0.3, -1.2, 2.5, 6.0):
            rotated = rotate_wrench(w, theta)
            self.assertAlmostEqual(math.hypot(rotated.f_z, rotated.f_y), 5.0, delta=1e-12)
            self.assertEqual(rotated.tau_x, 1.0)

    def test_composition(self):
        w = PlanarWrench(0.4, -2.0, 0.7)
        for a, b in ((0.5, 1.0), (-2.0, 6.0), (2 * math.pi, -2 * math.pi), (3.0, 3.0)):
            twice = rotate_wrench(rotate_wrench(w, a), b)
            once = rotate_wrench(w, a + b)
            for got, expected in zip(twice.as_array(), once.as_array()):
                self.assertAlmostEqual(got, expected, delta=1e-10)

    def test_frame_round_trip(self):
        w = PlanarWrench(1.0, 2.0, 0.1)
        back = tool_to_world(world_to_tool(w, 0.4), 0.4)
        for got, expected in zip(back.as_array(), w.as_array()):
            self.assertAlmostEqual(got, expected, delta=1e-12)

    def test_tool_z_maps_to_world(self):
        """A body turned by +90 degrees pushes along world -Y with its tool +Z."""
        world = tool_to_world(PlanarWrench(f_z=1.0), math.pi / 2)
        self.assertAlmostEqual(world.f_y, -1.0, delta=1e-12)
        self.assertAlmostEqual(world.f_z, 0.0, delta=1e-12)


class TestPoseAndTime(unittest.TestCase):

    def test_angle_normalized(self):
        self.assertAlmostEqual(PlanarPose(0.0, 0.0, 3 * math.pi / 2).theta, -math.pi / 2, delta=1e-12)
        self.assertEqual(normalize_angle(-math.pi), math.pi)
        self.assertEqual(PlanarPose(0.0, 0.0, math.pi).theta, math.pi)

    def test_timestamp_at_tick(self):
        stamp = TimeStamp.at_tick(40, 0.005)
        self.assertEqual(stamp.t, 40 * 0.005)
        with self.assertRaises(ValueError):
            TimeStamp(-1, 0.0)


if __name__ == '__main__':
    unittest.main()
