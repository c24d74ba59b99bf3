import math
import unittest

import numpy as np

from aseplab.errors import ErrorCode, LabError
from aseplab.models import BinaryMeasure, BoundaryParams, GridSide, Which
from aseplab.services import asep_exact, limits


class DistanceTests(unittest.TestCase):
    def test_bernoulli_product(self):
        np.testing.assert_allclose(limits.bernoulli_product(2, 0.5).weights, [0.25] * 4)
        np.testing.assert_allclose(limits.bernoulli_product(2, 0.2).weights, [0.64, 0.16, 0.16, 0.04])

    def test_tv_distance(self):
        point = BinaryMeasure(m=1, weights=[1.0, 0.0])
        self.assertAlmostEqual(limits.tv_distance(limits.bernoulli_product(1, 0.5), point), 0.5)

    def test_gf_tv_bound(self):
        point = BinaryMeasure(m=1, weights=[1.0, 0.0])
        bound = limits.gf_tv_bound(limits.bernoulli_product(1, 0.5), point, [(1.0, 2.0)])
        self.assertAlmostEqual(bound, 0.75, places=14)

    def test_gf_tv_bound_dominates_tv(self):
        mu = limits.bernoulli_product(3, 0.3)
        nu = limits.bernoulli_product(3, 0.35)
        grid = limits.node_grid(3, 0.4, GridSide.AT_OR_ABOVE_ONE)
        self.assertGreaterEqual(limits.gf_tv_bound(mu, nu, grid), limits.tv_distance(mu, nu))

    def test_bad_node_pair(self):
        with self.assertRaises(LabError) as ctx:
            limits.gf_values(limits.bernoulli_product(1, 0.5), [(1.2, 1.1)])
        self.assertEqual(ctx.exception.code, ErrorCode.DOMAIN)


class InversionTests(unittest.TestCase):
    def test_node_grid(self):
        above = limits.node_grid(2, 0.5, GridSide.AT_OR_ABOVE_ONE)
        np.testing.assert_allclose(np.array(above.nodes), [[1.1, 1.2], [1.3, 1.4]])
        below = limits.node_grid(2, 0.5, GridSide.AT_OR_BELOW_ONE)
        np.testing.assert_allclose(np.array(below.nodes), [[0.6, 0.7], [0.8, 0.9]])

    def test_recovers_bernoulli_product(self):
        rho = 0.3
        grid = limits.node_grid(3, 0.5, GridSide.AT_OR_ABOVE_ONE)
        recovered = limits.measure_from_gf(lambda times: math.prod(1 - rho + rho * t for t in times), grid)
        np.testing.assert_allclose(recovered.weights, limits.bernoulli_product(3, rho).weights, atol=1e-12)

    def test_negative_mass(self):
        grid = limits.node_grid(1, 0.5, GridSide.AT_OR_ABOVE_ONE)
        with self.assertRaises(LabError) as ctx:
            limits.measure_from_gf(lambda times: 1.2 - 0.2 * times[0], grid)
        self.assertEqual(ctx.exception.code, ErrorCode.NEGATIVE_MASS)

    def test_epsilon_rule_resonance(self):
        with self.assertRaises(LabError) as ctx:
            limits.epsilon_rule(2.0, 0.0, 4.0, 0.5)
        self.assertEqual(ctx.exception.code, ErrorCode.PHASE)

    def test_epsilon_rule_q_bound(self):
        self.assertAlmostEqual(limits.epsilon_rule(0.0, 0.0, 0.0, 0.5), 0.9, places=14)


class RateTests(unittest.TestCase):
    def test_theta(self):
        self.assertAlmostEqual(limits.theta_from_support(BoundaryParams(A=3.0, q=0.01)), 0.75, places=12)
        self.assertAlmostEqual(limits.theta_from_support(BoundaryParams(A=3.0, q=0.5)), 25 / 32, places=12)

    def test_theta_with_a_single_atom(self):
        for q in (0.0, 0.5):
            theta = limits.theta_from_support(BoundaryParams(A=2.0, C=0.5, q=q))
            self.assertAlmostEqual(theta, 8.0 / 9.0, places=12)

    def test_theta_needs_a_pure_phase(self):
        with self.assertRaises(LabError) as ctx:
            limits.theta_from_support(BoundaryParams(A=0.5, C=0.5, q=0.5))
        self.assertEqual(ctx.exception.code, ErrorCode.PHASE)

    def test_rate_budget(self):
        self.assertAlmostEqual(limits.rate_budget(math.exp(-3.0)), 1.0, places=14)
        with self.assertRaises(LabError) as ctx:
            limits.rate_budget(1.0)
        self.assertEqual(ctx.exception.code, ErrorCode.DOMAIN)

    def test_budget_report(self):
        report = limits.budget_report(0.5, 1.0)
        self.assertIsNotNone(report.N)
        self.assertLess(report.final_log10, -6.0)
        self.assertIsNotNone(report.below_target_at)

    def test_fit_H(self):
        # theta^1 (H * 1)^3 = 4 at theta = 0.5 gives H = 2
        self.assertAlmostEqual(limits.fit_H([(1, 4.0)], 0.5, 1), 2.0, places=12)
        self.assertEqual(limits.fit_H([(3, 0.0)], 0.5, 1), 0.0)


class LimitMeasureTests(unittest.TestCase):
    def test_lambda_on_the_bernoulli_line(self):
        measure = limits.lambda_measure(BoundaryParams(A=2.0, C=0.5, q=0.5), 2)
        self.assertLess(limits.tv_distance(measure, limits.bernoulli_product(2, 2 / 3)), 1e-6)

    def test_eta_in_high_density(self):
        measure = limits.eta_measure(BoundaryParams(A=3.0, C=0.6, q=0.5), 1)
        self.assertAlmostEqual(measure.weights[1], 0.75, places=5)

    def test_lambda_needs_high_density(self):
        with self.assertRaises(LabError) as ctx:
            limits.lambda_measure(BoundaryParams(A=0.5, C=3.0, q=0.5), 1)
        self.assertEqual(ctx.exception.code, ErrorCode.PHASE)

    def test_lambda_consistency(self):
        params = BoundaryParams(A=3.0, C=0.6, q=0.5)
        larger = limits.lambda_measure(params, 3)
        first = asep_exact.marginal(larger, Which.FIRST, 2)
        self.assertLess(limits.tv_distance(first, limits.lambda_measure(params, 2)), 1e-8)

    def test_eta_consistency_is_on_the_last_sites(self):
        params = BoundaryParams(A=0.6, C=3.0, q=0.5)
        larger, smaller = limits.eta_measure(params, 3), limits.eta_measure(params, 2)
        self.assertLess(limits.tv_distance(asep_exact.marginal(larger, Which.LAST, 2), smaller), 1e-8)
        self.assertGreater(limits.tv_distance(asep_exact.marginal(larger, Which.FIRST, 2), smaller), 1e-4)

    def test_low_density_first_marginal_target(self):
        label, target, grid = limits.limit_target(BoundaryParams(A=0.5, C=3.0, q=0.5), 2, Which.FIRST)
        self.assertEqual(label, "bernoulli")
        self.assertIsNone(grid)
        np.testing.assert_allclose(target.weights, limits.bernoulli_product(2, 0.25).weights)


class ConvergenceScanTests(unittest.TestCase):
    def assertDecays(self, result, theta):
        tvs = [row.tv for row in result.rows]
        self.assertAlmostEqual(result.theta, theta, places=12)
        self.assertTrue(all(later < earlier for earlier, later in zip(tvs, tvs[1:])), tvs)
        self.assertLessEqual(tvs[-1] / tvs[-2], 1.2 * theta ** 2)
        for row in result.rows:
            self.assertGreaterEqual(row.fitted_bound, row.tv * (1 - 1e-9))

    def test_low_density_scan(self):
        result = limits.convergence_scan(BoundaryParams(A=0.5, C=3.0, q=0.5), [8, 4, 10, 6], 2)
        self.assertEqual(result.target, "bernoulli_2")
        self.assertEqual([row.n for row in result.rows], [4, 6, 8, 10])
        self.assertDecays(result, 25.0 / 32.0)

    def test_high_density_scan(self):
        result = limits.convergence_scan(BoundaryParams(A=3.0, C=0.6, q=0.5), [4, 6, 8, 10], 2)
        self.assertEqual(result.target, "lambda_2")
        self.assertIsNotNone(result.nodes)
        self.assertDecays(result, 25.0 / 32.0)

    def test_scan_on_the_boundary_line(self):
        result = limits.convergence_scan(BoundaryParams(A=2.0, C=0.5, q=0.5), [3, 5], 1)
        self.assertAlmostEqual(result.theta, 8.0 / 9.0, places=12)
        self.assertTrue(all(row.tv < 1e-6 for row in result.rows))


if __name__ == "__main__":
    unittest.main()
