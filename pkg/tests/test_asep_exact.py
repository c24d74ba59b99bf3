import unittest

import numpy as np

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.models import BinaryMeasure, BoundaryParams, OpenAsepRates, Phase, Region, Which
from aseplab.services import asep_exact, limits


class ParameterizationTests(unittest.TestCase):
    def test_totally_asymmetric_example(self):
        params = asep_exact.rates_to_boundary(OpenAsepRates(alpha=1.0, beta=0.25))
        self.assertAlmostEqual(params.A, 3.0, places=14)
        self.assertEqual((params.B, params.C, params.D), (0.0, 0.0, 0.0))

    def test_inverse_map(self):
        rates = asep_exact.boundary_to_rates(BoundaryParams(A=0.0, C=1.0))
        self.assertAlmostEqual(rates.alpha, 0.5, places=14)
        self.assertAlmostEqual(rates.beta, 1.0, places=14)

    def test_round_trip(self):
        rates = OpenAsepRates(alpha=0.7, beta=1.3, gamma=0.2, delta=0.45, q=0.35)
        back = asep_exact.boundary_to_rates(asep_exact.rates_to_boundary(rates))
        for field in ("alpha", "beta", "gamma", "delta", "q"):
            self.assertAlmostEqual(getattr(back, field), getattr(rates, field), places=12)

    def test_invalid_rates(self):
        with self.assertRaises(ValueError):
            OpenAsepRates(alpha=0.0, beta=1.0)


class PhaseTests(unittest.TestCase):
    def test_labels(self):
        self.assertEqual((asep_exact.phase_of(3, 0.5), asep_exact.region_of(3, 0.5)), (Phase.HD, Region.SHOCK))
        self.assertEqual((asep_exact.phase_of(0.5, 0.5), asep_exact.region_of(0.5, 0.5)), (Phase.MC, Region.FAN))
        self.assertEqual((asep_exact.phase_of(2, 0.5), asep_exact.region_of(2, 0.5)), (Phase.HD, Region.BOUNDARY))
        self.assertEqual(asep_exact.phase_of(0.5, 3), Phase.LD)
        self.assertEqual(asep_exact.phase_of(1.0, 0.3), Phase.BOUNDARY)

    def test_classify_on_the_boundary_line(self):
        # AC = 1 leaves a single atom at (A + 1/A) / 2 = 1.25, so y0* falls back to 1
        for q in (0.0, 0.5):
            info = asep_exact.classify_phase(2.0, 0.5, q)
            self.assertEqual((info.phase, info.region), (Phase.HD, Region.BOUNDARY))
            self.assertAlmostEqual(info.theta, 8.0 / 9.0, places=12)
            self.assertAlmostEqual(info.budget_s, limits.rate_budget(8.0 / 9.0), places=14)

    def test_classify_near_the_boundary_line(self):
        for C, region in ((0.4, Region.FAN), (0.75, Region.SHOCK)):
            info = asep_exact.classify_phase(2.0, C, 0.4)
            self.assertEqual((info.phase, info.region), (Phase.HD, region))
            self.assertTrue(0.0 < info.theta < 1.0)
        for A, region in ((0.4, Region.FAN), (0.75, Region.SHOCK)):
            info = asep_exact.classify_phase(A, 2.0, 0.0)
            self.assertEqual((info.phase, info.region), (Phase.LD, region))

    def test_classify_reports_theta_and_budget(self):
        info = asep_exact.classify_phase(3.0, 0.5, 0.5)
        self.assertAlmostEqual(info.theta, 25.0 / 32.0, places=12)
        self.assertAlmostEqual(info.budget_s, limits.rate_budget(25.0 / 32.0), places=14)
        self.assertIsNone(asep_exact.classify_phase(0.5, 0.5, 0.5).theta)


class StationaryTests(unittest.TestCase):
    def test_one_site(self):
        rates = OpenAsepRates(alpha=1.0, beta=2.0, gamma=0.5, delta=0.25, q=0.0)
        measure = asep_exact.stationary_measure(1, rates)
        self.assertAlmostEqual(measure.weights[1], 1.25 / 3.75, places=12)

    def test_bernoulli_line(self):
        measure = asep_exact.stationary_measure(6, OpenAsepRates(alpha=0.25, beta=0.75))
        expected = limits.bernoulli_product(6, 0.25)
        self.assertLess(limits.tv_distance(measure, expected), 1e-10)

    def test_solver_methods_agree(self):
        rates = OpenAsepRates(alpha=0.6, beta=0.9, gamma=0.1, delta=0.2, q=0.4)
        dense = asep_exact.solve_stationary(4, rates)
        extended = asep_exact.solve_stationary(4, rates, extended=True)
        self.assertEqual(dense.method, "dense-lu")
        self.assertEqual(extended.method, "mpmath-lu")
        np.testing.assert_allclose(dense.measure.weights, extended.measure.weights, atol=1e-12)
        self.assertGreater(dense.sigma2, 0.0)

    def test_sparse_solver(self):
        previous = settings.dense_solver_max
        settings.dense_solver_max = 2
        try:
            rates = OpenAsepRates(alpha=0.6, beta=0.9, gamma=0.1, delta=0.2, q=0.4)
            sparse_solution = asep_exact.solve_stationary(4, rates)
        finally:
            settings.dense_solver_max = previous
        self.assertEqual(sparse_solution.method, "sparse-lu")
        np.testing.assert_allclose(
            sparse_solution.measure.weights, asep_exact.stationary_measure(4, rates).weights, atol=1e-12
        )

    def test_cap(self):
        with self.assertRaises(LabError) as ctx:
            asep_exact.solve_stationary(settings.solver_cap + 1, OpenAsepRates(alpha=1.0, beta=1.0))
        self.assertEqual(ctx.exception.code, ErrorCode.CAP_EXCEEDED)

    def test_particle_hole_duality(self):
        params = BoundaryParams(A=2.0, B=-0.3, C=0.7, D=-0.4, q=0.3)
        mu = asep_exact.stationary_from_params(5, params)
        nu = asep_exact.stationary_from_params(5, params.dual())
        np.testing.assert_allclose(asep_exact.particle_hole_dual(mu).weights, nu.weights, atol=1e-12)


class MeasureOperationTests(unittest.TestCase):
    def setUp(self):
        # site 1 Ber(0.2), site 2 Ber(0.5), site 3 Ber(0.9)
        weights = np.ones(1)
        for rho in (0.9, 0.5, 0.2):
            weights = np.kron(weights, [1 - rho, rho])
        self.measure = BinaryMeasure(m=3, weights=weights)

    def test_density_profile(self):
        np.testing.assert_allclose(asep_exact.density_profile(self.measure), [0.2, 0.5, 0.9])

    def test_marginals(self):
        first = asep_exact.marginal(self.measure, Which.FIRST, 1)
        last = asep_exact.marginal(self.measure, Which.LAST, 1)
        np.testing.assert_allclose(first.weights, [0.8, 0.2])
        np.testing.assert_allclose(last.weights, [0.1, 0.9])

    def test_generating_function(self):
        value = asep_exact.generating_function(self.measure, [2.0, 3.0, 0.5])
        self.assertAlmostEqual(value, (0.8 + 0.4) * (0.5 + 1.5) * (0.1 + 0.45), places=14)

    def test_dual_reverses_and_flips(self):
        dual = asep_exact.particle_hole_dual(self.measure)
        np.testing.assert_allclose(asep_exact.density_profile(dual), [0.1, 0.5, 0.8])

    def test_marginal_size(self):
        with self.assertRaises(LabError):
            asep_exact.marginal(self.measure, Which.FIRST, 4)


class CharacterizationTests(unittest.TestCase):
    def test_last_site_generating_function(self):
        params = BoundaryParams(A=3.0, C=0.6, q=0.5)
        exact = asep_exact.marginal(asep_exact.stationary_from_params(4, params), Which.LAST, 1)
        identity = asep_exact.characterization_gf(params, 4, [1.2], "projection")
        self.assertTrue(identity.applicability.applicable)
        lhs = asep_exact.generating_function(exact, [1.2])
        self.assertAlmostEqual(identity.value / lhs, 1.0, places=6)

    def test_applicability_flags_ratio_resonance(self):
        report = asep_exact.applicability(BoundaryParams(A=2.0, C=4.0, q=0.5))
        self.assertTrue(report.ratio_resonance)
        self.assertFalse(report.applicable)

    def test_needs_fewer_sites_than_n(self):
        with self.assertRaises(LabError) as ctx:
            asep_exact.characterization_gf(BoundaryParams(A=3.0, C=0.6, q=0.5), 2, [1.1, 1.2])
        self.assertEqual(ctx.exception.code, ErrorCode.DOMAIN)


if __name__ == "__main__":
    unittest.main()
