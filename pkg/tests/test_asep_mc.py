import unittest

import numpy as np

from aseplab.errors import ErrorCode, LabError
from aseplab.models import OpenAsepRates, Statistic
from aseplab.services import asep_exact, asep_mc


class StatisticTests(unittest.TestCase):
    def test_parse(self):
        self.assertEqual(Statistic.parse("site:3"), Statistic(kind="site", site=3))
        self.assertEqual(Statistic.parse("word:10").label, "word:10")

    def test_parse_rejects_garbage(self):
        for text in ("word:12", "word:", "density:1"):
            with self.assertRaises(ValueError):
                Statistic.parse(text)

    def test_values(self):
        np.testing.assert_array_equal(
            asep_mc.statistic_values(3, Statistic(kind="site", site=2)), [0, 0, 1, 1, 0, 0, 1, 1]
        )
        # site 1 occupied, site 2 empty
        np.testing.assert_array_equal(
            asep_mc.statistic_values(3, Statistic(kind="word", word="10")), [0, 1, 0, 0, 0, 1, 0, 0]
        )

    def test_site_out_of_range(self):
        with self.assertRaises(LabError) as ctx:
            asep_mc.statistic_values(3, Statistic(kind="site", site=4))
        self.assertEqual(ctx.exception.code, ErrorCode.DOMAIN)


class SimulationTests(unittest.TestCase):
    rates = OpenAsepRates(alpha=1.0, beta=2.0, gamma=0.5, delta=0.25, q=0.0)

    def test_same_seed_same_estimate(self):
        first = asep_mc.simulate_estimate(2, self.rates, Statistic(kind="site", site=1), 500.0, seed=42)
        second = asep_mc.simulate_estimate(2, self.rates, Statistic(kind="site", site=1), 500.0, seed=42)
        self.assertEqual(first.mean, second.mean)
        self.assertEqual(first.stderr, second.stderr)

    def test_one_site_density(self):
        estimate = asep_mc.simulate_estimate(1, self.rates, Statistic(kind="site", site=1), 5000.0, seed=7)
        self.assertLess(abs(estimate.mean - 1.25 / 3.75), 5 * estimate.stderr + 1e-3)
        self.assertEqual(estimate.batches, 40)

    def test_agrees_with_exact_solver(self):
        rates = OpenAsepRates(alpha=0.8, beta=0.6, gamma=0.1, delta=0.05, q=0.3)
        statistics = [Statistic(kind="site", site=i) for i in (1, 2, 3)]
        estimates = asep_mc.simulate_estimates(3, rates, statistics, 20000.0, seed=11)
        exact = asep_exact.density_profile(asep_exact.stationary_measure(3, rates))
        for estimate, value in zip(estimates, exact):
            self.assertLess(abs(estimate.mean - value), 5 * estimate.stderr + 2e-3)

    def test_burn_in_must_leave_time(self):
        with self.assertRaises(LabError) as ctx:
            asep_mc.simulate_estimate(2, self.rates, Statistic(kind="site", site=1), 10.0, burn_in=20.0)
        self.assertEqual(ctx.exception.code, ErrorCode.DOMAIN)

    def test_default_burn_in(self):
        self.assertAlmostEqual(asep_mc.default_burn_in(3, self.rates), 20 * 3 / 0.25)


if __name__ == "__main__":
    unittest.main()
