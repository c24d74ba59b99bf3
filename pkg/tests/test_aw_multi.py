import unittest

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.models import Factor, MultiAwSpec
from aseplab.services import aw_measure, aw_multi


def _spec(times, A=0.5, B=-0.2, C=0.4, D=-0.1, q=0.5):
    return MultiAwSpec(A=A, B=B, C=C, D=D, q=q, times=tuple(times))


class MultiIntegrateTests(unittest.TestCase):
    def test_single_time_is_the_marginal(self):
        spec = _spec([1.05])
        factor = Factor.affine(1.0, 0.5)
        expected = aw_measure.integrate(aw_measure.pi_marginal(0.5, -0.2, 0.4, -0.1, 0.5, 1.05), factor)
        self.assertAlmostEqual(aw_multi.multi_integrate(spec, [factor], "projection"), expected, places=10)
        self.assertAlmostEqual(aw_multi.multi_integrate(spec, [factor], "nested"), expected, places=10)

    def test_backends_agree(self):
        spec = _spec([1.0, 1.05])
        factors = [Factor.affine(1.0, 0.3), Factor.affine(0.7, -0.4)]
        nested = aw_multi.multi_integrate(spec, factors, "nested")
        projection = aw_multi.multi_integrate(spec, factors, "projection")
        self.assertAlmostEqual(nested, projection, places=8)

    def test_time_reversal(self):
        spec = _spec([1.0, 1.04, 1.1])
        factors = [Factor.affine(1.0, 0.3), Factor.affine(0.7, -0.4), Factor.affine(1.2, 0.1)]
        forward = aw_multi.multi_integrate(spec, factors, "projection")
        backward = aw_multi.multi_integrate(spec.reversed_dual(), factors[::-1], "projection")
        self.assertAlmostEqual(forward, backward, places=8)

    def test_constant_factors_integrate_to_one(self):
        spec = _spec([1.0, 1.05])
        one = Factor(coefficients=(1.0,))
        self.assertAlmostEqual(aw_multi.multi_integrate(spec, [one, one], "projection"), 1.0, places=9)

    def test_factor_count_must_match(self):
        with self.assertRaises(LabError) as ctx:
            aw_multi.multi_integrate(_spec([1.0, 1.05]), [Factor.affine(1.0, 0.0)], "projection")
        self.assertEqual(ctx.exception.code, ErrorCode.DOMAIN)

    def test_unknown_backend(self):
        with self.assertRaises(LabError) as ctx:
            aw_multi.multi_integrate(_spec([1.0]), [Factor.affine(1.0, 0.0)], "trapezoid")
        self.assertEqual(ctx.exception.code, ErrorCode.DOMAIN)

    def test_nested_cap(self):
        previous = settings.nested_cap
        settings.nested_cap = 1
        try:
            with self.assertRaises(LabError) as ctx:
                aw_multi.multi_integrate_nested(_spec([1.0, 1.05]), [Factor.affine(1, 0)] * 2)
            self.assertEqual(ctx.exception.code, ErrorCode.CAP_EXCEEDED)
        finally:
            settings.nested_cap = previous


class KernelChainTests(unittest.TestCase):
    def test_backends_agree_from_an_atom(self):
        A, q = 3.0, 0.5
        spec = MultiAwSpec(A=A, B=0.0, C=0.6, D=0.0, q=q, times=(1.02, 1.06))
        start = (A + 1 / A) / 2
        factors = [Factor.gf(1.02, 2 + 2 * start), Factor.gf(1.06, 2 + 2 * start)]
        nested = aw_multi.kernel_chain_integrate(spec, start, 1.0, factors, source=A, backend="nested")
        projection = aw_multi.kernel_chain_integrate(spec, start, 1.0, factors, source=A, backend="projection")
        self.assertAlmostEqual(nested, projection, places=8)

    def test_start_after_first_time(self):
        spec = _spec([1.0, 1.05])
        with self.assertRaises(LabError):
            aw_multi.kernel_chain_integrate(spec, 0.0, 1.02, [Factor.affine(1, 0)] * 2)

    def test_cache_reuses_rules(self):
        cache = aw_multi.KernelCache(0.5, -0.2, 0.5)
        cache.rule(1.0, 1.05, 0.3, float("nan"), 2)
        cache.rule(1.0, 1.05, 0.3, float("nan"), 2)
        self.assertEqual(cache.builds, 1)


class PowerFactorTests(unittest.TestCase):
    def test_coefficients(self):
        self.assertEqual(aw_multi.power_factor(2.0, 2.0, 2).coefficients, (4.0, 8.0, 4.0))
        self.assertEqual(aw_multi.power_factor(2.0, 2.0, 0).coefficients, (1.0,))


if __name__ == "__main__":
    unittest.main()
