"""
Test Suite for the Gradient Check
Tests analytic gradients against central differences on the check scene
"""

import pytest

from geowarp.core.losses import gradient_check, relative_error


class TestRelativeError:
    """Test the comparison metric"""

    def test_equal_values(self):
        """Identical values have zero error, including zeros"""
        assert relative_error(0.0, 0.0, 1.0) == 0.0
        assert relative_error(2.5, 2.5, 1.0) == 0.0

    def test_relative_to_larger(self):
        """The larger magnitude is the denominator"""
        assert relative_error(1.0, 1.1, 1.0) == pytest.approx(0.1 / 1.1)

    def test_scale_floor(self):
        """Tiny entries are compared against the group scale"""
        assert relative_error(1e-12, 0.0, 1.0) == pytest.approx(1e-6)


@pytest.mark.slow
class TestGradientCheck:
    """Test the full finite-difference check"""

    def test_seed_zero_passes(self):
        """Every (term, target) pair agrees within 1e-4"""
        report = gradient_check(seed=0)
        assert report.passed, report.failures
        assert all(error < 1e-4 for error in report.max_errors.values())
        assert "total/depth" in report.max_errors

    def test_deterministic(self):
        """Same seed, same report apart from timing"""
        a = gradient_check(seed=1, pixels_per_field=2).to_dict()
        b = gradient_check(seed=1, pixels_per_field=2).to_dict()
        a.pop("seconds")
        b.pop("seconds")
        assert a == b

    def test_broken_gradient_is_detected(self):
        """Scaling one analytic gradient fails exactly that pair"""

        def break_depth_smoothness(term, target, index, value):
            return 1.5 * value if (term, target) == ("s_d", "depth") else value

        report = gradient_check(
            seed=0, pixels_per_field=3, perturb_analytic=break_depth_smoothness
        )
        assert not report.passed
        assert "s_d/depth" in report.failures
        assert report.max_errors["s_d/depth"] == pytest.approx(1 / 3, abs=1e-3)
