"""Penalty calculus: hand values, analytic 1-D instances, certification."""

import math

import numpy as np
import pytest

from helpers import toy_quadratic_instance, toy_sharp_instance
from sbopt.errors import InvalidErrorBound, MissingLowerOpt
from sbopt.penalty import (certify, gamma_star, gamma_total, implied_lower_gap,
                           make_plan, suboptimality_lower_bound)
from sbopt.prox import prox_l1


class TestGammaStar:
    def test_hand_values(self):
        assert gamma_star(2.0, 1.0, 1.0, 0.1) == pytest.approx(2.5, rel=1e-12)
        assert gamma_star(1.0, 2.0, 3.0, 0.37) == pytest.approx(6.0, rel=1e-12)
        assert gamma_star(3.0, 1.0, 2.0, 1.0) == pytest.approx(32.0 / 27.0, rel=1e-12)

    def test_alpha_one_ignores_epsilon(self):
        vals = {gamma_star(1.0, 2.0, 3.0, eps) for eps in (1e-6, 0.37, 5.0)}
        assert vals == {6.0}

    def test_continuity_toward_alpha_one(self):
        # (alpha-1)^(alpha-1) -> 1, so the alpha>1 formula approaches rho*l_f
        near = gamma_star(1.0 + 1e-12, 2.0, 3.0, 1.0)
        assert near == pytest.approx(6.0, rel=1e-9)

    def test_invalid_alpha(self):
        with pytest.raises(InvalidErrorBound):
            gamma_star(0.9, 1.0, 1.0, 0.1)


class TestGammaTotal:
    def test_hand_values(self):
        assert gamma_total(2.0, 1.0, 1.0, 0.1, 2.0) == pytest.approx(22.5, rel=1e-12)
        assert gamma_total(1.0, 1.0, 1.0, 0.5, 1.0) == pytest.approx(2.0, rel=1e-12)

    def test_exceeds_gamma_star_strictly(self):
        for eps in (1e-4, 0.1, 3.0):
            assert gamma_total(1.0, 1.0, 1.0, eps, 1.0) > gamma_star(1.0, 1.0, 1.0, eps)

    def test_strictly_decreasing_in_epsilon(self):
        eps_grid = np.logspace(-6, 0, 25)
        vals = [gamma_total(2.0, 1.0, 1.0, e, 2.0) for e in eps_grid]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        vals = [gamma_total(1.5, 0.7, 2.0, e, 1.2) for e in eps_grid]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestSuboptimalityLowerBound:
    def test_hand_values(self):
        assert suboptimality_lower_bound(2.0, 1.0, 1.0, 0.1, 2.0) == pytest.approx(
            -0.1, rel=1e-12)
        assert suboptimality_lower_bound(1.0, 4.0, 2.0, 0.5, 1.0) == pytest.approx(
            -2.0, rel=1e-12)

    def test_beta_equals_alpha_collapses(self):
        for alpha in (1.0, 1.5, 2.0, 3.0):
            got = suboptimality_lower_bound(alpha, 1.0, 1.0, 0.2, alpha)
            assert got == pytest.approx(-0.2, rel=1e-12)


class TestAnalyticQuadraticToy:
    """F = (1/2)(x-1)^2, G = x^2; exact penalized minimizer 1/(1+2*gamma)."""

    def test_theorem_gaps_at_exact_minimizer(self):
        inst = toy_quadratic_instance()
        for eps in (1e-1, 1e-2, 1e-3):
            gamma = gamma_total(2.0, 1.0, 1.0, eps, 2.0)
            assert gamma == pytest.approx(9.0 / (4.0 * eps), rel=1e-12)
            x = np.array([1.0 / (1.0 + 2.0 * gamma)])
            g_gap = inst.lower_gap(x)
            f_gap = inst.upper_value(x) - 0.5
            assert g_gap <= eps ** 2
            assert -eps <= f_gap <= eps

    def test_larger_gamma_shrinks_residual(self):
        inst = toy_quadratic_instance()
        gaps = [inst.lower_gap(np.array([1.0 / (1.0 + 2.0 * g)]))
                for g in (1.0, 10.0, 100.0, 1e4)]
        assert all(a >= b for a, b in zip(gaps, gaps[1:]))


class TestExactPenalization:
    """F = (1/2)(x-1)^2, G = |x|: for gamma > 1 the penalized minimizer is
    the bilevel optimum x = 0 exactly (soft threshold of 1 at gamma)."""

    def test_minimizer_is_zero_for_every_gamma_above_one(self):
        for gamma in (1.01, 2.0, 10.0):
            x = prox_l1(np.array([1.0]), gamma)
            assert x[0] == 0.0

    def test_larger_gamma_never_worse(self):
        inst = toy_sharp_instance()
        gaps = [inst.lower_gap(prox_l1(np.array([1.0]), g))
                for g in (0.2, 0.5, 0.9, 1.5, 4.0)]
        assert all(a >= b for a, b in zip(gaps, gaps[1:]))


class TestPlanAndCertify:
    def test_plan_fields(self):
        plan = make_plan(2.0, 1.0, 1.0, 0.01, 2.0)
        assert plan.gamma > plan.gamma_star
        assert plan.guaranteed_upper_gap == 0.01
        assert plan.guaranteed_lower_gap == pytest.approx(1e-4)
        assert plan.lower_bound_F == pytest.approx(-0.01)

    def test_certify_passes_on_accurate_point(self):
        inst = toy_quadratic_instance()
        plan = make_plan(2.0, 1.0, 1.0, 0.01, 2.0)
        x = np.array([1.0 / (1.0 + 2.0 * plan.gamma)])
        cert = certify(inst, x, plan, f_star=0.5)
        assert cert.g_ok and cert.f_ok and cert.passed

    def test_certify_exact_optimum(self):
        inst = toy_quadratic_instance()
        plan = make_plan(2.0, 1.0, 1.0, 0.01, 2.0)
        cert = certify(inst, np.array([0.0]), plan, f_star=0.5)
        assert cert.g_gap == 0.0
        assert cert.f_gap == 0.0
        assert cert.passed

    def test_certify_flags_distant_point(self):
        inst = toy_quadratic_instance()
        plan = make_plan(2.0, 1.0, 1.0, 0.01, 2.0)
        cert = certify(inst, np.array([3.0]), plan, f_star=0.5)
        assert not cert.g_ok and not cert.passed

    def test_certify_without_f_star(self):
        inst = toy_quadratic_instance()
        plan = make_plan(2.0, 1.0, 1.0, 0.01, 2.0)
        cert = certify(inst, np.array([0.0]), plan)
        assert cert.f_gap is None and cert.f_ok is None and cert.passed

    def test_certify_needs_reference(self):
        import dataclasses
        inst = dataclasses.replace(toy_quadratic_instance(), lower_opt_value=None)
        plan = make_plan(2.0, 1.0, 1.0, 0.01, 2.0)
        with pytest.raises(MissingLowerOpt):
            certify(inst, np.array([0.0]), plan)


class TestImpliedLowerGap:
    def test_matches_margin_construction(self):
        # at gamma = gamma_total with alpha > 1, the implied bound is the
        # guaranteed target l_f^-beta * eps^beta
        eps, beta = 0.01, 2.0
        gamma = gamma_total(2.0, 1.0, 1.0, eps, beta)
        assert implied_lower_gap(gamma, 2.0, 1.0, 1.0, eps) == pytest.approx(
            eps ** beta, rel=1e-12)

    def test_infinite_below_gamma_star(self):
        assert implied_lower_gap(1.0, 2.0, 1.0, 1.0, 0.01) == math.inf
