import numpy as np
import pytest

import oracles
from conftest import random_disturbance, random_instance
from pisat import equilibrium, model, sector
from pisat.errors import MaxIterationsExceeded, UnsupportedVariant


def _textbook():
    plant = model.PlantModel([1.0], [[1.0]], sector.saturation_deadzone(1))
    ctrl = model.ControllerSpec.decentralized([1.0], [0.5], [0.5])
    return plant, ctrl


def test_analytic_unsaturated():
    # w = -0.3: u0 = 0.3 keeps |u| < 1, so x0 = 0 and z0 = -u0 / r
    plant, ctrl = _textbook()
    eq = equilibrium.solve_equilibrium(plant, ctrl, [-0.3])
    assert eq.x0[0] == pytest.approx(0.0, abs=1e-9)
    assert eq.z0[0] == pytest.approx(-0.6, abs=1e-9)
    assert eq.u0[0] == pytest.approx(0.3, abs=1e-9)


def test_analytic_saturated():
    # w = -2: f = 1 at best, x0 = (1 - 2)/1 = -1, u0 solves the excess
    # balance h(u0) = -x0 / s = 2 so u0 = 3, z0 = (1 - 3)/0.5 = -4
    plant, ctrl = _textbook()
    eq = equilibrium.solve_equilibrium(plant, ctrl, [-2.0])
    assert eq.x0[0] == pytest.approx(-1.0, abs=1e-9)
    assert eq.z0[0] == pytest.approx(-4.0, abs=1e-9)
    assert eq.u0[0] == pytest.approx(3.0, abs=1e-9)


def test_contraction_constants_identity_case():
    # s = a = b = 1: b_hat = 1, k = 3, lambda = 2/3, mu = 2/3
    plant = model.PlantModel([1.0], [[1.0]], sector.saturation_deadzone(1))
    ctrl = model.ControllerSpec.decentralized([1.0], [0.5], [1.0])
    cmap = equilibrium.build_contraction(plant, ctrl, [0.5])
    assert cmap.k == pytest.approx(3.0)
    assert cmap.lam == pytest.approx(2.0 / 3.0)
    assert cmap.contraction_bound == pytest.approx(2.0 / 3.0)


def test_fixed_point_is_stationary(rng):
    for _ in range(30):
        plant, ctrl = random_instance(rng)
        w = random_disturbance(rng, plant.n)
        eq = equilibrium.solve_equilibrium(plant, ctrl, w, tol=1e-11)
        assert eq.residual_stationary <= 1e-11
        # back-substituted states satisfy both stationarity equations
        f0 = sector.eval_f(plant.pair, eq.u0)
        np.testing.assert_allclose(plant.a * eq.x0, plant.b @ f0 + w,
                                   atol=1e-9)
        h0 = eq.u0 - f0
        np.testing.assert_allclose(eq.x0 + ctrl.s * h0, 0.0, atol=1e-9)
        np.testing.assert_allclose(-ctrl.p * eq.x0 - ctrl.r * eq.z0, eq.u0,
                                   atol=1e-9)


def test_matches_newton_oracle(rng):
    for _ in range(40):
        plant, ctrl = random_instance(rng)
        w = random_disturbance(rng, plant.n)
        eq = equilibrium.solve_equilibrium(plant, ctrl, w, tol=1e-12)
        x0, z0, u0 = oracles.equilibrium_newton(plant.a, plant.b, ctrl.p,
                                                ctrl.r, ctrl.s, w)
        np.testing.assert_allclose(eq.u0, u0, atol=1e-8)
        np.testing.assert_allclose(eq.x0, x0, atol=1e-8)
        np.testing.assert_allclose(eq.z0, z0, atol=1e-8)


def test_bound_strictly_below_one(rng):
    for _ in range(50):
        plant, ctrl = random_instance(rng)
        cmap = equilibrium.build_contraction(plant, ctrl,
                                             random_disturbance(rng, plant.n))
        assert 0.0 < cmap.contraction_bound < 1.0


def test_measured_ratio_respects_bound(rng):
    for _ in range(25):
        plant, ctrl = random_instance(rng)
        cmap = equilibrium.build_contraction(plant, ctrl,
                                             random_disturbance(rng, plant.n))
        measured = equilibrium.measure_contraction(cmap, 200, rng)
        assert measured <= cmap.contraction_bound + 1e-12


def test_measured_ratio_tight_for_linear_map():
    # identity pair makes T affine with diagonal slope, so the measured
    # ratio equals the exact operator norm max(lam, mu)
    plant = model.PlantModel([1.0], [[1.0]], sector.identity_zero(1))
    ctrl = model.ControllerSpec.decentralized([1.0], [0.5], [1.0])
    cmap = equilibrium.build_contraction(plant, ctrl, [0.2])
    measured = equilibrium.measure_contraction(cmap, 100)
    assert measured == pytest.approx(cmap.contraction_bound, rel=1e-12)


def test_restarts_agree(rng):
    plant, ctrl = random_instance(rng, 5)
    w = random_disturbance(rng, 5)
    spread = equilibrium.probe_uniqueness(plant, ctrl, w, restarts=50,
                                          rng=rng)
    assert spread <= 1e-6


def test_iteration_budget_enforced():
    plant, ctrl = _textbook()
    cmap = equilibrium.build_contraction(plant, ctrl, [-2.0])
    with pytest.raises(MaxIterationsExceeded):
        equilibrium.iterate_fixed_point(cmap, np.array([50.0]), 1e-14, 3)


def test_requires_decentralized_variant():
    plant, _ = _textbook()
    coord = model.ControllerSpec.coordinating([1.0], [0.5], [0.5])
    with pytest.raises(UnsupportedVariant):
        equilibrium.build_contraction(plant, coord, [0.0])


def test_residual_scales_iterate_error():
    # stopping rule: the returned point is within tol of the fixed point
    # in the scaled 1-norm, so re-solving at tighter tol moves it little
    plant, ctrl = _textbook()
    eq_loose = equilibrium.solve_equilibrium(plant, ctrl, [-0.7], tol=1e-6)
    eq_tight = equilibrium.solve_equilibrium(plant, ctrl, [-0.7], tol=1e-13)
    assert abs(eq_loose.u0[0] - eq_tight.u0[0]) <= 1e-5
