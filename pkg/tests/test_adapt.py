import numpy as np
import pytest

from adaptbus import kernels
from adaptbus.adapt import (
    ParameterEstimate,
    RegressorPair,
    ZeroDivisorError,
    build_regressor,
    control_law,
    regressor_dims,
    tracking_error,
    update,
)
from adaptbus.plant import SignalHistory
from tests.conftest import make_random_plant


class TestRegressor:
    def test_dims(self):
        assert regressor_dims(2, 1, 2) == (4, 5)

    def test_minimal_layout(self):
        h = SignalHistory(1, 0, d_max=1)
        h.advance(0.0, 2.0)  # y(k) = 2
        pair = build_regressor(h, 1, u_k=3.0)
        assert list(pair.phi) == [2.0]
        assert list(pair.Phi) == [2.0, 3.0]

    def test_zero_history(self):
        h = SignalHistory(2, 1, d_max=2)
        pair = build_regressor(h, 2, u_k=0.0)
        assert pair.phi.shape == (4,) and pair.Phi.shape == (5,)
        assert not pair.phi.any() and not pair.Phi.any()

    def test_pair_invariant(self):
        with pytest.raises(ValueError):
            RegressorPair(phi=np.zeros(3), Phi=np.zeros(5))


class TestParameterEstimate:
    def test_gamma_bounds(self):
        for bad in (0.0, 1.0, 2.0, -0.5, 2.5):
            with pytest.raises(ValueError, match="gamma"):
                ParameterEstimate(theta=np.zeros(2), gamma=bad)

    def test_create_seeds_divisor(self):
        est = ParameterEstimate.create(2, 1, 2, beta0_init=0.7)
        assert est.theta.shape == (5,)
        assert est.beta0 == 0.7
        assert not est.theta[:-1].any()

    def test_zero_is_exactly_zero(self):
        est = ParameterEstimate.zero(4)
        assert not est.theta.any()


class TestControlLaw:
    def test_pure_feedforward(self):
        est = ParameterEstimate(theta=np.array([0.0, 1.0]))
        assert control_law(est, np.array([5.0]), 2.0) == 2.0

    def test_worked_example(self):
        est = ParameterEstimate(theta=np.array([1.0, 2.0]))
        assert control_law(est, np.array([3.0]), 8.0) == 2.5

    def test_exact_parameters_give_exact_tracking(self, rng):
        # with the true parameters, the applied input places the output on
        # the reference d steps later
        from adaptbus.plant import step_difference

        model = make_random_plant(rng, 2, 1)
        theta = model.true_theta(1)
        est = ParameterEstimate(theta=theta)
        h = SignalHistory(2, 1, d_max=1)
        yref = rng.normal(size=60)
        for k in range(50):
            pair = build_regressor(h, 1, 0.0)
            u = control_law(est, pair.phi, yref[k + 1])
            y = step_difference(model, h, u)
            assert abs(y - yref[k + 1]) < 1e-10

    def test_zero_divisor_raises(self):
        est = ParameterEstimate.zero(3)
        with pytest.raises(ZeroDivisorError):
            control_law(est, np.zeros(2), 1.0)


class TestUpdate:
    def test_zero_innovation_is_noop(self):
        est = ParameterEstimate(theta=np.array([1.0, 2.0]))
        Phi = np.array([0.5, 0.25])
        new, eps = update(est, Phi, float(est.theta @ Phi))
        assert eps == 0.0
        assert np.array_equal(new.theta, est.theta)

    def test_scalar_worked_example(self):
        est = ParameterEstimate(theta=np.array([0.0]))
        new, eps = update(est, np.array([1.0]), 1.0)
        assert eps == 1.0
        assert new.theta[0] == 0.5

    def test_guard_branch(self):
        # candidate divisor lands exactly on zero -> gamma step instead
        est = ParameterEstimate(theta=np.array([0.5]), gamma=0.5)
        new, eps = update(est, np.array([1.0]), -0.5)
        assert eps == -1.0
        assert new.theta[0] == 0.25

    def test_guard_keeps_divisor_nonzero(self, rng):
        est = ParameterEstimate.create(1, 0, 1, beta0_init=0.3)
        for _ in range(500):
            Phi = rng.normal(size=2)
            est, _ = update(est, Phi, float(rng.normal()))
            assert est.theta[-1] != 0.0

    def test_bounded_step(self, rng):
        # the normalization denominator dominates: one step moves theta by at
        # most a|eps|/2 no matter how the regressor scales
        est = ParameterEstimate.create(2, 1, 1)
        for _ in range(300):
            Phi = rng.normal(size=4) * rng.choice([0.01, 1.0, 100.0])
            new, eps = update(est, Phi, float(rng.normal()))
            step = np.linalg.norm(new.theta - est.theta)
            a_max = max(1.0, est.gamma)
            assert step <= a_max * abs(eps) / 2.0 + 1e-15
            assert step <= a_max * abs(eps) + 1e-15
            est = new

    def test_dimension_mismatch(self):
        est = ParameterEstimate.create(1, 0, 1)
        with pytest.raises(ValueError, match="dimension"):
            update(est, np.zeros(5), 0.0)


class TestParameterErrorMonotone:
    def test_v_never_increases_without_disturbance(self, rng):
        # closed adaptive loop at fixed delay, no disturbance: the squared
        # parameter error is non-increasing at every step
        for d in (1, 2):
            model = make_random_plant(rng, 2, 1)
            T = 1500
            k = np.arange(T + d)
            yref = np.sin(0.3 * k) + 0.5 * np.sin(0.97 * k)
            theta0 = np.zeros(3 + d)
            theta0[-1] = 1.0
            st, _, y, u, eps, th, _ = kernels.simulate_fixed_delay(
                model.a, model.b, d, 0.5, theta0, yref, np.zeros(T + 1),
                np.zeros(0), np.zeros(0), True,
            )
            assert st == kernels.SIM_OK
            ts = model.true_theta(d)
            V = np.sum((th - ts[None, :]) ** 2, axis=1)
            assert np.max(np.diff(V)) <= 1e-12

    def test_bounded_and_tracking(self, rng):
        model = make_random_plant(rng, 2, 1)
        T, d = 4000, 1
        k = np.arange(T + d)
        yref = np.sin(0.35 * k)
        theta0 = np.zeros(4)
        theta0[-1] = 1.0
        st, _, y, u, eps, th, _ = kernels.simulate_fixed_delay(
            model.a, model.b, d, 0.5, theta0, yref, np.zeros(T + 1),
            np.zeros(0), np.zeros(0), True,
        )
        assert st == kernels.SIM_OK
        e = y[:T] - yref[:T]
        assert np.isfinite(y).all() and np.isfinite(u).all()
        assert np.max(np.abs(e[2500:])) < 1e-3


class TestTrackingError:
    @pytest.mark.parametrize("y,yref,expect", [(1.0, 1.0, 0.0), (2.0, 0.5, 1.5), (0.0, -1.0, 1.0)])
    def test_values(self, y, yref, expect):
        assert tracking_error(y, yref) == expect


class TestKernelConsistency:
    def test_python_loop_matches_kernel(self, rng):
        # the public update/control/step path reproduces the compiled loop
        # bit for bit (shared arithmetic order)
        from adaptbus.plant import PlantModel, step_difference

        model = PlantModel(a=[-0.4, 0.1], b=[1.0, 0.3])
        T, d = 300, 2
        kk = np.arange(T + d)
        yref = np.sin(0.4 * kk)
        theta0 = np.zeros(5)
        theta0[-1] = 1.0
        st, _, y_k, u_k, eps_k, th_k, Phi_k = kernels.simulate_fixed_delay(
            model.a, model.b, d, 0.5, theta0, yref, np.zeros(T + 1),
            np.zeros(0), np.zeros(0), True,
        )
        assert st == kernels.SIM_OK
        est = ParameterEstimate(theta=theta0, gamma=0.5)
        h = SignalHistory(2, 1, d_max=d)
        phis = [np.zeros(5) for _ in range(d)]  # pre-start regressors (zero init)
        ys, us = [0.0], []
        for k in range(T):
            est, eps = update(est, phis[k], ys[k])
            pair = build_regressor(h, d, 0.0)
            u = control_law(est, pair.phi, yref[k + d])
            phis.append(np.concatenate([pair.phi, [u]]))
            us.append(u)
            ys.append(step_difference(model, h, u, d=d))
        assert np.array_equal(np.asarray(ys), y_k)
        assert np.array_equal(np.asarray(us), u_k)
