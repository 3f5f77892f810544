import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stcn.initialization import build_initial_model
from stcn.learning import (LearnerConfig, Stationarity, StopReason, error_gradient,
                           finite_difference_gradient, fit_neurons, gradient_step, neuron_error,
                           shape_distance, stationarity_check, train_layer, train_network)
from stcn.model import STANDARD, StcnModel, TransferParams, predict, sigmoid

RAW10 = [-1.485719, -0.002889, 0.405993, -1.885244, -1.408296, 1.712844, -1.718318, -1.480904,
         1.793314, 0.487534]
Y10 = [0.382094, 0.510251, 0.646559, 0.297778, 0.174171, 0.759236, 0.653325, 0.511144, 0.785063,
       0.544168]


def random_instance(rng, k=20):
    p = TransferParams(rng.uniform(0.2, 5.0), rng.uniform(-1.0, 1.0), rng.uniform(0.3, 3.0),
                       rng.uniform(0.3, 3.0))
    return p, rng.normal(0.0, 1.5, k), rng.uniform(0.01, 0.99, k)


def grad_close(analytic, numeric, rtol=1e-5, atol=1e-8):
    return np.all(np.abs(analytic - numeric) <= np.maximum(atol, rtol * np.abs(numeric)))


def test_error_perfect_fit():
    raw = np.linspace(-2, 2, 7)
    assert neuron_error(STANDARD, raw, sigmoid(raw, 1, 0, 1, 1)) == 0.0


def test_error_single_residual():
    p = STANDARD
    raw = [float(np.log(0.7 / 0.3))]  # f(raw) = 0.7
    assert neuron_error(p, raw, [0.2]) == pytest.approx(0.25, abs=1e-14)


def test_error_matches_high_precision():
    # term-by-term mpmath sum at 50 digits
    expected = 0.67808704246609096560816944206206428704577742148617
    got = neuron_error(TransferParams(1.7, 0.3, 0.9, 1.4), RAW10, Y10)
    assert got == pytest.approx(expected, rel=1e-13)


def test_gradient_perfect_fit_is_zero():
    raw = np.linspace(-2, 2, 5)
    p = TransferParams(1.3, 0.2, 0.7, 1.6)
    g = error_gradient(p, raw, sigmoid(raw, 1.3, 0.2, 0.7, 1.6)).partials
    np.testing.assert_array_equal(g, 0.0)


def test_gradient_hand_case():
    g = error_gradient(STANDARD, [0.0], [0.25]).partials
    assert g[0] == 0.0
    assert g[1] == pytest.approx(-0.125, abs=1e-15)


def test_theta_exceeds_one(rng):
    p, raw, y = random_instance(rng, 50)
    assert np.all(error_gradient(p, raw, y).theta > 1.0)


def test_gradient_matches_finite_differences(rng):
    for _ in range(200):
        p, raw, y = random_instance(rng)
        assert grad_close(error_gradient(p, raw, y).partials, finite_difference_gradient(p, raw, y))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_gradient_property(seed):
    p, raw, y = random_instance(np.random.default_rng(seed), 15)
    assert grad_close(error_gradient(p, raw, y).partials, finite_difference_gradient(p, raw, y))


def test_finite_difference_on_quadratic_in_h():
    # with lambda small the error is almost quadratic near the optimum; compare against
    # a direct symmetric difference at a much smaller step
    p = TransferParams(0.01, 0.5, 1.0, 1.0)
    raw, y = np.array([0.1, -0.3]), np.array([0.4, 0.6])
    coarse = finite_difference_gradient(p, raw, y, step=1e-4)
    fine = finite_difference_gradient(p, raw, y, step=1e-6)
    np.testing.assert_allclose(coarse, fine, rtol=1e-5, atol=1e-10)


def test_finite_difference_rejects_zero_step():
    with pytest.raises(ValueError):
        finite_difference_gradient(STANDARD, [0.0], [0.5], step=0.0)


def test_gradient_step_fixed_point():
    cfg = LearnerConfig(beta=0.0)
    x, z = gradient_step([1.0, 0.2, 1.0, 1.0], np.zeros(4), np.zeros(4), cfg)
    np.testing.assert_array_equal(x, [1.0, 0.2, 1.0, 1.0])


def test_gradient_step_momentum_only():
    cfg = LearnerConfig(beta=0.85, eta=0.001)
    x, z = gradient_step([2.0, 2.0, 2.0, 2.0], np.ones(4), np.zeros(4), cfg)
    np.testing.assert_allclose(z, 0.85)
    np.testing.assert_allclose(x, 2.0 - 0.85)


def test_gradient_step_projects():
    cfg = LearnerConfig(beta=0.0, eta=1.0)
    x, _ = gradient_step([0.3, 0.0, 1.0, 1.0], np.zeros(4), [0.5, 0.0, 0.0, 0.0], cfg)
    assert x[0] == cfg.param_floor


@given(st.lists(st.tuples(*[st.floats(-1e3, 1e3)] * 4), min_size=1, max_size=20),
       st.floats(0.0, 0.99), st.floats(1e-5, 1.0))
def test_feasibility_preserved(grads, beta, eta):
    cfg = LearnerConfig(beta=beta, eta=eta)
    x, z = np.array([1.0, 0.0, 1.0, 1.0]), np.zeros(4)
    for g in grads:
        x, z = gradient_step(x, z, np.array(g), cfg)
        assert x[0] >= cfg.param_floor and x[2] >= cfg.param_floor and x[3] >= cfg.param_floor


def test_fit_recovers_generating_params(rng):
    raw = rng.normal(size=(200, 1))
    y = sigmoid(raw, 2.0, 0.3, 1.1, 0.9)
    _, err, _, _ = fit_neurons(np.array([[1.5, 0.0, 1.0, 1.0]]), raw, y, LearnerConfig(eta=0.01))
    assert err[0] <= 1e-4


def test_fit_zero_epochs_returns_start(rng):
    raw = rng.normal(size=(30, 2))
    y = rng.uniform(0.1, 0.9, (30, 2))
    x0 = np.array([[5.0, 0.5, 1.0, 1.0], [1.0, 0.0, 2.0, 0.5]])
    x, err, epochs, _ = fit_neurons(x0, raw, y, LearnerConfig(epochs=0))
    np.testing.assert_array_equal(x, x0)
    assert err[1] == pytest.approx(neuron_error(TransferParams(1.0, 0.0, 2.0, 0.5), raw[:, 1], y[:, 1]))
    assert list(epochs) == [0, 0]


def test_fit_never_worse_than_start(rng):
    raw = rng.normal(0, 3, size=(40, 5))
    y = rng.uniform(0.01, 0.99, (40, 5))
    x0 = np.tile([5.0, 0.5, 1.0, 1.0], (5, 1))
    start = [neuron_error(TransferParams.from_array(r), raw[:, i], y[:, i]) for i, r in enumerate(x0)]
    _, err, _, _ = fit_neurons(x0, raw, y, LearnerConfig())
    assert np.all(err <= np.array(start))


def test_fit_restarts_on_divergence():
    raw = np.array([[1e3], [-1e3], [0.0]])
    y = np.array([[0.9], [0.1], [0.5]])
    x, err, _, restarts = fit_neurons(np.array([[1.0, 0.0, 1.0, 1.0]]), raw, y, LearnerConfig(eta=1e6))
    assert np.all(np.isfinite(x)) and np.isfinite(err[0])


def test_train_layer_x1_neuron_error_drops(iris_sig):
    data, bounds = iris_sig
    model = build_initial_model(data, bounds, init="paper")
    start = neuron_error(TransferParams(5, 0.5, 1, 1), data @ model.weights[:, 0], data[:, 0])
    _, _, info = train_layer(model, 1, data, LearnerConfig())
    final = info["neuron_errors"][0]
    assert final < start


def test_shape_distance_matches_quadrature():
    # mpmath adaptive quadrature of the squared difference over [-3, 3]
    expected = 0.068628710628961077548726725269040615780356821663164
    got = shape_distance(STANDARD, TransferParams(2.0, 0.0, 1.0, 1.0), 3.0)
    assert got == pytest.approx(expected, rel=1e-9)


def test_stationary_on_identical_layers():
    layer = [STANDARD, TransferParams(2.0, 0.1, 1.0, 1.0)]
    assert stationarity_check(layer, layer, 3.0, 3.0, LearnerConfig()) is Stationarity.STATIONARY


def test_continue_on_shifted_h():
    a = [STANDARD, STANDARD]
    b = [STANDARD, TransferParams(1.0, 1.0, 1.0, 1.0)]
    assert stationarity_check(a, b, 3.0, 3.0, LearnerConfig()) is Stationarity.CONTINUE


def test_continue_on_error_change():
    layer = [STANDARD]
    assert stationarity_check(layer, layer, 3.0, 2.0, LearnerConfig()) is Stationarity.CONTINUE


def test_single_iteration(rng):
    data = rng.uniform(0.01, 0.99, (30, 3))
    model = build_initial_model(data, np.tile([0.0, 1.0], (3, 1)), seed=1)
    trained, trace = train_network(model, data, LearnerConfig(max_iterations=1))
    assert trained.iterations == 1
    assert trace.chosen_T == 1 and len(trace.per_iteration_error) == 1


def test_zero_weights_stop_quickly(rng):
    data = rng.uniform(0.01, 0.99, (50, 3))
    model = StcnModel(np.zeros((3, 3)), np.tile([5.0, 0.5, 1.0, 1.0], (1, 3, 1)), [[0, 1]] * 3)
    _, trace = train_network(model, data, LearnerConfig())
    assert trace.stop_reason is StopReason.STATIONARY
    assert len(trace.per_iteration_error) <= 2


def test_chosen_layer_is_minimum(iris_sig):
    data, bounds = iris_sig
    model = build_initial_model(data, bounds, seed=3)
    trained, trace = train_network(model, data, LearnerConfig(max_iterations=5, epochs=100))
    assert trace.chosen_T == int(np.argmin(trace.per_iteration_error)) + 1
    assert trained.iterations == trace.chosen_T
    assert len(trace.per_iteration_error) >= trace.chosen_T


def test_training_is_deterministic_and_leaves_weights(iris_sig):
    data, bounds = iris_sig
    model = build_initial_model(data, bounds, seed=5)
    digest = hashlib.sha256(model.weights.tobytes()).hexdigest()
    cfg = LearnerConfig(max_iterations=4, epochs=100)
    a, ta = train_network(model, data, cfg)
    b, tb = train_network(model, data, cfg)
    assert hashlib.sha256(a.weights.tobytes()).hexdigest() == digest
    assert a.to_dict() == b.to_dict()
    assert ta.per_iteration_error == tb.per_iteration_error


def test_final_outputs_reproduce_training_errors(iris_sig):
    # per-neuron errors cached during training are recovered exactly from the saved model
    data, bounds = iris_sig
    model = build_initial_model(data, bounds, seed=2)
    trained, trace = train_network(model, data, LearnerConfig(max_iterations=3, epochs=100))
    out = predict(trained, data)
    assert float(np.sum((out - data) ** 2)) == pytest.approx(
        trace.per_iteration_error[trace.chosen_T - 1], rel=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        LearnerConfig(eta=0.0)
    with pytest.raises(ValueError):
        LearnerConfig(beta=-0.1)
    with pytest.raises(ValueError):
        LearnerConfig(param_floor=0.0)
