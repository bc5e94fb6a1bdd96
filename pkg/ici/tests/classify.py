#
# ici -- instance credibility inference for few-shot classification
#
# This library is free software; you can redistribute it and/or
# modify it under the terms of the GNU Lesser General Public
# License as published by the Free Software Foundation; either
# version 2.1 of the License, or (at your option) any later version.
#
# This library is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the GNU
# Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public
# License along with this library; if not, see <https://www.gnu.org/licenses/>.


import unittest

import numpy as np
import pytest
import scipy.special

from .. import exc
from .. import classify
from ..utils import one_hot


def separable(rng, per_class=10, num_classes=3, dim=4):
    centers = 6 * np.eye(num_classes, dim)
    features = np.concatenate([center + rng.standard_normal((per_class, dim))
        * 0.5 for center in centers])
    labels = np.repeat(np.arange(num_classes), per_class)
    return features, labels


def numeric_gradient(fun, point, step=1e-6):
    grad = np.zeros_like(point)
    for i in np.ndindex(point.shape):
        shift = np.zeros_like(point)
        shift[i] = step
        grad[i] = (fun(point + shift) - fun(point - shift)) / (2 * step)
    return grad


class TC_00_Objectives(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(11)
        self.features = rng.standard_normal((8, 3))
        self.targets = one_hot(rng.integers(0, 4, size=8), 4)
        self.weights = rng.standard_normal((3, 4))
        self.bias = rng.standard_normal(4)

    def assert_close_relative(self, actual, expected):
        error = np.max(np.abs(actual - expected)) / max(
            np.max(np.abs(expected)), 1e-12)
        self.assertLess(error, 1e-5)

    def test_000_logistic_gradient(self):
        _, grad_w, grad_b = classify.logistic_objective(self.weights,
            self.bias, self.features, self.targets, 0.7)
        numeric_w = numeric_gradient(lambda w: classify.logistic_objective(
            w, self.bias, self.features, self.targets, 0.7)[0], self.weights)
        numeric_b = numeric_gradient(lambda b: classify.logistic_objective(
            self.weights, b, self.features, self.targets, 0.7)[0], self.bias)
        self.assert_close_relative(grad_w, numeric_w)
        self.assert_close_relative(grad_b, numeric_b)

    def test_001_svm_gradient(self):
        signs = 2 * self.targets - 1
        _, grad_w, grad_b = classify.svm_objective(self.weights, self.bias,
            self.features, signs, 2.0)
        numeric_w = numeric_gradient(lambda w: classify.svm_objective(
            w, self.bias, self.features, signs, 2.0)[0], self.weights)
        numeric_b = numeric_gradient(lambda b: classify.svm_objective(
            self.weights, b, self.features, signs, 2.0)[0], self.bias)
        self.assert_close_relative(grad_w, numeric_w)
        self.assert_close_relative(grad_b, numeric_b)

    def test_002_logistic_value(self):
        zero = np.zeros((3, 4))
        value, _, _ = classify.logistic_objective(zero, np.zeros(4),
            self.features, self.targets, 1.0)
        self.assertAlmostEqual(value, np.log(4))

    def test_003_bias_not_penalised(self):
        value, _, _ = classify.svm_objective(np.zeros((3, 4)),
            np.full(4, 100.0), self.features, np.ones((8, 4)), 1.0)
        self.assertEqual(value, 0.0)


class TC_10_Logistic(unittest.TestCase):
    def setUp(self):
        self.features, self.labels = separable(np.random.default_rng(0))

    def test_000_train_accuracy(self):
        model = classify.train_logistic(self.features, self.labels, 0.01)
        predicted, _ = classify.predict(model, self.features)
        np.testing.assert_array_equal(predicted, self.labels)
        self.assertEqual(model.kind, 'logistic')
        self.assertEqual((model.num_features, model.num_classes), (4, 3))

    def test_001_probabilities(self):
        model = classify.train_logistic(self.features, self.labels)
        rng = np.random.default_rng(1)
        _, scores = classify.predict(model, rng.standard_normal((20, 4)) * 10)
        np.testing.assert_allclose(scores.sum(axis=1), np.ones(20),
            atol=1e-9)
        self.assertTrue(np.all(scores >= 0))

    def test_002_stationary(self):
        model = classify.train_logistic(self.features, self.labels, 1.0)
        _, grad_w, grad_b = classify.logistic_objective(model.weights,
            model.bias, self.features, one_hot(self.labels, 3), 1.0)
        self.assertLess(np.max(np.abs(grad_w)), 1e-6)
        self.assertLess(np.max(np.abs(grad_b)), 1e-6)

    def test_003_deterministic(self):
        first = classify.train_logistic(self.features, self.labels, seed=1)
        second = classify.train_logistic(self.features, self.labels, seed=2)
        np.testing.assert_array_equal(first.weights, second.weights)
        np.testing.assert_array_equal(first.bias, second.bias)

    def test_004_missing_class(self):
        with self.assertRaisesRegex(exc.InvalidArgument, '3'):
            classify.train_logistic(self.features, self.labels,
                classes=[0, 1, 2, 3])

    def test_005_single_class(self):
        with self.assertRaises(exc.InvalidArgument):
            classify.train_logistic(self.features[:10], self.labels[:10])

    def test_006_class_order(self):
        model = classify.train_logistic(self.features, self.labels,
            classes=[2, 0, 1])
        np.testing.assert_array_equal(model.classes, [2, 0, 1])
        predicted, _ = classify.predict(model, self.features)
        np.testing.assert_array_equal(predicted, self.labels)

    def test_007_label_count(self):
        with self.assertRaises(exc.InvalidArgument):
            classify.train_logistic(self.features, self.labels[:-1])


class TC_20_SVM(unittest.TestCase):
    def test_000_train_accuracy(self):
        features, labels = separable(np.random.default_rng(2))
        model = classify.train_svm(features, labels)
        predicted, scores = classify.predict(model, features)
        np.testing.assert_array_equal(predicted, labels)
        np.testing.assert_array_equal(scores,
            model.decision_function(features))

    def test_001_invalid_c(self):
        features, labels = separable(np.random.default_rng(3))
        with self.assertRaises(exc.InvalidArgument):
            classify.train_svm(features, labels, c=0)


class TC_30_Model(unittest.TestCase):
    def test_000_shapes(self):
        with self.assertRaises(exc.InvalidArgument):
            classify.LinearModel(np.zeros((3, 2)), np.zeros(3), [0, 1],
                'logistic')

    def test_001_kind(self):
        with self.assertRaises(exc.InvalidArgument):
            classify.LinearModel(np.zeros((3, 2)), np.zeros(2), [0, 1],
                'tree')

    def test_002_frozen_copy(self):
        weights = np.zeros((3, 2))
        model = classify.LinearModel(weights, np.zeros(2), [0, 1], 'svm')
        weights[0, 0] = 1.0
        self.assertEqual(model.weights[0, 0], 0.0)
        with self.assertRaises(ValueError):
            model.weights[0, 0] = 1.0

    def test_003_width(self):
        model = classify.LinearModel(np.zeros((3, 2)), np.zeros(2), [0, 1],
            'svm')
        with self.assertRaises(exc.InvalidArgument):
            model.decision_function(np.zeros((1, 4)))

    def test_004_tie_goes_to_first_column(self):
        model = classify.LinearModel(np.zeros((2, 3)), np.zeros(3),
            [5, 6, 7], 'logistic')
        predicted, scores = classify.predict(model, np.ones((2, 2)))
        np.testing.assert_array_equal(predicted, [5, 5])
        np.testing.assert_allclose(scores, np.full((2, 3), 1 / 3))


@pytest.mark.parametrize('kind', ['lr', 'logistic', 'svm'])
def test_train_dispatch(kind):
    features, labels = separable(np.random.default_rng(4))
    model = classify.train(kind, features, labels, l2=0.1, c=1.0)
    assert model.kind == ('svm' if kind == 'svm' else 'logistic')


def test_train_unknown_kind():
    features, labels = separable(np.random.default_rng(5))
    with pytest.raises(exc.InvalidArgument):
        classify.train('knn', features, labels)


def test_softmax_matches_scipy():
    features, labels = separable(np.random.default_rng(6))
    model = classify.train_logistic(features, labels)
    _, scores = classify.predict(model, features)
    np.testing.assert_array_equal(scores, scipy.special.softmax(
        model.decision_function(features), axis=1))


def svm_gradient_descent(features, signs, c, iterations=20000):
    design = np.hstack([features, np.ones((features.shape[0], 1))])
    step = 1 / (1 + 2 * c * np.linalg.norm(design, 2) ** 2)
    theta = np.zeros((design.shape[1], signs.shape[1]))
    penalty = np.eye(design.shape[1])
    penalty[-1, -1] = 0
    for _ in range(iterations):
        margins = np.maximum(0, 1 - signs * (design @ theta))
        theta -= step * (penalty @ theta
            - 2 * c * design.T @ (margins * signs))
    margins = np.maximum(0, 1 - signs * (design @ theta))
    return 0.5 * np.sum((penalty @ theta) ** 2) + c * np.sum(margins ** 2)


def test_logistic_two_points_boundary_at_zero():
    model = classify.train_logistic([[-1.0], [1.0]], [0, 1])
    predicted, _ = classify.predict(model, [[-1.0], [1.0]])
    np.testing.assert_array_equal(predicted, [0, 1])
    boundary = -(model.bias[1] - model.bias[0]) / (
        model.weights[0, 1] - model.weights[0, 0])
    assert abs(boundary) < 1e-3


def test_logistic_replication_invariance():
    features, labels = separable(np.random.default_rng(7), per_class=5)
    once = classify.train_logistic(features, labels, 0.5)
    twice = classify.train_logistic(np.vstack([features, features]),
        np.concatenate([labels, labels]), 0.5)
    np.testing.assert_allclose(twice.weights, once.weights, atol=1e-6)
    np.testing.assert_allclose(twice.bias, once.bias, atol=1e-6)


def test_logistic_shift_only_moves_bias():
    rng = np.random.default_rng(8)
    features = rng.standard_normal((40, 3))
    labels = rng.integers(0, 3, size=40)
    shift = np.array([2.0, -1.0, 3.0])
    model = classify.train_logistic(features, labels, 0.0)
    shifted = classify.train_logistic(features + shift, labels, 0.0)
    test = rng.standard_normal((25, 3))
    predicted, scores = classify.predict(model, test)
    shifted_predicted, shifted_scores = classify.predict(shifted,
        test + shift)
    np.testing.assert_array_equal(shifted_predicted, predicted)
    np.testing.assert_allclose(shifted_scores, scores, atol=1e-6)


def test_svm_objective_matches_gradient_descent():
    rng = np.random.default_rng(9)
    features = rng.standard_normal((12, 3))
    labels = np.arange(12) % 3
    model = classify.train_svm(features, labels, c=1.0)
    signs = 2 * one_hot(labels, 3) - 1
    value, _, _ = classify.svm_objective(model.weights, model.bias,
        features, signs, 1.0)
    assert value == pytest.approx(
        svm_gradient_descent(features, signs, 1.0), rel=1e-4)


def test_svm_feature_scaling_with_c():
    features, labels = separable(np.random.default_rng(10), per_class=6)
    model = classify.train_svm(features, labels, c=1.0)
    scaled = classify.train_svm(2 * features, labels, c=0.25)
    test = np.random.default_rng(11).standard_normal((15, 4)) * 3
    np.testing.assert_allclose(scaled.decision_function(2 * test),
        model.decision_function(test), atol=1e-4)
