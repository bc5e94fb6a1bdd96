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

'''Linear base classifiers

Both learners are trained by deterministic full-batch L-BFGS from a zero
starting point, so identical input gives a bit-identical model. Biases are
never penalised.
'''

import logging

import numpy as np
import scipy.optimize
import scipy.special

from . import DEFAULT_L2, DEFAULT_SVM_C
from .exc import InvalidArgument
from .linalg import as_dense
from .utils import one_hot

log = logging.getLogger('ici.classify')

KINDS = ('logistic', 'svm')

_LBFGS_OPTIONS = {'maxiter': 15000, 'gtol': 1e-10, 'ftol': 1e-15}


class LinearModel:
    '''Trained linear classifier

    Args:
        weights: D x N matrix
        bias: vector of length N
        classes: class ids, in score column order
        kind (str): ``'logistic'`` or ``'svm'``
    '''
    def __init__(self, weights, bias, classes, kind):
        weights = np.array(weights, dtype=np.float64)
        bias = np.array(bias, dtype=np.float64)
        classes = np.array(classes)
        if kind not in KINDS:
            raise InvalidArgument('unknown classifier kind {!r}'.format(kind))
        if classes.ndim != 1 or classes.size < 2:
            raise InvalidArgument('need at least 2 classes')
        if np.unique(classes).size != classes.size:
            raise InvalidArgument('class ids must be distinct')
        if weights.ndim != 2 or weights.shape[1] != classes.size \
                or bias.shape != (classes.size,):
            raise InvalidArgument(
                'inconsistent shapes: weights {}, bias {}, {} classes'.format(
                    weights.shape, bias.shape, classes.size))
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
            raise InvalidArgument('model parameters must be finite')

        #: D x N weight matrix
        self.weights = weights
        #: bias per class
        self.bias = bias
        #: class id of each score column
        self.classes = classes
        #: ``'logistic'`` or ``'svm'``
        self.kind = kind
        for array in (self.weights, self.bias, self.classes):
            array.setflags(write=False)

    @property
    def num_features(self):
        '''Input width D'''
        return self.weights.shape[0]

    @property
    def num_classes(self):
        '''Number of classes N'''
        return self.classes.size

    def __repr__(self):
        return '<{} kind={} D={} N={}>'.format(type(self).__name__,
            self.kind, self.num_features, self.num_classes)

    def decision_function(self, features):
        '''Raw linear scores, m x N'''
        features = as_dense(features, name='features')
        if features.shape[1] != self.num_features:
            raise InvalidArgument(
                'features have width {}, model expects {}'.format(
                    features.shape[1], self.num_features))
        return features @ self.weights + self.bias


def _prepare(features, labels, classes):
    features = as_dense(features, name='features')
    labels = np.asarray(labels)
    if labels.shape != (features.shape[0],):
        raise InvalidArgument('need exactly one label per feature row')
    if classes is None:
        classes = np.unique(labels)
    else:
        classes = np.asarray(classes)
        missing = np.setdiff1d(classes, labels)
        if missing.size:
            raise InvalidArgument(
                'no training example for class(es) {}'.format(
                ', '.join(str(c) for c in missing)))
    if classes.size < 2:
        raise InvalidArgument('need examples of at least 2 classes')
    unknown = np.setdiff1d(labels, classes)
    if unknown.size:
        raise InvalidArgument('unexpected label(s) {}'.format(
            ', '.join(str(c) for c in unknown)))
    index = np.searchsorted(np.sort(classes), labels)
    # map labels to columns in the order given by classes
    order = np.argsort(classes)
    return features, order[index], classes


def _minimize(fun, size):
    result = scipy.optimize.minimize(fun, np.zeros(size), jac=True,
        method='L-BFGS-B', options=_LBFGS_OPTIONS)
    if not result.success:
        log.debug('L-BFGS-B stopped: %s', result.message)
    return result.x


def logistic_objective(weights, bias, features, targets, l2):
    '''Mean cross-entropy plus ``l2/2 * ||weights||^2``.

    Args:
        targets: n x N one-hot matrix

    Returns:
        (float, numpy.ndarray, numpy.ndarray): value and gradients with
        respect to weights and bias
    '''
    n = features.shape[0]
    scores = features @ weights + bias
    log_norm = scipy.special.logsumexp(scores, axis=1)
    value = (np.sum(log_norm) - np.sum(scores * targets)) / n \
        + 0.5 * l2 * np.sum(weights * weights)
    residual = (scipy.special.softmax(scores, axis=1) - targets) / n
    return (float(value), features.T @ residual + l2 * weights,
        residual.sum(axis=0))


def svm_objective(weights, bias, features, signs, c):
    '''One-vs-rest squared hinge: ``1/2 ||w_k||^2 + c sum max(0, 1 - s m)^2``
    summed over classes.

    Args:
        signs: n x N matrix of +1 (own class) and -1 (rest)

    Returns:
        (float, numpy.ndarray, numpy.ndarray): value and gradients with
        respect to weights and bias
    '''
    margins = np.maximum(0.0, 1.0 - signs * (features @ weights + bias))
    value = 0.5 * np.sum(weights * weights) + c * np.sum(margins * margins)
    coeff = -2.0 * c * margins * signs
    return float(value), weights + features.T @ coeff, coeff.sum(axis=0)


def train_logistic(features, labels, l2=DEFAULT_L2, seed=None, *,
        classes=None):
    '''Multinomial logistic regression.

    Args:
        features: n x D matrix
        labels: n class ids
        l2 (float): weight penalty
        seed: accepted for interface symmetry; training is deterministic
        classes: expected class ids; each must occur in *labels*

    Raises:
        ici.exc.InvalidArgument: for a class without examples
    '''
    # pylint: disable=unused-argument
    if l2 < 0:
        raise InvalidArgument('l2 must be >= 0, got {}'.format(l2))
    features, columns, classes = _prepare(features, labels, classes)
    dim, ncls = features.shape[1], classes.size
    targets = one_hot(columns, ncls)

    def fun(theta):
        weights, bias = theta[:-ncls].reshape(dim, ncls), theta[-ncls:]
        value, grad_w, grad_b = logistic_objective(
            weights, bias, features, targets, l2)
        return value, np.concatenate([grad_w.ravel(), grad_b])

    theta = _minimize(fun, dim * ncls + ncls)
    return LinearModel(theta[:-ncls].reshape(dim, ncls), theta[-ncls:],
        classes, 'logistic')


def train_svm(features, labels, c=DEFAULT_SVM_C, seed=None, *,
        classes=None):
    '''Linear one-vs-rest SVM with squared hinge loss.

    Each class is fitted independently against the rest. See
    :py:func:`train_logistic` for the arguments.
    '''
    # pylint: disable=unused-argument
    if not c > 0:
        raise InvalidArgument('c must be > 0, got {}'.format(c))
    features, columns, classes = _prepare(features, labels, classes)
    dim, ncls = features.shape[1], classes.size
    signs = 2.0 * one_hot(columns, ncls) - 1.0

    weights = np.zeros((dim, ncls))
    bias = np.zeros(ncls)
    for k in range(ncls):
        column = signs[:, k:k+1]

        def fun(theta, column=column):
            value, grad_w, grad_b = svm_objective(theta[:-1, np.newaxis],
                theta[-1:], features, column, c)
            return value, np.concatenate([grad_w.ravel(), grad_b])

        theta = _minimize(fun, dim + 1)
        weights[:, k], bias[k] = theta[:-1], theta[-1]
    return LinearModel(weights, bias, classes, 'svm')


def train(kind, features, labels, *, l2=DEFAULT_L2, c=DEFAULT_SVM_C,
        seed=None, classes=None):
    '''Dispatch to :py:func:`train_logistic` or :py:func:`train_svm`'''
    if kind in ('logistic', 'lr'):
        return train_logistic(features, labels, l2, seed, classes=classes)
    if kind == 'svm':
        return train_svm(features, labels, c, seed, classes=classes)
    raise InvalidArgument('unknown classifier kind {!r}'.format(kind))


def predict(model, features):
    '''Predict labels and scores for the rows of *features*.

    Scores are softmax probabilities for logistic models and decision values
    for SVMs. Ties go to the earliest class column.

    Returns:
        (numpy.ndarray, numpy.ndarray): m labels and m x N scores
    '''
    scores = model.decision_function(features)
    if model.kind == 'logistic':
        scores = scipy.special.softmax(scores, axis=1)
    return model.classes[np.argmax(scores, axis=1)], scores
