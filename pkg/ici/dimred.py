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

'''Feature normalisation and PCA reduction'''

import numpy as np

from .exc import InvalidArgument
from .linalg import as_dense


def l2_normalize(v):
    '''Scale *v* to unit Euclidean norm.

    A 2-D argument is normalised row by row. Zero vectors (rows) are returned
    unchanged.
    '''
    v = np.asarray(v, dtype=np.float64)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.divide(v, norms, out=v.copy(), where=norms > 0)


class PcaModel:
    '''Fitted principal component projection

    Args:
        mean: vector of length d_in
        components: d_in x d_out matrix with orthonormal columns
        explained_variance: nonincreasing vector of length d_out
    '''
    def __init__(self, mean, components, explained_variance):
        #: the mean that is subtracted before projecting
        self.mean = np.array(mean, dtype=np.float64)
        #: principal axes, one per column
        self.components = np.array(components, dtype=np.float64)
        #: variance of the training data along each axis
        self.explained_variance = np.array(explained_variance,
            dtype=np.float64)
        for array in (self.mean, self.components, self.explained_variance):
            array.setflags(write=False)

    @property
    def d_in(self):
        '''Input dimension'''
        return self.components.shape[0]

    @property
    def d_out(self):
        '''Output dimension'''
        return self.components.shape[1]

    def __repr__(self):
        return '<{} d_in={} d_out={}>'.format(
            type(self).__name__, self.d_in, self.d_out)

    def transform(self, data):
        '''Shorthand for :py:func:`pca_transform`'''
        return pca_transform(self, data)


def pca_fit(data, d_out):
    '''Fit PCA with *d_out* components to the rows of *data*.

    The components are the leading right singular vectors of the centred data.
    Each one is oriented so that its largest-magnitude entry is positive.

    Raises:
        ici.exc.InvalidArgument: for fewer than 2 rows or *d_out* larger than
            ``min(n - 1, d_in)``
    '''
    data = as_dense(data, name='data')
    n, d_in = data.shape
    if n < 2:
        raise InvalidArgument('PCA needs at least 2 rows, got {}'.format(n))
    if not 1 <= d_out <= min(n - 1, d_in):
        raise InvalidArgument(
            'cannot fit {} components to {} rows of dimension {}'.format(
                d_out, n, d_in))

    mean = data.mean(axis=0)
    _, s, vt = np.linalg.svd(data - mean, full_matrices=False)
    components = vt[:d_out].T.copy()

    pivots = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[pivots, np.arange(d_out)])
    signs[signs == 0] = 1.0
    components *= signs

    explained_variance = s[:d_out] ** 2 / (n - 1)
    return PcaModel(mean, components, explained_variance)


def pca_transform(model, data):
    '''Project the rows of *data*: ``(data - mean) @ components``

    Raises:
        ici.exc.InvalidArgument: when the column count is not ``model.d_in``
    '''
    data = as_dense(data, name='data')
    if data.shape[1] != model.d_in:
        raise InvalidArgument(
            'data has {} columns, PCA model expects {}'.format(
                data.shape[1], model.d_in))
    return (data - model.mean) @ model.components
