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

'''Dense projections used by the incidental-parameter regression

All functions take anything :py:func:`numpy.asarray` accepts, and return
new float64 arrays. Inputs are never modified.
'''

import numpy as np

from . import PINV_RCOND
from .exc import InvalidArgument


def as_dense(a, *, name='matrix'):
    '''Validate and convert *a* to a 2-D float64 array.

    Raises:
        ici.exc.InvalidArgument: for empty, non 2-D or non-finite input
    '''
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidArgument(
            '{} must be 2-dimensional, got shape {}'.format(name, a.shape))
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise InvalidArgument(
            '{} must be non-empty, got shape {}'.format(name, a.shape))
    if not np.all(np.isfinite(a)):
        raise InvalidArgument('{} contains NaN or Inf'.format(name))
    return a


def _numerical_rank(singular_values, rcond):
    if singular_values.size == 0 or singular_values[0] <= 0:
        return 0
    return int(np.count_nonzero(
        singular_values > rcond * singular_values[0]))


def matrix_rank(a, rcond=PINV_RCOND):
    '''Rank of *a* with the same cutoff as :py:func:`pseudo_inverse`'''
    s = np.linalg.svd(as_dense(a), compute_uv=False)
    return _numerical_rank(s, rcond)


def pseudo_inverse(a, rcond=PINV_RCOND):
    '''Moore-Penrose pseudo-inverse of *a*, computed from its SVD.

    Singular values not larger than ``rcond * sigma_max`` are treated as zero.

    Args:
        a: m x n matrix
        rcond (float): relative cutoff

    Returns:
        numpy.ndarray: n x m matrix
    '''
    a = as_dense(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    rank = _numerical_rank(s, rcond)
    # (V_r / s_r) U_r^T
    return (vt[:rank].T / s[:rank]) @ u[:, :rank].T


def column_basis(x, rcond=PINV_RCOND):
    '''Orthonormal basis of the column space of *x*: the left singular
    vectors of its nonzero singular values, one per column'''
    x = as_dense(x, name='X')
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    return u[:, :_numerical_rank(s, rcond)].copy()


def hat_matrix(x, rcond=PINV_RCOND):
    '''Orthogonal projector ``H = X (X^T X)^+ X^T`` onto the column space of X.

    It is assembled as ``U_r U_r^T`` from :py:func:`column_basis`, which
    equals the formula above and is symmetric to the last bit.
    '''
    basis = column_basis(x, rcond)
    return basis @ basis.T


def annihilator(x, rcond=PINV_RCOND):
    '''``I - H`` for the hat matrix H of *x*; maps the columns of X to zero'''
    hat = hat_matrix(x, rcond)
    return np.eye(hat.shape[0]) - hat
