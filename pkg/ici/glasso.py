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

'''Regularization path of the incidental parameters

The problem solved here is the multi-response group lasso

.. math::

   \\min_\\gamma \\frac{1}{2n} \\| \\tilde Y - \\tilde X \\gamma \\|_F^2
       + \\lambda \\sum_i \\| \\gamma_i \\|_2

with one group per row of :math:`\\gamma` (one per instance). Note the
:math:`1/(2n)` scaling: it is the convention under which
:math:`\\lambda_{max} = \\max_i \\| \\tilde X_{\\cdot i}^\\top \\tilde Y \\|_2
/ n` is exact, and every reported :math:`\\lambda` is on this scale.

When :math:`\\tilde X = I - U U^\\top` is an orthogonal projector, the
problem is the profile of

.. math::

   \\min_{\\beta, \\gamma} \\frac{1}{2n} \\| \\tilde Y - U \\beta - \\gamma
       \\|_F^2 + \\lambda \\sum_i \\| \\gamma_i \\|_2

over the design coefficients :math:`\\beta`. Minimising over :math:`\\gamma`
first leaves a smooth group Huber regression in :math:`\\beta` with only
``rank * N`` unknowns. :py:func:`solve_at_lambda` solves it by a trust-region
Newton method and starts the blockwise descent from the rows it implies.
'''

import csv
import logging

import numpy as np
import scipy.optimize

from . import (
    DEFAULT_GRID_EPS,
    DEFAULT_GRID_SIZE,
    KKT_TOL,
    PROFILE_GTOL,
    SOLVER_MAX_ITERS,
    SOLVER_TOL,
    ZERO_TOL,
)
from .exc import InvalidArgument
from .linalg import as_dense, column_basis

log = logging.getLogger('ici.glasso')

PATH_TABLE_COLUMNS = ('lambda', 'instance_index', 'gamma_norm')


def _kernel_basis(x_tilde, y_tilde, atol=1e-8):
    # basis U of the kernel when x_tilde = I - U U^T and U^T y_tilde = 0
    if not np.allclose(x_tilde, x_tilde.T, rtol=0, atol=atol):
        return None
    values, vectors = np.linalg.eigh(x_tilde)
    if np.any(np.minimum(np.abs(values), np.abs(values - 1)) > atol):
        return None
    basis = vectors[:, values < 0.5]
    scale = max(1.0, float(np.max(np.abs(y_tilde))))
    if not np.allclose(basis.T @ y_tilde, 0, rtol=0, atol=atol * scale):
        return None
    return basis


class PathProblem:
    '''Penalised regression of :math:`\\tilde Y` on :math:`\\tilde X`

    Args:
        x_tilde: n x n matrix (the annihilator of the design)
        y_tilde: n x N matrix
        y: the one-hot matrix :math:`\\tilde Y` was computed from, if known
        rankable: rows whose credibility is of interest
        instance_ids: identifier of every row, for reporting
        design_basis: orthonormal basis of the kernel of *x_tilde*; found
            from *x_tilde* when not given
    '''
    # pylint: disable=too-many-instance-attributes
    def __init__(self, x_tilde, y_tilde, *, y=None, rankable=(),
            instance_ids=None, design_basis=None):
        x_tilde = as_dense(x_tilde, name='X_tilde')
        y_tilde = as_dense(y_tilde, name='Y_tilde')
        n = x_tilde.shape[1]
        if x_tilde.shape[0] != y_tilde.shape[0]:
            raise InvalidArgument(
                'X_tilde has {} rows but Y_tilde has {}'.format(
                    x_tilde.shape[0], y_tilde.shape[0]))
        if x_tilde.shape[0] != n:
            raise InvalidArgument(
                'X_tilde must be square, got shape {}'.format(x_tilde.shape))

        #: n x n design
        self.x_tilde = x_tilde
        #: n x N response
        self.y_tilde = y_tilde
        #: the one-hot labels before projection, or None
        self.y = y
        #: sorted indices of the rows that take part in ranking
        self.rankable = np.unique(np.asarray(rankable, dtype=np.intp))
        if self.rankable.size and not (
                0 <= self.rankable[0] and self.rankable[-1] < n):
            raise InvalidArgument('rankable row index out of range')
        #: per-row identifiers (defaults to row numbers)
        self.instance_ids = (np.arange(n) if instance_ids is None
            else np.asarray(instance_ids))
        if self.instance_ids.shape != (n,):
            raise InvalidArgument('need exactly one instance id per row')

        #: :math:`\\tilde X^\\top \\tilde X`
        self.gram = x_tilde.T @ x_tilde
        #: :math:`\\tilde X^\\top \\tilde Y`, the correlations of the zero
        #: solution
        self.correlation = x_tilde.T @ y_tilde
        if design_basis is None:
            design_basis = _kernel_basis(x_tilde, y_tilde)
        else:
            design_basis = np.asarray(design_basis, dtype=np.float64)
            if design_basis.ndim != 2 or design_basis.shape[0] != n:
                raise InvalidArgument(
                    'design basis must have {} rows'.format(n))
        #: n x rank kernel basis, or None when X_tilde is not an orthogonal
        #: projector with Y_tilde in its range
        self.design_basis = design_basis

    @classmethod
    def from_design(cls, x, y, **kwds):
        '''Build the problem from design *x* (n x d) and one-hot *y* (n x N)'''
        basis = column_basis(x)
        x_tilde = np.eye(basis.shape[0]) - basis @ basis.T
        y = as_dense(y, name='Y')
        return cls(x_tilde, x_tilde @ y, y=y, design_basis=basis, **kwds)

    @property
    def n(self):
        '''Number of instances (groups)'''
        return self.x_tilde.shape[1]

    @property
    def num_classes(self):
        '''Number of responses'''
        return self.y_tilde.shape[1]

    def __repr__(self):
        return '<{} n={} N={} rankable={}>'.format(
            type(self).__name__, self.n, self.num_classes, self.rankable.size)


class IncidentalPath:
    '''Solutions along an ascending penalty grid'''
    def __init__(self, lambda_grid, gamma_norms, *, converged,
            residual_norms, gamma_full=None):
        #: K ascending penalties
        self.lambda_grid = lambda_grid
        #: K x n matrix of row norms of the solution at each penalty
        self.gamma_norms = gamma_norms
        #: per grid point, whether the solver met its tolerance
        self.converged = converged
        #: row norms of the residual at the smallest penalty
        self.residual_norms = residual_norms
        #: K x n x N solutions, only kept on request
        self.gamma_full = gamma_full

    @property
    def trivial(self):
        '''True for the degenerate path of a problem with zero response'''
        return self.lambda_grid[-1] == 0

    @property
    def n(self):
        '''Number of instances'''
        return self.gamma_norms.shape[1]

    def __repr__(self):
        return '<{} K={} n={}>'.format(
            type(self).__name__, self.lambda_grid.size, self.n)


class VanishTable:
    '''Per-instance penalty at which its incidental row vanishes'''
    def __init__(self, vanish_lambda, lambda_grid):
        #: smallest grid penalty from which the row stays zero, or +inf
        self.vanish_lambda = vanish_lambda
        #: the grid the values were taken from
        self.lambda_grid = lambda_grid

    def __len__(self):
        return self.vanish_lambda.size

    def __getitem__(self, index):
        return self.vanish_lambda[index]


def group_soft_threshold(z, t):
    '''Proximal map of ``t * ||.||_2``: zero if ``||z|| <= t``, else z shrunk
    towards zero by *t*'''
    z = np.asarray(z, dtype=np.float64)
    norm = np.sqrt(z @ z)
    if norm <= t:
        return np.zeros_like(z)
    return (1.0 - t / norm) * z


def lambda_max(problem):
    '''Smallest penalty at which the all-zero solution is optimal.

    Values within :data:`ici.ZERO_TOL` of zero are rounding noise of a
    response the design explains exactly, and are reported as 0.
    '''
    value = float(np.max(np.linalg.norm(problem.correlation, axis=1))
        / problem.n)
    return value if value > ZERO_TOL else 0.0


def lambda_grid(lmax, size=DEFAULT_GRID_SIZE, eps=DEFAULT_GRID_EPS):
    '''*size* log-spaced penalties from ``eps * lmax`` to *lmax*, ascending.

    For ``lmax == 0`` the degenerate grid ``[0.]`` is returned; see
    :py:attr:`IncidentalPath.trivial`.
    '''
    if size < 2:
        raise InvalidArgument('grid needs at least 2 points, got {}'.format(
            size))
    if not 0 < eps < 1:
        raise InvalidArgument('grid ratio must be in (0, 1), got {}'.format(
            eps))
    if not lmax >= 0:
        raise InvalidArgument('lambda_max must be >= 0, got {}'.format(lmax))
    if lmax == 0:
        log.debug('zero lambda_max, path is trivial')
        return np.zeros(1)
    grid = np.geomspace(eps * lmax, lmax, size)
    grid[0], grid[-1] = eps * lmax, lmax
    return grid


def objective(problem, gamma, lam):
    '''Scaled objective of *gamma* at penalty *lam*'''
    resid = problem.y_tilde - problem.x_tilde @ gamma
    return float(0.5 / problem.n * np.sum(resid * resid)
        + lam * np.sum(np.linalg.norm(gamma, axis=1)))


def kkt_residuals(problem, gamma, lam):
    '''Per-group violation of the optimality conditions.

    For an active group this is the norm of gradient plus subgradient, for an
    inactive one the amount by which the gradient norm exceeds *lam*. All
    zeros means *gamma* is optimal.
    '''
    grad = (problem.correlation - problem.gram @ gamma) / problem.n
    norms = np.linalg.norm(gamma, axis=1)
    grad_norms = np.linalg.norm(grad, axis=1)
    active = norms > 0
    violation = np.maximum(grad_norms - lam, 0.0)
    if np.any(active):
        direction = gamma[active] / norms[active, np.newaxis]
        violation[active] = np.linalg.norm(
            grad[active] - lam * direction, axis=1)
    return violation


def _row_shrink(resid, threshold):
    # row-wise group soft threshold of a matrix
    norms = np.linalg.norm(resid, axis=1, keepdims=True)
    scale = np.divide(threshold, norms, out=np.ones_like(norms),
        where=norms > threshold)
    return (1.0 - scale) * resid


def _huber(flat, basis, y, threshold):
    resid = y - basis @ flat.reshape(basis.shape[1], -1)
    norms = np.linalg.norm(resid, axis=1)
    outer = norms > threshold
    value = np.sum(np.where(outer, threshold * norms - 0.5 * threshold ** 2,
        0.5 * norms ** 2))
    scale = np.divide(threshold, norms, out=np.ones_like(norms), where=outer)
    return value, -(basis.T @ (resid * scale[:, np.newaxis])).ravel()


def _huber_hessian(flat, basis, y, threshold):
    rank, num_classes = basis.shape[1], y.shape[1]
    resid = y - basis @ flat.reshape(rank, num_classes)
    norms = np.linalg.norm(resid, axis=1)
    outer = norms > threshold
    scale = np.divide(threshold, norms, out=np.ones_like(norms), where=outer)
    unit = np.divide(resid, norms[:, np.newaxis], out=np.zeros_like(resid),
        where=outer[:, np.newaxis])
    # per row: I inside the ball, (t / |r|) (I - r r^T / |r|^2) outside
    curvature = scale[:, np.newaxis, np.newaxis] * (np.eye(num_classes)
        - unit[:, :, np.newaxis] * unit[:, np.newaxis, :])
    hessian = np.einsum('ia,ib,ijk->ajbk', basis, basis, curvature)
    return hessian.reshape(rank * num_classes, rank * num_classes)


def profile_solution(problem, lam, warm_start=None):
    '''Solve at *lam* through the design coefficients.

    The group Huber regression left after minimising over the incidental rows
    is solved by :py:func:`scipy.optimize.minimize` (``trust-exact``), started
    from the coefficients that best explain *warm_start*. The rows it implies
    are returned.

    Raises:
        ici.exc.InvalidArgument: when the problem has no design basis
    '''
    basis, y = problem.design_basis, problem.y_tilde
    if basis is None:
        raise InvalidArgument('X_tilde is not an orthogonal projector')
    threshold = problem.n * lam
    resid = y
    if basis.shape[1]:
        start = basis.T @ (y if warm_start is None else y - warm_start)
        result = scipy.optimize.minimize(_huber, start.ravel(),
            args=(basis, y, threshold), jac=True, hess=_huber_hessian,
            method='trust-exact', options={'gtol': PROFILE_GTOL})
        if not result.success:
            log.debug('coefficient solve at lambda=%g: %s', lam,
                result.message)
        resid = y - basis @ result.x.reshape(basis.shape[1], -1)
    return _row_shrink(resid, threshold)


def _sweep(gram, col_sq, threshold, gamma, corr, indices):
    # one cyclic pass of blockwise updates; gamma and corr change in place
    delta = 0.0
    for i in indices:
        if col_sq[i] <= 0:
            continue
        old = gamma[i].copy()
        new = group_soft_threshold(corr[i] + col_sq[i] * old,
            threshold) / col_sq[i]
        change = new - old
        step = np.sqrt(change @ change)
        if step > 0:
            corr -= np.outer(gram[i], change)
            gamma[i] = new
            delta = max(delta, step)
    return delta


def solve_at_lambda(problem, lam, warm_start=None, *, tol=SOLVER_TOL,
        max_iters=SOLVER_MAX_ITERS, kkt_tol=KKT_TOL, previous=None,
        profile=True):
    '''Minimise the scaled objective at penalty *lam* by blockwise descent.

    Cyclic sweeps run over a working set: the rows active in the starting
    point, and with *previous* also the rows the sequential strong rule keeps.
    Once a sweep moves no row by more than *tol*, rows outside the working
    set whose optimality conditions fail join it and sweeping resumes. The
    solution is accepted when none does, which is what a full sweep over all
    rows would conclude.

    Args:
        problem (PathProblem): the problem
        lam (float): the penalty
        warm_start: n x N starting point (zeros if None)
        tol (float): bound on the largest row change of the final sweep
        max_iters (int): maximum number of sweeps
        previous (float): the penalty *warm_start* solves, if any
        profile (bool): first move the starting point to
            :py:func:`profile_solution` when the problem has a design basis

    Returns:
        (numpy.ndarray, bool): the solution and whether it converged; on
        non-convergence the last iterate is returned
    '''
    # pylint: disable=too-many-arguments,too-many-locals
    n, num_classes = problem.n, problem.num_classes
    if lam < 0:
        raise InvalidArgument('penalty must be >= 0, got {}'.format(lam))
    if warm_start is None:
        gamma = np.zeros((n, num_classes))
    else:
        gamma = np.array(warm_start, dtype=np.float64)
        if gamma.shape != (n, num_classes):
            raise InvalidArgument(
                'warm start has shape {}, expected {}'.format(
                    gamma.shape, (n, num_classes)))

    if lam >= lambda_max(problem):
        return np.zeros((n, num_classes)), True
    if profile and problem.design_basis is not None:
        gamma = profile_solution(problem, lam, gamma)

    gram = problem.gram
    col_sq = np.diag(gram).copy()
    # columns annihilated to rounding noise carry no signal
    col_sq[col_sq < 1e-12] = 0.0
    threshold = n * lam

    corr = problem.correlation - gram @ gamma
    working = np.any(gamma != 0, axis=1)
    if previous is not None:
        working |= np.linalg.norm(corr, axis=1) >= n * (2 * lam - previous)

    converged = False
    sweeps = 0
    while sweeps < max_iters:
        delta = _sweep(gram, col_sq, threshold, gamma, corr,
            np.flatnonzero(working))
        sweeps += 1
        if delta >= tol:
            continue
        corr = problem.correlation - gram @ gamma
        violators = ~working & (col_sq > 0) & (
            np.linalg.norm(corr, axis=1) > threshold)
        if not np.any(violators):
            converged = True
            break
        working |= violators

    if not converged:
        log.warning('blockwise descent did not converge at lambda=%g '
            'after %d sweeps', lam, sweeps)
    else:
        violation = float(np.max(kkt_residuals(problem, gamma, lam)))
        if violation > kkt_tol:
            log.warning('KKT violation %g at lambda=%g exceeds %g',
                violation, lam, kkt_tol)
    return gamma, converged


def solve_path(problem, grid, *, keep_full=False, **kwds):
    '''Solve along *grid* from its largest penalty down, with warm starts.

    Args:
        problem (PathProblem): the problem
        grid: ascending penalties
        keep_full (bool): keep every solution, not only row norms
        kwds: passed to :py:func:`solve_at_lambda`

    Returns:
        IncidentalPath: the path
    '''
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidArgument('grid must be a non-empty vector')
    if np.any(np.diff(grid) <= 0):
        raise InvalidArgument('grid must be strictly increasing')

    n, num_classes = problem.n, problem.num_classes
    norms = np.zeros((grid.size, n))
    converged = np.ones(grid.size, dtype=bool)
    full = np.zeros((grid.size, n, num_classes)) if keep_full else None

    gamma = np.zeros((n, num_classes))
    previous = None
    for k in reversed(range(grid.size)):
        gamma, converged[k] = solve_at_lambda(problem, grid[k], gamma,
            previous=previous, **kwds)
        previous = grid[k]
        norms[k] = np.linalg.norm(gamma, axis=1)
        if keep_full:
            full[k] = gamma

    if not np.all(converged):
        log.warning('path has %d non-converged grid points',
            np.count_nonzero(~converged))

    resid = problem.y_tilde - problem.x_tilde @ gamma
    return IncidentalPath(grid, norms, converged=converged,
        residual_norms=np.linalg.norm(resid, axis=1), gamma_full=full)


def vanish_lambdas(path, zero_tol=ZERO_TOL):
    '''For each instance, the smallest grid penalty at and above which its row
    norm stays within *zero_tol*; +inf if it is nonzero at the top of the grid.
    '''
    active = path.gamma_norms > zero_tol
    size = path.lambda_grid.size
    # index of the last grid point where the row is still active
    last = size - 1 - np.argmax(active[::-1], axis=0)
    ever = np.any(active, axis=0)
    padded = np.append(path.lambda_grid, np.inf)
    vanish = np.where(ever, padded[np.minimum(last + 1, size)],
        path.lambda_grid[0])
    return VanishTable(vanish, path.lambda_grid)


def write_path_table(path, stream, *, instance_ids=None, extra=None,
        delimiter='\t'):
    '''Write the path as a ``lambda, instance_index, gamma_norm`` table.

    Args:
        path (IncidentalPath): the path
        stream: text file open for writing
        instance_ids: identifier written for each row (default: row number)
        extra (dict): additional per-instance columns, column name to sequence
        delimiter (str): field separator
    '''
    if instance_ids is None:
        instance_ids = range(path.n)
    instance_ids = list(instance_ids)
    extra = extra or {}
    writer = csv.writer(stream, delimiter=delimiter, lineterminator='\n')
    writer.writerow(PATH_TABLE_COLUMNS + tuple(extra))
    for k, lam in enumerate(path.lambda_grid):
        for i, instance in enumerate(instance_ids):
            writer.writerow([repr(float(lam)), instance,
                repr(float(path.gamma_norms[k, i]))]
                + [values[i] for values in extra.values()])
