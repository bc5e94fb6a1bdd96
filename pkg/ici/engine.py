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

'''Credibility ranking and the self-taught expansion loop

One iteration of :py:func:`run_ici_loop`:

1. train the base classifier on the expanded support set,
2. pseudo-label what is left of the unlabeled pool,
3. rank the pseudo-labeled instances (by vanishing penalty of their
   incidental parameters, or by one of the baseline strategies),
4. absorb the top ``quota`` instances of every class into the support set.

Instances keep the pseudo-label they were absorbed with; instances still in
the pool are relabeled by every new classifier.
'''

import logging
import math

import numpy as np

from . import (
    DEFAULT_CLASSIFIER,
    DEFAULT_GRID_EPS,
    DEFAULT_GRID_SIZE,
    DEFAULT_L2,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_QUOTA,
    DEFAULT_SVM_C,
    STRATEGIES,
)
from . import classify
from . import glasso
from .exc import InvalidArgument
from .linalg import as_dense
from .utils import one_hot

log = logging.getLogger('ici.engine')


class Candidate:
    '''Pseudo-labeled instance competing for a place in the support set'''
    def __init__(self, instance_index, pseudo_label, *,
            vanish_lambda=math.nan, score=math.nan):
        #: row of the episode feature table
        self.instance_index = int(instance_index)
        #: label assigned by the classifier
        self.pseudo_label = int(pseudo_label)
        #: penalty at which the incidental row vanished (NaN if not ranked
        #: by credibility)
        self.vanish_lambda = float(vanish_lambda)
        #: classifier score of the pseudo-label
        self.score = float(score)

    def __repr__(self):
        return '<{} index={} label={} vanish={:g} score={:g}>'.format(
            type(self).__name__, self.instance_index, self.pseudo_label,
            self.vanish_lambda, self.score)

    def ranked(self, vanish_lambda):
        '''Copy with *vanish_lambda* filled in'''
        return type(self)(self.instance_index, self.pseudo_label,
            vanish_lambda=vanish_lambda, score=self.score)


class CredibilityRanking:
    '''Candidates of each class, most trustworthy first

    Args:
        per_class (dict): class id to ordered list of :py:class:`Candidate`
        degenerate (bool): the order was decided by tie-breakers only
    '''
    def __init__(self, per_class, *, degenerate=False):
        seen = set()
        for class_id, candidates in per_class.items():
            for candidate in candidates:
                if candidate.pseudo_label != class_id:
                    raise InvalidArgument(
                        'instance {} listed under class {} but labeled {}'
                        .format(candidate.instance_index, class_id,
                            candidate.pseudo_label))
                if candidate.instance_index in seen:
                    raise InvalidArgument('instance {} ranked twice'.format(
                        candidate.instance_index))
                seen.add(candidate.instance_index)
        #: class id to ordered candidate list
        self.per_class = per_class
        #: whether the order carries no credibility information
        self.degenerate = degenerate

    def __len__(self):
        return sum(len(candidates) for candidates in self.per_class.values())

    def __iter__(self):
        for class_id in sorted(self.per_class):
            yield from self.per_class[class_id]

    def __repr__(self):
        return '<{} classes={} candidates={}{}>'.format(
            type(self).__name__, len(self.per_class), len(self),
            ' degenerate' if self.degenerate else '')


class LoopState:
    '''Progress of one expansion loop'''
    def __init__(self, support, pool):
        support = list(support)
        #: (instance index, label) pairs; the original support comes first
        self.expanded_support = [(int(i), int(y)) for i, y in support]
        #: number of leading entries of :py:attr:`expanded_support` that are
        #: labeled ground truth
        self.original_size = len(support)
        #: instances not absorbed yet, ascending
        self.remaining_unlabeled = sorted(int(i) for i in pool)
        #: selection iterations done
        self.iteration = 0
        #: False only when the loop stopped at the iteration cap
        self.converged = False
        #: one :py:class:`IterationRecord` per iteration
        self.trace = []

        overlap = set(self.remaining_unlabeled) & {
            i for i, _ in self.expanded_support}
        if overlap:
            raise InvalidArgument(
                'unlabeled pool overlaps the support set: {}'.format(
                    sorted(overlap)))

    @property
    def support_indices(self):
        '''Indices of the expanded support set'''
        return np.array([i for i, _ in self.expanded_support], dtype=np.intp)

    @property
    def support_labels(self):
        '''Labels (ground truth or pseudo) of the expanded support set'''
        return np.array([y for _, y in self.expanded_support], dtype=np.intp)

    def absorb(self, selected):
        '''Move *selected* candidates from the pool into the support set'''
        chosen = {candidate.instance_index for candidate in selected}
        missing = chosen.difference(self.remaining_unlabeled)
        if missing:
            raise InvalidArgument('cannot absorb instances not in the pool: '
                '{}'.format(sorted(missing)))
        self.expanded_support.extend(
            (candidate.instance_index, candidate.pseudo_label)
            for candidate in selected)
        self.remaining_unlabeled = [i for i in self.remaining_unlabeled
            if i not in chosen]


class IterationRecord:
    '''What happened in one selection iteration'''
    # pylint: disable=too-few-public-methods,too-many-arguments
    def __init__(self, iteration, support_size, remaining, selected,
            accuracy=None):
        self.iteration = iteration
        self.support_size = support_size
        #: pool size before selection
        self.remaining = remaining
        self.selected = list(selected)
        #: query accuracy of the classifier trained at the start of the
        #: iteration, if query labels were given
        self.accuracy = accuracy

    def as_dict(self):
        '''JSON-friendly form'''
        return {
            'iteration': self.iteration,
            'support_size': self.support_size,
            'remaining': self.remaining,
            'selected': [c.instance_index for c in self.selected],
            'pseudo_labels': [c.pseudo_label for c in self.selected],
            'vanish_lambdas': [
                c.vanish_lambda if math.isfinite(c.vanish_lambda) else None
                for c in self.selected],
            'accuracy': self.accuracy,
        }


class LoopConfig:
    '''Knobs of :py:func:`run_ici_loop`

    Args:
        strategy (str): ``'ici'``, ``'random'``, ``'confidence'``, ``'nn'``
            or ``'none'`` (no expansion)
        quota (int): instances absorbed per class and iteration
        reserve (int): instances per class that are left in the pool; the
            loop runs until the pool is down to ``reserve`` per class
        cap (int): maximum number of instances absorbed into any class,
            None for no limit
    '''
    # pylint: disable=too-many-instance-attributes,too-many-arguments
    def __init__(self, *, strategy='ici', quota=DEFAULT_QUOTA, reserve=None,
            cap=None, classifier=DEFAULT_CLASSIFIER, l2=DEFAULT_L2,
            c=DEFAULT_SVM_C, grid_size=DEFAULT_GRID_SIZE,
            grid_eps=DEFAULT_GRID_EPS, max_iterations=DEFAULT_MAX_ITERATIONS,
            seed=None):
        if strategy not in STRATEGIES:
            raise InvalidArgument('unknown strategy {!r}'.format(strategy))
        if quota < 1:
            raise InvalidArgument('quota must be >= 1, got {}'.format(quota))
        if reserve is None:
            reserve = quota
        if reserve < 0:
            raise InvalidArgument(
                'reserve must be >= 0, got {}'.format(reserve))
        if cap is not None and cap < 1:
            raise InvalidArgument('cap must be >= 1, got {}'.format(cap))
        self.strategy = strategy
        self.quota = quota
        self.reserve = reserve
        self.cap = cap
        self.classifier = classifier
        self.l2 = l2
        self.c = c
        self.grid_size = grid_size
        self.grid_eps = grid_eps
        self.max_iterations = max_iterations
        self.seed = seed

    def train(self, features, labels, classes):
        '''Train the configured base classifier'''
        return classify.train(self.classifier, features, labels, l2=self.l2,
            c=self.c, seed=self.seed, classes=classes)

    def schedule(self, pool_size, num_classes):
        '''Selection iterations needed to bring *pool_size* down to the
        reserve, before the iteration cap'''
        excess = max(pool_size - self.reserve * num_classes, 0)
        return math.ceil(excess / (self.quota * num_classes))


def build_regression_inputs(features_reduced, support, pseudo, *,
        num_classes=None):
    '''Assemble the regression of labels on reduced features.

    Support rows (with their labels) come first, pseudo-labeled rows follow in
    ascending instance order. Only the pseudo-labeled rows are rankable.

    Args:
        features_reduced: episode feature table, rows indexed by instance
        support: (instance index, label) pairs
        pseudo: list of :py:class:`Candidate`
        num_classes (int): width of the one-hot encoding

    Raises:
        ici.exc.InvalidArgument: when the reduced dimension is not smaller
            than the number of rows
    '''
    table = as_dense(features_reduced, name='reduced features')
    support = list(support)
    pseudo = sorted(pseudo, key=lambda candidate: candidate.instance_index)
    indices = [i for i, _ in support] + [c.instance_index for c in pseudo]
    labels = [y for _, y in support] + [c.pseudo_label for c in pseudo]
    if len(set(indices)) != len(indices):
        raise InvalidArgument('an instance appears twice in the regression')

    n, dim = len(indices), table.shape[1]
    if dim >= n:
        raise InvalidArgument(
            'reduced dimension {} must be smaller than the number of '
            'instances {}'.format(dim, n))
    if num_classes is None:
        num_classes = max(labels) + 1

    return glasso.PathProblem.from_design(table[indices],
        one_hot(labels, num_classes),
        rankable=range(len(support), n), instance_ids=indices)


def rank_by_ici(problem, rankable=None, *, grid_size=DEFAULT_GRID_SIZE,
        grid_eps=DEFAULT_GRID_EPS, scores=None, path=None, **kwds):
    '''Rank the rankable rows of *problem* by credibility.

    Rows whose incidental parameters vanish at a smaller penalty are more
    credible. Ties are broken by the residual norm at the smallest penalty,
    then by instance index.

    Args:
        problem (ici.glasso.PathProblem): the regression; its one-hot ``y``
            supplies the pseudo-labels
        rankable: rows to rank (default: ``problem.rankable``)
        scores (dict): instance index to classifier score, carried into the
            candidates
        path (list): if given, the computed
            :py:class:`ici.glasso.IncidentalPath` is appended to it
        kwds: passed to :py:func:`ici.glasso.solve_path`

    Returns:
        CredibilityRanking: ranking per pseudo-label
    '''
    rankable = problem.rankable if rankable is None else np.asarray(
        rankable, dtype=np.intp)
    if problem.y is None:
        raise InvalidArgument('problem does not carry its labels')
    scores = scores or {}

    lmax = glasso.lambda_max(problem)
    degenerate = lmax == 0
    if degenerate:
        log.warning('lambda_max is zero, credibility order falls back to '
            'instance order')
    grid = glasso.lambda_grid(lmax, grid_size, grid_eps)
    incidental = glasso.solve_path(problem, grid, **kwds)
    vanish = glasso.vanish_lambdas(incidental)
    if path is not None:
        path.append(incidental)

    labels = np.argmax(problem.y, axis=1)
    keyed = []
    for row in rankable:
        instance = int(problem.instance_ids[row])
        candidate = Candidate(instance, labels[row],
            vanish_lambda=vanish[row], score=scores.get(instance, math.nan))
        keyed.append(((candidate.vanish_lambda,
            incidental.residual_norms[row], instance), candidate))
    keyed.sort(key=lambda item: item[0])

    per_class = {}
    for _, candidate in keyed:
        per_class.setdefault(candidate.pseudo_label, []).append(candidate)
    return CredibilityRanking(per_class, degenerate=degenerate)


def select_stratified(ranking, quota, caps=None):
    '''Take up to *quota* leading candidates of every class.

    Classes with fewer candidates give all they have; nothing is borrowed
    from other classes.

    Args:
        ranking (CredibilityRanking): the order
        quota (int): per-class limit
        caps (dict): optional tighter per-class limits

    Returns:
        list: selected :py:class:`Candidate` objects, grouped by class
    '''
    if quota < 1:
        raise InvalidArgument('quota must be >= 1, got {}'.format(quota))
    caps = caps or {}
    selected = []
    for class_id in sorted(ranking.per_class):
        limit = max(min(quota, caps.get(class_id, quota)), 0)
        selected.extend(ranking.per_class[class_id][:limit])
    return selected


def _group(candidates):
    per_class = {}
    for candidate in sorted(candidates, key=lambda c: c.instance_index):
        per_class.setdefault(candidate.pseudo_label, []).append(candidate)
    return per_class


def order_random(candidates, rng):
    '''Uniformly random order within each class'''
    per_class = _group(candidates)
    for class_id in sorted(per_class):
        members = per_class[class_id]
        per_class[class_id] = [members[i]
            for i in rng.permutation(len(members))]
    return CredibilityRanking(per_class)


def order_confidence(candidates):
    '''Most confident classifier score first within each class'''
    per_class = _group(candidates)
    for members in per_class.values():
        members.sort(key=lambda c: (-c.score, c.instance_index))
    return CredibilityRanking(per_class)


def order_nearest(candidates, features, support):
    '''Closest to the support mean of the claimed class first'''
    table = as_dense(features, name='features')
    support = list(support)
    per_class = _group(candidates)
    for class_id, members in per_class.items():
        rows = [i for i, y in support if y == class_id]
        if not rows:
            raise InvalidArgument(
                'class {} has no support instances'.format(class_id))
        center = table[rows].mean(axis=0)
        distances = np.linalg.norm(
            table[[c.instance_index for c in members]] - center, axis=1)
        order = sorted(range(len(members)),
            key=lambda k: (distances[k], members[k].instance_index))
        per_class[class_id] = [members[k] for k in order]
    return CredibilityRanking(per_class)


def select_baseline(strategy, candidates, features, support, quota, seed,
        caps=None):
    '''Stratified selection by one of the non-credibility strategies.

    Args:
        strategy (str): ``'random'``, ``'confidence'`` or ``'nn'``
        candidates: :py:class:`Candidate` list
        features: feature table for ``'nn'``
        support: (index, label) pairs for ``'nn'``
        quota (int): per-class limit
        seed: int or :py:class:`numpy.random.Generator` for ``'random'``
    '''
    # pylint: disable=too-many-arguments
    if strategy == 'random':
        ranking = order_random(candidates, np.random.default_rng(seed))
    elif strategy == 'confidence':
        ranking = order_confidence(candidates)
    elif strategy in ('nn', 'nearest_neighbor'):
        ranking = order_nearest(candidates, features, support)
    else:
        raise InvalidArgument('unknown baseline strategy {!r}'.format(
            strategy))
    return select_stratified(ranking, quota, caps)


def _accuracy(model, features, query):
    if query is None:
        return None
    indices, labels = query
    predicted, _ = classify.predict(model, features[np.asarray(indices)])
    return float(np.mean(predicted == np.asarray(labels)))


def run_ici_loop(features, support, pool, config, *, reduced=None,
        rng=None, query=None):
    '''Self-taught expansion of the support set.

    Args:
        features: feature table the classifier works on, rows indexed by
            instance
        support: (instance index, label) pairs with labels 0..N-1
        pool: indices of the unlabeled instances
        config (LoopConfig): loop parameters
        reduced: reduced feature table for the credibility regression;
            required for the ``'ici'`` strategy
        rng: random generator for the ``'random'`` strategy
        query: optional ``(indices, labels)`` used only to record accuracy
            in the trace

    Returns:
        (ici.classify.LinearModel, LoopState): the classifier trained on the
        final support set and the loop state with its trace
    '''
    # pylint: disable=too-many-arguments,too-many-locals
    table = as_dense(features, name='features')
    state = LoopState(support, pool)
    classes = np.unique(state.support_labels)
    num_classes = classes.size
    if rng is None:
        rng = np.random.default_rng(config.seed)

    needed = 0
    if config.strategy != 'none':
        needed = config.schedule(len(state.remaining_unlabeled), num_classes)
    schedule = min(needed, config.max_iterations)
    absorbed = {int(k): 0 for k in classes}

    if schedule and config.strategy == 'ici' and reduced is None:
        raise InvalidArgument('credibility ranking needs reduced features')

    stopped_early = False
    while state.iteration < schedule:
        if not state.remaining_unlabeled:
            stopped_early = True
            break
        model = config.train(table[state.support_indices],
            state.support_labels, classes)
        accuracy = _accuracy(model, table, query)

        remaining = np.array(state.remaining_unlabeled, dtype=np.intp)
        labels, scores = classify.predict(model, table[remaining])
        confidence = scores[np.arange(remaining.size),
            np.searchsorted(classes, labels)]
        candidates = [Candidate(i, y, score=s)
            for i, y, s in zip(remaining, labels, confidence)]

        caps = None
        if config.cap is not None:
            caps = {k: config.cap - n for k, n in absorbed.items()}

        if config.strategy == 'ici':
            problem = build_regression_inputs(reduced,
                state.expanded_support, candidates, num_classes=num_classes)
            ranking = rank_by_ici(problem, grid_size=config.grid_size,
                grid_eps=config.grid_eps,
                scores={c.instance_index: c.score for c in candidates})
            selected = select_stratified(ranking, config.quota, caps)
        else:
            selected = select_baseline(config.strategy, candidates, table,
                state.expanded_support, config.quota, rng, caps)

        state.iteration += 1
        state.trace.append(IterationRecord(state.iteration,
            len(state.expanded_support), remaining.size, selected, accuracy))
        log.debug('iteration %d: absorbing %d of %d', state.iteration,
            len(selected), remaining.size)
        if not selected:
            stopped_early = True
            break
        state.absorb(selected)
        for candidate in selected:
            absorbed[candidate.pseudo_label] += 1

    state.converged = stopped_early or needed <= config.max_iterations
    model = config.train(table[state.support_indices], state.support_labels,
        classes)
    return model, state
