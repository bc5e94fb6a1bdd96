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

'''Episode sampling and benchmark evaluation

An episode draws N classes from a :py:class:`ici.store.FeatureStore` and
splits instances of each into support, query and (semi-supervised setting)
unlabeled parts. Episode *i* of a run only depends on the master seed and *i*,
so episodes are evaluated in parallel and reduced in index order.
'''

import concurrent.futures
import itertools
import json
import logging
import math

import numpy as np

from . import (
    CLASSIFIER_SPACES,
    DEFAULT_CLASSIFIER,
    DEFAULT_CLASSIFIER_SPACE,
    DEFAULT_DIM,
    DEFAULT_GRID_EPS,
    DEFAULT_GRID_SIZE,
    DEFAULT_L2,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_QUERIES,
    DEFAULT_QUOTA,
    DEFAULT_SEED,
    DEFAULT_SETTING,
    DEFAULT_SHOTS,
    DEFAULT_STRATEGY,
    DEFAULT_SVM_C,
    DEFAULT_TRANSDUCTIVE_CAP,
    DEFAULT_UNLABELED,
    DEFAULT_WAYS,
    REPORT_SCHEMA_VERSION,
    SETTINGS,
)
from . import classify
from . import dimred
from . import engine
from .exc import EpisodeSamplingError, InvalidArgument
from .utils import episode_rng, fingerprint, mean_ci95

log = logging.getLogger('ici.episodes')

# width of a robustness bin, as a fraction of accuracy
ROBUSTNESS_BIN = 0.1


class EpisodeSpec:
    '''Shape of the episodes of one run

    Args:
        ways (int): classes per episode
        shots (int): labeled instances per class
        queries (int): query instances per class
        unlabeled (int): unlabeled instances per class (semi-supervised
            setting only)
        setting (str): ``'inductive'``, ``'transductive'`` or ``'semi'``
        seed (int): master seed
    '''
    # pylint: disable=too-many-arguments
    def __init__(self, ways=DEFAULT_WAYS, shots=DEFAULT_SHOTS,
            queries=DEFAULT_QUERIES, unlabeled=DEFAULT_UNLABELED,
            setting=DEFAULT_SETTING, seed=DEFAULT_SEED):
        if setting not in SETTINGS:
            raise InvalidArgument('unknown setting {!r}'.format(setting))
        if ways < 2:
            raise InvalidArgument('need at least 2 ways, got {}'.format(ways))
        if shots < 1 or queries < 1:
            raise InvalidArgument('shots and queries must be >= 1')
        if unlabeled < 0:
            raise InvalidArgument('unlabeled must be >= 0')
        self.ways = ways
        self.shots = shots
        self.queries = queries
        self.unlabeled = unlabeled if setting == 'semi' else 0
        self.setting = setting
        self.seed = seed

    def __repr__(self):
        return ('<{} {}-way {}-shot queries={} unlabeled={} setting={} '
            'seed={}>'.format(type(self).__name__, self.ways, self.shots,
                self.queries, self.unlabeled, self.setting, self.seed))

    def as_dict(self):
        '''Canonical form'''
        return {
            'ways': self.ways,
            'shots': self.shots,
            'queries': self.queries,
            'unlabeled': self.unlabeled,
            'setting': self.setting,
            'seed': self.seed,
        }


class Episode:
    '''One sampled episode

    All index lists are per class (position in :py:attr:`class_ids`) and
    refer to instances of that class in the store.
    '''
    # pylint: disable=too-few-public-methods
    def __init__(self, index, class_ids, support, query, unlabeled,
            clamped=None):
        self.index = index
        #: store class id of each episode label
        self.class_ids = list(class_ids)
        self.support = support
        self.query = query
        self.unlabeled = unlabeled
        #: store class id to the unlabeled count it was clamped to
        self.clamped = clamped or {}

    def __repr__(self):
        return '<{} #{} classes={}>'.format(
            type(self).__name__, self.index, self.class_ids)

    @property
    def ways(self):
        '''Number of classes'''
        return len(self.class_ids)

    def table(self, store):
        '''Gather the episode into one feature table.

        Rows are ordered support, query, unlabeled; each part is ordered by
        episode label.

        Returns:
            (features, labels, parts): the float64 table, the episode label of
            each row and a dict of row index arrays under ``'support'``,
            ``'query'`` and ``'unlabeled'``
        '''
        blocks, labels, parts = [], [], {}
        start = 0
        for name in ('support', 'query', 'unlabeled'):
            per_class = getattr(self, name)
            for label, (class_id, indices) in enumerate(
                    zip(self.class_ids, per_class)):
                blocks.append(store.features(class_id, indices))
                labels.extend([label] * len(indices))
            stop = len(labels)
            parts[name] = np.arange(start, stop)
            start = stop
        return (np.concatenate(blocks), np.array(labels, dtype=np.intp),
            parts)


def sample_episode(store, spec, episode_index):
    '''Draw episode *episode_index* of the run described by *spec*.

    The unlabeled count of a class that is too small is clamped to what the
    class has left after support and query.

    Raises:
        ici.exc.EpisodeSamplingError: when the store has too few classes, or
            a class cannot provide its support and query instances
    '''
    rng = episode_rng(spec.seed, episode_index)
    if store.num_classes < spec.ways:
        raise EpisodeSamplingError(
            'episode {}: store has {} classes, {} needed'.format(
                episode_index, store.num_classes, spec.ways))

    class_ids = [int(c) for c in
        rng.choice(store.num_classes, size=spec.ways, replace=False)]
    labeled = spec.shots + spec.queries
    support, query, unlabeled, clamped = [], [], [], {}
    for class_id in class_ids:
        size = store.class_size(class_id)
        if size < labeled:
            raise EpisodeSamplingError(
                'episode {}: {} instances, {} needed for support and '
                'query'.format(episode_index, size, labeled),
                class_id=class_id)
        count = min(spec.unlabeled, size - labeled)
        if count < spec.unlabeled:
            log.warning('episode %d: class %d has %d instances, unlabeled '
                'pool clamped to %d', episode_index, class_id, size, count)
            clamped[class_id] = count
        order = rng.permutation(size)
        support.append(order[:spec.shots])
        query.append(order[spec.shots:labeled])
        unlabeled.append(order[labeled:labeled + count])

    return Episode(episode_index, class_ids, support, query, unlabeled,
        clamped)


class PipelineConfig:
    '''How a sampled episode is turned into query predictions

    Args:
        dim (int): reduced dimension of the credibility regression
        classifier_space (str): ``'full'`` trains the classifier on the
            normalised input features, ``'reduced'`` on the PCA features
        strategy (str): selection strategy, ``'none'`` for the plain
            classifier
        reserve (int): per-class instances left in the pool; None for the
            setting default
        transductive_cap (int): per-class absorption limit when the pool is
            the query set
    '''
    # pylint: disable=too-many-instance-attributes,too-many-arguments
    def __init__(self, *, dim=DEFAULT_DIM,
            classifier_space=DEFAULT_CLASSIFIER_SPACE,
            strategy=DEFAULT_STRATEGY, quota=DEFAULT_QUOTA, reserve=None,
            classifier=DEFAULT_CLASSIFIER, l2=DEFAULT_L2, c=DEFAULT_SVM_C,
            grid_size=DEFAULT_GRID_SIZE, grid_eps=DEFAULT_GRID_EPS,
            max_iterations=DEFAULT_MAX_ITERATIONS,
            transductive_cap=DEFAULT_TRANSDUCTIVE_CAP):
        if dim < 1:
            raise InvalidArgument('dim must be >= 1, got {}'.format(dim))
        if classifier_space not in CLASSIFIER_SPACES:
            raise InvalidArgument('unknown classifier space {!r}'.format(
                classifier_space))
        self.dim = dim
        self.classifier_space = classifier_space
        self.strategy = strategy
        self.quota = quota
        self.reserve = reserve
        self.classifier = classifier
        self.l2 = l2
        self.c = c
        self.grid_size = grid_size
        self.grid_eps = grid_eps
        self.max_iterations = max_iterations
        self.transductive_cap = transductive_cap
        # validates the loop knobs early
        self.loop_config('semi')

    def as_dict(self):
        '''Canonical form'''
        return dict(vars(self))

    def loop_config(self, setting, seed=None):
        ''':py:class:`ici.engine.LoopConfig` for episodes of *setting*'''
        reserve = self.reserve
        if reserve is None:
            reserve = 0 if setting == 'transductive' else self.quota
        cap = self.transductive_cap if setting == 'transductive' else None
        return engine.LoopConfig(strategy=self.strategy, quota=self.quota,
            reserve=reserve, cap=cap, classifier=self.classifier, l2=self.l2,
            c=self.c, grid_size=self.grid_size, grid_eps=self.grid_eps,
            max_iterations=self.max_iterations, seed=seed)


class EpisodeResult:
    '''Outcome of one episode'''
    # pylint: disable=too-few-public-methods
    def __init__(self, accuracy, baseline_accuracy, trace=()):
        #: query accuracy of the final classifier
        self.accuracy = accuracy
        #: query accuracy of the classifier trained on the support set alone
        self.baseline_accuracy = baseline_accuracy
        #: list of :py:class:`ici.engine.IterationRecord`
        self.trace = list(trace)


def _reduced_dim(config, rows, d_in, episode_index):
    dim = min(config.dim, rows - 1, d_in)
    if dim < config.dim:
        log.warning('episode %d: reduced dimension clamped from %d to %d',
            episode_index, config.dim, dim)
    return dim


class EpisodeTable:
    '''Features of one episode as the pipeline sees them.

    Features are L2-normalised. The unlabeled pool is the query set in the
    transductive setting, the unlabeled set in the semi-supervised one, and
    empty otherwise or when *config* selects no expansion. PCA is fitted on
    the support set together with the pool.
    '''
    # pylint: disable=too-few-public-methods
    def __init__(self, store, spec, episode, config):
        features, labels, parts = episode.table(store)
        #: normalised features, one row per episode instance
        self.features = dimred.l2_normalize(features)
        #: episode label of every row
        self.labels = labels
        #: support rows
        self.support = parts['support']
        #: query rows
        self.query = parts['query']
        if config.strategy == 'none' or spec.setting == 'inductive':
            pool = np.empty(0, dtype=np.intp)
        elif spec.setting == 'transductive':
            pool = self.query
        else:
            pool = parts['unlabeled']
        #: rows the expansion loop may absorb
        self.pool = pool

        #: PCA-reduced features, None when neither the loop nor the
        #: classifier needs them
        self.reduced = None
        if pool.size or config.classifier_space == 'reduced':
            fit_rows = np.concatenate([self.support, pool])
            dim = _reduced_dim(config, fit_rows.size,
                self.features.shape[1], episode.index)
            self.reduced = dimred.pca_fit(self.features[fit_rows],
                dim).transform(self.features)
        #: the features the classifier is trained on
        self.classifier_features = (self.reduced
            if config.classifier_space == 'reduced' else self.features)


def run_episode(store, spec, episode, config):
    '''Evaluate *episode* with the pipeline described by *config*; see
    :py:class:`EpisodeTable` for the feature spaces.'''
    view = EpisodeTable(store, spec, episode, config)
    table, labels = view.classifier_features, view.labels
    support_rows, query_rows = view.support, view.query
    loop = config.loop_config(spec.setting, seed=spec.seed)
    classes = np.arange(episode.ways)
    query_labels = labels[query_rows]

    baseline = loop.train(table[support_rows], labels[support_rows], classes)
    predicted, _ = classify.predict(baseline, table[query_rows])
    baseline_accuracy = float(np.mean(predicted == query_labels))

    final, state = engine.run_ici_loop(table,
        zip(support_rows, labels[support_rows]), view.pool, loop,
        reduced=view.reduced,
        rng=episode_rng(spec.seed, episode.index, stream=1),
        query=(query_rows, query_labels))
    predicted, _ = classify.predict(final, table[query_rows])
    accuracy = float(np.mean(predicted == query_labels))

    log.debug('episode %d: accuracy %.4f (baseline %.4f) after %d '
        'iterations', episode.index, accuracy, baseline_accuracy,
        state.iteration)
    return EpisodeResult(accuracy, baseline_accuracy, state.trace)


def robustness_table(baseline, final):
    '''Count improved episodes per baseline accuracy bin.

    Returns:
        list: one dict per nonempty bin with keys ``low``, ``high``,
        ``improved`` and ``total``
    '''
    bins = {}
    for before, after in zip(baseline, final):
        index = min(int(math.floor(before / ROBUSTNESS_BIN + 1e-9)),
            int(round(1 / ROBUSTNESS_BIN)) - 1)
        improved, total = bins.get(index, (0, 0))
        bins[index] = (improved + (after > before), total + 1)
    return [{
            'low': round(index * ROBUSTNESS_BIN, 10),
            'high': round((index + 1) * ROBUSTNESS_BIN, 10),
            'improved': improved,
            'total': total,
        } for index, (improved, total) in sorted(bins.items())]


class RunReport:
    '''Aggregated result of a benchmark run

    Args:
        accuracies: per-episode query accuracy, in episode order
        fingerprint (str): digest of every knob that affects the result
        config (dict): the knobs themselves
        baseline_accuracies: per-episode accuracy of the support-only
            classifier
        traces: per-episode lists of iteration records (dicts)
        robustness (bool): include the robustness table
        wall_time (float): seconds spent, None when not recorded
    '''
    # pylint: disable=too-many-instance-attributes,too-many-arguments
    def __init__(self, accuracies, *, fingerprint, config=None,
            baseline_accuracies=None, traces=None, robustness=False,
            wall_time=None):
        self.accuracies = [float(a) for a in accuracies]
        if any(not 0 <= a <= 1 for a in self.accuracies):
            raise InvalidArgument('accuracy outside [0, 1]')
        self.mean, self.ci95 = mean_ci95(self.accuracies)
        self.fingerprint = fingerprint
        self.config = config or {}
        self.baseline_accuracies = None
        self.baseline_mean = self.baseline_ci95 = None
        if baseline_accuracies is not None:
            self.baseline_accuracies = [float(a) for a in baseline_accuracies]
            self.baseline_mean, self.baseline_ci95 = mean_ci95(
                self.baseline_accuracies)
        self.traces = traces
        self.robustness = None
        if robustness:
            if self.baseline_accuracies is None:
                raise InvalidArgument(
                    'robustness table needs baseline accuracies')
            self.robustness = robustness_table(self.baseline_accuracies,
                self.accuracies)
        self.wall_time = wall_time

    def __repr__(self):
        return '<{} episodes={} mean={:.4f} ci95={:.4f}>'.format(
            type(self).__name__, len(self.accuracies), self.mean, self.ci95)

    def summary(self):
        '''``mean ± ci95`` in percent'''
        return '{:.2f} ± {:.3f}'.format(100 * self.mean, 100 * self.ci95)

    def to_dict(self):
        '''The report document'''
        document = {
            'schema_version': REPORT_SCHEMA_VERSION,
            'fingerprint': self.fingerprint,
            'config': self.config,
            'episodes': len(self.accuracies),
            'accuracies': self.accuracies,
            'mean': self.mean,
            'ci95': self.ci95,
            'baseline': None,
            'wall_time': self.wall_time,
        }
        if self.baseline_accuracies is not None:
            document['baseline'] = {
                'accuracies': self.baseline_accuracies,
                'mean': self.baseline_mean,
                'ci95': self.baseline_ci95,
            }
        if self.robustness is not None:
            document['robustness'] = self.robustness
        if self.traces is not None:
            document['traces'] = self.traces
        return document

    def dump(self, stream):
        '''Write the report as JSON to *stream*'''
        json.dump(self.to_dict(), stream, indent=2, sort_keys=True,
            allow_nan=False)
        stream.write('\n')


def evaluate(store, spec, episodes, config, *, workers=1, pipeline=None,
        run_fingerprint=None, run_config=None, keep_traces=False,
        robustness=False):
    '''Run *episodes* episodes and aggregate their accuracy.

    Args:
        store (ici.store.FeatureStore): where instances come from
        spec (EpisodeSpec): episode shape and master seed
        episodes (int): number of episodes
        config (PipelineConfig): the pipeline
        workers (int): worker processes; episodes are sampled up front and
            results come back in episode order
        pipeline: callable ``(store, spec, episode, config) -> EpisodeResult``,
            :py:func:`run_episode` by default
        run_fingerprint (str): fingerprint to put in the report; by default
            computed from *spec*, *episodes* and *config*
        run_config (dict): knobs to put in the report
        keep_traces (bool): embed the loop traces in the report
        robustness (bool): include the robustness table

    Returns:
        RunReport: the aggregated report (``wall_time`` left unset)
    '''
    # pylint: disable=too-many-arguments
    if episodes < 1:
        raise InvalidArgument(
            'need at least one episode, got {}'.format(episodes))
    if pipeline is None:
        pipeline = run_episode
    if run_config is None:
        run_config = {'episode': spec.as_dict(), 'episodes': episodes,
            'pipeline': config.as_dict()}
    if run_fingerprint is None:
        run_fingerprint = fingerprint(run_config)

    sampled = [sample_episode(store, spec, index) for index in range(episodes)]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=workers) as executor:
            results = list(executor.map(pipeline, itertools.repeat(store),
                itertools.repeat(spec), sampled, itertools.repeat(config),
                chunksize=max(1, episodes // (4 * workers))))
    else:
        results = [pipeline(store, spec, episode, config)
            for episode in sampled]

    traces = None
    if keep_traces:
        traces = [[record.as_dict() for record in result.trace]
            for result in results]
    report = RunReport([result.accuracy for result in results],
        fingerprint=run_fingerprint, config=run_config,
        baseline_accuracies=[result.baseline_accuracy for result in results],
        traces=traces, robustness=robustness)
    log.info('%d episodes: %s', episodes, report.summary())
    return report
