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

'''Validated knobs of one benchmark run'''

from . import (
    CLASSIFIERS,
    CLASSIFIER_SPACES,
    DEFAULT_CLASSIFIER,
    DEFAULT_CLASSIFIER_SPACE,
    DEFAULT_DIM,
    DEFAULT_EPISODES,
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
    SETTINGS,
    STORE_FORMATS,
    STRATEGIES,
)
from .episodes import EpisodeSpec, PipelineConfig
from .exc import ConfigConflict, InvalidArgument
from .utils import fingerprint

# fields that do not change the result
_UNHASHED = ('output', 'threads', 'record_time')


class RunConfig:
    '''Everything :command:`ici-fewshot run` needs.

    All arguments are keyword-only. *unlabeled* defaults to
    :data:`ici.DEFAULT_UNLABELED` in the semi-supervised setting; giving it in
    another setting is a :py:class:`ici.exc.ConfigConflict`.
    '''
    # pylint: disable=too-many-instance-attributes,too-many-locals
    def __init__(self, *, dataset, dataset_format=None,
            setting=DEFAULT_SETTING, ways=DEFAULT_WAYS, shots=DEFAULT_SHOTS,
            queries=DEFAULT_QUERIES, unlabeled=None,
            episodes=DEFAULT_EPISODES, seed=DEFAULT_SEED, dim=DEFAULT_DIM,
            quota=DEFAULT_QUOTA, reserve=None, classifier=DEFAULT_CLASSIFIER,
            l2=DEFAULT_L2, c=DEFAULT_SVM_C, strategy=DEFAULT_STRATEGY,
            grid_size=DEFAULT_GRID_SIZE, grid_eps=DEFAULT_GRID_EPS,
            classifier_space=DEFAULT_CLASSIFIER_SPACE,
            transductive_cap=DEFAULT_TRANSDUCTIVE_CAP,
            max_iterations=DEFAULT_MAX_ITERATIONS, trace=False,
            robustness=False, output=None, threads=1, record_time=False):
        self._check_choice('setting', setting, SETTINGS)
        self._check_choice('strategy', strategy, STRATEGIES)
        self._check_choice('classifier', classifier, CLASSIFIERS)
        self._check_choice('classifier space', classifier_space,
            CLASSIFIER_SPACES)
        if dataset_format is not None:
            self._check_choice('dataset format', dataset_format,
                STORE_FORMATS)

        if unlabeled is None:
            unlabeled = DEFAULT_UNLABELED if setting == 'semi' else 0
        elif setting != 'semi':
            raise ConfigConflict('--setting ' + setting, '--unlabeled',
                'only the semi-supervised setting has an unlabeled pool')

        for name, value in (('ways', ways), ('shots', shots),
                ('queries', queries), ('episodes', episodes), ('dim', dim),
                ('quota', quota), ('grid size', grid_size),
                ('transductive cap', transductive_cap),
                ('max iterations', max_iterations), ('threads', threads)):
            if value < 1:
                raise InvalidArgument(
                    '{} must be positive, got {}'.format(name, value))
        if unlabeled < 0:
            raise InvalidArgument(
                'unlabeled must not be negative, got {}'.format(unlabeled))
        if reserve is not None and reserve < 0:
            raise InvalidArgument(
                'reserve must not be negative, got {}'.format(reserve))
        if not 0 < grid_eps < 1:
            raise InvalidArgument(
                'grid eps must be in (0, 1), got {}'.format(grid_eps))
        if l2 < 0 or c <= 0:
            raise InvalidArgument('classifier regularization out of range')

        self.dataset = str(dataset)
        self.dataset_format = dataset_format
        self.setting = setting
        self.ways = ways
        self.shots = shots
        self.queries = queries
        self.unlabeled = unlabeled
        self.episodes = episodes
        self.seed = seed
        self.dim = dim
        self.quota = quota
        self.reserve = reserve
        self.classifier = classifier
        self.l2 = float(l2)
        self.c = float(c)
        self.strategy = strategy
        self.grid_size = grid_size
        self.grid_eps = float(grid_eps)
        self.classifier_space = classifier_space
        self.transductive_cap = transductive_cap
        self.max_iterations = max_iterations
        self.trace = trace
        self.robustness = robustness
        self.output = output
        self.threads = threads
        self.record_time = record_time

    @staticmethod
    def _check_choice(name, value, choices):
        if value not in choices:
            raise InvalidArgument('invalid {} {!r} (choose from {})'.format(
                name, value, ', '.join(choices)))

    def __repr__(self):
        return '<{} {} fingerprint={}>'.format(
            type(self).__name__, self.dataset, self.fingerprint()[:12])

    def as_dict(self):
        '''Canonical, JSON-serialisable form of the knobs that affect the
        result'''
        return {key: value for key, value in sorted(vars(self).items())
            if key not in _UNHASHED}

    def fingerprint(self):
        '''SHA-256 of :py:meth:`as_dict`'''
        return fingerprint(self.as_dict())

    def episode_spec(self):
        ''':py:class:`ici.episodes.EpisodeSpec` of this run'''
        return EpisodeSpec(ways=self.ways, shots=self.shots,
            queries=self.queries, unlabeled=self.unlabeled,
            setting=self.setting, seed=self.seed)

    def pipeline_config(self):
        ''':py:class:`ici.episodes.PipelineConfig` of this run'''
        return PipelineConfig(dim=self.dim,
            classifier_space=self.classifier_space, strategy=self.strategy,
            quota=self.quota, reserve=self.reserve,
            classifier=self.classifier, l2=self.l2, c=self.c,
            grid_size=self.grid_size, grid_eps=self.grid_eps,
            max_iterations=self.max_iterations,
            transductive_cap=self.transductive_cap)
