# -*- encoding: utf-8 -*-
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

'''ici-fewshot -- few-shot benchmark with instance credibility inference'''

import argparse
import logging
import sys
import time

import numpy as np

from .. import (
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
    DEFAULT_WAYS,
    SETTINGS,
    STORE_FORMATS,
    STRATEGIES,
    THREADS_ENV,
)
from .. import classify
from .. import engine
from .. import episodes
from .. import exc
from .. import glasso
from .. import store
from .. import utils
from ..config import RunConfig

log = logging.getLogger('ici')

argparser = argparse.ArgumentParser(prog='ici-fewshot',
    description='Few-shot classification with instance credibility inference')
argparser.add_argument('-v', '--verbose', action='store_true',
    help='log progress')
argparser.add_argument('--debug', action='store_true',
    help='log every episode and iteration')

subparsers = argparser.add_subparsers(dest='command', metavar='COMMAND')
subparsers.required = True

parser_gen = subparsers.add_parser('gen-synth',
    help='write a synthetic Gaussian-mixture feature store')
parser_gen.add_argument('--classes', type=int, default=20,
    help='number of classes (default: %(default)s)')
parser_gen.add_argument('--dim', type=int, default=16,
    help='feature dimension (default: %(default)s)')
parser_gen.add_argument('--per-class', type=int, default=60,
    help='instances per class (default: %(default)s)')
parser_gen.add_argument('--sep', type=float, default=3.5,
    help='distance of class centres from the origin (default: %(default)s)')
parser_gen.add_argument('--noise', type=float, default=1.0,
    help='standard deviation of the instance noise (default: %(default)s)')
parser_gen.add_argument('--seed', type=int, default=DEFAULT_SEED,
    help='random seed (default: %(default)s)')
parser_gen.add_argument('--format', choices=STORE_FORMATS,
    help='file format (default: guessed from the file name)')
parser_gen.add_argument('--out', required=True, metavar='FILE',
    help='where to write the store')


def _add_episode_arguments(parser):
    parser.add_argument('--dataset', required=True, metavar='FILE',
        help='feature store to sample episodes from')
    parser.add_argument('--format', dest='dataset_format',
        choices=STORE_FORMATS,
        help='feature store format (default: guessed from the file name)')
    parser.add_argument('--setting', choices=SETTINGS,
        default=DEFAULT_SETTING,
        help='evaluation setting (default: %(default)s)')
    parser.add_argument('--ways', type=int, default=DEFAULT_WAYS,
        help='classes per episode (default: %(default)s)')
    parser.add_argument('--shots', type=int, default=DEFAULT_SHOTS,
        help='labeled instances per class (default: %(default)s)')
    parser.add_argument('--queries', type=int, default=DEFAULT_QUERIES,
        help='query instances per class (default: %(default)s)')
    parser.add_argument('--unlabeled', type=int,
        help='unlabeled instances per class, semi-supervised setting only')
    parser.add_argument('--seed', type=int, default=DEFAULT_SEED,
        help='master seed (default: %(default)s)')
    parser.add_argument('--dim', type=int, default=DEFAULT_DIM,
        help='reduced dimension (default: %(default)s)')
    parser.add_argument('--quota', type=int, default=DEFAULT_QUOTA,
        help='instances absorbed per class and iteration '
            '(default: %(default)s)')
    parser.add_argument('--reserve', type=int,
        help='unlabeled instances per class left out at the end '
            '(default: quota, 0 in the transductive setting)')
    parser.add_argument('--classifier', choices=CLASSIFIERS,
        default=DEFAULT_CLASSIFIER,
        help='base classifier (default: %(default)s)')
    parser.add_argument('--l2', type=float, default=DEFAULT_L2,
        help='weight penalty of the logistic classifier '
            '(default: %(default)s)')
    parser.add_argument('--svm-c', dest='c', type=float,
        default=DEFAULT_SVM_C,
        help='loss weight of the SVM classifier (default: %(default)s)')
    parser.add_argument('--strategy', choices=STRATEGIES,
        default=DEFAULT_STRATEGY,
        help='how pseudo-labeled instances are chosen (default: '
            '%(default)s)')
    parser.add_argument('--grid-size', type=int, default=DEFAULT_GRID_SIZE,
        help='points of the penalty grid (default: %(default)s)')
    parser.add_argument('--grid-eps', type=float, default=DEFAULT_GRID_EPS,
        help='smallest penalty relative to the largest '
            '(default: %(default)s)')
    parser.add_argument('--classifier-space', choices=CLASSIFIER_SPACES,
        default=DEFAULT_CLASSIFIER_SPACE,
        help='features the classifier is trained on (default: %(default)s)')
    parser.add_argument('--transductive-cap', type=int,
        default=DEFAULT_TRANSDUCTIVE_CAP,
        help='most query instances absorbed per class in the transductive '
            'setting (default: %(default)s)')
    parser.add_argument('--max-iterations', type=int,
        default=DEFAULT_MAX_ITERATIONS,
        help='iteration cap of the expansion loop (default: %(default)s)')


parser_run = subparsers.add_parser('run',
    help='evaluate a pipeline over many episodes')
_add_episode_arguments(parser_run)
parser_run.add_argument('--episodes', type=int, default=DEFAULT_EPISODES,
    help='number of episodes (default: %(default)s)')
parser_run.add_argument('--threads', type=int,
    help='parallel workers (default: ${} or 1)'.format(THREADS_ENV))
parser_run.add_argument('--trace', action='store_true',
    help='include per-episode loop traces in the report')
parser_run.add_argument('--robustness', action='store_true',
    help='include improvement counts per baseline accuracy bin')
parser_run.add_argument('--record-time', action='store_true',
    help='record wall time in the report (makes reports differ between '
        'runs)')
parser_run.add_argument('--output', metavar='FILE',
    help='write the JSON report to FILE (- for standard output)')

parser_path = subparsers.add_parser('path',
    help='dump the regularization path of one episode')
_add_episode_arguments(parser_path)
parser_path.add_argument('--episode-index', type=int, default=0,
    help='which episode of the seeded run to dump (default: %(default)s)')
parser_path.add_argument('--output', metavar='FILE',
    help='write the table to FILE instead of standard output')


def _run_config(args, **kwds):
    return RunConfig(dataset=args.dataset,
        dataset_format=args.dataset_format, setting=args.setting,
        ways=args.ways, shots=args.shots, queries=args.queries,
        unlabeled=args.unlabeled, seed=args.seed, dim=args.dim,
        quota=args.quota, reserve=args.reserve, classifier=args.classifier,
        l2=args.l2, c=args.c, strategy=args.strategy,
        grid_size=args.grid_size, grid_eps=args.grid_eps,
        classifier_space=args.classifier_space,
        transductive_cap=args.transductive_cap,
        max_iterations=args.max_iterations, **kwds)


def cmd_gen_synth(args):
    '''Write a synthetic feature store'''
    spec = store.SynthSpec(args.classes, args.dim, args.per_class, args.sep,
        args.noise, seed=args.seed)
    synthetic = store.generate_synthetic(spec)
    store.save_store(synthetic, args.out, args.format)
    log.info('wrote %s to %s', synthetic, args.out)
    return 0


def cmd_run(args):
    '''Evaluate the configured pipeline and write the report'''
    threads = args.threads if args.threads is not None \
        else utils.default_threads()
    config = _run_config(args, episodes=args.episodes, trace=args.trace,
        robustness=args.robustness, output=args.output, threads=threads,
        record_time=args.record_time)
    features = store.load_store(config.dataset, config.dataset_format)

    start = time.monotonic()
    report = episodes.evaluate(features, config.episode_spec(),
        config.episodes, config.pipeline_config(), workers=config.threads,
        run_fingerprint=config.fingerprint(), run_config=config.as_dict(),
        keep_traces=config.trace, robustness=config.robustness)
    if config.record_time:
        report.wall_time = time.monotonic() - start

    summary = sys.stdout
    if config.output == '-':
        report.dump(sys.stdout)
        summary = sys.stderr
    elif config.output:
        with open(config.output, 'w', encoding='utf-8') as stream:
            report.dump(stream)
    print(report.summary(), file=summary)
    return 0


def first_ranking(features, spec, episode, pipeline):
    '''Rank the unlabeled pool of *episode* once, as the first iteration of
    the expansion loop does.

    Returns:
        (IncidentalPath, PathProblem, row labels): the path, its regression
        problem and the true episode label of every episode table row
    '''
    view = episodes.EpisodeTable(features, spec, episode, pipeline)
    support, pool, labels = view.support, view.pool, view.labels
    if pool.size == 0:
        raise exc.InvalidArgument(
            'episode {} has no unlabeled instances to rank'.format(
                episode.index))

    loop = pipeline.loop_config(spec.setting, seed=spec.seed)
    model = loop.train(view.classifier_features[support], labels[support],
        np.arange(episode.ways))
    predicted, _ = classify.predict(model, view.classifier_features[pool])
    candidates = [engine.Candidate(i, y) for i, y in zip(pool, predicted)]
    problem = engine.build_regression_inputs(view.reduced,
        zip(support, labels[support]), candidates,
        num_classes=episode.ways)

    paths = []
    engine.rank_by_ici(problem, grid_size=pipeline.grid_size,
        grid_eps=pipeline.grid_eps, path=paths)
    return paths[0], problem, labels


def cmd_path(args):
    '''Dump the first credibility ranking of one episode'''
    config = _run_config(args, episodes=1)
    if config.setting == 'inductive':
        raise exc.ConfigConflict('--setting inductive', 'path',
            'there is no unlabeled pool to rank')
    features = store.load_store(config.dataset, config.dataset_format)
    spec = config.episode_spec()
    episode = episodes.sample_episode(features, spec, args.episode_index)
    path, problem, labels = first_ranking(features, spec, episode,
        config.pipeline_config())

    pseudo = np.argmax(problem.y, axis=1)
    truth = labels[problem.instance_ids]
    correct = [int(p == t) for p, t in zip(pseudo, truth)]
    stream = sys.stdout
    if args.output:
        stream = open(args.output, 'w', encoding='utf-8')
    try:
        glasso.write_path_table(path, stream,
            instance_ids=problem.instance_ids, extra={'correct': correct})
    finally:
        if args.output:
            stream.close()
    return 0


COMMANDS = {
    'gen-synth': cmd_gen_synth,
    'run': cmd_run,
    'path': cmd_path,
}


def main(args=None):
    args = argparser.parse_args(args)

    logging.basicConfig(format='%(message)s')
    if args.debug:
        log.setLevel(logging.DEBUG)
    elif args.verbose:
        log.setLevel(logging.INFO)
    else:
        log.setLevel(logging.WARNING)

    try:
        return COMMANDS[args.command](args)
    except (exc.ICIError, OSError) as err:
        print('ici-fewshot: error: {}'.format(err), file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
