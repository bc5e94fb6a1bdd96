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

import hashlib
import json
import logging
import os

import numpy as np

from . import THREADS_ENV
from .exc import InvalidArgument

# 1.96 standard errors
CI95_FACTOR = 1.96


def episode_rng(master_seed, episode_index, stream=0):
    '''Random generator of a single episode.

    The stream depends only on the pair (*master_seed*, *episode_index*), so
    episodes can be sampled in any order and in parallel.
    Nonzero *stream* gives further independent generators of the same episode.
    '''
    entropy = [int(master_seed), int(episode_index)]
    if stream:
        entropy.append(int(stream))
    seq = np.random.SeedSequence(entropy)
    return np.random.default_rng(seq)


def fingerprint(mapping):
    '''SHA-256 of the canonical JSON form of *mapping*'''
    canonical = json.dumps(mapping, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def mean_ci95(values):
    '''Return ``(mean, ci95)`` of *values*.

    The interval half-width is ``1.96 * std / sqrt(E)`` with the population
    standard deviation; a single value has zero width.
    '''
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InvalidArgument('cannot aggregate an empty list of values')
    mean = float(values.mean())
    if values.size == 1:
        return mean, 0.0
    return mean, float(CI95_FACTOR * values.std() / np.sqrt(values.size))


def one_hot(labels, num_classes):
    '''One-hot rows for integer *labels* in 0 .. num_classes-1'''
    labels = np.asarray(labels, dtype=np.intp)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise InvalidArgument(
            'label out of range 0..{}'.format(num_classes - 1))
    encoded = np.zeros((labels.size, num_classes), dtype=np.float64)
    encoded[np.arange(labels.size), labels] = 1.0
    return encoded


def default_threads():
    '''Number of parallel workers, from :data:`ici.THREADS_ENV` or 1'''
    value = os.environ.get(THREADS_ENV)
    if not value:
        return 1
    try:
        threads = int(value)
    except ValueError:
        logging.getLogger('ici').warning(
            'ignoring %s=%r: not an integer', THREADS_ENV, value)
        return 1
    return max(threads, 1)
