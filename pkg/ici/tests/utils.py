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


import numpy as np
import pytest

from .. import exc
from .. import utils


def test_mean_ci95():
    mean, ci95 = utils.mean_ci95([0.2, 0.4, 0.6, 0.8])
    assert mean == pytest.approx(0.5)
    assert ci95 == pytest.approx(1.96 * np.std([0.2, 0.4, 0.6, 0.8]) / 2)


def test_mean_ci95_single():
    assert utils.mean_ci95([0.7]) == (0.7, 0.0)


def test_mean_ci95_empty():
    with pytest.raises(exc.InvalidArgument):
        utils.mean_ci95([])


def test_fingerprint_key_order():
    assert utils.fingerprint({'a': 1, 'b': [1, 2]}) == \
        utils.fingerprint({'b': [1, 2], 'a': 1})
    assert utils.fingerprint({'a': 1}) != utils.fingerprint({'a': 2})


def test_episode_rng():
    first = utils.episode_rng(1, 5).integers(0, 1 << 30, size=4)
    again = utils.episode_rng(1, 5).integers(0, 1 << 30, size=4)
    other = utils.episode_rng(1, 6).integers(0, 1 << 30, size=4)
    stream = utils.episode_rng(1, 5, stream=1).integers(0, 1 << 30, size=4)
    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, other)
    assert not np.array_equal(first, stream)


def test_one_hot():
    np.testing.assert_array_equal(utils.one_hot([2, 0], 3),
        [[0, 0, 1], [1, 0, 0]])
    with pytest.raises(exc.InvalidArgument):
        utils.one_hot([3], 3)


@pytest.mark.parametrize('value,expected', [
    (None, 1), ('4', 4), ('0', 1), ('many', 1)])
def test_default_threads(monkeypatch, value, expected):
    if value is None:
        monkeypatch.delenv('ICI_THREADS', raising=False)
    else:
        monkeypatch.setenv('ICI_THREADS', value)
    assert utils.default_threads() == expected
