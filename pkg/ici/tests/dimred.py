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


import unittest

import numpy as np
import pytest

from .. import exc
from .. import dimred


def eig_pca(data, d_out):
    centred = data - data.mean(axis=0)
    cov = centred.T @ centred / (data.shape[0] - 1)
    values, vectors = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1][:d_out]
    return values[order], vectors[:, order]


class TC_00_Normalize(unittest.TestCase):
    def test_000_vector(self):
        np.testing.assert_allclose(dimred.l2_normalize([3.0, 4.0]),
            [0.6, 0.8])

    def test_001_rows(self):
        v = dimred.l2_normalize([[3.0, 4.0], [0.0, 2.0]])
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), [1.0, 1.0])

    def test_002_zero_row_unchanged(self):
        v = dimred.l2_normalize([[0.0, 0.0], [1.0, 1.0]])
        np.testing.assert_array_equal(v[0], [0.0, 0.0])

    def test_003_input_untouched(self):
        data = np.array([[2.0, 0.0]])
        dimred.l2_normalize(data)
        np.testing.assert_array_equal(data, [[2.0, 0.0]])


class TC_10_Fit(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(5)
        self.data = rng.standard_normal((30, 6)) * [5, 4, 3, 2, 1, 0.5]

    def test_000_matches_eigendecomposition(self):
        model = dimred.pca_fit(self.data, 3)
        values, vectors = eig_pca(self.data, 3)
        np.testing.assert_allclose(model.explained_variance, values,
            rtol=1e-9)
        # same axes up to orientation
        np.testing.assert_allclose(np.abs(model.components.T @ vectors),
            np.eye(3), atol=1e-8)

    def test_001_orthonormal(self):
        model = dimred.pca_fit(self.data, 4)
        np.testing.assert_allclose(model.components.T @ model.components,
            np.eye(4), atol=1e-12)

    def test_002_variance_nonincreasing(self):
        model = dimred.pca_fit(self.data, 5)
        self.assertTrue(np.all(np.diff(model.explained_variance) <= 0))

    def test_003_sign_convention(self):
        model = dimred.pca_fit(self.data, 5)
        pivots = np.argmax(np.abs(model.components), axis=0)
        self.assertTrue(np.all(
            model.components[pivots, np.arange(5)] > 0))

    def test_004_transform_centres(self):
        model = dimred.pca_fit(self.data, 3)
        reduced = model.transform(self.data)
        self.assertEqual(reduced.shape, (30, 3))
        np.testing.assert_allclose(reduced.mean(axis=0), np.zeros(3),
            atol=1e-12)

    def test_005_full_rank_preserves_distances(self):
        model = dimred.pca_fit(self.data, 6)
        reduced = model.transform(self.data)
        before = np.linalg.norm(self.data[:, None] - self.data[None], axis=2)
        after = np.linalg.norm(reduced[:, None] - reduced[None], axis=2)
        np.testing.assert_allclose(after, before, atol=1e-8)

    def test_006_too_many_components(self):
        with self.assertRaises(exc.InvalidArgument):
            dimred.pca_fit(self.data, 7)
        with self.assertRaises(exc.InvalidArgument):
            dimred.pca_fit(self.data[:3], 3)
        with self.assertRaises(exc.InvalidArgument):
            dimred.pca_fit(self.data, 0)

    def test_007_single_row(self):
        with self.assertRaises(exc.InvalidArgument):
            dimred.pca_fit(self.data[:1], 1)

    def test_008_transform_width(self):
        model = dimred.pca_fit(self.data, 2)
        with self.assertRaises(exc.InvalidArgument):
            dimred.pca_transform(model, np.zeros((2, 5)))

    def test_009_model_read_only(self):
        model = dimred.pca_fit(self.data, 2)
        with self.assertRaises(ValueError):
            model.components[0, 0] = 1.0


def test_deterministic():
    data = np.random.default_rng(8).standard_normal((12, 4))
    first = dimred.pca_fit(data, 2)
    second = dimred.pca_fit(data.copy(), 2)
    np.testing.assert_array_equal(first.components, second.components)
    assert repr(first) == '<PcaModel d_in=4 d_out=2>'


@pytest.mark.parametrize('n,d_out', [(2, 1), (4, 3)])
def test_minimal_sizes(n, d_out):
    data = np.random.default_rng(n).standard_normal((n, 5))
    assert dimred.pca_fit(data, d_out).d_out == d_out
