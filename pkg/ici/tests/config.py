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

from .. import exc
from ..config import RunConfig


class TC_00_RunConfig(unittest.TestCase):
    def test_000_defaults(self):
        config = RunConfig(dataset='s.icif')
        self.assertEqual(config.setting, 'semi')
        self.assertEqual(config.unlabeled, 15)
        self.assertEqual(config.episodes, 600)
        self.assertEqual((config.dim, config.quota, config.grid_size,
            config.grid_eps), (5, 5, 100, 0.01))
        self.assertEqual((config.strategy, config.classifier),
            ('ici', 'lr'))

    def test_001_transductive_unlabeled_conflict(self):
        with self.assertRaisesRegex(exc.ConfigConflict, '--unlabeled'):
            RunConfig(dataset='s.icif', setting='transductive', unlabeled=15)

    def test_002_transductive_pool(self):
        config = RunConfig(dataset='s.icif', setting='transductive')
        self.assertEqual(config.unlabeled, 0)
        self.assertEqual(config.episode_spec().setting, 'transductive')

    def test_003_invalid_counts(self):
        for name in ('ways', 'shots', 'queries', 'episodes', 'dim',
                'quota', 'threads'):
            with self.subTest(name=name):
                with self.assertRaises(exc.InvalidArgument):
                    RunConfig(dataset='s.icif', **{name: 0})

    def test_004_invalid_choices(self):
        with self.assertRaises(exc.InvalidArgument):
            RunConfig(dataset='s.icif', strategy='oracle')
        with self.assertRaises(exc.InvalidArgument):
            RunConfig(dataset='s.icif', setting='online')
        with self.assertRaises(exc.InvalidArgument):
            RunConfig(dataset='s.icif', grid_eps=2.0)

    def test_005_fingerprint_ignores_output(self):
        first = RunConfig(dataset='s.icif', output='a.json', threads=1)
        second = RunConfig(dataset='s.icif', output='b.json', threads=8,
            record_time=True)
        self.assertEqual(first.fingerprint(), second.fingerprint())
        self.assertNotIn('output', first.as_dict())

    def test_006_fingerprint_tracks_knobs(self):
        first = RunConfig(dataset='s.icif', seed=1)
        second = RunConfig(dataset='s.icif', seed=2)
        self.assertNotEqual(first.fingerprint(), second.fingerprint())
        self.assertEqual(len(first.fingerprint()), 64)

    def test_007_pipeline(self):
        config = RunConfig(dataset='s.icif', setting='transductive',
            strategy='nn', quota=3, transductive_cap=10)
        loop = config.pipeline_config().loop_config(config.setting)
        self.assertEqual((loop.strategy, loop.quota, loop.reserve, loop.cap),
            ('nn', 3, 0, 10))
