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


import json
import struct

import pytest

from ..tools import ici_fewshot

# Disable warnings that conflict with Pytest's use of fixtures.
# pylint: disable=redefined-outer-name


@pytest.fixture(scope='module')
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp('data') / 'synth.icif'
    assert ici_fewshot.main(['gen-synth', '--classes', '12', '--dim', '16',
        '--per-class', '50', '--sep', '3.5', '--noise', '1', '--seed', '1',
        '--out', str(path)]) == 0
    return path


def run(dataset, tmp_path, name, *args):
    output = tmp_path / name
    assert ici_fewshot.main(['run', '--dataset', str(dataset),
        '--episodes', '4', '--output', str(output)] + list(args)) == 0
    return output


def test_gen_synth_deterministic(tmp_path):
    args = ['gen-synth', '--classes', '5', '--dim', '16', '--per-class',
        '50', '--sep', '8', '--noise', '1', '--seed', '1']
    first, second = tmp_path / 'a.icif', tmp_path / 'b.icif'
    assert ici_fewshot.main(args + ['--out', str(first)]) == 0
    assert ici_fewshot.main(args + ['--out', str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert first.read_bytes()[:4] == b'ICIF'


def test_gen_synth_csv(tmp_path):
    path = tmp_path / 's.csv'
    assert ici_fewshot.main(['gen-synth', '--classes', '2', '--dim', '3',
        '--per-class', '4', '--out', str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[0] == 'label,f0,f1,f2'
    assert len(lines) == 9


def test_gen_synth_missing_out(capsys):
    with pytest.raises(SystemExit) as info:
        ici_fewshot.main(['gen-synth', '--classes', '5'])
    assert info.value.code == 2
    assert '--out' in capsys.readouterr().err


def test_gen_synth_invalid(tmp_path, capsys):
    assert ici_fewshot.main(['gen-synth', '--noise', '0',
        '--out', str(tmp_path / 'x.icif')]) == 1
    assert capsys.readouterr().err.startswith('ici-fewshot: error: noise')


def test_run_report(dataset, tmp_path, capsys):
    output = run(dataset, tmp_path, 'report.json', '--trace',
        '--robustness')
    report = json.loads(output.read_text())
    assert report['schema_version'] == 1
    assert report['episodes'] == 4
    assert len(report['accuracies']) == 4
    assert report['wall_time'] is None
    assert len(report['fingerprint']) == 64
    assert report['config']['dataset'] == str(dataset)
    assert sum(row['total'] for row in report['robustness']) == 4
    assert '±' in capsys.readouterr().out


def test_run_deterministic(dataset, tmp_path):
    first = run(dataset, tmp_path, 'a.json', '--strategy', 'random',
        '--seed', '1')
    second = run(dataset, tmp_path, 'b.json', '--strategy', 'random',
        '--seed', '1', '--threads', '2')
    assert first.read_bytes() == second.read_bytes()


def test_run_semi_two_iterations(dataset, tmp_path):
    output = run(dataset, tmp_path, 'semi.json', '--setting', 'semi',
        '--unlabeled', '15', '--quota', '5', '--trace')
    report = json.loads(output.read_text())
    assert [len(trace) for trace in report['traces']] == [2] * 4
    assert all(trace[0]['remaining'] == 75 for trace in report['traces'])


def test_run_transductive_pool_is_query(dataset, tmp_path):
    output = run(dataset, tmp_path, 'trans.json', '--setting',
        'transductive', '--ways', '5', '--shots', '1', '--queries', '15',
        '--strategy', 'ici', '--trace')
    report = json.loads(output.read_text())
    assert report['config']['unlabeled'] == 0
    assert all(trace[0]['remaining'] == 75 for trace in report['traces'])


def test_run_transductive_unlabeled_conflict(dataset, capsys):
    assert ici_fewshot.main(['run', '--dataset', str(dataset),
        '--setting', 'transductive', '--unlabeled', '15']) == 1
    assert 'conflicts with --unlabeled' in capsys.readouterr().err


def test_run_missing_dataset(tmp_path, capsys):
    assert ici_fewshot.main(['run', '--dataset',
        str(tmp_path / 'nothing.icif')]) == 1
    assert capsys.readouterr().err.startswith('ici-fewshot: error:')


def test_run_corrupt_header(tmp_path, capsys):
    path = tmp_path / 'huge.icif'
    path.write_bytes(struct.pack('<4sIQQ', b'ICIF', 1, 1, 1 << 40)
        + bytes(8))
    assert ici_fewshot.main(['run', '--dataset', str(path)]) == 1
    assert ':byte 16: truncated' in capsys.readouterr().err


def test_run_record_time(dataset, tmp_path):
    output = run(dataset, tmp_path, 't.json', '--record-time',
        '--strategy', 'none')
    assert json.loads(output.read_text())['wall_time'] >= 0


def test_run_report_to_stdout(dataset, capsys):
    assert ici_fewshot.main(['run', '--dataset', str(dataset),
        '--episodes', '2', '--strategy', 'none', '--output', '-']) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)['episodes'] == 2
    assert '±' in captured.err


def test_run_threads_from_environment(dataset, tmp_path, monkeypatch):
    monkeypatch.setenv('ICI_THREADS', '2')
    output = run(dataset, tmp_path, 'env.json', '--strategy', 'none')
    assert 'threads' not in json.loads(output.read_text())['config']


def test_path_table(dataset, tmp_path):
    output = tmp_path / 'path.tsv'
    assert ici_fewshot.main(['path', '--dataset', str(dataset),
        '--grid-size', '10', '--output', str(output)]) == 0
    lines = output.read_text().splitlines()
    assert lines[0].split('\t') == ['lambda', 'instance_index',
        'gamma_norm', 'correct']
    # support (5) and unlabeled (75) instances at every grid point
    assert len(lines) == 1 + 10 * 80
    rows = [line.split('\t') for line in lines[1:]]
    top = max(float(row[0]) for row in rows)
    assert all(float(row[2]) == 0 for row in rows if float(row[0]) == top)
    assert {row[3] for row in rows} <= {'0', '1'}


def test_path_stdout(dataset, capsys):
    assert ici_fewshot.main(['path', '--dataset', str(dataset),
        '--setting', 'transductive', '--grid-size', '5']) == 0
    assert len(capsys.readouterr().out.splitlines()) == 1 + 5 * 80


def test_path_inductive(dataset, capsys):
    assert ici_fewshot.main(['path', '--dataset', str(dataset),
        '--setting', 'inductive']) == 1
    assert 'no unlabeled pool' in capsys.readouterr().err
