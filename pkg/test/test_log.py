#!/usr/bin/env python
'''
Test code for the sweep log writer and reader.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
'''
import io

import pytest

from dmcq.channel import ValidationException
from dmcq.log import SIM_COLUMNS
from dmcq.log import THRESHOLD_COLUMNS
from dmcq.log import SweepLogReader
from dmcq.log import SweepLogWriter

SAMPLE_SWEEP_LOG = 'test/bsc-k3-sweep.csv'


@pytest.mark.log
def test_threshold_log(tmp_path):
    path = tmp_path / 'sweep.csv'
    with open(path, 'w', encoding='utf-8') as sweep_log:
        writer = SweepLogWriter(sweep_log, THRESHOLD_COLUMNS)
        writer.output_comment('Logged by test_threshold_log')
        writer.output_log_format_version()
        writer.output_manifest('sweep.csv.manifest.json')
        writer.output_legend()
        writer.output_row(0.01, True, 5, 0.99996)
        writer.output_row(0.2, False, 200, 0.14)
        writer.output_bracket(0.0703, 0.0711)
        writer.close()

    with open(path, encoding='utf-8') as sweep_log:
        reader = SweepLogReader(sweep_log)
        first = reader.get_next_row()
        assert first == {'param': 0.01, 'converged': 1, 'iterations': 5, 'mi_bits': 0.99996}
        assert isinstance(first['iterations'], int)
        assert reader.version == '1.0'
        assert reader.manifest == 'sweep.csv.manifest.json'
        assert reader.get_next_row()['converged'] == 0
        assert reader.get_next_row() is None
        assert reader.bracket == (0.0703, 0.0711)
        assert reader.columns == THRESHOLD_COLUMNS

@pytest.mark.log
def test_sim_log_missing_values():
    out = io.StringIO()
    writer = SweepLogWriter(out, SIM_COLUMNS)
    writer.output_legend()
    writer.output_row(None, 100, 0, 0.0, 0.0)
    reader = SweepLogReader(io.StringIO(out.getvalue()))
    rows = reader.rows()
    assert rows == [{'param': None, 'frames': 100, 'bit_errors': 0, 'ber': 0.0, 'fer': 0.0}]
    assert reader.bracket is None
    with pytest.raises(ValidationException):
        writer.output_row(0.1, 100)

@pytest.mark.log
def test_bad_rows():
    with pytest.raises(ValidationException):
        SweepLogReader(io.StringIO('param,frames\n0.1\n')).get_next_row()
    with pytest.raises(ValidationException):
        SweepLogReader(io.StringIO('param,frames\n0.1,many\n')).get_next_row()

@pytest.mark.log
def test_sample_sweep_log():
    with open(SAMPLE_SWEEP_LOG, encoding='utf-8') as sweep_log:
        reader = SweepLogReader(sweep_log)
        rows = reader.rows()
    assert len(rows) == 7
    assert reader.bracket == (0.069375, 0.0753125)
    lo, hi = reader.bracket
    assert lo < 0.0708 < hi
    converging = [row['param'] for row in rows if row['converged']]
    assert max(converging) == lo
    assert min(row['param'] for row in rows if not row['converged']) == hi
