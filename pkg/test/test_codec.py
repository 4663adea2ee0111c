#!/usr/bin/env python
'''
Test code for the JSON artifact codec.

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
import numpy as np
import pytest

from dmcq import codec
from dmcq.channel import ValidationException
from dmcq.density import DeConfig
from dmcq.density import DecodingMap
from dmcq.density import find_threshold
from dmcq.density import hard_decision_map
from dmcq.density import run_density_evolution
from dmcq.models import bsc
from dmcq.models import bsc_family
from dmcq.models import bsec
from dmcq.quantizer import quantize

CONFIG = DeConfig(d_v=3, d_c=6, levels=3)


@pytest.fixture(scope='module')
def trace():
    return run_density_evolution(bsc(0.04), CONFIG)


@pytest.mark.codec
def test_cookie_checks():
    doc = codec.encode_channel(bsc(0.1))
    assert doc['format'] == codec.CHANNEL_FORMAT
    assert doc['version'] == codec.FORMAT_VERSION
    with pytest.raises(codec.FormatCookieException):
        codec.decode_trace(doc)
    doc['version'] = codec.FORMAT_VERSION + 1
    with pytest.raises(codec.FormatCookieException):
        codec.decode_channel(doc)
    with pytest.raises(codec.FormatCookieException):
        codec.loads('{"format": "dmcq.channel"', codec.CHANNEL_FORMAT)
    with pytest.raises(codec.FormatCookieException):
        codec.loads('[1, 2]', codec.CHANNEL_FORMAT)
    # cookie failures are validation failures
    assert issubclass(codec.FormatCookieException, ValidationException)

@pytest.mark.codec
def test_channel_text():
    channel = bsec(0.1, 0.2)
    text = codec.dumps(codec.encode_channel(channel, family='bsec', p=0.1, q=0.2))
    assert text.endswith('\n')
    doc = codec.loads(text, codec.CHANNEL_FORMAT)
    decoded = codec.decode_channel(doc)
    assert np.allclose(decoded.likelihoods, channel.likelihoods, rtol=0, atol=1e-15)
    assert doc['meta'] == {'family': 'bsec', 'p': 0.1, 'q': 0.2}
    assert codec.dumps(doc) == text
    del doc['likelihoods']
    with pytest.raises(ValidationException):
        codec.decode_channel(doc)

@pytest.mark.codec
def test_quantize_result():
    result = quantize(bsec(0.1, 0.2), 2)
    doc = codec.encode_quantize_result(result)
    assert doc['boundaries'] == list(result.quantizer.boundaries)
    assert doc['K'] == 2
    assert doc['I'] == result.quantizer.num_inputs
    assert doc['max_mi_bits'] == result.max_mi
    decoded = codec.decode_quantize_result(doc)
    assert decoded.quantizer == result.quantizer
    assert decoded.max_mi == result.max_mi
    assert decoded.assignment.tolist() == result.assignment.tolist()
    assert decoded.ties == result.ties

@pytest.mark.codec
def test_quantize_result_top_level_only():
    doc = codec.cookie(codec.QUANTIZER_FORMAT)
    doc.update({'boundaries': [1, 3], 'K': 3, 'I': 4, 'max_mi_bits': 0.5})
    decoded = codec.decode_quantize_result(doc)
    assert decoded.quantizer.boundaries == (1, 3)
    assert decoded.max_mi == 0.5
    assert decoded.assignment.tolist() == [0, 1, 1, 2]
    del doc['K']
    with pytest.raises(ValidationException):
        codec.decode_quantize_result(doc)

@pytest.mark.codec
def test_channel_without_cookie():
    doc = {'prior': [0.5, 0.5], 'likelihoods': [[0.9, 0.1], [0.1, 0.9]]}
    assert np.allclose(codec.decode_channel(doc).likelihoods, bsc(0.1).likelihoods)
    doc['format'] = codec.TRACE_FORMAT
    with pytest.raises(codec.FormatCookieException):
        codec.decode_channel(doc)
    with pytest.raises(codec.FormatCookieException):
        codec.decode_channel([[0.9, 0.1], [0.1, 0.9]])

@pytest.mark.codec
def test_map_table_is_flat_int_list():
    dmap = DecodingMap((2, 3), [0, 1, 2, 2, 1, 0], 3)
    doc = codec.encode_map(dmap)
    assert doc == {'arity': [2, 3], 'num_labels': 3, 'table': [0, 1, 2, 2, 1, 0]}
    # the entry for tuple (1, 0) sits at 1 * 3 + 0
    assert doc['table'][3] == dmap.lookup((1, 0))
    assert '"table": [' in codec.dumps(doc)
    short = dict(doc, table=[0, 1, 2])
    with pytest.raises(ValidationException):
        codec.decode_map(short)
    with pytest.raises(ValidationException):
        codec.decode_map(dict(doc, table='eJxjYGBgAAAABAAB'))
    with pytest.raises(ValidationException):
        codec.decode_map(dict(doc, table=[0, 1, 2, 2, 1, 0.5]))
    with pytest.raises(ValidationException):
        codec.decode_map(dict(doc, table=[0, 1, 2, 2, 1, -1]))
    with pytest.raises(ValidationException):
        codec.decode_map(dict(doc, table=[0, 1, 2, 2, 1, 40000]))

@pytest.mark.codec
def test_map():
    dmap = DecodingMap((2, 3, 3), np.arange(18) % 3, 3)
    assert codec.decode_map(codec.encode_map(dmap)) == dmap
    assert codec.encode_map(None) is None
    assert codec.decode_map(None) is None

@pytest.mark.codec
def test_trace(trace):
    text = codec.dumps(codec.encode_trace(trace))
    decoded = codec.decode_trace(codec.loads(text, codec.TRACE_FORMAT))
    assert decoded.config == trace.config
    assert decoded.verdict == trace.verdict
    assert decoded.channel == trace.channel
    assert decoded.iterations == trace.iterations
    for ours, theirs in zip(decoded.records, trace.records):
        assert ours.check_map == theirs.check_map
        assert ours.var_map == theirs.var_map
        assert ours.var_quantizer == theirs.var_quantizer
        assert ours.mi == theirs.mi
    # rerunning yields the same bytes
    assert codec.dumps(codec.encode_trace(run_density_evolution(bsc(0.04), CONFIG))) == text

@pytest.mark.codec
def test_trace_bad_config(trace):
    doc = codec.encode_trace(trace)
    doc['config']['bogus'] = 1
    with pytest.raises(ValidationException):
        codec.decode_trace(doc)

@pytest.mark.codec
def test_maps(trace):
    channel = bsc(0.04)
    decisions = [hard_decision_map(channel, trace, rec.iteration) for rec in trace.records]
    doc = codec.encode_maps(trace, decisions)
    assert doc['d_v'] == 3 and doc['d_c'] == 6 and doc['levels'] == 3
    decoded = codec.decode_maps(doc)
    assert len(decoded) == trace.iterations
    check_map, var_map, decision_map = decoded[-1]
    assert check_map == trace.records[-1].check_map
    assert var_map == trace.records[-1].var_map
    assert decision_map == decisions[-1]

@pytest.mark.codec
def test_threshold():
    result = find_threshold(bsc_family(), CONFIG, 0.01, 0.2, 2e-2)
    doc = codec.encode_threshold(result, family='bsc')
    decoded = codec.decode_threshold(doc)
    assert (decoded.threshold, decoded.lo, decoded.hi) == (result.threshold, result.lo, result.hi)
    assert decoded.probes == result.probes
    assert codec.trace_from_artifact(doc).iterations == result.trace.iterations
    assert codec.trace_from_artifact(codec.encode_trace(result.trace)).config == CONFIG
