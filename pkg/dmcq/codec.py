'''
Encoding and decoding of dmcq artifacts

Every artifact is a JSON object that starts with a cookie: a "format"
name and an integer "version".  Decoders refuse documents whose cookie
does not match what they expect.  Channel files are the exception on
input: a bare {"prior", "likelihoods"} object is accepted as well.

Decoding map tables travel as flat JSON integer arrays in mixed-radix
order, first slot most significant.

Output is deterministic (sorted keys, fixed indentation, shortest float
repr) so re-running a command produces byte-identical files.

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
from dataclasses import asdict
import json

import numpy as np

from dmcq.channel import Dmc
from dmcq.channel import ValidationException
from dmcq.density import DeConfig
from dmcq.density import DecodingMap
from dmcq.density import DeTrace
from dmcq.density import IterationRecord
from dmcq.density import MessagePair
from dmcq.density import Probe
from dmcq.density import ThresholdResult
from dmcq.quantizer import QuantizeResult
from dmcq.quantizer import Quantizer

FORMAT_VERSION = 1

CHANNEL_FORMAT = 'dmcq.channel'
QUANTIZER_FORMAT = 'dmcq.quantizer'
TRACE_FORMAT = 'dmcq.trace'
MAPS_FORMAT = 'dmcq.maps'
THRESHOLD_FORMAT = 'dmcq.threshold'
MANIFEST_FORMAT = 'dmcq.manifest'


class FormatCookieException(ValidationException):
    pass


def dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + '\n'


def loads(text, expected_format):
    '''Parse a JSON artifact and check its cookie

    Exceptions:
        FormatCookieException on bad JSON, wrong format or wrong version
    '''
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise FormatCookieException('not a JSON document: %s' % exc) from None
    check_cookie(doc, expected_format)
    return doc


def cookie(fmt):
    return {'format': fmt, 'version': FORMAT_VERSION}


def check_cookie(doc, expected_format):
    if not isinstance(doc, dict):
        raise FormatCookieException('artifact must be a JSON object')
    fmt = doc.get('format')
    if fmt != expected_format:
        raise FormatCookieException('expected format %r, got %r' % (expected_format, fmt))
    if doc.get('version') != FORMAT_VERSION:
        raise FormatCookieException('unsupported %s version %r' % (fmt, doc.get('version')))


def _field(doc, key):
    try:
        return doc[key]
    except (KeyError, TypeError):
        raise ValidationException('artifact is missing field %r' % key) from None


def encode_channel(channel, **meta):
    doc = cookie(CHANNEL_FORMAT)
    doc['prior'] = [float(p) for p in channel.prior]
    doc['likelihoods'] = channel.likelihoods.tolist()
    if meta:
        doc['meta'] = meta
    return doc


def decode_channel(doc):
    '''Dmc from a channel document; the cookie is checked only when present
    '''
    if not isinstance(doc, dict):
        raise FormatCookieException('artifact must be a JSON object')
    if 'format' in doc or 'version' in doc:
        check_cookie(doc, CHANNEL_FORMAT)
    return Dmc(_field(doc, 'prior'), _field(doc, 'likelihoods'))


def encode_quantizer(quantizer):
    if quantizer is None:
        return None
    return {'boundaries': list(quantizer.boundaries),
            'num_outputs': quantizer.num_outputs,
            'num_inputs': quantizer.num_inputs}


def decode_quantizer(doc):
    if doc is None:
        return None
    return Quantizer(_field(doc, 'boundaries'), _field(doc, 'num_outputs'),
                     _field(doc, 'num_inputs'))


def encode_quantize_result(result, **meta):
    '''Quantizer artifact: boundaries, K, I and max_mi_bits at the top level,
    plus the nested quantizer and the per-output permutation and assignment
    '''
    doc = cookie(QUANTIZER_FORMAT)
    quantizer = result.quantizer
    if quantizer is not None:
        boundaries = list(quantizer.boundaries)
        num_outputs, num_inputs = quantizer.num_outputs, quantizer.num_inputs
    else:
        boundaries = []
        num_outputs, num_inputs = result.num_outputs, int(result.assignment.size)
    doc.update({'boundaries': boundaries,
                'K': num_outputs,
                'I': num_inputs,
                'max_mi_bits': float(result.max_mi),
                'quantizer': encode_quantizer(quantizer),
                'max_mi': float(result.max_mi),
                'permutation': result.permutation.tolist(),
                'assignment': result.assignment.tolist(),
                'ties': int(result.ties)})
    if meta:
        doc['meta'] = meta
    return doc


def decode_quantize_result(doc):
    '''QuantizeResult from a quantizer artifact

    Documents holding only boundaries, K, I and max_mi_bits are accepted;
    permutation and assignment then default to the quantizer labels.
    '''
    check_cookie(doc, QUANTIZER_FORMAT)
    if 'quantizer' in doc:
        quantizer = decode_quantizer(doc['quantizer'])
    else:
        quantizer = Quantizer(_field(doc, 'boundaries'), int(_field(doc, 'K')),
                              int(_field(doc, 'I')))
    max_mi = doc['max_mi_bits'] if 'max_mi_bits' in doc else _field(doc, 'max_mi')
    if quantizer is not None:
        labels = quantizer.labels()
        permutation = doc.get('permutation', np.arange(quantizer.num_inputs))
        assignment = doc.get('assignment', labels)
    else:
        permutation = _field(doc, 'permutation')
        assignment = _field(doc, 'assignment')
    return QuantizeResult(quantizer=quantizer,
                          max_mi=float(max_mi),
                          permutation=np.asarray(permutation, dtype=np.int64),
                          ties=int(doc.get('ties', 0)),
                          assignment=np.asarray(assignment, dtype=np.int64))


def encode_map(dmap):
    if dmap is None:
        return None
    return {'arity': list(dmap.arity),
            'num_labels': dmap.num_labels,
            'table': dmap.table.tolist()}


def decode_map(doc):
    '''DecodingMap from {"arity", "num_labels", "table"}; table is a flat
    integer list with one entry per input tuple
    '''
    if doc is None:
        return None
    arity = [int(r) for r in _field(doc, 'arity')]
    size = int(np.prod(arity, dtype=np.int64))
    table = _field(doc, 'table')
    if not isinstance(table, list) or \
            not all(isinstance(v, int) and not isinstance(v, bool) for v in table):
        raise ValidationException('map table must be a flat list of integers')
    if len(table) != size:
        raise ValidationException('map table has %d entries, expected %d' % (len(table), size))
    if table and max(table) > np.iinfo(np.int16).max:
        raise ValidationException('map table label %d out of range' % max(table))
    return DecodingMap(arity, table, _field(doc, 'num_labels'))


def encode_pair(pair):
    return {'cond0': pair.cond0.tolist(), 'cond1': pair.cond1.tolist()}


def decode_pair(doc):
    return MessagePair(_field(doc, 'cond0'), _field(doc, 'cond1'))


def _encode_record(rec):
    return {'iteration': rec.iteration,
            'check_quantizer': encode_quantizer(rec.check_quantizer),
            'var_quantizer': encode_quantizer(rec.var_quantizer),
            'check_map': encode_map(rec.check_map),
            'var_map': encode_map(rec.var_map),
            'check_dist': encode_pair(rec.check_dist),
            'var_dist': encode_pair(rec.var_dist),
            'check_mi': float(rec.check_mi),
            'mi': float(rec.mi)}


def _decode_record(doc):
    return IterationRecord(iteration=int(_field(doc, 'iteration')),
                           check_quantizer=decode_quantizer(_field(doc, 'check_quantizer')),
                           var_quantizer=decode_quantizer(_field(doc, 'var_quantizer')),
                           check_map=decode_map(doc.get('check_map')),
                           var_map=decode_map(doc.get('var_map')),
                           check_dist=decode_pair(_field(doc, 'check_dist')),
                           var_dist=decode_pair(_field(doc, 'var_dist')),
                           check_mi=float(_field(doc, 'check_mi')),
                           mi=float(_field(doc, 'mi')))


def _trace_body(trace):
    return {'channel': encode_pair(trace.channel),
            'config': asdict(trace.config),
            'verdict': trace.verdict,
            'iterations': [_encode_record(rec) for rec in trace.records]}


def _trace_from_body(doc):
    try:
        config = DeConfig(**_field(doc, 'config'))
    except TypeError as exc:
        raise ValidationException('bad density evolution config: %s' % exc) from None
    return DeTrace(channel=decode_pair(_field(doc, 'channel')),
                   config=config,
                   records=[_decode_record(rec) for rec in _field(doc, 'iterations')],
                   verdict=_field(doc, 'verdict'))


def encode_trace(trace, **meta):
    doc = cookie(TRACE_FORMAT)
    doc.update(_trace_body(trace))
    if meta:
        doc['meta'] = meta
    return doc


def decode_trace(doc):
    check_cookie(doc, TRACE_FORMAT)
    return _trace_from_body(doc)


def encode_threshold(result, **meta):
    doc = cookie(THRESHOLD_FORMAT)
    doc.update({'threshold': result.threshold,
                'lo': result.lo,
                'hi': result.hi,
                'probes': [asdict(p) for p in result.probes],
                'trace': _trace_body(result.trace)})
    if meta:
        doc['meta'] = meta
    return doc


def decode_threshold(doc):
    check_cookie(doc, THRESHOLD_FORMAT)
    return ThresholdResult(threshold=float(_field(doc, 'threshold')),
                           lo=float(_field(doc, 'lo')),
                           hi=float(_field(doc, 'hi')),
                           trace=_trace_from_body(_field(doc, 'trace')),
                           probes=[Probe(**p) for p in _field(doc, 'probes')])


def trace_from_artifact(doc):
    '''DeTrace held by a trace or threshold artifact
    '''
    if isinstance(doc, dict) and doc.get('format') == THRESHOLD_FORMAT:
        return decode_threshold(doc).trace
    return decode_trace(doc)


def encode_maps(trace, decision_maps, **meta):
    '''The decoding map schedule alone: per iteration the check, variable
    and hard-decision maps
    '''
    doc = cookie(MAPS_FORMAT)
    cfg = trace.config
    doc.update({'d_v': cfg.d_v, 'd_c': cfg.d_c, 'levels': cfg.levels,
                'iterations': [{'iteration': rec.iteration,
                                'check_map': encode_map(rec.check_map),
                                'var_map': encode_map(rec.var_map),
                                'decision_map': encode_map(dmap)}
                               for rec, dmap in zip(trace.records, decision_maps)]})
    if meta:
        doc['meta'] = meta
    return doc


def decode_maps(doc):
    '''List of (check map, variable map, decision map) per iteration
    '''
    check_cookie(doc, MAPS_FORMAT)
    return [(decode_map(it.get('check_map')), decode_map(it.get('var_map')),
             decode_map(it.get('decision_map'))) for it in _field(doc, 'iterations')]
