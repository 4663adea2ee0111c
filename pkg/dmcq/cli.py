#!/usr/bin/env python
'''
dmcq command line

    dmcq channel {bsc|bsec|awgn|from-json}   build a channel artifact
    dmcq quantize                            optimal quantizer of a channel
    dmcq de {run|threshold|maps}             density evolution
    dmcq code {gallager|parse-alist}         LDPC codes in alist form
    dmcq simulate                            finite-length Monte Carlo
    dmcq oracle-check                        quantize vs exhaustive search

The primary artifact goes to --out (stdout with "--out -"), logging goes to
stderr.  Every run writes a manifest next to a file output
(<out>.manifest.json) holding the effective configuration, seeds, input
digests and wall time; with "--out -" the manifest is logged instead.

Exit codes: 0 success, 1 usage, 2 invalid input, 3 computation failure.

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
import argparse
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
import hashlib
import io
import json
import logging
import sys
import time
from typing import Dict
from typing import List

import numpy as np

from dmcq import codec
from dmcq.channel import ComputeException
from dmcq.channel import DEFAULT_MERGE_TOL
from dmcq.channel import UNIFORM_PRIOR
from dmcq.channel import Dmc
from dmcq.channel import ValidationException
from dmcq.channel import precompute_partial_mi
from dmcq.channel import sort_and_merge
from dmcq.code import emit_alist
from dmcq.code import gallager_construct
from dmcq.code import parse_alist
from dmcq.density import DEFAULT_CONVERGENCE_BITS
from dmcq.density import DEFAULT_CROSS_PRODUCT_CAP
from dmcq.density import DEFAULT_MAX_ITER
from dmcq.density import VERIFY_MAX_ITER
from dmcq.density import DeConfig
from dmcq.density import find_threshold
from dmcq.density import hard_decision_map
from dmcq.density import run_density_evolution
from dmcq.log import SIM_COLUMNS
from dmcq.log import THRESHOLD_COLUMNS
from dmcq.log import SweepLogWriter
from dmcq.models import DEFAULT_AWGN_BINS
from dmcq.models import DEFAULT_AWGN_RANGE
from dmcq.models import AwgnSpec
from dmcq.models import awgn_family
from dmcq.models import boundary_positions
from dmcq.models import bsc
from dmcq.models import bsc_family
from dmcq.models import bsec
from dmcq.models import bsec_family
from dmcq.models import quantized_awgn
from dmcq.quantizer import DEFAULT_ORACLE_CAP
from dmcq.quantizer import apply_quantizer
from dmcq.quantizer import compare_with_oracle
from dmcq.quantizer import quantize
from dmcq.sim import CODEWORD_MODES
from dmcq.sim import DEFAULT_BATCH
from dmcq.sim import DEFAULT_DECODE_ITER
from dmcq.sim import DEFAULT_SEED
from dmcq.sim import bp_reference_decode
from dmcq.sim import simulate

LOG = logging.getLogger('dmcq')

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_COMPUTE = 3


def tool_version():
    try:
        from pbr.version import VersionInfo  # pylint: disable=import-outside-toplevel
        return VersionInfo('dmcquant').version_string()
    except Exception:  # pylint: disable=broad-except
        return 'unknown'


@dataclass
class RunManifest:
    '''How an artifact was produced
    '''
    subcommand: str
    config: Dict[str, object]
    version: str
    seeds: List[int] = field(default_factory=list)
    inputs: Dict[str, str] = field(default_factory=dict)
    wall_time: float = 0.0

    def encode(self):
        doc = codec.cookie(codec.MANIFEST_FORMAT)
        doc.update(asdict(self))
        return doc


class _Run():
    '''Input reading, output writing and manifest bookkeeping of one command
    '''

    def __init__(self, opts):
        self.opts = opts
        config = {k: v for k, v in sorted(vars(opts).items()) if k != 'handler'}
        self.manifest = RunManifest(subcommand=opts.command_name, config=config,
                                    version=tool_version())
        self.started = time.monotonic()

    def read(self, path):
        try:
            if path == '-':
                data = sys.stdin.read().encode('utf-8')
            else:
                with open(path, 'rb') as infile:
                    data = infile.read()
        except OSError as exc:
            raise ValidationException('cannot read %s: %s' % (path, exc)) from None
        self.manifest.inputs[path] = hashlib.sha256(data).hexdigest()
        try:
            return data.decode('utf-8')
        except UnicodeDecodeError:
            raise ValidationException('%s is not UTF-8 text' % path) from None

    def read_doc(self, path, loader):
        text = self.read(path)
        try:
            return loader(json.loads(text))
        except ValueError as exc:
            if isinstance(exc, ValidationException):
                raise
            raise codec.FormatCookieException('%s: invalid artifact: %s' % (path, exc)) \
                from None

    def manifest_path(self, path):
        return None if path in (None, '-') else path + '.manifest.json'

    def write(self, path, text):
        if path == '-':
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        try:
            with open(path, 'w', encoding='utf-8') as outfile:
                outfile.write(text)
        except OSError as exc:
            raise ValidationException('cannot write %s: %s' % (path, exc)) from None

    def finish(self):
        self.manifest.wall_time = round(time.monotonic() - self.started, 6)
        text = codec.dumps(self.manifest.encode())
        path = self.manifest_path(self.opts.out)
        if path is None:
            LOG.info('manifest: %s', text.strip())
        else:
            self.write(path, text)


def _meta(run):
    path = run.manifest_path(run.opts.out)
    return {'manifest': path} if path else {}


# ---- channel

def cmd_channel(run):
    opts = run.opts
    kind = opts.channel_kind
    if kind == 'bsc':
        channel = bsc(opts.p)
        meta = {'model': 'bsc', 'p': opts.p}
    elif kind == 'bsec':
        channel = bsec(opts.p, opts.q)
        meta = {'model': 'bsec', 'p': opts.p, 'q': opts.q}
    elif kind == 'awgn':
        spec = AwgnSpec(sigma=opts.sigma, range=_awgn_range(opts), bins=opts.bins)
        channel = quantized_awgn(spec)
        meta = {'model': 'awgn', 'sigma': opts.sigma, 'bins': opts.bins,
                'range': list(spec.range)}
        if opts.levels is not None:
            result = quantize(channel, opts.levels)
            channel = apply_quantizer(channel, result)
            meta['levels'] = opts.levels
            meta['boundaries'] = boundary_positions(result, spec)
    else:
        channel = run.read_doc(opts.input, codec.decode_channel)
        meta = {'model': 'json', 'source': opts.input}
    meta.update(_meta(run))
    run.write(opts.out, codec.dumps(codec.encode_channel(channel, **meta)))
    return EXIT_OK


# ---- quantize

def _table_csv(channel, levels):
    ordered, _ = sort_and_merge(channel)
    levels = min(levels, ordered.num_outputs)
    out = io.StringIO()
    out.write('a_prime,a,iota\n')
    for a_prime, a, value in precompute_partial_mi(ordered, levels).entries():
        out.write('%d,%d,%r\n' % (a_prime, a, float(value)))
    return out.getvalue()


def cmd_quantize(run):
    opts = run.opts
    channel = run.read_doc(opts.channel, codec.decode_channel)
    result = quantize(channel, opts.levels, opts.merge_tol)
    LOG.info('I(X;Z) = %.12f bits with K=%d (ties %d)', result.max_mi, opts.levels, result.ties)
    if opts.oracle:
        comparison = compare_with_oracle(channel, opts.levels, opts.oracle_cap)
        if not comparison.match:
            print('oracle: mismatch (dp %.12f, oracle %.12f, consecutive optimum %s)'
                  % (comparison.dp_mi, comparison.oracle_mi, comparison.consecutive),
                  file=sys.stderr)
            raise ComputeException('quantizer disagrees with exhaustive search')
        print('oracle: match', file=sys.stderr)
    if opts.table_csv:
        run.write(opts.table_csv, _table_csv(channel, opts.levels))
    run.write(opts.out, codec.dumps(codec.encode_quantize_result(result, **_meta(run))))
    return EXIT_OK


# ---- de

def _de_config(opts, record_maps=True):
    return DeConfig(d_v=opts.dv, d_c=opts.dc, levels=opts.levels, max_iter=opts.max_iter,
                    convergence_bits=opts.convergence_bits, prebin=opts.prebin,
                    record_maps=record_maps, cross_product_cap=opts.cross_product_cap,
                    merge_tol=opts.merge_tol)


def cmd_de_run(run):
    opts = run.opts
    channel = run.read_doc(opts.channel, codec.decode_channel)
    trace = run_density_evolution(channel, _de_config(opts, not opts.no_maps))
    if opts.verbose:
        trace.dump(sys.stderr)
    run.write(opts.out, codec.dumps(codec.encode_trace(trace, **_meta(run))))
    return EXIT_OK


def _awgn_range(opts):
    if opts.range is not None:
        return tuple(opts.range)
    return (opts.range_lo, opts.range_hi)


def _family(opts):
    if opts.family == 'bsc':
        return bsc_family()
    if opts.family == 'bsec':
        return bsec_family(opts.q)
    return awgn_family(opts.bins, opts.channel_levels, _awgn_range(opts))


def cmd_de_threshold(run):
    opts = run.opts
    result = find_threshold(_family(opts), _de_config(opts), opts.lo, opts.hi, opts.tol,
                            verify_max_iter=opts.verify_max_iter)
    out = io.StringIO()
    writer = SweepLogWriter(out, THRESHOLD_COLUMNS)
    writer.output_log_format_version()
    path = run.manifest_path(opts.out)
    if path:
        writer.output_manifest(path)
    writer.output_comment('family=%s d_v=%d d_c=%d K=%d' % (opts.family, opts.dv, opts.dc,
                                                           opts.levels))
    writer.output_legend()
    for probe in sorted(result.probes, key=lambda p: p.param):
        writer.output_row(float(probe.param), probe.converged, probe.iterations, float(probe.mi))
    writer.output_bracket(result.lo, result.hi)
    run.write(opts.out, out.getvalue())
    if opts.result:
        run.write(opts.result, codec.dumps(codec.encode_threshold(result, **_meta(run))))
    LOG.info('threshold %.6f (bracket [%.6f, %.6f])', result.threshold, result.lo, result.hi)
    return EXIT_OK


def cmd_de_maps(run):
    opts = run.opts
    trace = run.read_doc(opts.trace, codec.trace_from_artifact)
    if not trace.records or trace.records[0].check_map is None:
        raise ValidationException('%s holds no decoding maps' % opts.trace)
    if opts.channel:
        channel = run.read_doc(opts.channel, codec.decode_channel)
    else:
        channel = Dmc(UNIFORM_PRIOR, np.stack((trace.channel.cond0, trace.channel.cond1),
                                              axis=1))
    decisions = [hard_decision_map(channel, trace, rec.iteration) for rec in trace.records]
    run.write(opts.out, codec.dumps(codec.encode_maps(trace, decisions, **_meta(run))))
    return EXIT_OK


# ---- code

def cmd_code_gallager(run):
    opts = run.opts
    run.manifest.seeds.append(opts.seed)
    code = gallager_construct(opts.n, opts.dv, opts.dc, opts.seed)
    LOG.info('%r', code)
    run.write(opts.out, emit_alist(code))
    return EXIT_OK


def cmd_code_parse(run):
    opts = run.opts
    code = parse_alist(run.read(opts.input))
    LOG.info('%r with %d edges', code, code.num_edges)
    run.write(opts.out, emit_alist(code))
    return EXIT_OK


# ---- simulate

def cmd_simulate(run):
    opts = run.opts
    run.manifest.seeds.append(opts.seed)
    code = parse_alist(run.read(opts.code))
    channel = run.read_doc(opts.channel, codec.decode_channel)
    kwargs = dict(max_frame_errors=opts.max_frame_errors, codeword=opts.codeword,
                  workers=opts.workers, batch=opts.batch, channel_param=opts.param)
    if opts.bp:
        result = bp_reference_decode(code, channel, opts.frames, opts.seed, opts.max_iter,
                                     **kwargs)
    else:
        if not opts.maps:
            raise ValidationException('--maps is required unless --bp is given')
        trace = run.read_doc(opts.maps, codec.trace_from_artifact)
        result = simulate(code, channel, trace, opts.frames, opts.seed, opts.max_iter, **kwargs)
    out = io.StringIO()
    writer = SweepLogWriter(out, SIM_COLUMNS)
    writer.output_log_format_version()
    path = run.manifest_path(opts.out)
    if path:
        writer.output_manifest(path)
    writer.output_comment('decoder=%s n=%d' % (result.decoder, result.block_length))
    writer.output_legend()
    writer.output_row(result.channel_param, result.frames, result.bit_errors,
                      float(result.ber), float(result.fer))
    run.write(opts.out, out.getvalue())
    return EXIT_OK


# ---- oracle-check

def cmd_oracle_check(run):
    opts = run.opts
    if opts.channel:
        channels = [run.read_doc(opts.channel, codec.decode_channel)]
    else:
        run.manifest.seeds.append(opts.seed)
        rng = np.random.default_rng(opts.seed)
        channels = [Dmc(UNIFORM_PRIOR, rng.dirichlet(np.ones(opts.inputs), size=2).T)
                    for _ in range(opts.random)]
    out = io.StringIO()
    failures = 0
    for index, channel in enumerate(channels):
        comparison = compare_with_oracle(channel, opts.levels, opts.oracle_cap)
        verdict = 'match' if comparison.match else 'mismatch'
        failures += not comparison.match
        out.write('%d,%r,%r,%s\n' % (index, comparison.dp_mi, comparison.oracle_mi, verdict))
    run.write(opts.out, 'channel,dp_mi,oracle_mi,verdict\n' + out.getvalue())
    if failures:
        print('oracle: mismatch on %d of %d channels' % (failures, len(channels)),
              file=sys.stderr)
        raise ComputeException('quantizer disagrees with exhaustive search')
    print('oracle: match', file=sys.stderr)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    '''Usage errors exit with EXIT_USAGE'''

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '%s: error: %s\n' % (self.prog, message))


def _add_common(parser):
    parser.add_argument('--out', default='-', help='primary output file, "-" for stdout')
    parser.add_argument('--verbose', action='store_true', help='debug logging')


def _add_de_options(parser, max_iter=DEFAULT_MAX_ITER):
    parser.add_argument('--dv', type=int, required=True, help='variable node degree')
    parser.add_argument('--dc', type=int, required=True, help='check node degree')
    parser.add_argument('--levels', type=int, required=True, help='message alphabet size K')
    parser.add_argument('--max-iter', type=int, default=max_iter)
    parser.add_argument('--convergence-bits', type=float, default=DEFAULT_CONVERGENCE_BITS)
    parser.add_argument('--prebin', type=int, default=None,
                        help='finely quantize large cross products to this many outputs first')
    parser.add_argument('--cross-product-cap', type=int, default=DEFAULT_CROSS_PRODUCT_CAP)
    parser.add_argument('--merge-tol', type=float, default=DEFAULT_MERGE_TOL)


def _add_awgn_options(parser):
    parser.add_argument('--bins', type=int, default=DEFAULT_AWGN_BINS)
    parser.add_argument('--range', type=float, nargs=2, metavar=('LO', 'HI'), default=None,
                        help='quantization range; overrides --range-lo and --range-hi')
    parser.add_argument('--range-lo', type=float, default=DEFAULT_AWGN_RANGE[0])
    parser.add_argument('--range-hi', type=float, default=DEFAULT_AWGN_RANGE[1])


def _subparser(subparsers, name, handler, help_text):
    parser = subparsers.add_parser(name, help=help_text, description=help_text)
    parser.set_defaults(handler=handler)
    _add_common(parser)
    return parser


def build_parser():
    parser = _Parser(prog='dmcq', description='Optimal DMC quantizers and lookup-table '
                     'LDPC decoders synthesized by density evolution')
    parser.add_argument('--version', action='version', version='%(prog)s ' + tool_version())
    commands = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    channel = commands.add_parser('channel', help='build a channel artifact')
    kinds = channel.add_subparsers(dest='channel_kind', required=True, parser_class=_Parser)
    sub = _subparser(kinds, 'bsc', cmd_channel, 'binary symmetric channel')
    sub.add_argument('--p', type=float, required=True, help='crossover probability')
    sub = _subparser(kinds, 'bsec', cmd_channel, 'binary symmetric errors and erasures channel')
    sub.add_argument('--p', type=float, required=True, help='erasure probability')
    sub.add_argument('--q', type=float, required=True, help='crossover probability')
    sub = _subparser(kinds, 'awgn', cmd_channel, 'finely quantized binary-input AWGN channel')
    sub.add_argument('--sigma', type=float, required=True)
    _add_awgn_options(sub)
    sub.add_argument('--levels', type=int, default=None,
                     help='reduce to this many outputs with the optimal quantizer')
    sub = _subparser(kinds, 'from-json', cmd_channel, 'validate and normalize a channel file')
    sub.add_argument('--in', dest='input', required=True)

    sub = _subparser(commands, 'quantize', cmd_quantize, 'optimal quantizer of a channel')
    sub.add_argument('--channel', default='-', help='channel JSON, "-" for stdin')
    sub.add_argument('--levels', type=int, required=True)
    sub.add_argument('--merge-tol', type=float, default=DEFAULT_MERGE_TOL)
    sub.add_argument('--table-csv', default=None, help='write the partial information table')
    sub.add_argument('--oracle', action='store_true', help='cross-check by exhaustive search')
    sub.add_argument('--oracle-cap', type=int, default=DEFAULT_ORACLE_CAP)

    de_cmd = commands.add_parser('de', help='density evolution')
    de_kinds = de_cmd.add_subparsers(dest='de_kind', required=True, parser_class=_Parser)
    sub = _subparser(de_kinds, 'run', cmd_de_run, 'run density evolution on a channel')
    sub.add_argument('--channel', default='-')
    sub.add_argument('--no-maps', action='store_true', help='do not record decoding maps')
    _add_de_options(sub, VERIFY_MAX_ITER)
    sub = _subparser(de_kinds, 'threshold', cmd_de_threshold, 'bisect the noise threshold')
    sub.add_argument('--family', choices=('bsc', 'bsec', 'awgn'), required=True)
    sub.add_argument('--q', type=float, default=0.0, help='fixed crossover of the bsec family')
    _add_awgn_options(sub)
    sub.add_argument('--channel-levels', type=int, default=None,
                     help='reduce AWGN channels to this many outputs')
    sub.add_argument('--lo', type=float, required=True, help='converging parameter')
    sub.add_argument('--hi', type=float, required=True, help='non-converging parameter')
    sub.add_argument('--tol', type=float, default=1e-4)
    sub.add_argument('--verify-max-iter', type=int, default=VERIFY_MAX_ITER)
    sub.add_argument('--result', default=None, help='threshold JSON with the final trace')
    _add_de_options(sub)
    sub = _subparser(de_kinds, 'maps', cmd_de_maps, 'extract the decoding map schedule')
    sub.add_argument('--trace', required=True, help='trace or threshold JSON')
    sub.add_argument('--channel', default=None, help='channel JSON (default: from the trace)')

    code_cmd = commands.add_parser('code', help='LDPC codes')
    code_kinds = code_cmd.add_subparsers(dest='code_kind', required=True, parser_class=_Parser)
    sub = _subparser(code_kinds, 'gallager', cmd_code_gallager, 'random regular code')
    sub.add_argument('--n', type=int, required=True)
    sub.add_argument('--dv', type=int, required=True)
    sub.add_argument('--dc', type=int, required=True)
    sub.add_argument('--seed', type=int, default=DEFAULT_SEED)
    sub = _subparser(code_kinds, 'parse-alist', cmd_code_parse, 'validate an alist file')
    sub.add_argument('--in', dest='input', required=True)

    sub = _subparser(commands, 'simulate', cmd_simulate, 'finite-length simulation')
    sub.add_argument('--code', required=True, help='alist file')
    sub.add_argument('--channel', required=True)
    sub.add_argument('--maps', default=None, help='trace or threshold JSON with maps')
    sub.add_argument('--bp', action='store_true', help='use the sum-product decoder')
    sub.add_argument('--frames', type=int, required=True)
    sub.add_argument('--seed', type=int, default=DEFAULT_SEED)
    sub.add_argument('--max-iter', type=int, default=DEFAULT_DECODE_ITER)
    sub.add_argument('--max-frame-errors', type=int, default=None)
    sub.add_argument('--codeword', choices=CODEWORD_MODES, default='auto')
    sub.add_argument('--workers', type=int, default=1)
    sub.add_argument('--batch', type=int, default=DEFAULT_BATCH)
    sub.add_argument('--param', type=float, default=None, help='channel parameter for the row')

    sub = _subparser(commands, 'oracle-check', cmd_oracle_check,
                     'compare the quantizer against exhaustive search')
    sub.add_argument('--channel', default=None, help='channel JSON; random channels if absent')
    sub.add_argument('--levels', type=int, required=True)
    sub.add_argument('--random', type=int, default=100, help='number of random channels')
    sub.add_argument('--inputs', type=int, default=6, help='outputs of random channels')
    sub.add_argument('--seed', type=int, default=DEFAULT_SEED)
    sub.add_argument('--oracle-cap', type=int, default=DEFAULT_ORACLE_CAP)
    return parser


def _command_name(opts):
    parts = [opts.command]
    for attr in ('channel_kind', 'de_kind', 'code_kind'):
        if getattr(opts, attr, None):
            parts.append(getattr(opts, attr))
    return ' '.join(parts)


def main(args=None):
    '''Run one dmcq command; returns the exit code
    '''
    parser = build_parser()
    try:
        opts = parser.parse_args(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(stream=sys.stderr, force=True,
                        level=logging.DEBUG if opts.verbose else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s')
    opts.command_name = _command_name(opts)
    try:
        run = _Run(opts)
        code = opts.handler(run)
        run.finish()
        return code
    except ValidationException as exc:
        LOG.error('%s', exc)
        return EXIT_VALIDATION
    except ComputeException as exc:
        LOG.error('%s', exc)
        return EXIT_COMPUTE


if __name__ == '__main__':
    sys.exit(main())
