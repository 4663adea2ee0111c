'''
Monte Carlo simulation of finite-length LDPC decoding

Two decoders share one harness:
  - TableDecoder runs flooding message passing where every node update is
    a lookup in the decoding maps synthesized by density evolution
  - BpDecoder is the floating point sum-product reference

Frames are independent.  Frame i draws everything it needs (codeword,
channel outputs, tie-break coins) from numpy.random.default_rng([seed, i]),
so a run is reproducible whatever the batch size or worker count, and the
two decoders see identical channel outputs for the same seed.

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
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from dataclasses import field
import logging
from typing import Dict
from typing import Optional

import numpy as np

from dmcq.channel import ValidationException
from dmcq.density import hard_decision_map

LOG = logging.getLogger(__name__)

DEFAULT_SEED = 20240101
DEFAULT_DECODE_ITER = 100
DEFAULT_BATCH = 100
LLR_CLIP = 50.0

CODEWORD_MODES = ('auto', 'zero', 'random')


class ArityMismatchException(ValidationException):
    def __init__(self, what, expected, actual):
        ValidationException.__init__(self, '%s arity mismatch: expected %s, got %s'
                                     % (what, expected, actual))
        self.expected = expected
        self.actual = actual


@dataclass
class SimResult:
    '''Error counts of a simulation run

    iterations maps a decoding iteration count to the number of frames that
    stopped there (frames that never satisfied the checks count at the limit)
    '''
    channel_param: Optional[float]
    frames: int
    block_length: int
    bit_errors: int = 0
    frame_errors: int = 0
    iterations: Dict[int, int] = field(default_factory=dict)
    decoder: str = 'table'

    @property
    def ber(self):
        return self.bit_errors / (self.frames * self.block_length) if self.frames else 0.0

    @property
    def fer(self):
        return self.frame_errors / self.frames if self.frames else 0.0

    def add(self, frames, bit_errors, frame_errors, iterations):
        self.frames += frames
        self.bit_errors += bit_errors
        self.frame_errors += frame_errors
        for count, hits in iterations.items():
            self.iterations[count] = self.iterations.get(count, 0) + hits


def sample_outputs(channel, codewords, uniforms):
    '''Channel output labels for code bits, by inverse CDF sampling
    '''
    cdf = np.cumsum(channel.likelihoods, axis=0)
    last = channel.num_outputs - 1
    out0 = np.minimum(np.searchsorted(cdf[:, 0], uniforms, side='right'), last)
    out1 = np.minimum(np.searchsorted(cdf[:, 1], uniforms, side='right'), last)
    return np.where(codewords == 0, out0, out1)


class _Decoder():
    '''Shared flooding-decoder plumbing over a regular code
    '''
    name = None
    draws_coins = False

    def __init__(self, code, channel, max_iter):
        if code.degrees is None:
            raise ValidationException('decoder needs a regular code')
        self.code = code
        self.channel = channel
        self.max_iter = max_iter
        self.d_v, self.d_c = code.degrees
        self.check_vars = code.check_vars()
        self.var_edges = code.var_edges()
        self.edge_vars = self.check_vars.reshape(-1)

    def satisfied(self, bits):
        return ~np.any(bits[:, self.check_vars].sum(axis=2) % 2, axis=1)

    def decode(self, outputs, coins=None):
        '''Decode a batch of channel output labels (frames, n)

        Returns:
            (hard decisions (frames, n), iterations used per frame)
        '''
        raise NotImplementedError()


class TableDecoder(_Decoder):
    '''Lookup-table decoder running the decoding maps of a DeTrace

    Iteration l applies the check maps of iteration l to the variable-to-
    check labels (the raw channel labels at l = 1), then the variable maps
    and the hard-decision map of iteration l.  Past the end of the trace the
    last maps are reused when their alphabets chain; otherwise decoding
    stops at the end of the trace.
    '''
    name = 'table'

    def __init__(self, code, channel, trace, max_iter=DEFAULT_DECODE_ITER):
        _Decoder.__init__(self, code, channel, max_iter)
        cfg = trace.config
        if (cfg.d_v, cfg.d_c) != (self.d_v, self.d_c):
            raise ArityMismatchException('code degree', (cfg.d_v, cfg.d_c), (self.d_v, self.d_c))
        if not trace.records or trace.records[0].check_map is None:
            raise ValidationException('trace holds no decoding maps')
        first = trace.records[0]
        if first.var_map.arity[0] != channel.num_outputs:
            raise ArityMismatchException('channel slot', first.var_map.arity[0],
                                         channel.num_outputs)
        if first.check_map.arity[0] != channel.num_outputs:
            raise ArityMismatchException('first check map', first.check_map.arity,
                                         (channel.num_outputs,) * (self.d_c - 1))
        self.check_maps = [rec.check_map for rec in trace.records]
        self.var_maps = [rec.var_map for rec in trace.records]
        self.decision_maps = [hard_decision_map(channel, trace, rec.iteration)
                              for rec in trace.records]
        last = trace.records[-1]
        self.reusable = last.check_map.arity[0] == last.var_map.num_labels
        if max_iter > len(self.check_maps) and not self.reusable:
            LOG.warning('maps end after %d iterations and cannot be reused; '
                        'decoding stops there', len(self.check_maps))

    @property
    def iterations_available(self):
        return self.max_iter if self.reusable else min(self.max_iter, len(self.check_maps))

    def is_symmetric(self):
        return all(m.is_symmetric('check') for m in self.check_maps) and \
            all(m.is_symmetric('variable') for m in self.var_maps) and \
            all(m.is_symmetric('variable') for m in self.decision_maps)

    def _maps(self, iteration):
        index = min(iteration, len(self.check_maps)) - 1
        return self.check_maps[index], self.var_maps[index], self.decision_maps[index]

    def decode(self, outputs, coins=None):
        frames = outputs.shape[0]
        bits = np.zeros(outputs.shape, dtype=np.int8)
        used = np.full(frames, self.iterations_available, dtype=np.int64)
        active = np.arange(frames)
        # variable-to-check labels per edge, in check-major edge order
        to_check = outputs[:, self.edge_vars]
        channel_out = outputs
        others_c = [[s for s in range(self.d_c) if s != t] for t in range(self.d_c)]
        others_v = [[s for s in range(self.d_v) if s != j] for j in range(self.d_v)]
        for iteration in range(1, self.iterations_available + 1):
            check_map, var_map, decision_map = self._maps(iteration)
            incoming = to_check.reshape(active.size, -1, self.d_c)
            to_var = np.empty_like(incoming)
            for t in range(self.d_c):
                to_var[:, :, t] = check_map.apply(*[incoming[:, :, s] for s in others_c[t]])
            at_var = to_var.reshape(active.size, -1)[:, self.var_edges]
            decided = decision_map.apply(channel_out,
                                         *[at_var[:, :, j] for j in range(self.d_v)])
            bits[active] = decided
            done = self.satisfied(decided)
            used[active[done]] = iteration
            keep = ~done
            if not np.any(keep):
                break
            active = active[keep]
            channel_out = channel_out[keep]
            at_var = at_var[keep]
            to_check = np.empty((active.size, self.edge_vars.size), dtype=to_var.dtype)
            for j in range(self.d_v):
                to_check[:, self.var_edges[:, j]] = var_map.apply(
                    channel_out, *[at_var[:, :, s] for s in others_v[j]])
        return bits, used


class BpDecoder(_Decoder):
    '''Sum-product reference decoder (tanh rule, LLRs clipped to
    +/-LLR_CLIP); an exactly zero posterior is decided by the frame's coin
    '''
    name = 'bp'
    draws_coins = True

    def __init__(self, code, channel, max_iter=DEFAULT_DECODE_ITER):
        _Decoder.__init__(self, code, channel, max_iter)
        self.channel_llr = np.clip(np.nan_to_num(channel.llr(), nan=0.0,
                                                 posinf=LLR_CLIP, neginf=-LLR_CLIP),
                                   -LLR_CLIP, LLR_CLIP)

    def is_symmetric(self):
        return self.channel.is_symmetric()

    def _decide(self, total, coins):
        return np.where(total == 0, coins, (total < 0)).astype(np.int8)

    def decode(self, outputs, coins=None):
        frames = outputs.shape[0]
        if coins is None:
            coins = np.zeros(outputs.shape, dtype=np.int8)
        prior = self.channel_llr[outputs]
        bits = self._decide(prior, coins)
        used = np.full(frames, self.max_iter, dtype=np.int64)
        active = np.arange(frames)
        to_check = prior[:, self.edge_vars]
        for iteration in range(1, self.max_iter + 1):
            half = np.tanh(0.5 * to_check.reshape(active.size, -1, self.d_c))
            ones = np.ones(half.shape[:2] + (1,))
            before = np.concatenate((ones, np.cumprod(half, axis=2)[:, :, :-1]), axis=2)
            after = np.concatenate((np.cumprod(half[:, :, ::-1], axis=2)[:, :, -2::-1], ones),
                                   axis=2)
            product = np.clip(before * after, -np.tanh(0.5 * LLR_CLIP), np.tanh(0.5 * LLR_CLIP))
            to_var = (2.0 * np.arctanh(product)).reshape(active.size, -1)
            at_var = to_var[:, self.var_edges]
            total = prior[active] + at_var.sum(axis=2)
            decided = self._decide(total, coins[active])
            bits[active] = decided
            done = self.satisfied(decided)
            used[active[done]] = iteration
            keep = ~done
            if not np.any(keep):
                break
            active = active[keep]
            extrinsic = np.clip(total[keep][:, :, None] - at_var[keep], -LLR_CLIP, LLR_CLIP)
            to_check = np.empty((active.size, self.edge_vars.size))
            to_check[:, self.var_edges] = extrinsic
        return bits, used


def _frame_inputs(decoder, mode, seed, start, stop):
    code = decoder.code
    n = code.n
    words = np.zeros((stop - start, n), dtype=np.int8)
    outputs = np.empty((stop - start, n), dtype=np.int64)
    coins = np.zeros((stop - start, n), dtype=np.int8) if decoder.draws_coins else None
    encoder = code.encoder() if mode == 'random' else None
    for row, index in enumerate(range(start, stop)):
        rng = np.random.default_rng([seed, index])
        if encoder is not None:
            words[row] = encoder.encode(rng.integers(0, 2, encoder.dimension))
        outputs[row] = sample_outputs(decoder.channel, words[row], rng.random(n))
        if coins is not None:
            coins[row] = rng.integers(0, 2, n)
    return words, outputs, coins


def _run_batch(job):
    decoder, mode, seed, start, stop = job
    words, outputs, coins = _frame_inputs(decoder, mode, seed, start, stop)
    bits, used = decoder.decode(outputs, coins)
    errors = np.count_nonzero(bits != words, axis=1)
    return (stop - start, int(errors.sum()), int(np.count_nonzero(errors)),
            dict(Counter(int(u) for u in used)))


def _resolve_mode(decoder, codeword):
    if codeword not in CODEWORD_MODES:
        raise ValidationException('codeword mode must be one of %s, got %r'
                                  % (', '.join(CODEWORD_MODES), codeword))
    if codeword != 'auto':
        return codeword
    symmetric = decoder.channel.is_symmetric() and decoder.is_symmetric()
    mode = 'zero' if symmetric else 'random'
    LOG.info('codeword mode auto -> %s', mode)
    return mode


def run_simulation(decoder, frames, rng_seed=DEFAULT_SEED, max_frame_errors=None,
                   codeword='auto', workers=1, batch=DEFAULT_BATCH, channel_param=None):
    '''Run frames through a decoder and count errors

    Frames go in batches of batch; the max_frame_errors stop is only checked
    between batches, in batch order, so the result does not depend on
    workers.
    '''
    if frames < 0 or batch < 1 or workers < 1:
        raise ValidationException('need frames >= 0, batch >= 1, workers >= 1')
    mode = _resolve_mode(decoder, codeword)
    result = SimResult(channel_param=channel_param, frames=0,
                       block_length=decoder.code.n, decoder=decoder.name)
    jobs = [(decoder, mode, rng_seed, start, min(start + batch, frames))
            for start in range(0, frames, batch)]

    def stop():
        return max_frame_errors is not None and result.frame_errors >= max_frame_errors

    if workers == 1:
        for job in jobs:
            result.add(*_run_batch(job))
            LOG.debug('%d frames, %d frame errors', result.frames, result.frame_errors)
            if stop():
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for wave in range(0, len(jobs), workers):
                for outcome in pool.map(_run_batch, jobs[wave:wave + workers]):
                    if stop():
                        break
                    result.add(*outcome)
                LOG.debug('%d frames, %d frame errors', result.frames, result.frame_errors)
                if stop():
                    break
    LOG.info('%s decoder: %d frames, BER %.3e, FER %.3e',
             decoder.name, result.frames, result.ber, result.fer)
    return result


def simulate(code, channel, maps, frames, rng_seed=DEFAULT_SEED, max_iter=DEFAULT_DECODE_ITER,
             **kwargs):
    '''Simulate the lookup-table decoder built from the maps of a DeTrace

    Exceptions:
        ArityMismatchException when the code degrees or the channel alphabet
        do not fit the maps
    '''
    decoder = TableDecoder(code, channel, maps, max_iter)
    return run_simulation(decoder, frames, rng_seed, **kwargs)


def bp_reference_decode(code, channel, frames, rng_seed=DEFAULT_SEED,
                        max_iter=DEFAULT_DECODE_ITER, **kwargs):
    '''Simulate sum-product decoding with the same frame streams as simulate()
    '''
    decoder = BpDecoder(code, channel, max_iter)
    return run_simulation(decoder, frames, rng_seed, **kwargs)
