'''
Standard binary-input channel models

Constructors for the binary symmetric channel, the binary symmetric errors
and erasures channel and a finely quantized binary-input AWGN channel, plus
parameterized families used by the noise threshold search.

Input 1 of every channel is the code bit 0 and input 2 the code bit 1; for
AWGN the code bit x is sent as 1 - 2x.

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
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import ndtr

from dmcq.channel import UNIFORM_PRIOR
from dmcq.channel import Dmc
from dmcq.channel import ValidationException
from dmcq.quantizer import apply_quantizer
from dmcq.quantizer import quantize

DEFAULT_AWGN_RANGE = (-2.0, 2.0)
DEFAULT_AWGN_BINS = 500


def bsc(p):
    '''Binary symmetric channel with crossover probability p, uniform prior
    '''
    if not 0 <= p <= 1:
        raise ValidationException('BSC crossover must be in [0, 1], got %r' % p)
    return Dmc(UNIFORM_PRIOR, [[1 - p, p], [p, 1 - p]])


def bsec(p, q):
    '''Binary symmetric errors and erasures channel

    Outputs are (0, erasure, 1): P(.|0) = (1-p-q, p, q) and
    P(.|1) = (q, p, 1-p-q).  With q = 0 this is the erasure channel with
    erasure probability p, with p = 0 it is the BSC with crossover q.
    '''
    if p < 0 or q < 0 or p + q > 1:
        raise ValidationException('need p, q >= 0 and p + q <= 1, got p=%r q=%r' % (p, q))
    return Dmc(UNIFORM_PRIOR, [[1 - p - q, q], [p, p], [q, 1 - p - q]])


@dataclass(frozen=True)
class AwgnSpec:
    '''Uniform fine quantization of the binary-input AWGN channel

    sigma noise standard deviation (signal +/-1)
    range (lo, hi) interval cut into bins equal cells; the two end cells
        also absorb the tails beyond lo and hi
    bins number of cells I
    '''
    sigma: float
    range: Tuple[float, float] = DEFAULT_AWGN_RANGE
    bins: int = DEFAULT_AWGN_BINS

    def __post_init__(self):
        lo, hi = self.range
        if not self.sigma > 0:
            raise ValidationException('sigma must be > 0, got %r' % self.sigma)
        if not lo < hi:
            raise ValidationException('range must have lo < hi, got %r' % (self.range,))
        if self.bins < 2:
            raise ValidationException('bins must be >= 2, got %r' % self.bins)

    @property
    def bin_width(self):
        lo, hi = self.range
        return (hi - lo) / self.bins

    def edges(self):
        '''Cell edges, with the outer edges at -inf and +inf
        '''
        lo, hi = self.range
        edges = np.linspace(lo, hi, self.bins + 1)
        edges[0] = -np.inf
        edges[-1] = np.inf
        return edges


def quantized_awgn(spec):
    '''Dmc obtained by finely quantizing the AWGN channel described by spec

    Cell i has P(i|x) equal to the Gaussian N(1 - 2x, sigma^2) mass over
    the cell.  Cells stay in left-to-right order, which is already the
    increasing likelihood ratio order since the ratio is exp(2y / sigma^2).
    '''
    edges = spec.edges()
    likelihoods = np.empty((spec.bins, 2))
    for col, mean in enumerate((1.0, -1.0)):
        cdf = ndtr((edges - mean) / spec.sigma)
        likelihoods[:, col] = np.diff(cdf)
    likelihoods /= likelihoods.sum(axis=0)
    return Dmc(UNIFORM_PRIOR, likelihoods)


def boundary_positions(result, spec):
    '''Real-line positions of the quantization boundaries of a channel
    built by quantized_awgn: boundary a (a outputs to its left) lies at
    lo + a * bin_width
    '''
    lo, _ = spec.range
    return [lo + a * spec.bin_width for a in result.output_boundaries()]


def bsc_family():
    '''p -> BSC(p); larger p is a worse channel
    '''
    return bsc


def bsec_family(q):
    '''p -> BSEC(p, q) at a fixed q; larger p is a worse channel
    '''
    def family(p):
        return bsec(p, q)
    return family


def awgn_family(bins=DEFAULT_AWGN_BINS, channel_levels=None, awgn_range=DEFAULT_AWGN_RANGE):
    '''sigma -> finely quantized AWGN channel, optionally reduced to
    channel_levels outputs with the optimal quantizer; larger sigma is
    a worse channel
    '''
    def family(sigma):
        fine = quantized_awgn(AwgnSpec(sigma=sigma, range=awgn_range, bins=bins))
        if channel_levels is None:
            return fine
        return apply_quantizer(fine, quantize(fine, channel_levels))
    return family
