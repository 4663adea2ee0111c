'''
Quantized density evolution and lookup-table decoder synthesis

Density evolution for a regular (d_v, d_c) LDPC ensemble over any
binary-input DMC.  Messages are discrete: at every node the cross-product
distribution of the incoming labels is reduced to K labels with the
optimal quantizer, and the quantizer itself becomes the node's decoding
map (a lookup table from incoming label tuples to an outgoing label).

Both conditionals (code bit 0 and code bit 1) are tracked, so asymmetric
channels and asymmetric maps need no special treatment.

Label conventions:
  - channel labels are the channel outputs in the channel's own order
  - every reduced message alphabet is ordered by increasing
    P(y|X=0) / P(y|X=1), so label 0 is the strongest belief in X=1
  - tuples are indexed lexicographically, first slot most significant,
    with the channel slot first at variable nodes

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
from __future__ import print_function
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
import logging
import sys
from typing import List
from typing import Optional

import numpy as np

from dmcq.channel import COLUMN_SUM_TOL
from dmcq.channel import DEFAULT_MERGE_TOL
from dmcq.channel import UNIFORM_PRIOR
from dmcq.channel import ComputeException
from dmcq.channel import Dmc
from dmcq.channel import IndexRangeException
from dmcq.channel import ValidationException
from dmcq.channel import mutual_information
from dmcq.channel import sort_and_merge
from dmcq.iterators import MixedRadixIterator
from dmcq.quantizer import Quantizer
from dmcq.quantizer import quantize

LOG = logging.getLogger(__name__)

DEFAULT_CROSS_PRODUCT_CAP = 10 ** 7
DEFAULT_CONVERGENCE_BITS = 1e-4
DEFAULT_MAX_ITER = 200
VERIFY_MAX_ITER = 1000

CONVERGED = 'converged'
NOT_CONVERGED = 'not-converged'


class CrossProductSizeException(ComputeException):
    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = 'iteration %d: %s' % (iteration, message)
        ComputeException.__init__(self, message)
        self.iteration = iteration

class ThresholdBracketException(ComputeException):
    pass


class MessagePair():
    '''Distribution of a message label conditioned on the code bit:
    cond0[y] = Pr(label y | X=0) and cond1[y] = Pr(label y | X=1).
    Structurally the same as a Dmc under a uniform prior.
    '''

    def __init__(self, cond0, cond1, validate=True):
        cond0 = np.array(cond0, dtype=float).reshape(-1)
        cond1 = np.array(cond1, dtype=float).reshape(-1)
        if validate:
            if cond0.shape != cond1.shape or cond0.size == 0:
                raise ValidationException('conditionals must be nonempty and of equal length')
            if np.any(cond0 < 0) or np.any(cond1 < 0):
                raise ValidationException('conditionals must be >= 0')
            for cond in (cond0, cond1):
                if abs(cond.sum() - 1.0) > COLUMN_SUM_TOL:
                    raise ValidationException('conditional sums to %r, expected 1' % cond.sum())
        cond0.setflags(write=False)
        cond1.setflags(write=False)
        self.cond0 = cond0
        self.cond1 = cond1

    @classmethod
    def from_channel(cls, channel):
        return cls(channel.likelihoods[:, 0], channel.likelihoods[:, 1], validate=False)

    @property
    def num_labels(self):
        return self.cond0.size

    def as_dmc(self):
        '''The pair as a channel with the uniform code-bit prior
        '''
        return Dmc(UNIFORM_PRIOR, np.stack((self.cond0, self.cond1), axis=1))

    def mutual_information(self):
        return mutual_information(self.as_dmc())

    def llr(self):
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.log(self.cond0) - np.log(self.cond1)

    def equals(self, other):
        return isinstance(other, MessagePair) and \
            np.array_equal(self.cond0, other.cond0) and np.array_equal(self.cond1, other.cond1)

    def __eq__(self, other):
        return self.equals(other)

    def __hash__(self):
        return hash((self.cond0.tobytes(), self.cond1.tobytes()))

    def __repr__(self):
        return 'MessagePair(labels=%d)' % self.num_labels


class DecodingMap():
    '''A total lookup table from a tuple of input labels to an output label.

    arity gives the radix of every input slot; table is a flat array in
    mixed-radix (lexicographic, first slot most significant) order.
    '''

    def __init__(self, arity, table, num_labels=None):
        self.arity = tuple(int(r) for r in arity)
        table = np.asarray(table, dtype=np.int16).reshape(-1)
        size = int(np.prod(self.arity, dtype=np.int64))
        if table.size != size:
            raise ValidationException('table has %d entries, arity %s needs %d'
                                      % (table.size, self.arity, size))
        if table.size and table.min() < 0:
            raise ValidationException('decoding map is not total')
        table.setflags(write=False)
        self.table = table
        self.num_labels = int(num_labels) if num_labels is not None else int(table.max()) + 1

    @property
    def num_slots(self):
        return len(self.arity)

    def index(self, labels):
        return int(np.ravel_multi_index(tuple(labels), self.arity))

    def lookup(self, labels):
        '''Output label for a single tuple of input labels
        '''
        return int(self.table[self.index(labels)])

    def apply(self, *slots):
        '''Vectorized lookup: one label array per slot, all of equal shape
        '''
        if len(slots) != self.num_slots:
            raise ValidationException('map takes %d slots, got %d' % (self.num_slots, len(slots)))
        return self.table[np.ravel_multi_index(slots, self.arity)]

    def rows(self):
        '''Iterate over (input tuple, output label) in table order
        '''
        for start, batch in MixedRadixIterator(self.arity):
            for offset, row in enumerate(batch):
                yield tuple(int(y) for y in row), int(self.table[start + offset])

    def is_symmetric(self, kind):
        '''Check the 0/1 label involution y -> r-1-y

        kind 'variable': flipping every slot flips the output.
        kind 'check': flipping any single slot flips the output.
        '''
        tuples = np.stack(np.unravel_index(np.arange(self.table.size), self.arity), axis=0)
        radix = np.asarray(self.arity)[:, None]
        flipped_out = self.num_labels - 1 - self.table
        if kind == 'variable':
            flips = [radix - 1 - tuples]
        elif kind == 'check':
            flips = []
            for slot in range(self.num_slots):
                flip = tuples.copy()
                flip[slot] = radix[slot] - 1 - flip[slot]
                flips.append(flip)
        else:
            raise ValidationException('kind must be "check" or "variable", got %r' % kind)
        for flip in flips:
            if not np.array_equal(self.table[np.ravel_multi_index(tuple(flip), self.arity)],
                                  flipped_out):
                return False
        return True

    def equals(self, other):
        return isinstance(other, DecodingMap) and self.arity == other.arity and \
            self.num_labels == other.num_labels and np.array_equal(self.table, other.table)

    def __eq__(self, other):
        return self.equals(other)

    def __hash__(self):
        return hash((self.arity, self.table.tobytes()))

    def __repr__(self):
        return 'DecodingMap(arity=%s, labels=%d)' % (self.arity, self.num_labels)


@dataclass(frozen=True)
class DeConfig:
    '''Density evolution settings

    d_v, d_c node degrees
    levels K, labels per decoder message
    max_iter iterations before declaring non-convergence
    convergence_bits converged once 1 - I(X;R) drops below this
    prebin if set, cross products with more merged outputs than this are
        first finely quantized (uniform cells of P(X=0|y)) to prebin outputs
    record_maps keep the decoding maps in the trace
    cross_product_cap largest cross-product alphabet allowed
    merge_tol equal-ratio merge tolerance
    '''
    d_v: int
    d_c: int
    levels: int
    max_iter: int = DEFAULT_MAX_ITER
    convergence_bits: float = DEFAULT_CONVERGENCE_BITS
    prebin: Optional[int] = None
    record_maps: bool = True
    cross_product_cap: int = DEFAULT_CROSS_PRODUCT_CAP
    merge_tol: float = DEFAULT_MERGE_TOL

    def __post_init__(self):
        if self.d_v < 2 or self.d_c < 2:
            raise ValidationException('degrees must be >= 2, got d_v=%d d_c=%d'
                                      % (self.d_v, self.d_c))
        if self.levels < 2:
            raise ValidationException('K must be >= 2, got %d' % self.levels)
        if self.max_iter < 1:
            raise ValidationException('max_iter must be >= 1')
        if self.prebin is not None and self.prebin < self.levels:
            raise ValidationException('prebin must be >= K')


@dataclass
class IterationRecord:
    '''Everything density evolution produced on one iteration
    '''
    iteration: int
    check_quantizer: Quantizer
    var_quantizer: Quantizer
    check_map: Optional[DecodingMap]
    var_map: Optional[DecodingMap]
    check_dist: MessagePair
    var_dist: MessagePair
    check_mi: float
    mi: float


@dataclass
class DeTrace:
    '''Record of one density evolution run; records[l - 1] is iteration l
    '''
    channel: MessagePair
    config: DeConfig
    records: List[IterationRecord] = field(default_factory=list)
    verdict: str = NOT_CONVERGED

    @property
    def iterations(self):
        return len(self.records)

    @property
    def converged(self):
        return self.verdict == CONVERGED

    def mi_sequence(self):
        return [rec.mi for rec in self.records]

    def record(self, iteration):
        if not 1 <= iteration <= len(self.records):
            raise IndexRangeException('iteration %d not in 1..%d'
                                      % (iteration, len(self.records)))
        return self.records[iteration - 1]

    def decision_error_mass(self, iteration, decision_map):
        '''Probability that decision_map decides wrongly on a code bit, with
        the channel and the check-to-variable messages of the given iteration
        distributed as in the trace and a uniform code bit
        '''
        rec = self.record(iteration)
        cross = _variable_product(self.channel, rec.check_dist, self.config.d_v,
                                  self.config.cross_product_cap)
        bits = decision_map.table
        return 0.5 * float(cross.cond0[bits == 1].sum() + cross.cond1[bits == 0].sum())

    def dump(self, output=None):
        output = output or sys.stdout
        cfg = self.config
        print('density evolution (d_v=%d, d_c=%d, K=%d): %s after %d iterations'
              % (cfg.d_v, cfg.d_c, cfg.levels, self.verdict, self.iterations), file=output)
        for rec in self.records:
            print('[%04d] I(X;L)=%.10f I(X;R)=%.10f labels L=%d R=%d'
                  % (rec.iteration, rec.check_mi, rec.mi,
                     rec.check_dist.num_labels, rec.var_dist.num_labels), file=output)


def _cap_check(size, cap):
    if size > cap:
        raise CrossProductSizeException('cross product has %d labels, cap is %d' % (size, cap))


def check_cross_product(incoming, d_c, cap=DEFAULT_CROSS_PRODUCT_CAP):
    '''Cross-product distribution of the d_c - 1 incoming messages at a check
    node, conditioned on the parity of their code bits

    The even/odd parity masses are built slot by slot from sums of
    nonnegative products, then scaled by (1/2)^(d_c - 2).

    Exceptions:
        CrossProductSizeException if L^(d_c - 1) exceeds cap
    '''
    if d_c < 2:
        raise ValidationException('d_c must be >= 2')
    _cap_check(incoming.num_labels ** (d_c - 1), cap)
    a = incoming.cond0
    b = incoming.cond1
    even = a
    odd = b
    for _ in range(d_c - 2):
        even, odd = (np.multiply.outer(even, a) + np.multiply.outer(odd, b)).reshape(-1), \
            (np.multiply.outer(even, b) + np.multiply.outer(odd, a)).reshape(-1)
    scale = 0.5 ** (d_c - 2)
    return MessagePair(even * scale, odd * scale, validate=False)


def _variable_product(channel, incoming, slots, cap):
    _cap_check(channel.num_labels * incoming.num_labels ** slots, cap)
    cond0 = channel.cond0
    cond1 = channel.cond1
    for _ in range(slots):
        cond0 = np.multiply.outer(cond0, incoming.cond0).reshape(-1)
        cond1 = np.multiply.outer(cond1, incoming.cond1).reshape(-1)
    return MessagePair(cond0, cond1, validate=False)


def variable_cross_product(channel, incoming, d_v, cap=DEFAULT_CROSS_PRODUCT_CAP):
    '''Cross-product distribution of the channel message and d_v - 1
    incoming messages at a variable node, all conditioned on the same code
    bit; the channel slot comes first

    Exceptions:
        CrossProductSizeException if K_ch * L^(d_v - 1) exceeds cap
    '''
    if d_v < 2:
        raise ValidationException('d_v must be >= 2')
    return _variable_product(channel, incoming, d_v - 1, cap)


def _prebin(ordered, groups, prebin):
    '''Merge runs of sorted outputs falling in the same uniform cell of
    P(X=0|y); returns the coarser channel and the composed grouping
    '''
    lik = ordered.likelihoods
    posterior = lik[:, 0] / lik.sum(axis=1)
    cells = np.minimum((posterior * prebin).astype(np.int64), prebin - 1)
    # posterior is nondecreasing along the sorted outputs, so cells are too
    coarse_of_sorted = np.cumsum(np.concatenate(([True], np.diff(cells) != 0))) - 1
    coarse = np.zeros((coarse_of_sorted[-1] + 1, 2))
    np.add.at(coarse, coarse_of_sorted, lik)
    composed = np.where(groups >= 0, coarse_of_sorted[np.maximum(groups, 0)], -1)
    return Dmc(ordered.prior, coarse, validate=False), composed


def reduce(dist, levels, prebin=None, merge_tol=DEFAULT_MERGE_TOL):
    '''Reduce a (cross-product) message distribution to at most levels labels

    The distribution is quantized as a channel with the uniform prior; the
    masses inside every preimage are summed.  Output labels come out in
    increasing reduced likelihood ratio order.

    Returns:
        (reduced MessagePair, Quantizer, label table) where the label table
        gives the output label of every input label.  Inputs of zero
        probability get the label whose likelihood ratio is closest to 1.
    '''
    channel = dist.as_dmc()
    if prebin is not None:
        ordered, groups = sort_and_merge(channel, merge_tol)
        if ordered.num_outputs > prebin:
            coarse, groups = _prebin(ordered, groups, prebin)
            result = quantize(coarse, levels, merge_tol)
            labels = np.where(groups >= 0, result.assignment[np.maximum(groups, 0)], -1)
            return _finish_reduce(channel, result.quantizer, labels)
    result = quantize(channel, levels, merge_tol)
    return _finish_reduce(channel, result.quantizer, result.assignment)


def _finish_reduce(channel, quantizer, labels):
    reduced = np.zeros((int(labels.max()) + 1, 2))
    kept = labels >= 0
    np.add.at(reduced, labels[kept], channel.likelihoods[kept])
    if not np.all(kept):
        with np.errstate(divide='ignore', invalid='ignore'):
            llr = np.abs(np.log(reduced[:, 0]) - np.log(reduced[:, 1]))
        labels = np.where(kept, labels, int(np.nanargmin(llr)))
    return MessagePair(reduced[:, 0], reduced[:, 1], validate=False), quantizer, labels


def run_density_evolution(channel, config):
    '''Run quantized density evolution

    Iteration l: check node cross product of r^(l-1), reduce to l^(l);
    variable node cross product of the channel and l^(l), reduce to r^(l).
    Converged once 1 - I(X;R) < config.convergence_bits.

    Args:
        channel the Dmc the code is used on
        config a DeConfig
    Returns:
        a DeTrace
    Exceptions:
        CrossProductSizeException carrying the iteration index
    '''
    initial = MessagePair.from_channel(channel)
    trace = DeTrace(channel=initial, config=config)
    incoming = initial
    for iteration in range(1, config.max_iter + 1):
        try:
            check_cross = check_cross_product(incoming, config.d_c, config.cross_product_cap)
            check_dist, check_quantizer, check_labels = reduce(check_cross, config.levels,
                                                               config.prebin, config.merge_tol)
            var_cross = variable_cross_product(initial, check_dist, config.d_v,
                                               config.cross_product_cap)
            var_dist, var_quantizer, var_labels = reduce(var_cross, config.levels,
                                                         config.prebin, config.merge_tol)
        except CrossProductSizeException as exc:
            raise CrossProductSizeException(str(exc), iteration) from exc
        check_map = var_map = None
        if config.record_maps:
            # the first check map reads channel labels: over a binary channel it
            # is plain parity, and the erasure output of a 3-level schedule
            # only shows up from the second iteration on
            check_map = DecodingMap((incoming.num_labels,) * (config.d_c - 1), check_labels,
                                    check_dist.num_labels)
            var_map = DecodingMap((initial.num_labels,) +
                                  (check_dist.num_labels,) * (config.d_v - 1),
                                  var_labels, var_dist.num_labels)
        mi = var_dist.mutual_information()
        trace.records.append(IterationRecord(iteration=iteration,
                                             check_quantizer=check_quantizer,
                                             var_quantizer=var_quantizer,
                                             check_map=check_map,
                                             var_map=var_map,
                                             check_dist=check_dist,
                                             var_dist=var_dist,
                                             check_mi=check_dist.mutual_information(),
                                             mi=mi))
        LOG.debug('iteration %d: I(X;L)=%.10f I(X;R)=%.10f labels L=%d R=%d',
                  iteration, trace.records[-1].check_mi, mi,
                  check_dist.num_labels, var_dist.num_labels)
        if 1.0 - mi < config.convergence_bits:
            trace.verdict = CONVERGED
            break
        incoming = var_dist
    LOG.info('density evolution %s after %d iterations (I(X;R)=%.10f)',
             trace.verdict, trace.iterations, trace.records[-1].mi)
    return trace


def hard_decision_map(channel, trace, iteration):
    '''Decision table for the code bit after the given iteration

    Variable node steps with the channel and all d_v check-to-variable
    messages, reduced to K=2; each of the two labels is then replaced by
    the bit it favours.

    Returns:
        a DecodingMap with arity (K_ch, L, .., L) and outputs in {0, 1}
    Exceptions:
        IndexRangeException if the iteration is not in the trace
    '''
    rec = trace.record(iteration)
    config = trace.config
    cross = _variable_product(MessagePair.from_channel(channel), rec.check_dist,
                              config.d_v, config.cross_product_cap)
    reduced, _, labels = reduce(cross, 2, config.prebin, config.merge_tol)
    bits = (reduced.cond0 < reduced.cond1).astype(np.int16)
    arity = (channel.num_outputs,) + (rec.check_dist.num_labels,) * config.d_v
    return DecodingMap(arity, bits[labels], 2)


@dataclass
class Probe:
    param: float
    converged: bool
    iterations: int
    mi: float


@dataclass
class ThresholdResult:
    '''Bisection outcome: threshold is the midpoint of the final bracket
    [lo, hi]; trace is the run at lo, the last converging parameter
    '''
    threshold: float
    lo: float
    hi: float
    trace: DeTrace
    probes: List[Probe] = field(default_factory=list)


def find_threshold(channel_family, config, lo, hi, tol, verify_max_iter=None):
    '''Bisect the channel parameter for the noise threshold

    Args:
        channel_family callable param -> Dmc, worse channels for larger params
        config DeConfig used for every probe (maps are only kept for the
            final run at lo)
        lo a parameter where density evolution converges
        hi a parameter where it does not
        tol stop once hi - lo <= tol
        verify_max_iter iteration limit of the final run at lo, defaults
            to config.max_iter
    Returns:
        a ThresholdResult
    Exceptions:
        ThresholdBracketException if [lo, hi] does not bracket the threshold
    '''
    if not lo < hi or tol <= 0:
        raise ThresholdBracketException('need lo < hi and tol > 0')
    probe_config = replace(config, record_maps=False)
    probes = []

    def converges(param):
        trace = run_density_evolution(channel_family(param), probe_config)
        probes.append(Probe(param, trace.converged, trace.iterations, trace.records[-1].mi))
        LOG.debug('probe %.8g: %s', param, trace.verdict)
        return trace.converged

    if not converges(lo):
        raise ThresholdBracketException('density evolution does not converge at lo=%r' % lo)
    if converges(hi):
        raise ThresholdBracketException('density evolution converges at hi=%r' % hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            lo = mid
        else:
            hi = mid
    if verify_max_iter is not None:
        config = replace(config, max_iter=verify_max_iter)
    trace = run_density_evolution(channel_family(lo), config)
    LOG.info('threshold in [%.8g, %.8g]', lo, hi)
    return ThresholdResult(threshold=0.5 * (lo + hi), lo=lo, hi=hi, trace=trace, probes=probes)

