'''
Optimal quantization of binary-input discrete memoryless channels

quantize() sorts the channel outputs by likelihood ratio and
then finds the best partition into K runs of consecutive outputs with a
dynamic program over the state metric S_k(a), the best partial mutual
information of outputs 1..a quantized to k outputs:

    S_k(a) = max over a' in {k-1, ..., a-1} of S_{k-1}(a') + iota(a' -> a)

A traceback of the stored local decisions h_k(a) yields the boundaries.
The cost is O(K I^2) additions and O(I^2) partial mutual information terms.

Oracles certify the result on small channels: an exhaustive search over
all K^I deterministic assignments, an enumeration of the consecutive
partitions alone, and a random search over stochastic quantizers.

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
import sys
from typing import Optional

import numpy as np

from dmcq.channel import ComputeException
from dmcq.channel import DEFAULT_MERGE_TOL
from dmcq.channel import Dmc
from dmcq.channel import PartialMiTable
from dmcq.channel import ValidationException
from dmcq.channel import mutual_information
from dmcq.channel import sort_and_merge
from dmcq.iterators import ConsecutivePartitionIterator
from dmcq.iterators import SurjectiveAssignmentIterator

# two candidates closer than this (in bits) are co-optimal
TIE_TOL = 1e-12
DEFAULT_ORACLE_CAP = 10 ** 7
DOMINANCE_TOL = 1e-10
STOCHASTIC_BATCH = 4096


class OracleCapException(ComputeException):
    pass


class Quantizer():
    '''A deterministic quantizer from I ordered channel outputs to K outputs,
    given by its boundaries a_1 < ... < a_{K-1}: output k (0-based) collects
    the channel outputs a_k + 1 .. a_{k+1} (1-based, a_0 = 0, a_K = I).
    '''

    def __init__(self, boundaries, num_outputs, num_inputs):
        '''
        Params:
            boundaries strictly increasing integers with 1 <= a_1 and
                a_{K-1} < I
            num_outputs K
            num_inputs I
        Exceptions:
            ValidationException if the boundaries do not describe K nonempty runs
        '''
        boundaries = [int(a) for a in boundaries]
        if num_outputs < 1 or num_inputs < num_outputs:
            raise ValidationException('need 1 <= K <= I, got K=%d I=%d'
                                      % (num_outputs, num_inputs))
        if len(boundaries) != num_outputs - 1:
            raise ValidationException('K=%d needs %d boundaries, got %d'
                                      % (num_outputs, num_outputs - 1, len(boundaries)))
        edges = [0] + boundaries + [num_inputs]
        if any(lo >= hi for lo, hi in zip(edges[:-1], edges[1:])):
            raise ValidationException('boundaries %s are not strictly inside 0..%d'
                                      % (boundaries, num_inputs))
        self.boundaries = tuple(boundaries)
        self.num_outputs = num_outputs
        self.num_inputs = num_inputs

    @classmethod
    def identity(cls, num_inputs):
        return cls(range(1, num_inputs), num_inputs, num_inputs)

    @classmethod
    def from_labels(cls, labels):
        '''Build a quantizer from a per-output label list if the labels form
        consecutive runs 0, 0, .., 1, 1, .., K-1; return None otherwise
        '''
        labels = np.asarray(labels)
        steps = np.diff(labels)
        if labels.size == 0 or labels[0] != 0 or np.any((steps != 0) & (steps != 1)):
            return None
        boundaries = (np.flatnonzero(steps) + 1).tolist()
        return cls(boundaries, int(labels[-1]) + 1, labels.size)

    def labels(self):
        '''Output label of every channel output, as an int array of length I
        '''
        return np.searchsorted(np.asarray(self.boundaries, dtype=np.int64),
                               np.arange(1, self.num_inputs + 1), side='left')

    def preimage(self, k):
        '''1-based channel outputs mapped to output k (0-based)
        '''
        edges = (0,) + self.boundaries + (self.num_inputs,)
        return list(range(edges[k] + 1, edges[k + 1] + 1))

    def matrix(self):
        '''K x I 0/1 matrix Q[k, i]; every column holds exactly one 1
        '''
        mat = np.zeros((self.num_outputs, self.num_inputs), dtype=np.int8)
        mat[self.labels(), np.arange(self.num_inputs)] = 1
        return mat

    def apply(self, channel):
        '''The quantized channel T = Q P for a channel with I outputs
        '''
        if channel.num_outputs != self.num_inputs:
            raise ValidationException('quantizer has %d inputs, channel has %d outputs'
                                      % (self.num_inputs, channel.num_outputs))
        reduced = np.zeros((self.num_outputs, 2))
        np.add.at(reduced, self.labels(), channel.likelihoods)
        return Dmc(channel.prior, reduced, validate=False)

    def equals(self, other):
        return isinstance(other, Quantizer) and self.boundaries == other.boundaries and \
            self.num_outputs == other.num_outputs and self.num_inputs == other.num_inputs

    def __eq__(self, other):
        return self.equals(other)

    def __hash__(self):
        return hash((self.boundaries, self.num_outputs, self.num_inputs))

    def __repr__(self):
        return 'Quantizer(boundaries=%s, K=%d, I=%d)' % (list(self.boundaries),
                                                         self.num_outputs, self.num_inputs)


@dataclass
class DpState:
    '''State metric S_k(a) and local decisions h_k(a) of the dynamic program,
    both (K+1) x (I+1).  Cells outside a in {k, .., k+I-K} hold -inf / -1.
    tie_counts[k, a] is the number of co-optimal a' for that cell.
    '''
    state_metric: np.ndarray
    local_decision: np.ndarray
    tie_counts: np.ndarray


@dataclass
class QuantizeResult:
    '''Result of quantize() or of an oracle.

    quantizer acts on the sorted/merged channel (None for a non-consecutive
    oracle assignment); assignment gives the label of every original output
    (-1 for outputs that were dropped for having zero probability).
    '''
    quantizer: Optional[Quantizer]
    max_mi: float
    permutation: np.ndarray
    ties: int
    assignment: np.ndarray
    sorted_channel: Optional[Dmc] = None
    state: Optional[DpState] = None
    co_optimal: Optional[np.ndarray] = None

    @property
    def num_outputs(self):
        return int(self.assignment.max()) + 1

    def output_boundaries(self):
        '''Boundaries expressed in original (1-based) output indices: for each
        of the first K-1 labels, the last original output carrying it
        '''
        result = []
        for k in range(self.num_outputs - 1):
            result.append(int(np.flatnonzero(self.assignment == k).max()) + 1)
        return result

    def dump(self, output=None):
        output = output or sys.stdout
        print('max mutual information: %.12f bits' % self.max_mi, file=output)
        if self.quantizer is not None:
            print('   K=%d I=%d boundaries=%s' % (self.quantizer.num_outputs,
                                                 self.quantizer.num_inputs,
                                                 list(self.quantizer.boundaries)),
                  file=output)
        print('   assignment: %s' % self.assignment.tolist(), file=output)
        print('   co-optimal tie count: %d' % self.ties, file=output)


def _labels_from_groups(quantizer, groups):
    labels = quantizer.labels()
    return np.where(groups >= 0, labels[np.maximum(groups, 0)], -1)


def quantize(channel, num_levels, merge_tol=DEFAULT_MERGE_TOL):
    '''Find the quantizer to num_levels outputs maximizing I(X;Z)

    The channel is first sorted and merged (sort_and_merge).  If fewer than
    num_levels merged outputs remain, the identity quantizer on them is
    returned.  Ties pick the smallest a' at every step.

    Args:
        channel a Dmc
        num_levels K >= 1
        merge_tol tolerance passed to sort_and_merge
    Returns:
        a QuantizeResult; max_mi is S_K(I)
    Exceptions:
        ValidationException if K < 1
    '''
    if num_levels < 1:
        raise ValidationException('K must be >= 1, got %d' % num_levels)
    ordered, groups = sort_and_merge(channel, merge_tol)
    num_in = ordered.num_outputs
    if num_in <= num_levels:
        quantizer = Quantizer.identity(num_in)
        return QuantizeResult(quantizer=quantizer,
                              max_mi=mutual_information(ordered),
                              permutation=groups,
                              ties=0,
                              assignment=_labels_from_groups(quantizer, groups),
                              sorted_channel=ordered)

    table = PartialMiTable(ordered, num_levels)
    state = _run_dp(table)
    boundaries = [0] * (num_levels - 1)
    ties = 0
    a_next = num_in
    for k in range(num_levels, 1, -1):
        ties += int(state.tie_counts[k, a_next]) - 1
        a_next = int(state.local_decision[k, a_next])
        boundaries[k - 2] = a_next
    quantizer = Quantizer(boundaries, num_levels, num_in)
    return QuantizeResult(quantizer=quantizer,
                          max_mi=float(state.state_metric[num_levels, num_in]),
                          permutation=groups,
                          ties=ties,
                          assignment=_labels_from_groups(quantizer, groups),
                          sorted_channel=ordered,
                          state=state)


def _run_dp(table):
    '''Fill S_k(a) and h_k(a) column by column: S_k(a) only depends on
    S_{k-1}(a') with a' < a, so looping over a outermost needs each
    iota column once and updates every k in a single numpy step.
    '''
    num_in = table.num_inputs
    num_levels = table.num_levels
    slack = num_in - num_levels
    metric = np.full((num_levels + 1, num_in + 1), -np.inf)
    metric[0, 0] = 0.0
    decision = np.full((num_levels + 1, num_in + 1), -1, dtype=np.int64)
    tie_counts = np.zeros((num_levels + 1, num_in + 1), dtype=np.int64)
    for a in range(1, num_in + 1):
        col = table.column(a)
        col = np.where(np.isnan(col), -np.inf, col)
        ks = np.arange(max(1, a - slack), min(num_levels, a) + 1)
        candidates = metric[ks - 1, :a] + col
        # smallest a' within TIE_TOL of the row maximum; a plain argmax lets
        # rounding noise in the partial MI table break exact ties
        top = candidates.max(axis=1)
        near = candidates >= (top - TIE_TOL)[:, None]
        best = np.argmax(near, axis=1)
        metric[ks, a] = candidates[np.arange(ks.size), best]
        decision[ks, a] = best
        tie_counts[ks, a] = near.sum(axis=1)
    return DpState(state_metric=metric, local_decision=decision, tie_counts=tie_counts)


def apply_quantizer(channel, result):
    '''The quantized channel obtained by summing the masses of the original
    channel outputs inside every preimage of a QuantizeResult
    '''
    assignment = result.assignment
    if assignment.size != channel.num_outputs:
        raise ValidationException('result covers %d outputs, channel has %d'
                                  % (assignment.size, channel.num_outputs))
    reduced = np.zeros((result.num_outputs, 2))
    kept = assignment >= 0
    np.add.at(reduced, assignment[kept], channel.likelihoods[kept])
    return Dmc(channel.prior, reduced, validate=False)


def batch_mutual_information(reduced, prior):
    '''Mutual information of many quantized channels at once

    Args:
        reduced array (..., K, 2) of likelihoods T[k | j]
        prior pair (p1, p2)
    Returns:
        array (...) of mutual information values in bits
    '''
    prior = np.asarray(prior, dtype=float)
    joint = reduced * prior
    out = joint.sum(axis=-1, keepdims=True)
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = joint * (np.log2(reduced) - np.log2(out))
    terms = np.where(joint > 0, terms, 0.0)
    return np.maximum(terms.sum(axis=(-1, -2)), 0.0)


def brute_force_oracle(channel, num_levels, cap=DEFAULT_ORACLE_CAP):
    '''Exhaustive search over every surjective deterministic assignment of
    the I channel outputs (in their given order) to num_levels labels

    Returns:
        a QuantizeResult whose assignment is the first optimal assignment in
        lexicographic order; quantizer is set only if that assignment is
        consecutive; co_optimal holds every assignment within TIE_TOL of the
        optimum
    Exceptions:
        OracleCapException if K^I exceeds cap (reduce I or K)
        ValidationException if K is not in 1..I
    '''
    num_in = channel.num_outputs
    if not 1 <= num_levels <= num_in:
        raise ValidationException('need 1 <= K <= I, got K=%d I=%d' % (num_levels, num_in))
    if num_levels ** num_in > cap:
        raise OracleCapException('K^I = %d^%d exceeds the cap %d, reduce I or K'
                                 % (num_levels, num_in, cap))
    likelihoods = channel.likelihoods
    best_mi = -np.inf
    best = []
    for _, rows in SurjectiveAssignmentIterator(num_in, num_levels):
        if rows.shape[0] == 0:
            continue
        reduced = np.zeros((rows.shape[0], num_levels, 2))
        batch = np.arange(rows.shape[0])
        for i in range(num_in):
            reduced[batch, rows[:, i]] += likelihoods[i]
        mi = batch_mutual_information(reduced, channel.prior)
        top = mi.max()
        if top > best_mi + TIE_TOL:
            best_mi = top
            best = [rows[mi >= best_mi - TIE_TOL]]
        elif top >= best_mi - TIE_TOL:
            best.append(rows[mi >= best_mi - TIE_TOL])
    co_optimal = np.concatenate(best)
    assignment = co_optimal[0]
    return QuantizeResult(quantizer=Quantizer.from_labels(assignment),
                          max_mi=float(best_mi),
                          permutation=np.arange(num_in),
                          ties=co_optimal.shape[0] - 1,
                          assignment=assignment,
                          co_optimal=co_optimal)


def consecutive_search(channel, num_levels, merge_tol=DEFAULT_MERGE_TOL):
    '''Try every quantizer with K consecutive runs over the sorted, merged
    channel; C(I-1, K-1) candidates instead of K^I

    Returns:
        a QuantizeResult for the first best partition in lexicographic
        boundary order
    Exceptions:
        ValidationException if K is not in 1..I' (merged outputs)
    '''
    ordered, groups = sort_and_merge(channel, merge_tol)
    if not 1 <= num_levels <= ordered.num_outputs:
        raise ValidationException('need 1 <= K <= I, got K=%d I=%d'
                                  % (num_levels, ordered.num_outputs))
    best_mi = -np.inf
    best = None
    ties = 0
    for boundaries in ConsecutivePartitionIterator(ordered.num_outputs, num_levels):
        quantizer = Quantizer(boundaries, num_levels, ordered.num_outputs)
        mi = mutual_information(quantizer.apply(ordered))
        if mi > best_mi + TIE_TOL:
            best_mi, best, ties = mi, quantizer, 0
        elif mi >= best_mi - TIE_TOL:
            ties += 1
    return QuantizeResult(quantizer=best,
                          max_mi=float(best_mi),
                          permutation=groups,
                          ties=ties,
                          assignment=_labels_from_groups(best, groups),
                          sorted_channel=ordered)


@dataclass
class DominanceReport:
    '''Outcome of stochastic_dominance_check
    '''
    optimum: float
    max_observed: float
    max_gap: float
    trials: int

    @property
    def dominated(self):
        '''True if no stochastic quantizer beat the optimum by more than
        DOMINANCE_TOL
        '''
        return self.max_gap <= DOMINANCE_TOL


def random_stochastic_quantizers(num_inputs, num_levels, count, rng):
    '''count random K x I stochastic matrices, every column drawn uniformly
    from the simplex; returned as an array (count, I, K)
    '''
    return rng.dirichlet(np.ones(num_levels), size=(count, num_inputs))


def stochastic_dominance_check(channel, num_levels, trials, rng=None):
    '''Compare the deterministic optimum against random stochastic quantizers

    Args:
        channel a Dmc
        num_levels K
        trials how many stochastic K x I quantizers to sample
        rng a numpy Generator (seeded with 0 if None)
    Returns:
        a DominanceReport; max_gap is the largest I(X;Z) seen minus the
        optimum (<= DOMINANCE_TOL if the optimum is deterministic)
    '''
    rng = rng if rng is not None else np.random.default_rng(0)
    optimum = quantize(channel, num_levels).max_mi
    max_observed = -np.inf
    done = 0
    while done < trials:
        count = min(STOCHASTIC_BATCH, trials - done)
        stochastic = random_stochastic_quantizers(channel.num_outputs, num_levels, count, rng)
        reduced = np.einsum('tik,ij->tkj', stochastic, channel.likelihoods)
        max_observed = max(max_observed, float(batch_mutual_information(reduced,
                                                                        channel.prior).max()))
        done += count
    return DominanceReport(optimum=optimum,
                           max_observed=max_observed,
                           max_gap=max_observed - optimum,
                           trials=trials)


def random_consecutive_partitions(num_inputs, num_levels, count, rng):
    '''count random quantizers with K nonempty consecutive runs over I outputs
    '''
    result = []
    for _ in range(count):
        boundaries = np.sort(rng.choice(np.arange(1, num_inputs), num_levels - 1,
                                        replace=False))
        result.append(Quantizer(boundaries.tolist(), num_levels, num_inputs))
    return result


@dataclass
class OracleComparison:
    '''quantize() against brute_force_oracle() on one channel

    consecutive is True when some oracle-optimal assignment, read in
    increasing likelihood ratio order, is a run of consecutive outputs per
    label.
    '''
    dp_mi: float
    oracle_mi: float
    consecutive: bool

    @property
    def gap(self):
        return abs(self.dp_mi - self.oracle_mi)

    @property
    def match(self):
        return self.gap <= DOMINANCE_TOL and self.consecutive


def compare_with_oracle(channel, num_levels, cap=DEFAULT_ORACLE_CAP):
    dp = quantize(channel, num_levels)
    oracle = brute_force_oracle(channel, num_levels, cap)
    llr = channel.llr()
    keep = np.flatnonzero(~np.isnan(llr))
    order = keep[np.argsort(llr[keep], kind='stable')]
    runs = np.count_nonzero(np.diff(oracle.co_optimal[:, order], axis=1), axis=1)
    used = np.array([np.unique(row[order]).size for row in oracle.co_optimal])
    return OracleComparison(dp_mi=dp.max_mi, oracle_mi=oracle.max_mi,
                            consecutive=bool(np.any(runs == used - 1)))
