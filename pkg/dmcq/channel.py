'''
Binary-input discrete memoryless channels

A channel is an input prior (p1, p2) plus an I x 2 table of likelihoods
P(Y=i | X=j).  This module holds the channel object, mutual information,
sorting/merging of outputs by likelihood ratio and the partial mutual
information terms that the quantizer dynamic program is built from.

All information quantities are in bits.

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

# absolute tolerance on the column sums of the likelihood table
COLUMN_SUM_TOL = 1e-9
PRIOR_SUM_TOL = 1e-12
# relative difference of two likelihood ratios under which outputs merge
DEFAULT_MERGE_TOL = 1e-9

UNIFORM_PRIOR = (0.5, 0.5)


class DmcqException(Exception):
    pass

class ValidationException(DmcqException, ValueError):
    pass

class ComputeException(DmcqException, RuntimeError):
    pass

class ChannelValidationException(ValidationException):
    pass

class IndexRangeException(ValidationException, IndexError):
    pass


def _xlogx_ratio(mass, num, den):
    '''sum of mass * log2(num / den) with 0 log 0 := 0
    '''
    mass = np.asarray(mass, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = mass * (np.log2(num) - np.log2(den))
    return np.where(mass > 0, terms, 0.0)


class Dmc():
    '''A binary-input discrete memoryless channel.

    Instances are immutable: the numpy arrays are flagged read-only so a
    channel can be shared freely between threads and processes.
    '''

    def __init__(self, prior, likelihoods, validate=True):
        '''Create a channel

        Params:
            prior pair (p1, p2), each in [0, 1] and summing to 1
            likelihoods sequence of I rows (P(i|1), P(i|2)); each of the two
                columns must sum to 1 within COLUMN_SUM_TOL and is then
                renormalized
            validate skip all checks when False (internal use on arrays that
                are already known to be valid)
        Exceptions:
            ChannelValidationException if any of the invariants does not hold
        '''
        prior = np.array(prior, dtype=float).reshape(-1)
        likelihoods = np.array(likelihoods, dtype=float)
        if validate:
            if prior.shape != (2,):
                raise ChannelValidationException('prior must have 2 entries, got %d'
                                                 % prior.size)
            if np.any(prior < 0) or np.any(prior > 1) or \
               abs(prior.sum() - 1.0) > PRIOR_SUM_TOL:
                raise ChannelValidationException('invalid prior %s' % prior.tolist())
            if likelihoods.ndim != 2 or likelihoods.shape[1] != 2 or \
               likelihoods.shape[0] < 1:
                raise ChannelValidationException('likelihoods must be an I x 2 table, got shape %s'
                                                 % (likelihoods.shape,))
            if not np.all(np.isfinite(likelihoods)) or np.any(likelihoods < 0):
                raise ChannelValidationException('likelihoods must be finite and >= 0')
            sums = likelihoods.sum(axis=0)
            if np.any(np.abs(sums - 1.0) > COLUMN_SUM_TOL):
                raise ChannelValidationException('likelihood columns sum to %s, expected 1'
                                                 % sums.tolist())
            likelihoods = likelihoods / sums
        prior.setflags(write=False)
        likelihoods.setflags(write=False)
        self.prior = prior
        self.likelihoods = likelihoods

    @property
    def num_outputs(self):
        return self.likelihoods.shape[0]

    def joint(self):
        '''Joint masses p_j P(i|j) as an I x 2 array
        '''
        return self.likelihoods * self.prior

    def llr(self):
        '''Natural log of P(i|1) / P(i|2) for every output, +/-inf when one
        of the likelihoods is 0 and nan when both are
        '''
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.log(self.likelihoods[:, 0]) - np.log(self.likelihoods[:, 1])

    def with_prior(self, prior):
        return Dmc(prior, self.likelihoods)

    def is_symmetric(self, tol=1e-12):
        '''True if relabeling output i as I-1-i swaps the two inputs
        '''
        return bool(np.allclose(self.likelihoods[:, 0], self.likelihoods[::-1, 1],
                                rtol=0, atol=tol))

    def equals(self, other):
        if not isinstance(other, Dmc):
            return False
        return np.array_equal(self.prior, other.prior) and \
            np.array_equal(self.likelihoods, other.likelihoods)

    def __eq__(self, other):
        return self.equals(other)

    def __hash__(self):
        return hash((self.prior.tobytes(), self.likelihoods.tobytes()))

    def __repr__(self):
        return 'Dmc(prior=%s, I=%d)' % (self.prior.tolist(), self.num_outputs)


def mutual_information(channel):
    '''Mutual information I(X;Y) of a channel, in bits

    Args:
        channel a Dmc
    Returns:
        the mutual information, 0 <= result <= H(prior)
    '''
    joint = channel.joint()
    out = joint.sum(axis=1)
    total = 0.0
    for j in range(2):
        total += _xlogx_ratio(joint[:, j], channel.likelihoods[:, j], out).sum()
    return max(float(total), 0.0)


def binary_entropy(p):
    '''h(p) in bits
    '''
    if p <= 0 or p >= 1:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def sort_and_merge(channel, merge_tol=DEFAULT_MERGE_TOL):
    '''Sort the channel outputs by likelihood ratio and combine outputs with
    equal ratios.

    Outputs where both likelihoods are 0 are dropped.  Outputs with
    P(i|2) = 0 sort last (ratio +inf), outputs with P(i|1) = 0 sort first.
    Outputs are combined when their ratio is within merge_tol (relative)
    of the ratio of the first output of the group, which leaves the mutual
    information unchanged up to that tolerance.

    Args:
        channel a Dmc
        merge_tol relative ratio difference that triggers a merge
    Returns:
        (sorted channel, groups) where groups[i] is the output index in the
        sorted channel that original output i went to, or -1 if it was dropped
    '''
    likelihoods = channel.likelihoods
    num_in = likelihoods.shape[0]
    groups = np.full(num_in, -1, dtype=np.int64)
    keep = np.flatnonzero(likelihoods.sum(axis=1) > 0)
    if keep.size == 0:
        raise ChannelValidationException('channel has no output with nonzero probability')
    llr = channel.llr()[keep]
    order = keep[np.argsort(llr, kind='stable')]
    llr = channel.llr()[order]
    # a new group starts wherever the ratio changes by more than merge_tol
    with np.errstate(invalid='ignore'):
        step = np.diff(llr)
        same = (step <= np.log1p(merge_tol)) | (llr[1:] == llr[:-1])
    new_group = np.concatenate(([True], ~same))
    # every member of a group stays within merge_tol of the group's first
    # output, so a chain of small steps cannot drift into one wide group
    thr = np.log1p(merge_tol)
    start = np.flatnonzero(new_group)
    end = np.append(start[1:], llr.size)
    with np.errstate(invalid='ignore'):
        wide = llr[end - 1] - llr[start] > thr
    for lo, hi in zip(start[wide], end[wide]):
        segment = llr[lo:hi]
        pos = np.searchsorted(segment, segment[0] + thr, side='right')
        while pos < segment.size:
            new_group[lo + pos] = True
            pos = np.searchsorted(segment, segment[pos] + thr, side='right')
    group_of_sorted = np.cumsum(new_group) - 1
    groups[order] = group_of_sorted
    merged = np.zeros((group_of_sorted[-1] + 1, 2))
    np.add.at(merged, group_of_sorted, likelihoods[order])
    return Dmc(channel.prior, merged, validate=False), groups


def is_sorted(channel):
    '''True if outputs are in strictly increasing likelihood ratio order
    '''
    llr = channel.llr()
    if np.any(np.isnan(llr)):
        return False
    return bool(np.all(np.diff(llr) > 0))


def partial_mi(channel, a_prime, a):
    '''Partial mutual information of outputs a_prime+1 .. a (1-based) grouped
    into one quantizer output

    Args:
        channel a Dmc
        a_prime, a boundaries with 0 <= a_prime < a <= I
    Returns:
        the partial mutual information in bits (>= 0)
    Exceptions:
        IndexRangeException if the boundaries are out of range
    '''
    num_in = channel.num_outputs
    if not 0 <= a_prime < a <= num_in:
        raise IndexRangeException('need 0 <= a_prime < a <= %d, got (%d, %d)'
                                  % (num_in, a_prime, a))
    mass = channel.likelihoods[a_prime:a].sum(axis=0)
    out = float(np.dot(channel.prior, mass))
    value = 0.0
    for j in range(2):
        value += float(_xlogx_ratio(channel.prior[j] * mass[j], mass[j], out))
    return max(value, 0.0)


class PartialMiTable():
    '''Table of partial mutual information values iota(a' -> a).

    Columns are evaluated with a running sum from a towards smaller a', so the
    whole table costs O(I^2) and no mass is ever obtained by subtracting two
    cumulative sums.  Only the band a - a' <= I - K + 1 is ever needed when
    quantizing to K outputs.
    '''

    def __init__(self, channel, num_levels):
        '''
        Params:
            channel the (sorted) channel
            num_levels K, the number of quantizer outputs
        Exceptions:
            ValidationException if K is not in 1..I
        '''
        num_in = channel.num_outputs
        if num_levels < 1 or num_levels > num_in:
            raise ValidationException('K must be in 1..%d, got %d' % (num_in, num_levels))
        self.channel = channel
        self.num_inputs = num_in
        self.num_levels = num_levels
        self.width = num_in - num_levels + 1
        # values[a', w - 1] = iota(a' -> a' + w), nan outside the table
        self.values = None

    def lowest(self, a):
        '''Smallest a' with a populated entry iota(a' -> a)
        '''
        return max(0, a - self.width)

    def column(self, a):
        '''iota(a' -> a) for every a' in 0..a-1 (nan where a - a' > width)
        '''
        if not 1 <= a <= self.num_inputs:
            raise IndexRangeException('a must be in 1..%d' % self.num_inputs)
        col = np.full(a, np.nan)
        low = self.lowest(a)
        # running sums of outputs a'+1..a for a' = a-1 down to low
        mass = np.cumsum(self.channel.likelihoods[low:a][::-1], axis=0)[::-1]
        prior = self.channel.prior
        out = mass @ prior
        value = _xlogx_ratio(prior[0] * mass[:, 0], mass[:, 0], out) + \
            _xlogx_ratio(prior[1] * mass[:, 1], mass[:, 1], out)
        col[low:] = np.maximum(value, 0.0)
        return col

    def materialize(self):
        '''Fill the band of values for all a' in 0..I-1 and
        a in a'+1 .. min(a'+1+I-K, I)
        '''
        if self.values is None:
            values = np.full((self.num_inputs, self.width), np.nan)
            for a in range(1, self.num_inputs + 1):
                col = self.column(a)
                low = self.lowest(a)
                a_primes = np.arange(low, a)
                values[a_primes, a - a_primes - 1] = col[low:]
            values.setflags(write=False)
            self.values = values
        return self

    def get(self, a_prime, a):
        '''Value of iota(a_prime -> a) from the materialized table
        '''
        width = a - a_prime
        if not 0 <= a_prime < a <= self.num_inputs or width > self.width:
            raise IndexRangeException('(%d, %d) is outside the table' % (a_prime, a))
        self.materialize()
        return float(self.values[a_prime, width - 1])

    def entries(self):
        '''Iterate over (a', a, iota) for every populated cell
        '''
        self.materialize()
        for a_prime in range(self.num_inputs):
            for width in range(1, self.width + 1):
                a = a_prime + width
                if a > self.num_inputs:
                    break
                yield a_prime, a, float(self.values[a_prime, width - 1])


def precompute_partial_mi(channel, num_levels):
    '''Precompute the partial mutual information table for quantizing a
    sorted channel to num_levels outputs

    Returns:
        a materialized PartialMiTable
    Exceptions:
        ValidationException if num_levels > I
    '''
    return PartialMiTable(channel, num_levels).materialize()


def pmi_function(c, b, c_total, b_total, prior):
    '''Partial mutual information of splitting the masses (C, B) into
    (c, b) and (C - c, B - b), in bits

    c and b are joint masses (p1 P(i|1) and p2 P(i|2) summed over a group).

    Args:
        c, b masses of the first part, 0 <= c <= C and 0 <= b <= B
        c_total, b_total C and B, both in (0, 1]
        prior the pair (p1, p2)
    Exceptions:
        ValidationException on any domain violation
    '''
    p1, p2 = prior
    if not (0 < c_total <= 1 and 0 < b_total <= 1):
        raise ValidationException('need 0 < C <= 1 and 0 < B <= 1')
    if not (0 <= c <= c_total and 0 <= b <= b_total):
        raise ValidationException('(c, b) = (%g, %g) outside [0, C] x [0, B]' % (c, b))
    if not (0 < p1 < 1 and 0 < p2 < 1):
        raise ValidationException('prior entries must be in (0, 1)')
    value = 0.0
    for cc, bb in ((c, b), (c_total - c, b_total - b)):
        both = cc + bb
        if cc > 0:
            value += cc * np.log2(cc / p1 / both)
        if bb > 0:
            value += bb * np.log2(bb / p2 / both)
    return float(value)
