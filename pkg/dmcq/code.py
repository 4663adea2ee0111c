'''
Finite-length LDPC codes

A ParityCheckCode holds the variable/check adjacency of a sparse
parity-check matrix H.  Codes come from alist text (the usual interchange
format for sparse H) or from Gallager's random construction of a regular
(d_v, d_c) code built on pyldpc.  An encoder from pyldpc's systematic
generator produces random codewords for channels where the all-zeros codeword
is not representative.

alist layout (indices 1-based, rows padded with 0 up to the max degree):

    n m
    max_column_degree max_row_degree
    column degrees (n values)
    row degrees (m values)
    n lines: the checks of every variable
    m lines: the variables of every check

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
import logging

import numpy as np
import pyldpc
from scipy import sparse

from dmcq.channel import ComputeException
from dmcq.channel import ValidationException

LOG = logging.getLogger(__name__)

GIRTH_ATTEMPTS = 100


class AlistParseException(ValidationException):
    def __init__(self, message, line=None):
        if line is not None:
            message = 'line %d: %s' % (line, message)
        ValidationException.__init__(self, message)
        self.line = line


class ParityCheckCode():
    '''Sparse parity-check code with n variables and m checks

    var_adj[v] lists the checks of variable v and check_adj[c] the variables
    of check c, both 0-based and sorted.
    '''

    def __init__(self, n, m, var_adj, check_adj):
        self.n = int(n)
        self.m = int(m)
        self.var_adj = tuple(tuple(sorted(int(c) for c in row)) for row in var_adj)
        self.check_adj = tuple(tuple(sorted(int(v) for v in row)) for row in check_adj)
        if len(self.var_adj) != self.n or len(self.check_adj) != self.m:
            raise ValidationException('adjacency sizes do not match n=%d m=%d' % (n, m))
        from_vars = {(v, c) for v, row in enumerate(self.var_adj) for c in row}
        from_checks = {(v, c) for c, row in enumerate(self.check_adj) for v in row}
        if from_vars != from_checks:
            raise ValidationException('variable and check edge lists disagree')
        if len(from_vars) != sum(len(row) for row in self.var_adj) or \
                len(from_checks) != sum(len(row) for row in self.check_adj):
            raise ValidationException('repeated edge in adjacency')
        if any(not 0 <= c < self.m for _, c in from_vars) or \
                any(not 0 <= v < self.n for v, _ in from_vars):
            raise ValidationException('edge index out of range')
        self._encoder = None

    @classmethod
    def from_checks(cls, n, checks):
        '''Build from the variable lists of every check
        '''
        var_adj = [[] for _ in range(n)]
        for c, row in enumerate(checks):
            for v in row:
                if not 0 <= v < n:
                    raise ValidationException('variable %d out of range 0..%d' % (v, n - 1))
                var_adj[v].append(c)
        return cls(n, len(checks), var_adj, checks)

    @property
    def num_edges(self):
        return sum(len(row) for row in self.var_adj)

    @property
    def degrees(self):
        '''(d_v, d_c) for a regular code, None otherwise
        '''
        var_deg = {len(row) for row in self.var_adj}
        check_deg = {len(row) for row in self.check_adj}
        if len(var_deg) == 1 and len(check_deg) == 1:
            return var_deg.pop(), check_deg.pop()
        return None

    def matrix(self):
        '''H as a scipy CSR matrix of 0/1 int8 entries, m x n
        '''
        rows = [c for c, row in enumerate(self.check_adj) for _ in row]
        cols = [v for row in self.check_adj for v in row]
        return sparse.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                                 shape=(self.m, self.n))

    def check_vars(self):
        '''(m, d_c) array of the variables of every check; regular codes only.
        Edge e = c * d_c + t is the t-th edge of check c.
        '''
        self._require_regular()
        return np.array(self.check_adj, dtype=np.int64).reshape(self.m, -1)

    def var_edges(self):
        '''(n, d_v) array of the edge indices of every variable, in check order
        '''
        d_v, _ = self._require_regular()
        flat = self.check_vars().reshape(-1)
        return np.argsort(flat, kind='stable').reshape(self.n, d_v)

    def _require_regular(self):
        degrees = self.degrees
        if degrees is None:
            raise ValidationException('code is not regular')
        return degrees

    def syndrome(self, words):
        '''H w mod 2 for one word (n,) or a batch (frames, n)
        '''
        words = np.asarray(words, dtype=np.int64)
        return np.asarray(self.matrix().astype(np.int64).dot(words.T).T % 2, dtype=np.int8)

    def is_codeword(self, word):
        return not np.any(self.syndrome(word))

    def encoder(self):
        if self._encoder is None:
            self._encoder = LdpcEncoder(self)
        return self._encoder

    def encode(self, bits):
        return self.encoder().encode(bits)

    def equals(self, other):
        return isinstance(other, ParityCheckCode) and self.n == other.n and \
            self.m == other.m and self.check_adj == other.check_adj

    def __eq__(self, other):
        return self.equals(other)

    def __hash__(self):
        return hash((self.n, self.m, self.check_adj))

    def __repr__(self):
        return 'ParityCheckCode(n=%d, m=%d, degrees=%s)' % (self.n, self.m, self.degrees)


def _dense(mat):
    return mat.toarray() if sparse.issparse(mat) else np.asarray(mat)


def _column_order(permuted, original):
    '''For every column of permuted, the index of an equal column of
    original; equal columns are used once each
    '''
    pool = {}
    for j, col in enumerate(original.T):
        pool.setdefault(col.tobytes(), []).append(j)
    order = []
    for col in permuted.T:
        candidates = pool.get(col.tobytes())
        if not candidates:
            raise ComputeException('permuted parity-check matrix does not match H')
        order.append(candidates.pop(0))
    return np.asarray(order, dtype=np.int64)


class LdpcEncoder():
    '''Systematic-by-position encoder from pyldpc's systematic generator.

    pyldpc returns the generator for a column permutation of H; the
    permutation is recovered by matching columns so that codewords satisfy
    the code's own H.  The information bits sit at positions info.
    '''

    def __init__(self, code):
        h_mat = _dense(code.matrix()).astype(int)
        h_permuted, g_transposed = pyldpc.coding_matrix_systematic(h_mat)
        h_permuted = _dense(h_permuted).astype(int) % 2
        self.n = code.n
        self.generator = _dense(g_transposed).astype(np.int64) % 2
        self.columns = _column_order(h_permuted, h_mat)
        self.info = self.columns[:self.dimension]

    @property
    def dimension(self):
        return self.generator.shape[1]

    def encode(self, bits):
        '''Codewords for info bits of shape (k,) or (frames, k)
        '''
        bits = np.asarray(bits, dtype=np.int64)
        if bits.shape[-1] != self.dimension:
            raise ValidationException('encoder takes %d info bits, got %d'
                                      % (self.dimension, bits.shape[-1]))
        words = np.zeros(bits.shape[:-1] + (self.n,), dtype=np.int8)
        words[..., self.columns] = (bits @ self.generator.T) % 2
        return words


def _tokens(text):
    for number, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if fields:
            yield number, fields


def _ints(number, fields):
    try:
        return [int(f) for f in fields]
    except ValueError:
        raise AlistParseException('non-integer field in %r' % ' '.join(fields), number) \
            from None


def parse_alist(text):
    '''Parse alist text into a ParityCheckCode

    The trailing check section may be omitted; when present it must agree
    with the variable section.

    Exceptions:
        AlistParseException naming the offending line
    '''
    lines = list(_tokens(text))
    if len(lines) < 4:
        raise AlistParseException('alist needs at least 4 header lines')
    header = [(number, _ints(number, fields)) for number, fields in lines[:4]]
    (ln, sizes), (lmax, maxima), (lcol, col_deg), (lrow, row_deg) = header
    if len(sizes) != 2 or min(sizes) < 1:
        raise AlistParseException('expected "n m"', ln)
    n, m = sizes
    if len(maxima) != 2:
        raise AlistParseException('expected "max_column_degree max_row_degree"', lmax)
    if len(col_deg) != n:
        raise AlistParseException('expected %d column degrees, got %d' % (n, len(col_deg)), lcol)
    if len(row_deg) != m:
        raise AlistParseException('expected %d row degrees, got %d' % (m, len(row_deg)), lrow)
    if max(col_deg) != maxima[0] or max(row_deg) != maxima[1]:
        raise AlistParseException('maximum degrees do not match the degree lists', lmax)
    if sum(col_deg) != sum(row_deg):
        raise AlistParseException('column and row degree sums differ', lrow)
    body = lines[4:]
    if len(body) not in (n, n + m):
        last = body[-1][0] if body else lrow
        raise AlistParseException('expected %d or %d adjacency lines, got %d'
                                  % (n, n + m, len(body)), last)

    def section(entries, degrees, bound, what):
        adj = []
        for (number, fields), degree in zip(entries, degrees):
            values = _ints(number, fields)
            used = [x for x in values if x != 0]
            if len(used) != degree or any(x != 0 for x in values[degree:]):
                raise AlistParseException('%s row has %d entries, degree is %d'
                                          % (what, len(used), degree), number)
            if any(not 1 <= x <= bound for x in used):
                raise AlistParseException('%s index out of range 1..%d' % (what, bound), number)
            if len(set(used)) != len(used):
                raise AlistParseException('repeated index in %s row' % what, number)
            adj.append([x - 1 for x in used])
        return adj

    var_adj = section(body[:n], col_deg, m, 'variable')
    check_adj = [[] for _ in range(m)]
    for v, row in enumerate(var_adj):
        for c in row:
            check_adj[c].append(v)
    if len(body) == n + m:
        listed = section(body[n:], row_deg, n, 'check')
        for c, row in enumerate(listed):
            if sorted(row) != sorted(check_adj[c]):
                raise AlistParseException('check row disagrees with variable rows',
                                          body[n + c][0])
    else:
        for c, row in enumerate(check_adj):
            if len(row) != row_deg[c]:
                raise AlistParseException('check %d has degree %d, header says %d'
                                          % (c + 1, len(row), row_deg[c]), lrow)
    return ParityCheckCode(n, m, var_adj, check_adj)


def emit_alist(code):
    '''alist text for a code, zero-padded rows, trailing newline
    '''
    col_deg = [len(row) for row in code.var_adj]
    row_deg = [len(row) for row in code.check_adj]
    max_col = max(col_deg)
    max_row = max(row_deg)
    out = ['%d %d' % (code.n, code.m),
           '%d %d' % (max_col, max_row),
           ' '.join(str(d) for d in col_deg),
           ' '.join(str(d) for d in row_deg)]
    for row in code.var_adj:
        out.append(' '.join(str(c + 1) for c in row) + ' 0' * (max_col - len(row)))
    for row in code.check_adj:
        out.append(' '.join(str(v + 1) for v in row) + ' 0' * (max_row - len(row)))
    return '\n'.join(out) + '\n'


def _conflicts(slots, n, m, d_c):
    '''Positions in the band layout that take part in a repeated variable
    within a check or in a 4-cycle (two checks sharing two variables)
    '''
    checks = slots.reshape(m, d_c)
    rows = np.repeat(np.arange(m), d_c)
    incidence = sparse.csr_matrix((np.ones(rows.size, dtype=np.int32), (rows, slots)),
                                  shape=(m, n))
    bad = set()
    duplicates = incidence.multiply(incidence > 1).tocoo()
    for c, v in zip(duplicates.row, duplicates.col):
        bad.update(int(c * d_c + t) for t in np.flatnonzero(checks[c] == v))
    binary = (incidence > 0).astype(np.int32)
    overlap = sparse.triu(binary @ binary.T, k=1).tocoo()
    for c1, c2, shared in zip(overlap.row, overlap.col, overlap.data):
        if shared < 2:
            continue
        common = np.intersect1d(checks[c1], checks[c2])
        for c in (c1, c2):
            bad.update(int(c * d_c + t) for t in np.flatnonzero(np.isin(checks[c], common)))
    return duplicates.nnz, bad


def gallager_construct(n, d_v, d_c, rng_seed, attempts=GIRTH_ATTEMPTS):
    '''Random regular (d_v, d_c) code by Gallager's construction

    The base matrix comes from pyldpc: d_v bands of n / d_c checks, the
    first band taking variables in order and every other band a random
    column permutation of it.  Reading the checks row by row lays out d_v
    bands of n variable slots, so every variable has degree d_v and every
    check degree d_c.  Repeated variables and 4-cycles are then removed by
    swapping offending slots with random slots of the same band, for at
    most attempts rounds.

    Exceptions:
        ValidationException unless d_v >= 2, d_c > d_v and d_c divides n
        ComputeException if a repeated variable survives every round
    '''
    if n < 1 or d_v < 2 or d_c <= d_v:
        raise ValidationException('need n >= 1, d_v >= 2 and d_c > d_v, got n=%d (%d, %d)'
                                  % (n, d_v, d_c))
    if n % d_c:
        raise ValidationException('n = %d is not a multiple of d_c = %d' % (n, d_c))
    m = n * d_v // d_c
    h_mat, _ = pyldpc.make_ldpc(n, d_v, d_c, systematic=False, sparse=True, seed=rng_seed)
    _, cols = np.nonzero(_dense(h_mat))
    slots = cols.astype(np.int64)
    rng = np.random.default_rng(rng_seed)
    repeats, bad = _conflicts(slots, n, m, d_c)
    for attempt in range(attempts):
        movable = sorted(p for p in bad if p >= n)
        if not movable:
            break
        LOG.debug('round %d: %d conflicting slots', attempt + 1, len(movable))
        for pos in movable:
            band = pos // n
            other = band * n + int(rng.integers(n))
            slots[pos], slots[other] = slots[other], slots[pos]
        repeats, bad = _conflicts(slots, n, m, d_c)
    if repeats:
        raise ComputeException('could not remove repeated variables in %d rounds' % attempts)
    if bad:
        LOG.warning('%d slots still on 4-cycles after %d rounds', len(bad), attempts)
    return ParityCheckCode.from_checks(n, slots.reshape(m, d_c).tolist())
