'''
Enumeration iterators: mixed-radix label tuples and consecutive partitions

The exhaustive oracle and the decoding map listings walk very large
lexicographic spaces (K^I assignments, K^(d-1) message tuples).  These
iterators hand them out in numpy batches so memory stays bounded, using the
same reset/has_next/__next__ protocol for every kind of walk.

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
from abc import abstractmethod
import itertools

import numpy as np

DEFAULT_BATCH_SIZE = 1 << 16


class AbstractBatchIterator():
    '''Walk a finite, ordered space in batches.

    Subclasses tell how big the space is and how to build the rows for a
    range of flat indices.
    '''
    def __init__(self, batch_size=DEFAULT_BATCH_SIZE):
        if batch_size < 1:
            raise ValueError('batch_size must be >= 1')
        self.batch_size = batch_size
        self.current_index = 0

    def __iter__(self):
        self.reset()
        return self

    def reset(self):
        self.current_index = 0

    def has_next(self):
        return self.current_index < self.total_count()

    def next(self):
        return next(self)

    def __next__(self):
        if not self.has_next():
            raise StopIteration()
        start = self.current_index
        stop = min(start + self.batch_size, self.total_count())
        self.current_index = stop
        return start, self.rows(start, stop)

    @abstractmethod
    def total_count(self):
        pass

    @abstractmethod
    def rows(self, start, stop):
        pass


class MixedRadixIterator(AbstractBatchIterator):
    '''Lexicographic walk over all tuples (y_1, ..., y_n) with
    0 <= y_s < radices[s]; the first slot is the most significant digit,
    which is also the flat index order of a DecodingMap table.

    Each step returns (first flat index, rows) with rows an int array of
    shape (batch, n).
    '''
    def __init__(self, radices, batch_size=DEFAULT_BATCH_SIZE):
        AbstractBatchIterator.__init__(self, batch_size)
        self.radices = tuple(int(r) for r in radices)
        if any(r < 1 for r in self.radices):
            raise ValueError('radices must be >= 1')
        self.count = int(np.prod(self.radices, dtype=object)) if self.radices else 1

    def total_count(self):
        return self.count

    def rows(self, start, stop):
        flat = np.arange(start, stop, dtype=np.int64)
        if not self.radices:
            return np.zeros((flat.size, 0), dtype=np.int64)
        return np.stack(np.unravel_index(flat, self.radices), axis=1)


class SurjectiveAssignmentIterator(MixedRadixIterator):
    '''All assignments of num_inputs outputs to num_levels labels where
    every label is used at least once.  Batches are filtered views of the
    full mixed-radix walk, so a batch may be shorter than batch_size.
    '''
    def __init__(self, num_inputs, num_levels, batch_size=DEFAULT_BATCH_SIZE):
        MixedRadixIterator.__init__(self, (num_levels,) * num_inputs, batch_size)
        self.num_levels = num_levels

    def rows(self, start, stop):
        rows = MixedRadixIterator.rows(self, start, stop)
        used = np.zeros((rows.shape[0], self.num_levels), dtype=bool)
        np.put_along_axis(used, rows, True, axis=1)
        return rows[used.all(axis=1)]


class ConsecutivePartitionIterator():
    '''All partitions of outputs 1..num_inputs into num_levels nonempty runs
    of consecutive outputs, as boundary lists a_1 < ... < a_{K-1}.
    '''
    def __init__(self, num_inputs, num_levels):
        if not 1 <= num_levels <= num_inputs:
            raise ValueError('need 1 <= K <= I')
        self.num_inputs = num_inputs
        self.num_levels = num_levels
        self._combinations = None
        self.reset()

    def __iter__(self):
        self.reset()
        return self

    def reset(self):
        self._combinations = itertools.combinations(range(1, self.num_inputs),
                                                    self.num_levels - 1)

    def next(self):
        return next(self)

    def __next__(self):
        return list(next(self._combinations))
