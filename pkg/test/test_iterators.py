#!/usr/bin/env python
'''
Test code for the enumeration iterators.

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
from math import comb

import numpy as np
import pytest

from dmcq.iterators import ConsecutivePartitionIterator
from dmcq.iterators import MixedRadixIterator
from dmcq.iterators import SurjectiveAssignmentIterator


def count_onto(n, k):
    return sum((-1) ** j * comb(k, j) * (k - j) ** n for j in range(k + 1))


@pytest.mark.iterators
def test_mixed_radix_order():
    rows = np.concatenate([batch for _, batch in MixedRadixIterator((2, 3), batch_size=4)])
    assert rows.tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]

@pytest.mark.iterators
def test_mixed_radix_batches():
    iterator = MixedRadixIterator((3, 3, 3), batch_size=10)
    starts = [start for start, _ in iterator]
    assert starts == [0, 10, 20]
    assert iterator.total_count() == 27
    assert not iterator.has_next()
    # iterating again starts over
    assert sum(batch.shape[0] for _, batch in iterator) == 27
    iterator.reset()
    start, batch = iterator.next()
    assert start == 0 and batch.shape == (10, 3)

@pytest.mark.iterators
def test_mixed_radix_empty_tuple():
    batches = list(MixedRadixIterator(()))
    assert len(batches) == 1
    assert batches[0][1].shape == (1, 0)

@pytest.mark.iterators
def test_iterator_validation():
    with pytest.raises(ValueError):
        MixedRadixIterator((2, 0))
    with pytest.raises(ValueError):
        MixedRadixIterator((2,), batch_size=0)
    with pytest.raises(ValueError):
        ConsecutivePartitionIterator(3, 4)

@pytest.mark.iterators
@pytest.mark.parametrize('num_inputs, num_levels', [(4, 2), (5, 3), (6, 4)])
def test_surjective_assignments(num_inputs, num_levels):
    rows = np.concatenate([batch for _, batch in
                           SurjectiveAssignmentIterator(num_inputs, num_levels, batch_size=50)])
    assert rows.shape[0] == count_onto(num_inputs, num_levels)
    assert all(len(set(row)) == num_levels for row in rows.tolist())

@pytest.mark.iterators
def test_consecutive_partitions():
    partitions = list(ConsecutivePartitionIterator(5, 3))
    assert len(partitions) == comb(4, 2)
    assert partitions[0] == [1, 2]
    assert partitions[-1] == [3, 4]
    assert list(ConsecutivePartitionIterator(4, 1)) == [[]]
