#!/usr/bin/env python
'''
Test code for parity-check codes, alist files and Gallager's construction.

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
import pytest
from scipy import sparse

from dmcq.channel import ValidationException
from dmcq.code import AlistParseException
from dmcq.code import ParityCheckCode
from dmcq.code import emit_alist
from dmcq.code import gallager_construct
from dmcq.code import parse_alist

# (2, 3) regular toy code: 6 variables, 4 checks
TOY_ALIST = '''6 4
2 3
2 2 2 2 2 2
3 3 3 3
1 2
1 3
1 4
2 3
2 4
3 4
1 2 3
1 4 5
2 4 6
3 5 6
'''

TOY_CHECKS = [[0, 1, 2], [0, 3, 4], [1, 3, 5], [2, 4, 5]]


def alist_with_line(number, text):
    lines = TOY_ALIST.splitlines()
    lines[number - 1] = text
    return '\n'.join(lines) + '\n'

def max_overlap(code):
    binary = code.matrix().astype(np.int32)
    overlap = sparse.triu(binary @ binary.T, k=1)
    return overlap.max() if overlap.nnz else 0


@pytest.mark.code
def test_parse_toy_alist():
    code = parse_alist(TOY_ALIST)
    assert code.n == 6 and code.m == 4
    assert code.degrees == (2, 3)
    assert code.num_edges == 12
    assert [list(row) for row in code.check_adj] == TOY_CHECKS
    assert code == ParityCheckCode.from_checks(6, TOY_CHECKS)
    assert code.matrix().shape == (4, 6)

@pytest.mark.code
def test_parse_alist_without_check_section():
    short = '\n'.join(TOY_ALIST.splitlines()[:10]) + '\n'
    assert parse_alist(short) == parse_alist(TOY_ALIST)

@pytest.mark.code
def test_emit_alist():
    code = parse_alist(TOY_ALIST)
    assert emit_alist(code) == TOY_ALIST
    irregular = ParityCheckCode.from_checks(4, [[0, 1, 2], [1, 3]])
    text = emit_alist(irregular)
    assert text.splitlines()[4] == '1 0'
    assert text.splitlines()[-1] == '2 4 0'
    assert parse_alist(text) == irregular

@pytest.mark.code
@pytest.mark.parametrize('number, text', [
    (6, '1 x'),
    (6, '1 9'),
    (6, '1 1'),
    (7, '1 4 2'),
    (12, '1 4 6'),
])
def test_parse_alist_errors_name_the_line(number, text):
    with pytest.raises(AlistParseException) as exc_info:
        parse_alist(alist_with_line(number, text))
    assert exc_info.value.line == number
    assert 'line %d' % number in str(exc_info.value)

@pytest.mark.code
def test_parse_alist_header_errors():
    with pytest.raises(AlistParseException):
        parse_alist('6 4\n2 3\n')
    with pytest.raises(AlistParseException) as exc_info:
        parse_alist(alist_with_line(3, '2 2 2 2 2'))
    assert exc_info.value.line == 3
    with pytest.raises(AlistParseException):
        parse_alist(TOY_ALIST + '1 2 3\n')

@pytest.mark.code
def test_code_validation():
    with pytest.raises(ValidationException):
        ParityCheckCode.from_checks(3, [[0, 5]])
    with pytest.raises(ValidationException):
        ParityCheckCode(2, 1, [[0], []], [[0, 1]])
    irregular = ParityCheckCode.from_checks(4, [[0, 1, 2], [1, 3]])
    assert irregular.degrees is None
    with pytest.raises(ValidationException):
        irregular.check_vars()

@pytest.mark.code
def test_edge_layout():
    code = parse_alist(TOY_ALIST)
    check_vars = code.check_vars()
    assert check_vars.tolist() == TOY_CHECKS
    var_edges = code.var_edges()
    assert var_edges.shape == (6, 2)
    flat = check_vars.reshape(-1)
    for v in range(6):
        assert flat[var_edges[v]].tolist() == [v, v]

@pytest.mark.code
def test_syndrome_and_encoder():
    code = parse_alist(TOY_ALIST)
    assert code.is_codeword(np.zeros(6, dtype=np.int8))
    assert not code.is_codeword([1, 0, 0, 0, 0, 0])
    encoder = code.encoder()
    assert encoder.dimension == 3
    rng = np.random.default_rng(3)
    words = code.encode(rng.integers(0, 2, size=(20, 3)))
    assert words.shape == (20, 6)
    assert not np.any(code.syndrome(words))
    with pytest.raises(ValidationException):
        code.encode([1, 0])

@pytest.mark.code
def test_gallager_34():
    code = gallager_construct(1000, 3, 4, rng_seed=11)
    assert code.n == 1000 and code.m == 750
    assert code.degrees == (3, 4)
    assert code.num_edges == 3000
    assert max_overlap(code) <= 1
    assert gallager_construct(1000, 3, 4, rng_seed=11) == code
    assert gallager_construct(1000, 3, 4, rng_seed=12) != code

@pytest.mark.code
def test_gallager_36_encodes():
    code = gallager_construct(1002, 3, 6, rng_seed=5)
    assert code.m == 501
    assert code.degrees == (3, 6)
    assert max_overlap(code) <= 1
    encoder = code.encoder()
    rng = np.random.default_rng(5)
    bits = rng.integers(0, 2, size=(4, encoder.dimension))
    words = code.encode(bits)
    assert not np.any(code.syndrome(words))
    assert encoder.dimension >= 501
    # systematic by position
    assert np.array_equal(words[:, encoder.info], bits)

@pytest.mark.code
def test_gallager_validation():
    with pytest.raises(ValidationException):
        gallager_construct(1001, 3, 4, rng_seed=1)
    with pytest.raises(ValidationException):
        gallager_construct(10, 3, 1, rng_seed=1)
    # d_c must divide n and exceed d_v
    with pytest.raises(ValidationException):
        gallager_construct(1000, 3, 6, rng_seed=1)
    with pytest.raises(ValidationException):
        gallager_construct(12, 3, 3, rng_seed=1)
    with pytest.raises(ValidationException):
        gallager_construct(12, 1, 3, rng_seed=1)
