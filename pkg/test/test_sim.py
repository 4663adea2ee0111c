#!/usr/bin/env python
'''
Test code for the finite-length decoding simulator.

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

from dmcq.channel import ValidationException
from dmcq.code import ParityCheckCode
from dmcq.code import gallager_construct
from dmcq.density import DeConfig
from dmcq.density import find_threshold
from dmcq.density import run_density_evolution
from dmcq.models import bsc
from dmcq.models import bsc_family
from dmcq.models import bsec
from dmcq.sim import ArityMismatchException
from dmcq.sim import BpDecoder
from dmcq.sim import TableDecoder
from dmcq.sim import _frame_inputs
from dmcq.sim import bp_reference_decode
from dmcq.sim import run_simulation
from dmcq.sim import sample_outputs
from dmcq.sim import simulate

CODE_SEED = 2
FRAME_SEED = 99
DESIGN_P = 0.03


@pytest.fixture(scope='module')
def code36():
    return gallager_construct(1002, 3, 6, rng_seed=CODE_SEED)

@pytest.fixture(scope='module')
def trace36():
    return run_density_evolution(bsc(DESIGN_P), DeConfig(d_v=3, d_c=6, levels=3))


@pytest.mark.sim
def test_sample_outputs():
    words = np.array([[0, 1, 0, 1]])
    assert sample_outputs(bsc(0.0), words, np.full((1, 4), 0.5)).tolist() == [[0, 1, 0, 1]]
    # P(.|0) = (0.7, 0.1, 0.2): cdf 0.7, 0.8, 1.0
    outputs = sample_outputs(bsec(0.1, 0.2), np.zeros(3, dtype=np.int8),
                             np.array([0.69, 0.75, 0.95]))
    assert outputs.tolist() == [0, 1, 2]

@pytest.mark.sim
def test_decoders_need_regular_code():
    irregular = ParityCheckCode.from_checks(4, [[0, 1, 2], [1, 3]])
    with pytest.raises(ValidationException):
        BpDecoder(irregular, bsc(0.1))

@pytest.mark.sim
def test_table_decoder_arity_mismatch(code36, trace36):
    with pytest.raises(ArityMismatchException) as exc_info:
        TableDecoder(code36, bsec(0.05, 0.01), trace36)
    message = str(exc_info.value)
    assert 'expected 2' in message and 'got 3' in message
    code34 = gallager_construct(1000, 3, 4, rng_seed=CODE_SEED)
    with pytest.raises(ArityMismatchException):
        TableDecoder(code34, bsc(DESIGN_P), trace36)

@pytest.mark.sim
def test_table_decoder_needs_maps(code36):
    trace = run_density_evolution(bsc(DESIGN_P),
                                  DeConfig(d_v=3, d_c=6, levels=3, record_maps=False))
    with pytest.raises(ValidationException):
        TableDecoder(code36, bsc(DESIGN_P), trace)

@pytest.mark.sim
def test_table_decoder_properties(code36, trace36):
    decoder = TableDecoder(code36, bsc(DESIGN_P), trace36, max_iter=50)
    assert decoder.reusable
    assert decoder.iterations_available == 50
    assert len(decoder.decision_maps) == trace36.iterations

@pytest.mark.sim
def test_noiseless_decoding(code36):
    channel = bsc(0.0)
    trace = run_density_evolution(channel, DeConfig(d_v=3, d_c=6, levels=3))
    table = simulate(code36, channel, trace, 20, FRAME_SEED, max_iter=5)
    assert table.frames == 20
    assert table.bit_errors == 0 and table.frame_errors == 0
    assert table.iterations == {1: 20}
    bp = bp_reference_decode(code36, channel, 20, FRAME_SEED, max_iter=5)
    assert bp.bit_errors == 0
    assert bp.decoder == 'bp'

@pytest.mark.sim
def test_table_decoder_corrects_errors(code36, trace36):
    result = simulate(code36, bsc(DESIGN_P), trace36, 20, FRAME_SEED, max_iter=50)
    assert result.ber < 0.005
    assert result.block_length == 1002
    assert sum(result.iterations.values()) == 20

@pytest.mark.sim
def test_random_codewords(code36, trace36):
    result = simulate(code36, bsc(DESIGN_P), trace36, 10, FRAME_SEED, max_iter=50,
                      codeword='random')
    assert result.ber < 0.005

@pytest.mark.sim
def test_useless_channel_bp(code36):
    result = bp_reference_decode(code36, bsc(0.5), 20, FRAME_SEED, max_iter=3)
    assert result.ber == pytest.approx(0.5, abs=0.02)
    assert result.fer == 1.0

@pytest.mark.sim
def test_paired_frame_streams(code36, trace36):
    channel = bsc(DESIGN_P)
    table = TableDecoder(code36, channel, trace36)
    bp = BpDecoder(code36, channel)
    words_t, outputs_t, coins_t = _frame_inputs(table, 'random', FRAME_SEED, 3, 6)
    words_b, outputs_b, coins_b = _frame_inputs(bp, 'random', FRAME_SEED, 3, 6)
    assert np.array_equal(words_t, words_b)
    assert np.array_equal(outputs_t, outputs_b)
    assert coins_t is None and coins_b.shape == outputs_b.shape
    # frame 4 is the same whichever range it is drawn in
    _, single, _ = _frame_inputs(table, 'random', FRAME_SEED, 4, 5)
    assert np.array_equal(single[0], outputs_t[1])

@pytest.mark.sim
def test_reproducible_across_batches_and_workers(code36, trace36):
    channel = bsc(0.06)
    decoder = TableDecoder(code36, channel, trace36, max_iter=20)
    base = run_simulation(decoder, 30, FRAME_SEED, batch=30)
    assert run_simulation(decoder, 30, FRAME_SEED, batch=7) == base
    assert run_simulation(decoder, 30, FRAME_SEED, batch=7, workers=2) == base
    assert run_simulation(decoder, 30, FRAME_SEED + 1, batch=30) != base

@pytest.mark.sim
def test_frame_error_stop(code36):
    decoder = BpDecoder(code36, bsc(0.5), max_iter=2)
    serial = run_simulation(decoder, 100, FRAME_SEED, max_frame_errors=5, batch=10)
    assert serial.frames == 10
    assert serial.frame_errors == 10
    parallel = run_simulation(decoder, 100, FRAME_SEED, max_frame_errors=5, batch=10, workers=3)
    assert parallel == serial

@pytest.mark.sim
def test_simulation_validation(code36):
    decoder = BpDecoder(code36, bsc(0.1), max_iter=2)
    with pytest.raises(ValidationException):
        run_simulation(decoder, 10, codeword='ones')
    with pytest.raises(ValidationException):
        run_simulation(decoder, 10, batch=0)
    empty = run_simulation(decoder, 0)
    assert empty.frames == 0 and empty.ber == 0.0 and empty.fer == 0.0

@pytest.mark.perf
def test_bp_36_below_threshold(code36):
    result = bp_reference_decode(code36, bsc(0.06), 300, FRAME_SEED, workers=4)
    assert result.ber < 1e-3

@pytest.mark.perf
def test_table_decoder_close_to_bp():
    config = DeConfig(d_v=3, d_c=4, levels=16, prebin=2000)
    threshold = find_threshold(bsc_family(), config, 0.02, 0.2, 1e-3).threshold
    p = 0.8 * threshold
    channel = bsc(p)
    trace = run_density_evolution(channel, config)
    assert trace.converged
    code = gallager_construct(1000, 3, 4, rng_seed=CODE_SEED)
    options = dict(max_frame_errors=100, workers=4)
    table = simulate(code, channel, trace, 10 ** 5, FRAME_SEED, **options)
    bp = bp_reference_decode(code, channel, 10 ** 5, FRAME_SEED, **options)
    floor = 1.0 / (table.frames * code.n)
    assert table.ber <= 10 * max(bp.ber, floor)

@pytest.mark.sim
def test_toy_code_erasure_schedule():
    # two row checks and two column checks over a 2 x 4 grid of bits
    code = ParityCheckCode.from_checks(8, [[0, 1, 2, 3], [4, 5, 6, 7],
                                           [0, 1, 4, 5], [2, 3, 6, 7]])
    channel = bsec(0.2, 0.0)
    trace = run_density_evolution(channel, DeConfig(d_v=2, d_c=4, levels=3))
    check_map = trace.records[0].check_map
    # channel outputs (0, erasure, 1) in, message labels ("1", erasure, "0") out
    assert check_map.lookup((0, 0, 0)) == 2
    assert check_map.lookup((0, 1, 0)) == 1
    assert check_map.lookup((2, 0, 0)) == 0
    # all-ones codeword with bits 0, 5 and 6 erased
    outputs = np.full(8, 2, dtype=np.int64)
    outputs[[0, 5, 6]] = 1
    # bit 5 only sees erasures on the first pass and falls to the bit-0 side
    bits, used = TableDecoder(code, channel, trace, max_iter=1).decode(outputs[None])
    expected = np.ones(8, dtype=np.int8)
    expected[5] = 0
    assert bits[0].tolist() == expected.tolist()
    assert used.tolist() == [1]
    bits, used = TableDecoder(code, channel, trace, max_iter=10).decode(outputs[None])
    assert bits[0].tolist() == [1] * 8
    assert used.tolist() == [2]
