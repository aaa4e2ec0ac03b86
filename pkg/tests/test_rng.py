import json
from pathlib import Path

import numpy as np
import pytest

from temporalvqa.errors import InvalidRangeError
from temporalvqa.mathops import uniform_init
from temporalvqa.rng import Rng

GOLDEN = json.loads((Path(__file__).parent / "data" / "golden_uniform_init.json").read_text())


def test_single_draw_in_range():
    m = uniform_init(1, 1, -0.01, 0.01, Rng(7))
    assert m.shape == (1, 1)
    assert -0.01 <= m[0, 0] <= 0.01


def test_same_seed_bit_identical():
    a = uniform_init(5, 3, -0.05, 0.05, Rng(7))
    b = uniform_init(5, 3, -0.05, 0.05, Rng(7))
    assert np.array_equal(a, b)


def test_golden_matrix_frozen():
    m = uniform_init(GOLDEN["rows"], GOLDEN["cols"], GOLDEN["lo"], GOLDEN["hi"],
                     Rng(GOLDEN["seed"]))
    assert np.array_equal(m, np.array(GOLDEN["values"]))
    assert GOLDEN["lo"] <= m.mean() <= GOLDEN["hi"]


def test_invalid_range_rejected():
    with pytest.raises(InvalidRangeError):
        uniform_init(2, 2, 0.01, 0.01, Rng(0))
    with pytest.raises(InvalidRangeError):
        uniform_init(2, 2, 0.5, -0.5, Rng(0))
    with pytest.raises(InvalidRangeError):
        Rng(0).uniform(1.0, 1.0)


def test_stream_continues_not_repeats():
    rng = Rng(3)
    first = rng.random(4)
    second = rng.random(4)
    assert not np.array_equal(first, second)


def test_spawned_streams_differ_and_are_deterministic():
    a = Rng(9).spawn(1).random(8)
    b = Rng(9).spawn(2).random(8)
    a2 = Rng(9).spawn(1).random(8)
    assert np.array_equal(a, a2)
    assert not np.array_equal(a, b)


def test_integer_bounds():
    rng = Rng(5)
    draws = [rng.integer(7) for _ in range(200)]
    assert min(draws) >= 0 and max(draws) <= 6
    assert len(set(draws)) == 7


def test_shuffle_and_sample_deterministic():
    items = list(range(10))
    a = list(items)
    Rng(4).shuffle(a)
    b = list(items)
    Rng(4).shuffle(b)
    assert a == b and sorted(a) == items
    picked = Rng(4).sample(items, 4)
    assert len(picked) == len(set(picked)) == 4


def test_sample_too_many_rejected():
    with pytest.raises(InvalidRangeError):
        Rng(0).sample([1, 2], 3)


def test_normal_draws_finite_and_centered():
    draws = Rng(11).normal((4000,))
    assert np.all(np.isfinite(draws))
    assert abs(draws.mean()) < 0.1
    assert abs(draws.std() - 1.0) < 0.1
