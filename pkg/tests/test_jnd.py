import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import algorithm1
from vfrladder.domain import LadderEntry, Representation
from vfrladder.jnd import eliminate, eliminate_indices


@pytest.mark.parametrize("v, v_J, v_T, kept_one_based", [
    ([70, 74, 77, 83, 95], 6, 94, [1, 3, 4, 5]),
    ([96], 6, 94, [1]),
    ([96, 97, 99], 6, 94, [1]),
    ([50, 52, 54], 6, 94, [1]),
    ([50, 56, 62], 6, 94, [1, 2, 3]),
    ([80, 94, 99], 6, 94, [1, 2]),
    ([60, 58, 70, 65, 80], 6, 94, [1, 3, 5]),
])
def test_worked_examples(v, v_J, v_T, kept_one_based):
    assert [i + 1 for i in eliminate_indices(v, v_J, v_T)] == kept_one_based
    assert algorithm1(v, v_J, v_T) == kept_one_based


def test_default_threshold():
    assert eliminate_indices([80, 94.5, 99], 6) == [0, 1]
    assert eliminate_indices([80, 86, 92, 98], 2) == [0, 1, 2, 3]


def test_errors():
    with pytest.raises(ValueError):
        eliminate_indices([], 6)
    with pytest.raises(ValueError):
        eliminate_indices([50], 0)
    with pytest.raises(ValueError):
        eliminate_indices([50], 6, 101)


def test_entries_wrapper_keeps_objects():
    entries = [LadderEntry(Representation(360, 365_000 * (k + 1)), 30.0, 0, v, 40.0)
               for k, v in enumerate([70, 74, 77, 83, 95])]
    out = eliminate(entries, 6, 94)
    assert [e.predicted_vmaf for e in out] == [70, 77, 83, 95]
    assert all(any(o is e for e in entries) for o in out)


vmaf_lists = st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=12)


@given(vmaf_lists, st.floats(0.5, 30), st.floats(50, 100))
def test_invariants(v, v_J, v_T):
    kept = eliminate_indices(v, v_J, v_T)
    assert kept[0] == 0
    assert kept == sorted(set(kept))
    assert all(v[b] - v[a] >= v_J for a, b in zip(kept, kept[1:]))
    over = [i for i in kept if v[i] >= v_T]
    assert len(over) <= 1 and (not over or over[0] == kept[-1])
    assert [i + 1 for i in kept] == algorithm1(v, v_J, v_T)


def test_thousand_random_sequences():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        v = np.round(rng.uniform(20, 100, rng.integers(1, 10)), 1).tolist()
        kept = eliminate_indices(v, 6, 94)
        assert [i + 1 for i in kept] == algorithm1(v, 6, 94)
