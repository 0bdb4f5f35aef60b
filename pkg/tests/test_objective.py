import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mrga.errors import ConfigurationError
from mrga.objective import (ObjectiveSpec, UnknownObjectiveError, lookup_objective,
                            sphere, sphere_rows)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_sphere_zero():
    assert sphere([0.0] * 300) == 0.0


def test_sphere_hand_values():
    assert sphere([3, 4]) == 25.0
    assert sphere([1, 2, 3]) == 14.0


def test_sphere_empty_rejected():
    with pytest.raises(ConfigurationError):
        sphere([])


@given(arrays(np.float64, st.integers(1, 40), elements=finite))
def test_sphere_even_and_nonnegative(x):
    assert sphere(x) == sphere(-x)
    assert sphere(x) >= 0.0


@given(arrays(np.float64, st.integers(1, 40), elements=finite),
       st.floats(1.01, 50).flatmap(lambda c: st.sampled_from([c, -c])))
def test_sphere_radial_scaling(x, c):
    assert sphere(c * x) == pytest.approx(c * c * sphere(x), rel=1e-12, abs=1e-300)


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 40)), elements=finite))
def test_rows_bit_identical_to_scalar(x):
    rows = sphere_rows(x)
    assert [float(v) for v in rows] == [sphere(r) for r in x]


def test_lookup_sphere_d300():
    fn = lookup_objective(ObjectiveSpec("sphere", 300))
    assert fn.dimension == 300
    assert fn(np.ones(300)) == 300.0
    with pytest.raises(ConfigurationError):
        fn(np.ones(299))


def test_lookup_univariate():
    fn = lookup_objective(ObjectiveSpec("sphere", 1))
    assert fn([-3.0]) == 9.0


def test_lookup_unknown_lists_registered():
    with pytest.raises(UnknownObjectiveError, match="sphere"):
        lookup_objective(ObjectiveSpec("does-not-exist", 3))


@pytest.mark.parametrize("kwargs", [dict(dimension=0), dict(lower_bound=1.0, upper_bound=1.0)])
def test_spec_validation(kwargs):
    with pytest.raises(ConfigurationError):
        ObjectiveSpec("sphere", **{"dimension": 3, **kwargs})
