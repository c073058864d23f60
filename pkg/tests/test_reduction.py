import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import effgsa as eg
from effgsa.errors import ConfigurationError, ContractError
from effgsa.gsa_mc import SensitivityResult
from effgsa.reduction import mae


def result_with(g_total, names=None):
    g = np.asarray(g_total, dtype=float)
    names = names or tuple(f"p{i}" for i in range(g.size))
    empty = np.zeros((g.size, 1))
    return SensitivityResult(tuple(names), empty, empty, g, g, "pce", np.ones(1, bool), np.zeros(1, bool), np.ones(1))


def test_selection():
    assert eg.select_noninfluential(result_with([0.3, 0.5, 0.2]), 0.01) == []
    assert eg.select_noninfluential(result_with([0.004, 0.9, 0.001, 0.02]), 0.01) == ["p2", "p0"]
    assert eg.select_noninfluential(result_with([1.0, 0.2, 0.5]), 1.0 + 1e-9) == ["p1", "p2", "p0"]


def test_selection_needs_indices():
    with pytest.raises(ContractError):
        eg.select_noninfluential(result_with([np.nan, np.nan]))


def space3():
    return eg.ParameterSpace(
        [eg.RandomParameter("a", 1.0, 0.5, 1.5), eg.RandomParameter("b", 2.0, 1.0, 3.0), eg.RandomParameter("c", 0.0, -1, 1)]
    )


def poly(x, names):
    """Two outputs; ``c`` is never read."""
    a, b = x[:, 0], x[:, 1]
    return np.column_stack([a + 0.1 * b**2, a * b])


@pytest.mark.parametrize("method", ["mc", "pce"])
def test_fixing_nothing_gives_zero_error(method):
    s = eg.UQSettings(method=method, n_samples=200, seed=3)
    rep = eg.reduce_and_compare(space3(), [], poly, s)
    assert rep.mae_mean == 0.0 and rep.mae_std == 0.0


@pytest.mark.parametrize("method", ["mc", "pce"])
def test_fixing_everything(method):
    s = eg.UQSettings(method=method, n_samples=200, seed=3)
    rep = eg.reduce_and_compare(space3(), ["a", "b", "c"], poly, s)
    assert np.all(rep.reduced.std == 0)
    assert rep.mae_std == pytest.approx(np.mean(np.abs(rep.full.std)))
    assert rep.reduced.mean == pytest.approx(poly(space3().nominal[None, :], None)[0])


def test_unread_input_with_common_random_numbers_is_exact():
    s = eg.UQSettings(method="mc", n_samples=500, seed=8)
    rep = eg.reduce_and_compare(space3(), ["c"], poly, s)
    assert rep.mae_mean == 0.0 and rep.mae_std == 0.0


def test_unknown_fixed_parameter():
    with pytest.raises(ConfigurationError):
        eg.reduce_and_compare(space3(), ["zz"], poly, eg.UQSettings())


def test_report_json():
    rep = eg.reduce_and_compare(space3(), ["b"], poly, eg.UQSettings(), threshold=0.01)
    doc = rep.to_json()
    assert doc["fixed_parameters"] == ["b"] and doc["threshold"] == 0.01
    assert doc["mae_mean"] >= 0 and doc["mae_std"] >= 0
    assert doc["n_components_compared"] == 2


fields = arrays(np.float64, 6, elements=st.floats(-10, 10))
masks = arrays(np.bool_, 6).filter(lambda m: m.any())


@given(fields, fields, masks)
def test_mae_symmetric_and_zero_iff_identical(a, b, m):
    assert mae(a, b, m) == mae(b, a, m)
    assert mae(a, a, m) == 0.0
    assert (mae(a, b, m) == 0.0) == bool(np.all(a[m] == b[m]))
    assert mae(a, b, m) >= 0
