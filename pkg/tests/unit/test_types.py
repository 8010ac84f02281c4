# tests/unit/test_types.py
import numpy as np
import pytest
from netlqr.exceptions import DimensionMismatchError, NotPositiveDefiniteError
from netlqr.types import ComponentKind, CouplingKind, InformationStructure, LawKind, RunMode
from netlqr.utils import as_matrix, psd_sqrt, relative_gap, unvec, vec


def test_enums():
    """Test enum definitions."""
    assert CouplingKind.LAPLACIAN.value == "laplacian"
    assert InformationStructure("aggregate") is InformationStructure.AGGREGATE
    assert LawKind.MIXED.value == "mixed"
    assert {m.value for m in RunMode} == {"decompose", "synthesize", "simulate", "verify", "consensus", "bench"}
    assert "auxiliary" in ComponentKind.__args__


class TestAsMatrix:
    def test_scalar(self):
        assert as_matrix(2.5).shape == (1, 1)

    def test_flat_list_is_one_row(self):
        assert as_matrix([1.0, 2.0]).shape == (1, 2)

    def test_read_only(self):
        M = as_matrix([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            M[0, 0] = 3.0

    def test_ragged_rows(self):
        with pytest.raises(DimensionMismatchError):
            as_matrix([[1.0, 2.0], [3.0]])


class TestVec:
    def test_node_major(self):
        x = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        np.testing.assert_array_equal(vec(x), [1.0, 4.0, 2.0, 5.0, 3.0, 6.0])

    def test_inverse(self, rng):
        x = rng.standard_normal((5, 3, 4))
        np.testing.assert_array_equal(unvec(vec(x), 3, 4), x)


def test_psd_sqrt(rng):
    """Test the symmetric square root squares back."""
    X = rng.standard_normal((3, 3))
    S = X @ X.T
    root = psd_sqrt(S)
    np.testing.assert_allclose(root @ root, S, atol=1e-10)
    np.testing.assert_allclose(root, root.T)
    with pytest.raises(NotPositiveDefiniteError):
        psd_sqrt(-np.eye(2))


def test_relative_gap():
    """Test the relative gap falls back to the absolute gap at zero."""
    assert relative_gap(1.1, 1.0) == pytest.approx(0.1)
    assert relative_gap(1e-3, 0.0) == pytest.approx(1e-3)
