import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relsemi.errors import InvalidInput
from relsemi.subspace import Subspace, add, complement, gap, intersect


def test_from_spanning_drops_dependent_columns():
    a = np.array([[1.0, 2.0], [0.0, 0.0], [1.0, 2.0]])
    s = Subspace.from_spanning(a)
    assert s.dim == 1
    assert s.ambient_dim == 3


def test_basis_is_orthonormal(rng):
    s = Subspace.from_spanning(rng.standard_normal((7, 4)))
    g = s.basis.conj().T @ s.basis
    assert np.max(np.abs(g - np.eye(4))) < 1e-13


def test_rejects_non_orthonormal_basis():
    with pytest.raises(InvalidInput):
        Subspace(2, np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_rejects_nonfinite_spanning_set():
    with pytest.raises(InvalidInput):
        Subspace.from_spanning(np.array([[np.nan], [1.0]]))


def test_zero_and_full():
    assert Subspace.zero(5).dim == 0
    assert Subspace.full(5).dim == 5
    assert gap(Subspace.zero(5), Subspace.zero(5)) == 0.0


@given(seed=st.integers(0, 10_000), ambient=st.integers(1, 8),
       cplx=st.booleans())
@settings(max_examples=50, deadline=None)
def test_complement_dimension_formula(seed, ambient, cplx):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(0, ambient + 1))
    a = rng.standard_normal((ambient, dim))
    if cplx:
        a = a + 1j * rng.standard_normal((ambient, dim))
    s = Subspace.from_spanning(a, ambient)
    assert s.dim + complement(s).dim == ambient


@given(seed=st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_gap_metric_axioms(seed):
    # symmetry + triangle inequality on a random triple of equal dimension
    rng = np.random.default_rng(seed)
    ambient, dim = 6, 3
    s1, s2, s3 = (Subspace.from_spanning(rng.standard_normal((ambient, dim)))
                  for _ in range(3))
    assert abs(gap(s1, s2) - gap(s2, s1)) < 1e-12
    assert gap(s1, s3) <= gap(s1, s2) + gap(s2, s3) + 1e-12
    assert gap(s1, s1) < 1e-12


def test_respanning_is_idempotent(rng):
    s = Subspace.from_spanning(rng.standard_normal((9, 4)))
    mix = s.basis @ rng.standard_normal((4, 4))  # same span, new coordinates
    assert gap(s, Subspace.from_spanning(mix)) < 1e-12


def test_gap_of_different_dims_is_one():
    s1 = Subspace.from_spanning(np.eye(4)[:, :2])
    s2 = Subspace.from_spanning(np.eye(4)[:, :3])
    assert gap(s1, s2) == 1.0


def test_gap_known_angle():
    # plane rotated by theta against the x-axis line: gap = sin(theta)
    theta = 0.3
    line = Subspace.from_spanning(np.array([[1.0], [0.0]]))
    rot = Subspace.from_spanning(np.array([[np.cos(theta)], [np.sin(theta)]]))
    assert abs(gap(line, rot) - np.sin(theta)) < 1e-14


def test_intersect_and_add(rng):
    xy = Subspace.from_spanning(np.eye(4)[:, :2])
    yz = Subspace.from_spanning(np.eye(4)[:, 1:3])
    assert intersect(xy, yz).dim == 1
    assert add(xy, yz).dim == 3
    assert intersect(xy, yz).contains(np.eye(4)[:, 1])


def test_member_distance():
    s = Subspace.from_spanning(np.eye(3)[:, :1])
    assert s.member_distance(np.array([2.0, 0.0, 0.0])) < 1e-15
    assert abs(s.member_distance(np.array([0.0, 3.0, 4.0])) - 5.0) < 1e-13


def test_mixed_field_promotion():
    r = Subspace.from_spanning(np.array([[1.0], [0.0]]))
    c = Subspace.from_spanning(np.array([[0.0], [1.0 + 0j]]))
    assert add(r, c).dim == 2
    assert gap(r, c) == 1.0


def test_json_round_trip(rng):
    a = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
    s = Subspace.from_spanning(a)
    back = Subspace.from_json(s.to_json())
    assert back.field == "complex"
    assert gap(s, back) < 1e-12


def test_json_real_has_zero_imag_block(rng):
    s = Subspace.from_spanning(rng.standard_normal((4, 2)))
    blob = s.to_json()
    assert all(v == 0.0 for col in blob["basis_imag"] for v in col)
    assert blob["field"] == "real"
