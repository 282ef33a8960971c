import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frameforge.core import (
    Frame,
    FrameBounds,
    bessel_bound,
    frame_bounds,
    frame_operator,
    is_parseval,
    orthonormal_basis,
    parseval_normalize,
    rayleigh_probe,
    transformed_bounds,
)
from frameforge.errors import InvalidInput, NotAFrame


def test_onb_bounds_are_one():
    b = frame_bounds(Frame("real", 3, np.eye(3)))
    assert b.as_pair() == pytest.approx([1.0, 1.0])


def test_weights_are_masses():
    f = Frame("real", 2, np.eye(2), [4.0, 9.0])
    assert frame_bounds(f).as_pair() == pytest.approx([4.0, 9.0])
    assert np.allclose(f.effective_vectors(), np.diag([2.0, 3.0]))


def test_complex_operator_is_hermitian():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    T = frame_operator(Frame("complex", 3, x))
    assert np.allclose(T, T.conj().T)
    # sum_j |<v, x_j>|^2 = <T v, v>
    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    assert np.sum(np.abs(x.conj() @ v) ** 2) == pytest.approx(np.real(v.conj() @ T @ v))


def test_invalid_inputs():
    with pytest.raises(InvalidInput):
        Frame("quaternion", 2, np.eye(2))
    with pytest.raises(InvalidInput):
        Frame("real", 3, np.eye(2))
    with pytest.raises(InvalidInput):
        Frame("real", 2, np.eye(2), [1.0, -1.0])
    with pytest.raises(InvalidInput):
        Frame("real", 2, [[np.nan, 0.0]])
    with pytest.raises(InvalidInput):
        frame_operator(Frame("real", 2, np.zeros((0, 2))))
    with pytest.raises(InvalidInput):
        FrameBounds(2.0, 1.0)


def test_parseval_normalize_and_rank_deficiency():
    rng = np.random.default_rng(1)
    f = Frame("real", 3, rng.standard_normal((7, 3)))
    assert is_parseval(parseval_normalize(f))
    with pytest.raises(NotAFrame):
        parseval_normalize(Frame("real", 2, [[1.0, 0.0], [2.0, 0.0]]))


def test_transformed_bounds_are_squares():
    f = Frame("real", 2, np.eye(2))
    assert transformed_bounds(f, np.diag([2.0, 3.0])).as_pair() == pytest.approx([4.0, 9.0])
    with pytest.raises(InvalidInput):
        transformed_bounds(f, np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_probe_is_inside_eigen_bounds():
    rng = np.random.default_rng(2)
    f = Frame("complex", 4, rng.standard_normal((9, 4)) + 1j * rng.standard_normal((9, 4)))
    e, p = frame_bounds(f), rayleigh_probe(f, 500, seed=3)
    assert e.lower - 1e-12 <= p.lower <= p.upper <= e.upper + 1e-12
    assert p.method == "rayleigh-probe"


def test_bessel_bound_empty_and_basis():
    assert bessel_bound(np.zeros((0, 3))) == 0.0
    B = orthonormal_basis(np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]]))
    assert B.shape == (3, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10), st.integers(0, 2 ** 31))
def test_bounds_sandwich_energies(d, extra, seed):
    rng = np.random.default_rng(seed)
    f = Frame("real", d, rng.standard_normal((d + extra, d)), rng.random(d + extra))
    b = frame_bounds(f)
    x = rng.standard_normal(d)
    x /= np.linalg.norm(x)
    energy = float(np.sum(f.weight_array * (f.vectors @ x) ** 2))
    assert b.lower - 1e-9 <= energy <= b.upper + 1e-9
