import numpy as np
import pytest

from tikhonov_kaczmarz.errors import InvalidArgument
from tikhonov_kaczmarz.spaces import H1, interior_l2, trapezoid_l2


@pytest.mark.parametrize("space", [interior_l2(7, 0.125), trapezoid_l2(9, 0.125), H1(9, 0.125)])
def test_gram_is_spd_and_riesz_inverts(space):
    G = space.gram_matrix.to_dense()
    np.testing.assert_allclose(G, G.T)
    assert np.linalg.eigvalsh(G).min() > 0
    v = np.random.default_rng(0).standard_normal(space.size)
    np.testing.assert_allclose(space.gram(space.riesz(v)), v, atol=1e-12)
    assert space.norm(space.zeros()) == 0.0


def test_h1_norm_of_constant_is_l2_norm():
    # a constant has no derivative, and the trapezoid rule integrates it exactly
    X = H1(101, 0.01)
    assert X.norm(np.full(101, 3.0)) == pytest.approx(3.0, rel=1e-11)


def test_h1_seminorm_of_linear_function():
    n, h = 99, 0.01
    s = np.linspace(0, 1, n + 2)
    # |s|_L2^2 = 1/3 (trapezoid adds h^2/6), |s'|^2 = 1
    assert H1(n + 2, h).norm(s) ** 2 == pytest.approx(1 + 1 / 3 + h**2 / 6, rel=1e-12)


def test_check_rejects_wrong_shape():
    with pytest.raises(InvalidArgument):
        interior_l2(5, 0.1).check(np.ones(4))
