from sagepy import linalg
from sagepy.errors import InvalidInputError
from hypothesis import given, settings, strategies as st
import numpy as np
import pytest


def check_penrose(m, p, tol=1e-8):
    scale = max(1.0, np.abs(m).max(), np.abs(p).max())
    assert np.allclose(m @ p @ m, m, atol=tol * scale)
    assert np.allclose(p @ m @ p, p, atol=tol * scale)
    assert np.allclose((m @ p).T, m @ p, atol=tol * scale)
    assert np.allclose((p @ m).T, p @ m, atol=tol * scale)


def test_thin_svd():
    rng = np.random.default_rng(0)
    for shape in ((7, 4), (4, 7), (5, 5), (1, 3)):
        m = rng.standard_normal(shape)
        u, s, v = linalg.thin_svd(m)
        k = min(shape)
        assert u.shape == (shape[0], k) and s.shape == (k,) and v.shape == (shape[1], k)
        assert np.allclose((u * s) @ v.T, m, atol=1e-12)
        assert np.all(np.diff(s) <= 0)
        assert np.allclose(u.T @ u, np.eye(k), atol=1e-12)

        # Largest-magnitude entry of every left vector is non-negative
        pivots = np.argmax(np.abs(u), axis=0)
        assert np.all(u[pivots, np.arange(k)] >= 0)


def test_thin_svd_deterministic():
    m = np.random.default_rng(1).standard_normal((6, 3))
    a = linalg.thin_svd(m)
    b = linalg.thin_svd(m.copy())
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_thin_svd_errors():
    with pytest.raises(InvalidInputError):
        linalg.thin_svd(np.zeros((0, 3)))
    with pytest.raises(InvalidInputError):
        linalg.thin_svd(np.ones(3))
    with pytest.raises(InvalidInputError):
        linalg.thin_svd([[1.0, np.nan]])


def test_pseudo_inverse():
    rng = np.random.default_rng(2)
    m = rng.standard_normal((6, 3))
    check_penrose(m, linalg.pseudo_inverse(m))

    # Rank deficient: third column is the sum of the first two
    m[:, 2] = m[:, 0] + m[:, 1]
    check_penrose(m, linalg.pseudo_inverse(m))

    p = linalg.pseudo_inverse(np.diag([2.0, 0.0]))
    assert np.allclose(p, np.diag([0.5, 0.0]))
    assert np.allclose(linalg.pseudo_inverse(np.zeros((2, 3))), np.zeros((3, 2)))


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_pseudo_inverse_property(rows, cols, seed):
    m = np.random.default_rng(seed).standard_normal((rows, cols))
    p = linalg.pseudo_inverse(m)
    assert p.shape == (cols, rows)
    check_penrose(m, p)


def test_psd_sqrt():
    x = np.random.default_rng(3).standard_normal((4, 6))
    s = x @ x.T
    r = linalg.psd_sqrt(s)
    assert np.allclose(r, r.T)
    assert np.allclose(r @ r, s, atol=1e-10)
    assert np.allclose(linalg.psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    # Rounding-level negative eigenvalues are clamped
    r = linalg.psd_sqrt(np.diag([1.0, -1e-12]))
    assert np.allclose(r, np.diag([1.0, 0.0]))


def test_psd_sqrt_errors():
    with pytest.raises(InvalidInputError):
        linalg.psd_sqrt([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(InvalidInputError):
        linalg.psd_sqrt(np.diag([1.0, -1.0]))
    with pytest.raises(InvalidInputError):
        linalg.psd_sqrt(np.ones((2, 3)))

def test_joint_diagonalize():
    rng = np.random.default_rng(2)
    n, k = 6, 5
    q0, _ = np.linalg.qr(rng.standard_normal((n, n)))
    diags = rng.uniform(0.1, 3.0, size=(k, n))
    mats = np.stack([(q0 * d) @ q0.T for d in diags])
    v = linalg.joint_diagonalize(mats)
    assert np.allclose(v.T @ v, np.eye(n), atol=1e-12)
    for m in mats:
        rotated = v.T @ m @ v
        assert np.abs(rotated - np.diag(np.diag(rotated))).max() < 1e-8
    # The common eigenbasis is recovered up to order and sign
    overlap = np.abs(v.T @ q0)
    assert np.allclose(np.sort(overlap, axis=1)[:, -1], 1.0, atol=1e-8)
    assert np.array_equal(v, linalg.joint_diagonalize(mats))

    # A single matrix is plainly diagonalised
    v = linalg.joint_diagonalize(mats[0])
    rotated = v.T @ mats[0] @ v
    assert np.abs(rotated - np.diag(np.diag(rotated))).max() < 1e-8


def test_joint_diagonalize_errors():
    with pytest.raises(InvalidInputError):
        linalg.joint_diagonalize(np.ones((2, 3, 4)))
    with pytest.raises(InvalidInputError):
        linalg.joint_diagonalize(np.ones(3))


if __name__ == "__main__":
    test_thin_svd()
    test_thin_svd_deterministic()
    test_thin_svd_errors()
    test_pseudo_inverse()
    test_psd_sqrt()
    test_psd_sqrt_errors()
    test_joint_diagonalize()
    test_joint_diagonalize_errors()
