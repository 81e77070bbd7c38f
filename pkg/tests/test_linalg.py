import numpy as np
import pytest
import scipy.sparse as sp

from convens.errors import SingularMatrixError
from convens.linalg import (factorize, replace_rows_identity, solve_multi,
                            write_matrix_market, zero_rows)


def test_identity_solve(rng):
    n = 20
    fact = factorize(sp.eye(n, format="csr"))
    b = rng.standard_normal(n)
    assert np.allclose(fact.solve(b), b)


def test_small_spd_solve():
    A = sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    x = factorize(A).solve(np.array([3.0, 3.0]))
    assert np.allclose(x, [1.0, 1.0], atol=1e-14)


def test_tridiagonal_vs_dense(rng):
    n = 50
    main = 2.0 + rng.uniform(0, 1, n)
    off = rng.uniform(-0.5, 0.5, n - 1)
    A = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    b = rng.standard_normal(n)
    assert np.allclose(factorize(A).solve(b),
                       np.linalg.solve(A.toarray(), b), atol=1e-10)


def test_multi_rhs_bitwise_matches_single(rng):
    n = 40
    A = sp.csr_matrix(np.eye(n) + 0.1 * rng.standard_normal((n, n)))
    fact = factorize(A)
    B = rng.standard_normal((n, 5))
    X = solve_multi(fact, B)
    for j in range(5):
        assert X[:, j].tobytes() == fact.solve(B[:, j]).tobytes()
    # residual check
    assert np.max(np.abs(A @ X - B)) < 1e-10
    # 1-d input passes through
    assert np.array_equal(solve_multi(fact, B[:, 0]), fact.solve(B[:, 0]))


def test_solve_linearity(rng):
    n = 30
    A = sp.csr_matrix(np.eye(n) * 3.0 + sp.random(n, n, 0.2, random_state=1))
    fact = factorize(A)
    b1 = rng.standard_normal(n)
    b2 = rng.standard_normal(n)
    assert np.allclose(fact.solve(b1) + fact.solve(b2),
                       fact.solve(b1 + b2), atol=1e-11)


def test_lu_factors_reconstruct(rng):
    n = 25
    A = sp.csr_matrix(np.eye(n) * 4.0 + rng.standard_normal((n, n)))
    fact = factorize(A)
    # Pr A Pc = L U with Pr[perm_r[i], i] = Pc[i, perm_c[i]] = 1
    dense = A.toarray()
    P = dense[np.argsort(fact.perm_r)][:, fact.perm_c]
    assert np.allclose(P, (fact.L @ fact.U).toarray(), atol=1e-10)


def test_singular_matrix_raises():
    A = sp.csr_matrix(np.array([[1.0, 0.0, 0.0],
                                [0.0, 0.0, 0.0],
                                [0.0, 0.0, 1.0]]))
    with pytest.raises(SingularMatrixError) as err:
        factorize(A)
    assert err.value.pivot_index == 1


def test_structurally_singular_duplicate_rows():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SingularMatrixError):
        factorize(A)


def test_shape_validation(rng):
    with pytest.raises(ValueError):
        factorize(sp.csr_matrix(np.ones((2, 3))))
    fact = factorize(sp.eye(4, format="csr"))
    with pytest.raises(ValueError):
        fact.solve(np.ones(5))
    with pytest.raises(ValueError):
        solve_multi(fact, np.ones((5, 2)))


def test_replace_rows_identity(rng):
    A = sp.csr_matrix(rng.standard_normal((6, 6)))
    out = replace_rows_identity(A, np.array([1, 4])).toarray()
    expected = A.toarray().copy()
    expected[1] = 0.0
    expected[1, 1] = 1.0
    expected[4] = 0.0
    expected[4, 4] = 1.0
    assert np.allclose(out, expected)
    # original untouched
    assert A[1, 1] != 1.0 or not np.allclose(A.toarray()[1], expected[1])


def test_zero_rows(rng):
    A = sp.csr_matrix(rng.standard_normal((5, 7)))
    out = zero_rows(A, np.array([0, 3])).toarray()
    assert np.all(out[0] == 0.0)
    assert np.all(out[3] == 0.0)
    assert np.allclose(out[1], A.toarray()[1])


def test_write_matrix_market(tmp_path):
    A = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 2.0]]))
    path = tmp_path / "mat.mtx"
    write_matrix_market(path, A)
    from scipy.io import mmread
    assert np.allclose(mmread(str(path)).toarray(), A.toarray())
