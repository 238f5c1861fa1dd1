import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import slow_rank
from rankgeom.field import GF, FieldAutomorphism, automorphisms
from rankgeom.matrix import (
    Matrix,
    adjacency_chain,
    adjacent,
    all_matrices_array,
    apply_entrywise,
    batch_rank,
    column_space,
    distance,
    enumerate_matrices,
    enumerate_rank,
    kernel,
    rank,
    rank_lookup,
    rank_normal_form,
    rank_one_count,
    rank_one_decomposition,
    rank_one_factor,
    row_space,
    transpose,
)

FIELDS = [(2, 1), (3, 1), (2, 2), (5, 1), (3, 2)]


def matrices(draw_field=st.sampled_from(FIELDS), max_dim=4):
    @st.composite
    def build(draw):
        F = GF(*draw(draw_field))
        m = draw(st.integers(1, max_dim))
        n = draw(st.integers(1, max_dim))
        entries = draw(st.lists(st.lists(st.integers(0, F.order - 1), min_size=n, max_size=n), min_size=m, max_size=m))
        return Matrix(F, entries)

    return build()


def E(F, i, j, m=2, n=2):
    return Matrix.unit(F, m, n, i, j)


def test_rank_examples(F2):
    assert rank(Matrix.zeros(F2, 2, 2)) == 0
    assert rank(E(F2, 1, 1)) == 1
    assert rank(Matrix(F2, [[1, 1], [1, 0]])) == 2


def test_distance_and_adjacency_examples(F2):
    I = Matrix.identity(F2, 2)
    A = Matrix(F2, [[1, 1], [1, 0]])
    assert distance(A, A) == 0
    assert distance(E(F2, 1, 1), Matrix.zeros(F2, 2, 2)) == 1
    assert distance(I, Matrix(F2, [[1, 1], [0, 1]])) == 1
    assert adjacent(E(F2, 1, 1), Matrix.zeros(F2, 2, 2))
    assert not adjacent(A, A)
    assert not adjacent(E(F2, 1, 1), E(F2, 2, 2))


def test_matrix_code_is_little_endian_row_major(F3):
    assert Matrix.from_code(F3, 2, 2, 1) == E(F3, 1, 1)
    assert Matrix.from_code(F3, 2, 2, 3) == E(F3, 1, 2)
    for code in (0, 5, 40, 80):
        assert Matrix.from_code(F3, 2, 2, code).code == code


@given(matrices(max_dim=3))
def test_rank_matches_span_counting(A):
    assert rank(A) == slow_rank(A.field, A.tolist())


@pytest.mark.parametrize("pk,shape", [((2, 1), (2, 2)), ((3, 1), (2, 2)), ((2, 1), (2, 3)), ((2, 2), (2, 2))])
def test_batch_rank_exhaustive_against_oracle(pk, shape):
    F = GF(*pk)
    allm = all_matrices_array(F, *shape)
    fast = batch_rank(F, allm)
    for d, r in zip(allm, fast):
        assert r == slow_rank(F, d.tolist())


@given(matrices())
def test_rank_normal_form_postcondition(A):
    T, S, r = rank_normal_form(A)
    assert T.is_invertible() and S.is_invertible()
    N = Matrix.zeros(A.field, A.m, A.n).data.copy()
    for i in range(r):
        N[i, i] = 1
    assert (T @ A @ S).data.tolist() == N.tolist()
    assert r == rank(A)


def test_rank_normal_form_examples(F2):
    T, S, r = rank_normal_form(Matrix.zeros(F2, 2, 3))
    assert r == 0 and T == Matrix.identity(F2, 2) and S == Matrix.identity(F2, 3)
    T, S, r = rank_normal_form(Matrix.identity(F2, 2))
    assert r == 2 and T @ S == Matrix.identity(F2, 2)
    T, S, r = rank_normal_form(E(F2, 2, 1))
    assert T @ E(F2, 2, 1) @ S == E(F2, 1, 1)


def test_subspace_examples(F2):
    assert len(kernel(Matrix.zeros(F2, 2, 2))) == 2
    cs = column_space(E(F2, 1, 1))
    assert [c.tolist() for c in cs] == [[[1], [0]]]
    rs = row_space(Matrix(F2, [[1, 1], [1, 1]]))
    assert [r.tolist() for r in rs] == [[[1, 1]]]


@given(matrices())
def test_kernel_dimension_and_annihilation(A):
    ker = kernel(A)
    assert len(ker) == A.m - rank(A)
    for x in ker:
        assert (x @ A).is_zero()


def test_rank_one_factor_examples(F2, F3):
    col, row = rank_one_factor(E(F2, 1, 2))
    assert col.tolist() == [[1], [0]] and row.tolist() == [[0, 1]]
    col, row = rank_one_factor(Matrix(F2, [[1, 1], [1, 1]]))
    assert col.tolist() == [[1], [1]] and row.tolist() == [[1, 1]]
    A = Matrix(F3, [[0, 0], [2, 1]])
    col, row = rank_one_factor(A)
    assert row.tolist() == [[1, 2]]
    assert col @ row == A


@given(matrices())
def test_rank_one_factor_gauge(A):
    if rank(A) != 1:
        with pytest.raises(ValueError):
            rank_one_factor(A)
        return
    col, row = rank_one_factor(A)
    assert col @ row == A
    first = next(v for v in row.data[0] if v)
    assert first == 1


@given(matrices(), st.data())
def test_adjacency_chain_is_geodesic(A, data):
    F = A.field
    entries = data.draw(st.lists(st.lists(st.integers(0, F.order - 1), min_size=A.n, max_size=A.n), min_size=A.m, max_size=A.m))
    B = Matrix(F, entries)
    chain = adjacency_chain(A, B)
    assert chain[0] == A and chain[-1] == B
    assert len(chain) == distance(A, B) + 1
    assert all(adjacent(x, y) for x, y in zip(chain, chain[1:]))


def test_adjacency_chain_examples(F2):
    I = Matrix.identity(F2, 2)
    Z = Matrix.zeros(F2, 2, 2)
    assert adjacency_chain(I, I) == [I]
    assert adjacency_chain(Z, E(F2, 1, 1)) == [Z, E(F2, 1, 1)]
    assert adjacency_chain(Z, I) == [Z, E(F2, 1, 1), I]


@given(matrices())
def test_rank_one_decomposition_sums_back(A):
    parts = rank_one_decomposition(A)
    assert len(parts) == rank(A)
    total = Matrix.zeros(A.field, A.m, A.n)
    for P in parts:
        assert rank(P) == 1
        total = total + P
    assert total == A


def test_entrywise_and_transpose_examples(F2, F4):
    A = Matrix(F2, [[1, 0], [1, 1]])
    assert apply_entrywise(A, FieldAutomorphism(F2, 0)) == A
    assert transpose(E(F2, 1, 2)) == E(F2, 2, 1)
    X = Matrix(F4, [[2, 0], [0, 1]])
    assert apply_entrywise(X, FieldAutomorphism(F4, 1)) == Matrix(F4, [[3, 0], [0, 1]])


@given(matrices(draw_field=st.sampled_from([(2, 2), (2, 3), (3, 2)])))
def test_rank_invariant_under_semilinear_transpose(A):
    for aut in automorphisms(A.field):
        assert rank(transpose(apply_entrywise(A, aut))) == rank(A)


def test_enumeration_counts(F2, F3):
    assert len(list(enumerate_matrices(2, 2, F2))) == 16
    assert sum(1 for _ in enumerate_rank(2, 2, 1, F2)) == 9 == rank_one_count(2, 2, 2)
    assert sum(1 for _ in enumerate_rank(2, 2, 1, F3)) == 32 == rank_one_count(2, 2, 3)
    assert sum(1 for _ in enumerate_rank(2, 3, 1, F2)) == 21 == rank_one_count(2, 3, 2)


@pytest.mark.parametrize("pk,shape", [((2, 1), (2, 2)), ((3, 1), (2, 2)), ((2, 1), (2, 3)), ((2, 2), (2, 2))])
def test_rank_strata_partition_the_space(pk, shape):
    F = GF(*pk)
    m, n = shape
    sizes = [sum(1 for _ in enumerate_rank(m, n, r, F)) for r in range(min(m, n) + 1)]
    assert sum(sizes) == F.order ** (m * n)


def test_enumeration_is_code_ordered_and_restartable(F3):
    codes = [A.code for A in enumerate_matrices(2, 2, F3)]
    assert codes == list(range(81))
    assert [A.code for A in enumerate_matrices(2, 2, F3, start=70, chunk=4)] == list(range(70, 81))
    later = [A.code for A in enumerate_rank(2, 2, 1, F3, start=40)]
    assert later == [A.code for A in enumerate_rank(2, 2, 1, F3) if A.code >= 40]


def test_metric_axioms_exhaustive_m2_f2(F2):
    allm = all_matrices_array(F2, 2, 2)
    D = rank_lookup(F2, 2, 2)[
        np.array([[Matrix._wrap(F2, F2.sub_table[a, b]).code for b in allm] for a in allm])
    ]
    assert (D >= 0).all()
    assert ((D == 0) == np.eye(16, dtype=bool)).all()
    assert (D == D.T).all()
    assert (D[:, :, None] <= D[:, None, :] + D.T[None, :, :]).all()


@given(matrices(draw_field=st.just((2, 1)), max_dim=3), st.data())
def test_triangle_inequality_sampled(A, data):
    F = A.field
    draw = lambda: Matrix(F, data.draw(st.lists(st.lists(st.integers(0, 1), min_size=A.n, max_size=A.n), min_size=A.m, max_size=A.m)))
    B, C = draw(), draw()
    assert distance(A, C) <= distance(A, B) + distance(B, C)
    assert distance(A, B) == distance(B, A)


def test_parse_and_json(F3):
    A = Matrix.parse(F3, "[[1,2],[0,1]]")
    assert Matrix.from_json(F3, A.to_json()) == A
    assert A.to_json() == {"m": 2, "n": 2, "entries": [[1, 2], [0, 1]]}
    with pytest.raises(ValueError):
        Matrix.parse(F3, "[[1,3]]")
    with pytest.raises(ValueError):
        Matrix.parse(F3, "[[1,2],[1]]")


def test_inverse_and_arithmetic(F3):
    A = Matrix(F3, [[1, 2], [0, 1]])
    assert A @ A.inverse() == Matrix.identity(F3, 2)
    assert (A - A).is_zero()
    assert A + (-A) == Matrix.zeros(F3, 2, 2)
    with pytest.raises(ZeroDivisionError):
        Matrix(F3, [[1, 1], [1, 1]]).inverse()
    with pytest.raises(TypeError):
        A + Matrix.identity(GF(2), 2)
