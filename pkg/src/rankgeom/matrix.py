"""Matrices over a finite field, stored as integer code arrays.

A matrix's integer code is sum(entry_code[i] * q**i) over the row-major
entry sequence, so code 1 is E_{1,1}.  Enumeration streams follow that
order and can restart from any index.

Besides the Matrix value type this module holds the batched kernels
(``batch_rank``, ``batch_matmul``...) that the exhaustive checks use on
stacks of matrices shaped (N, m, n).
"""

from __future__ import annotations

import functools
import json
from typing import Iterator, Sequence

import numpy as np

from .field import FieldAutomorphism, FieldDescriptor, FieldElement

# ---------------------------------------------------------------------------
# batched kernels on (N, m, n) code arrays


def batch_rank(field: FieldDescriptor, arr) -> np.ndarray:
    """Ranks of a stack of matrices by forward elimination."""
    a = np.array(arr, dtype=np.int64, copy=True)
    if a.ndim == 2:
        a = a[None]
    N, m, n = a.shape
    rank = np.zeros(N, dtype=np.int64)
    if N == 0:
        return rank
    mul, sub, inv = field.mul_table, field.sub_table, field.inv_table
    rows = np.arange(m)
    for col in range(n):
        eligible = (rows[None, :] >= rank[:, None]) & (a[:, :, col] != 0)
        b = np.nonzero(eligible.any(axis=1))[0]
        if b.size == 0:
            continue
        r = rank[b]
        piv = eligible[b].argmax(axis=1)
        prow = a[b, piv].copy()
        a[b, piv] = a[b, r]
        prow = mul[inv[prow[:, col]][:, None], prow]
        a[b, r] = prow
        below = rows[None, :] > r[:, None]
        factor = np.where(below, a[b, :, col], 0)
        a[b] = sub[a[b], mul[factor[:, :, None], prow[:, None, :]]]
        rank[b] += 1
    return rank


def batch_matmul(field: FieldDescriptor, x, y) -> np.ndarray:
    """Product of broadcastable stacks (..., m, k) @ (..., k, n)."""
    x = np.asarray(x)
    y = np.asarray(y)
    add, mul = field.add_table, field.mul_table
    acc = mul[x[..., :, 0, None], y[..., None, 0, :]]
    for t in range(1, x.shape[-1]):
        acc = add[acc, mul[x[..., :, t, None], y[..., None, t, :]]]
    return acc


def codes_of(field: FieldDescriptor, arr) -> np.ndarray:
    """Integer codes of a stack of matrices (python ints if they overflow int64)."""
    arr = np.asarray(arr)
    flat = arr.reshape(arr.shape[0], -1)
    size = flat.shape[1]
    if field.order**size < 2**62:
        weights = field.order ** np.arange(size, dtype=np.int64)
        return flat @ weights
    return np.array([_code(field, row) for row in flat], dtype=object)


def _code(field: FieldDescriptor, flat) -> int:
    q = field.order
    c = 0
    for v in reversed(flat.tolist()):
        c = c * q + int(v)
    return c


def all_matrices_array(field: FieldDescriptor, m: int, n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Stack of the matrices with codes in [start, stop)."""
    total = field.order ** (m * n)
    stop = total if stop is None else min(stop, total)
    return matrices_from_codes(field, m, n, np.arange(start, stop, dtype=np.int64))


def matrices_from_codes(field: FieldDescriptor, m: int, n: int, codes) -> np.ndarray:
    q = field.order
    codes = np.asarray(codes, dtype=np.int64)
    digits = np.empty((codes.size, m * n), dtype=np.int64)
    for i in range(m * n):
        digits[:, i] = codes % q
        codes = codes // q
    return digits.reshape(-1, m, n)


@functools.lru_cache(maxsize=64)
def _rank_table(field: FieldDescriptor, m: int, n: int) -> np.ndarray:
    r = batch_rank(field, all_matrices_array(field, m, n))
    r.setflags(write=False)
    return r


def rank_lookup(field: FieldDescriptor, m: int, n: int) -> np.ndarray:
    """Rank of every matrix of M_{m x n}, indexed by code (small spaces only)."""
    if field.order ** (m * n) > 2**20:
        raise ValueError("matrix space too large for a rank table")
    return _rank_table(field, m, n)


# ---------------------------------------------------------------------------
# row reduction on a single matrix


def _rref(field: FieldDescriptor, a: np.ndarray) -> tuple[np.ndarray, list[int], np.ndarray]:
    """Reduced row echelon form with the left transform: returns (R, pivots, P) with P @ a = R.

    Leftmost pivot column, first nonzero row as pivot, pivots scaled to 1.
    """
    sub, mul, inv = field.sub_table, field.mul_table, field.inv_table
    R = np.array(a, dtype=np.int64, copy=True)
    m, n = R.shape
    P = _identity_array(m)
    pivots: list[int] = []
    r = 0
    for col in range(n):
        if r == m:
            break
        nz = np.nonzero(R[r:, col])[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            R[[r, i]] = R[[i, r]]
            P[[r, i]] = P[[i, r]]
        s = inv[R[r, col]]
        R[r] = mul[s, R[r]]
        P[r] = mul[s, P[r]]
        for i in range(m):
            if i != r and R[i, col]:
                f = R[i, col]
                R[i] = sub[R[i], mul[f, R[r]]]
                P[i] = sub[P[i], mul[f, P[r]]]
        pivots.append(col)
        r += 1
    return R, pivots, P


def _identity_array(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.int64)


# ---------------------------------------------------------------------------


class Matrix:
    """An immutable m x n matrix over a finite field."""

    __slots__ = ("field", "data", "_hash")

    def __init__(self, field: FieldDescriptor, entries):
        if isinstance(entries, Matrix):
            entries = entries.data
        if not isinstance(entries, np.ndarray):
            entries = [[_elt(field, e) for e in row] for row in entries]
        data = np.array(entries, dtype=np.int64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"matrix must be 2-dimensional with positive shape, got {data.shape}")
        if data.min() < 0 or data.max() >= field.order:
            raise ValueError(f"entries must be element codes in [0, {field.order})")
        data.setflags(write=False)
        self.field = field
        self.data = data
        self._hash = None

    @classmethod
    def _wrap(cls, field: FieldDescriptor, data: np.ndarray) -> Matrix:
        obj = cls.__new__(cls)
        data = np.ascontiguousarray(data, dtype=np.int64)
        data.setflags(write=False)
        obj.field = field
        obj.data = data
        obj._hash = None
        return obj

    # -- constructors --------------------------------------------------------

    @classmethod
    def zeros(cls, field, m, n) -> Matrix:
        return cls._wrap(field, np.zeros((m, n), dtype=np.int64))

    @classmethod
    def identity(cls, field, n) -> Matrix:
        return cls._wrap(field, _identity_array(n))

    @classmethod
    def unit(cls, field, m, n, i, j, value: int = 1) -> Matrix:
        """The matrix unit E_{i,j} (1-based indices), optionally scaled."""
        d = np.zeros((m, n), dtype=np.int64)
        d[i - 1, j - 1] = value
        return cls._wrap(field, d)

    @classmethod
    def from_code(cls, field, m, n, code: int) -> Matrix:
        q = field.order
        flat = []
        for _ in range(m * n):
            code, r = divmod(code, q)
            flat.append(r)
        if code:
            raise ValueError("code out of range for this shape")
        return cls._wrap(field, np.array(flat, dtype=np.int64).reshape(m, n))

    @classmethod
    def block(cls, A: Matrix, p: int, q: int) -> Matrix:
        """A placed in the top-left corner of a p x q zero matrix."""
        if A.m > p or A.n > q:
            raise ValueError(f"cannot embed {A.shape} into {(p, q)}")
        d = np.zeros((p, q), dtype=np.int64)
        d[: A.m, : A.n] = A.data
        return cls._wrap(A.field, d)

    @classmethod
    def row(cls, field, vec) -> Matrix:
        return cls(field, [list(vec)])

    @classmethod
    def column(cls, field, vec) -> Matrix:
        return cls(field, [[v] for v in vec])

    # -- basic protocol ------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def code(self) -> int:
        return _code(self.field, self.data.reshape(-1))

    def __getitem__(self, idx):
        v = self.data[idx]
        if np.ndim(v) == 0:
            return FieldElement(self.field, int(v))
        return v

    def tolist(self) -> list[list[int]]:
        return self.data.tolist()

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and self.shape == other.shape and np.array_equal(self.data, other.data)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.field, self.shape, self.data.tobytes()))
        return self._hash

    def __repr__(self):
        return f"Matrix({self.field!r}, {self.tolist()})"

    def _check(self, other: Matrix, same_shape=True):
        if not isinstance(other, Matrix):
            raise TypeError("expected a Matrix")
        if self.field != other.field:
            raise TypeError(f"mixed-field operands: {self.field!r} and {other.field!r}")
        if same_shape and self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: Matrix) -> Matrix:
        self._check(other)
        return Matrix._wrap(self.field, self.field.add_table[self.data, other.data])

    def __sub__(self, other: Matrix) -> Matrix:
        self._check(other)
        return Matrix._wrap(self.field, self.field.sub_table[self.data, other.data])

    def __neg__(self) -> Matrix:
        return Matrix._wrap(self.field, self.field.neg_table[self.data])

    def __matmul__(self, other: Matrix) -> Matrix:
        self._check(other, same_shape=False)
        if self.n != other.m:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        return Matrix._wrap(self.field, batch_matmul(self.field, self.data, other.data))

    def scale(self, c) -> Matrix:
        c = int(c)
        return Matrix._wrap(self.field, self.field.mul_table[c, self.data])

    @property
    def T(self) -> Matrix:
        return Matrix._wrap(self.field, self.data.T)

    def is_zero(self) -> bool:
        return not self.data.any()

    def rank(self) -> int:
        return len(_rref(self.field, self.data)[1])

    def inverse(self) -> Matrix:
        if self.m != self.n:
            raise ValueError("only square matrices are invertible")
        R, piv, P = _rref(self.field, self.data)
        if len(piv) != self.n:
            raise ZeroDivisionError("matrix is singular")
        return Matrix._wrap(self.field, P)

    def is_invertible(self) -> bool:
        return self.m == self.n and self.rank() == self.n

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {"m": self.m, "n": self.n, "entries": self.tolist()}

    @classmethod
    def from_json(cls, field: FieldDescriptor, obj) -> Matrix:
        if isinstance(obj, dict):
            M = cls(field, obj["entries"])
            if M.shape != (int(obj["m"]), int(obj["n"])):
                raise ValueError(f"declared shape {(obj['m'], obj['n'])} does not match entries {M.shape}")
            return M
        return cls(field, obj)

    @classmethod
    def parse(cls, field: FieldDescriptor, text: str) -> Matrix:
        """Inline bracket syntax such as ``"[[1,1],[1,0]]"`` with element codes."""
        return cls.from_json(field, json.loads(text))


def _elt(field: FieldDescriptor, e) -> int:
    if not isinstance(e, FieldElement):
        return int(e)
    if e.field != field:
        raise TypeError("entry belongs to a different field")
    return e.code


# ---------------------------------------------------------------------------
# operations


def _pair(A: Matrix, B: Matrix):
    A._check(B)


def rank(A: Matrix) -> int:
    return A.rank()


def distance(A: Matrix, B: Matrix) -> int:
    """Arithmetic distance rank(A - B)."""
    _pair(A, B)
    return (A - B).rank()


def adjacent(A: Matrix, B: Matrix) -> bool:
    return distance(A, B) == 1


def rank_normal_form(A: Matrix) -> tuple[Matrix, Matrix, int]:
    """Invertible T, S with T @ A @ S = [[I_r, 0], [0, 0]]."""
    F = A.field
    R, piv, P = _rref(F, A.data)
    r = len(piv)
    # Column permutation bringing pivots to the front, then clear the
    # non-pivot columns against them.
    order = piv + [j for j in range(A.n) if j not in piv]
    S = np.zeros((A.n, A.n), dtype=np.int64)
    for new, old in enumerate(order):
        S[old, new] = 1
    RS = R[:, order]
    # RS = [[I_r, X], [0, 0]]; right-multiply by [[I, -X], [0, I]].
    C = _identity_array(A.n)
    C[:r, r:] = F.neg_table[RS[:r, r:]]
    S = batch_matmul(F, S, C)
    return Matrix._wrap(F, P), Matrix._wrap(F, S), r


def row_space(A: Matrix) -> list[Matrix]:
    """Echelonized basis of the row space, as 1 x n matrices."""
    R, piv, _ = _rref(A.field, A.data)
    return [Matrix._wrap(A.field, R[i : i + 1]) for i in range(len(piv))]


def column_space(A: Matrix) -> list[Matrix]:
    """Echelonized basis of the column space, as m x 1 matrices."""
    return [v.T for v in row_space(A.T)]


def kernel(A: Matrix) -> list[Matrix]:
    """Basis of the left kernel {x : x A = 0}, as 1 x m row vectors."""
    return [v.T for v in right_kernel(A.T)]


def right_kernel(A: Matrix) -> list[Matrix]:
    """Basis of {y : A y = 0}, as n x 1 column vectors, echelonized."""
    F = A.field
    R, piv, _ = _rref(F, A.data)
    free = [j for j in range(A.n) if j not in piv]
    basis = []
    for f in free:
        v = np.zeros(A.n, dtype=np.int64)
        v[f] = 1
        for i, pc in enumerate(piv):
            v[pc] = F.neg_table[R[i, f]]
        basis.append(v)
    if not basis:
        return []
    R2, piv2, _ = _rref(F, np.array(basis))
    return [Matrix._wrap(F, R2[i : i + 1].T) for i in range(len(piv2))]


def span_basis(field: FieldDescriptor, vectors: Sequence) -> np.ndarray:
    """Echelonized basis (rows) of the span of the given flat vectors."""
    vecs = [np.asarray(v.data if isinstance(v, Matrix) else v, dtype=np.int64).reshape(-1) for v in vectors]
    if not vecs:
        return np.zeros((0, 0), dtype=np.int64)
    R, piv, _ = _rref(field, np.stack(vecs))
    return R[: len(piv)]


def rank_one_factor(A: Matrix) -> tuple[Matrix, Matrix]:
    """Factor a rank-one matrix as col @ row, the row's first nonzero entry being 1."""
    if A.rank() != 1:
        raise ValueError("rank_one_factor requires a rank-one matrix")
    F = A.field
    i = int(np.nonzero(A.data.any(axis=1))[0][0])
    row = A.data[i]
    j = int(np.nonzero(row)[0][0])
    s = F.inv_table[row[j]]
    row = F.mul_table[s, row]
    col = A.data[:, j].copy()
    return Matrix._wrap(F, col[:, None]), Matrix._wrap(F, row[None, :])


def rank_one_decomposition(A: Matrix) -> list[Matrix]:
    """Rank-one summands of A in pivot order of its row-reduced form."""
    F = A.field
    R, piv, P = _rref(F, A.data)
    Pinv = Matrix._wrap(F, P).inverse().data
    # A = P^{-1} R, so A = sum over pivot rows i of (column i of P^{-1}) (row i of R).
    return [
        Matrix._wrap(F, F.mul_table[Pinv[:, i, None], R[None, i, :]])
        for i in range(len(piv))
    ]


def adjacency_chain(A: Matrix, B: Matrix) -> list[Matrix]:
    """A = A_0, ..., A_r = B with consecutive terms adjacent, r = distance(A, B)."""
    _pair(A, B)
    chain = [A]
    cur = A
    for term in rank_one_decomposition(B - A):
        cur = cur + term
        chain.append(cur)
    return chain


def apply_entrywise(A: Matrix, aut: FieldAutomorphism) -> Matrix:
    if aut.field != A.field:
        raise TypeError("automorphism of a different field")
    if aut.is_identity:
        return A
    return Matrix._wrap(A.field, aut.table[A.data])


def transpose(A: Matrix) -> Matrix:
    return A.T


def enumerate_matrices(m: int, n: int, field: FieldDescriptor, start: int = 0, chunk: int = 4096) -> Iterator[Matrix]:
    """All q^(mn) matrices in code order, restartable from ``start``."""
    total = field.order ** (m * n)
    for lo in range(start, total, chunk):
        for d in all_matrices_array(field, m, n, lo, lo + chunk):
            yield Matrix._wrap(field, d)


def enumerate_rank(m: int, n: int, r: int, field: FieldDescriptor, start: int = 0, chunk: int = 4096) -> Iterator[Matrix]:
    """The rank-r matrices, in code order, from code ``start`` on."""
    if not 0 <= r <= min(m, n):
        raise ValueError(f"rank {r} impossible for shape {(m, n)}")
    total = field.order ** (m * n)
    for lo in range(start, total, chunk):
        block = all_matrices_array(field, m, n, lo, lo + chunk)
        for d in block[batch_rank(field, block) == r]:
            yield Matrix._wrap(field, d)


def rank_one_count(m: int, n: int, q: int) -> int:
    return (q**m - 1) * (q**n - 1) // (q - 1)
