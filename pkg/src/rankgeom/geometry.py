"""Projective points, the pencils R_d / L_e, and orthocomplements.

Row vectors live in F^n and column vectors in the column space F^m; a
row-side point d gives the pencil R_d of matrices whose rows all lie in d,
a column-side point e the pencil L_e of matrices whose columns lie in e.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .field import FieldDescriptor
from .matrix import (
    Matrix,
    all_matrices_array,
    batch_matmul,
    batch_rank,
    right_kernel,
    span_basis,
)

ROW, COL = "row", "col"


def _normalize(field: FieldDescriptor, vec) -> tuple[int, ...]:
    vec = np.asarray(vec, dtype=np.int64).reshape(-1)
    nz = np.nonzero(vec)[0]
    if nz.size == 0:
        raise ValueError("the zero vector spans no projective point")
    s = field.inv_table[vec[nz[0]]]
    return tuple(int(c) for c in field.mul_table[s, vec])


@dataclass(frozen=True)
class ProjectivePoint:
    """A 1-dimensional subspace, stored by its canonical representative."""

    field: FieldDescriptor
    side: str
    rep: tuple[int, ...]

    def __post_init__(self):
        if self.side not in (ROW, COL):
            raise ValueError(f"side must be 'row' or 'col', got {self.side!r}")
        if _normalize(self.field, self.rep) != tuple(self.rep):
            raise ValueError(f"{self.rep} is not a canonical representative")

    @classmethod
    def spanned_by(cls, field: FieldDescriptor, vec, side: str) -> ProjectivePoint:
        if isinstance(vec, Matrix):
            vec = vec.data
        return cls(field, side, _normalize(field, vec))

    @property
    def ambient(self) -> int:
        return len(self.rep)

    @property
    def vector(self) -> Matrix:
        """The representative as a 1 x n row or an m x 1 column matrix."""
        v = np.array(self.rep, dtype=np.int64)
        return Matrix._wrap(self.field, v[None, :] if self.side == ROW else v[:, None])

    @property
    def pivot(self) -> int:
        return next(i for i, c in enumerate(self.rep) if c)

    def __lt__(self, other: ProjectivePoint):
        return (self.side, self.rep) < (other.side, other.rep)

    def to_json(self) -> dict:
        return {"side": self.side, "rep": list(self.rep)}

    @classmethod
    def from_json(cls, field: FieldDescriptor, obj) -> ProjectivePoint:
        return cls(field, obj["side"], tuple(int(c) for c in obj["rep"]))


def proj_points(ambient: int, side: str, field: FieldDescriptor) -> list[ProjectivePoint]:
    """All (q^ambient - 1)/(q - 1) points, in lexicographic order of representatives."""
    if ambient < 1:
        raise ValueError("ambient dimension must be >= 1")
    q = field.order
    pts = []
    for lead in range(ambient):
        for tail in itertools.product(range(q), repeat=ambient - lead - 1):
            pts.append((0,) * lead + (1,) + tail)
    pts.sort()
    return [ProjectivePoint(field, side, rep) for rep in pts]


def basis_vector(field: FieldDescriptor, ambient: int, i: int, side: str) -> ProjectivePoint:
    """The point spanned by the i-th standard basis vector (1-based)."""
    rep = [0] * ambient
    rep[i - 1] = 1
    return ProjectivePoint(field, side, tuple(rep))


def row_point(A: Matrix) -> ProjectivePoint:
    """The row-space point of a rank-one matrix."""
    i = int(np.nonzero(A.data.any(axis=1))[0][0])
    return ProjectivePoint.spanned_by(A.field, A.data[i], ROW)


def col_point(A: Matrix) -> ProjectivePoint:
    """The column-space point of a rank-one matrix."""
    j = int(np.nonzero(A.data.any(axis=0))[0][0])
    return ProjectivePoint.spanned_by(A.field, A.data[:, j], COL)


# ---------------------------------------------------------------------------
# subspaces and orthocomplements


@dataclass(frozen=True)
class Subspace:
    """A subspace of F^n (row side) or of the column space, by echelon basis."""

    field: FieldDescriptor
    side: str
    ambient: int
    basis: tuple[tuple[int, ...], ...]

    @classmethod
    def span(cls, field: FieldDescriptor, side: str, ambient: int, vectors: Iterable) -> Subspace:
        vecs = [np.asarray(v.data if isinstance(v, Matrix) else v).reshape(-1) for v in vectors]
        B = span_basis(field, vecs) if vecs else np.zeros((0, ambient), dtype=np.int64)
        return cls(field, side, ambient, tuple(tuple(int(c) for c in row) for row in B))

    @classmethod
    def of_point(cls, point: ProjectivePoint) -> Subspace:
        return cls(point.field, point.side, point.ambient, (point.rep,))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def as_point(self) -> ProjectivePoint:
        if self.dim != 1:
            raise ValueError("subspace is not 1-dimensional")
        return ProjectivePoint(self.field, self.side, self.basis[0])

    def contains(self, vec) -> bool:
        vec = np.asarray(vec.data if isinstance(vec, Matrix) else vec).reshape(-1)
        return Subspace.span(self.field, self.side, self.ambient, list(self.basis) + [vec]).dim == self.dim

    def __le__(self, other: Subspace) -> bool:
        return all(other.contains(v) for v in self.basis)


def orthocomplement(sub: ProjectivePoint | Subspace) -> Subspace:
    """The annihilator on the opposite side: {v : w . v = 0 for all w in sub}."""
    if isinstance(sub, ProjectivePoint):
        sub = Subspace.of_point(sub)
    other = COL if sub.side == ROW else ROW
    F, n = sub.field, sub.ambient
    if sub.dim == 0:
        return Subspace.span(F, other, n, np.eye(n, dtype=np.int64))
    ker = right_kernel(Matrix._wrap(F, np.array(sub.basis)))
    return Subspace.span(F, other, n, ker)


def dot(field: FieldDescriptor, u, v) -> int:
    u = np.asarray(u).reshape(-1)
    v = np.asarray(v).reshape(-1)
    prod = field.mul_table[u, v]
    acc = 0
    for c in prod:
        acc = field.add_table[acc, c]
    return int(acc)


# ---------------------------------------------------------------------------
# pencils


@dataclass(frozen=True)
class Pencil:
    """R_d (rows in d) or L_e (columns in e) inside M_{m x n}."""

    kind: str
    point: ProjectivePoint
    shape: tuple[int, int]

    def __post_init__(self):
        m, n = self.shape
        if self.kind == "R":
            if self.point.side != ROW or self.point.ambient != n:
                raise ValueError("an R-pencil needs a row point of dimension n")
        elif self.kind == "L":
            if self.point.side != COL or self.point.ambient != m:
                raise ValueError("an L-pencil needs a column point of dimension m")
        else:
            raise ValueError(f"pencil kind must be 'R' or 'L', got {self.kind!r}")

    @property
    def field(self) -> FieldDescriptor:
        return self.point.field

    @property
    def size(self) -> int:
        m, n = self.shape
        return self.field.order ** (m if self.kind == "R" else n)

    def member_array(self) -> np.ndarray:
        """Members as an (N, m, n) stack, ordered by their coordinate vector's code."""
        m, n = self.shape
        F = self.field
        rep = np.array(self.point.rep, dtype=np.int64)
        if self.kind == "R":
            coords = all_matrices_array(F, m, 1)
            return F.mul_table[coords, rep[None, None, :]]
        coords = all_matrices_array(F, 1, n)
        return F.mul_table[rep[None, :, None], coords]

    def members(self) -> list[Matrix]:
        return [Matrix._wrap(self.field, d) for d in self.member_array()]

    def coordinates(self, M: Matrix) -> tuple[int, ...]:
        """Coordinate vector of a member under the representative's parametrization."""
        if self.kind == "R":
            return tuple(int(c) for c in M.data[:, self.point.pivot])
        return tuple(int(c) for c in M.data[self.point.pivot, :])

    def contains(self, M: Matrix) -> bool:
        if M.shape != self.shape or M.field != self.field:
            return False
        coords = np.array(self.coordinates(M))
        rep = np.array(self.point.rep)
        if self.kind == "R":
            rebuilt = self.field.mul_table[coords[:, None], rep[None, :]]
        else:
            rebuilt = self.field.mul_table[rep[:, None], coords[None, :]]
        return np.array_equal(rebuilt, M.data)

    def to_json(self) -> dict:
        return {"kind": self.kind, "point": self.point.to_json(), "shape": list(self.shape)}

    @classmethod
    def from_json(cls, field: FieldDescriptor, obj) -> Pencil:
        return cls(obj["kind"], ProjectivePoint.from_json(field, obj["point"]), tuple(obj["shape"]))


def R_pencil(point: ProjectivePoint, m: int) -> Pencil:
    return Pencil("R", point, (m, point.ambient))


def L_pencil(point: ProjectivePoint, n: int) -> Pencil:
    return Pencil("L", point, (point.ambient, n))


def pencils(m: int, n: int, field: FieldDescriptor) -> list[Pencil]:
    """Every R-pencil then every L-pencil of M_{m x n}."""
    return [R_pencil(d, m) for d in proj_points(n, ROW, field)] + [
        L_pencil(e, n) for e in proj_points(m, COL, field)
    ]


def pencil_members(P: Pencil) -> list[Matrix]:
    return P.members()


def rank1_idempotent_in(d: ProjectivePoint, e: ProjectivePoint) -> Matrix | None:
    """The rank-one idempotent of R_d cap L_e, or None when d = e-perp.

    With d spanned by x and e by the column y, the candidate is
    y x / (x y): it exists exactly when x y != 0.
    """
    if d.side != ROW or e.side != COL or d.ambient != e.ambient:
        raise ValueError("need a row point and a column point of the same dimension")
    F = d.field
    s = dot(F, d.rep, e.rep)
    if s == 0:
        return None
    x = np.array(d.rep)
    y = F.mul_table[F.inv_table[s], np.array(e.rep)]
    return Matrix._wrap(F, F.mul_table[y[:, None], x[None, :]])


def idempotents_of_rank(n: int, r: int, field: FieldDescriptor) -> list[Matrix]:
    if not 0 <= r <= n:
        raise ValueError("need 0 <= r <= n")
    allm = all_matrices_array(field, n, n)
    sq = batch_matmul(field, allm, allm)
    keep = (sq == allm).all(axis=(1, 2)) & (batch_rank(field, allm) == r)
    return [Matrix._wrap(field, d) for d in allm[keep]]


def adjacent_in_pencil(P: Pencil, A: Matrix) -> list[Matrix]:
    """Members of the pencil adjacent to a rank-two matrix A."""
    if A.shape != P.shape:
        raise ValueError("pencil and matrix live in different spaces")
    if A.rank() != 2:
        raise ValueError("adjacent_in_pencil requires a rank-two matrix")
    F = A.field
    mem = P.member_array()
    diff = F.sub_table[mem, A.data[None]]
    return [Matrix._wrap(F, d) for d in mem[batch_rank(F, diff) == 1]]


def is_affine_line(field: FieldDescriptor, vectors: Sequence[Sequence[int]]) -> bool:
    """True when the vectors form exactly one affine line {u + t v : t in F}."""
    vecs = {tuple(int(c) for c in v) for v in vectors}
    if len(vecs) != field.order or len(vectors) != len(vecs):
        return False
    u = np.array(min(vecs))
    diffs = [field.sub_table[np.array(w), u] for w in vecs if w != tuple(u)]
    if not diffs:
        return field.order == 1
    dirn = span_basis(field, diffs)
    if dirn.shape[0] != 1:
        return False
    line = {tuple(int(c) for c in field.add_table[u, field.mul_table[t, dirn[0]]]) for t in range(field.order)}
    return line == vecs


def is_adjacent_set(S: Iterable[Matrix]) -> bool:
    S = list(dict.fromkeys(S))
    if len(S) < 2:
        return True
    F = S[0].field
    arr = np.stack([M.data for M in S])
    i, j = np.triu_indices(len(S), 1)
    return bool((batch_rank(F, F.sub_table[arr[i], arr[j]]) == 1).all())


def maximal_adjacent_cover(S: Iterable[Matrix]) -> Pencil | None:
    """A pencil containing the adjacent set S (which must contain 0).

    R-pencils are preferred whenever both kinds fit; S = {0} gives R_{e_1}.
    """
    S = list(dict.fromkeys(S))
    if not S:
        raise ValueError("empty set")
    F = S[0].field
    m, n = S[0].shape
    if not any(M.is_zero() for M in S):
        raise ValueError("maximal_adjacent_cover needs 0 in the set")
    if not is_adjacent_set(S):
        raise ValueError("set is not adjacent")
    nonzero = [M for M in S if not M.is_zero()]
    if not nonzero:
        return R_pencil(basis_vector(F, n, 1, ROW), m)
    rows = {row_point(M) for M in nonzero}
    if len(rows) == 1:
        return R_pencil(rows.pop(), m)
    cols = {col_point(M) for M in nonzero}
    if len(cols) == 1:
        return L_pencil(cols.pop(), n)
    return None
