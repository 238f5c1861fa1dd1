"""Standard adjacency preservers, tabulated maps and the degeneracy test.

A map between matrix spaces is handled as a full table: ``outputs[i]`` is
the image of the domain matrix with code ``i``.  Standard maps are
A -> T [[A^tau, 0], [0, 0]] S + R, optionally transposing A^tau before it
is placed in the corner.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterator

import numpy as np

from .field import FieldAutomorphism, FieldDescriptor
from .geometry import COL, ROW, ProjectivePoint, proj_points
from .matrix import (
    Matrix,
    all_matrices_array,
    batch_matmul,
    batch_rank,
    codes_of,
    matrices_from_codes,
    rank_lookup,
)

Shape = tuple[int, int]


@dataclass(frozen=True)
class StandardMapSpec:
    T: Matrix
    S: Matrix
    aut: FieldAutomorphism
    transposed: bool
    R: Matrix
    domain: Shape
    codomain: Shape

    def __post_init__(self):
        m, n = self.domain
        p, q = self.codomain
        object.__setattr__(self, "domain", (int(m), int(n)))
        object.__setattr__(self, "codomain", (int(p), int(q)))
        F = self.field
        for M in (self.S, self.R):
            if M.field != F:
                raise TypeError("spec matrices must share one field")
        if self.aut.field != F:
            raise TypeError("automorphism of a different field")
        if self.T.shape != (p, p) or self.S.shape != (q, q) or self.R.shape != (p, q):
            raise ValueError("T, S, R must be p x p, q x q and p x q")
        if not self.T.is_invertible() or not self.S.is_invertible():
            raise ValueError("T and S must be invertible")
        a, b = (n, m) if self.transposed else (m, n)
        if a > p or b > q:
            raise ValueError(f"block of shape {(a, b)} does not fit in {(p, q)}")

    @property
    def field(self) -> FieldDescriptor:
        return self.T.field

    def to_json(self) -> dict:
        return {
            "field": self.field.to_json(),
            "domain": list(self.domain),
            "codomain": list(self.codomain),
            "T": self.T.to_json(),
            "S": self.S.to_json(),
            "aut": self.aut.j,
            "transposed": bool(self.transposed),
            "R": self.R.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> StandardMapSpec:
        F = FieldDescriptor.from_json(obj["field"])
        return cls(
            T=Matrix.from_json(F, obj["T"]),
            S=Matrix.from_json(F, obj["S"]),
            aut=FieldAutomorphism(F, int(obj.get("aut", 0))),
            transposed=bool(obj.get("transposed", False)),
            R=Matrix.from_json(F, obj["R"]),
            domain=tuple(obj["domain"]),
            codomain=tuple(obj["codomain"]),
        )


def identity_spec(field: FieldDescriptor, m: int, n: int, p: int | None = None, q: int | None = None) -> StandardMapSpec:
    p = m if p is None else p
    q = n if q is None else q
    return StandardMapSpec(
        Matrix.identity(field, p),
        Matrix.identity(field, q),
        FieldAutomorphism(field, 0),
        False,
        Matrix.zeros(field, p, q),
        (m, n),
        (p, q),
    )


def _eval_stack(spec: StandardMapSpec, arr: np.ndarray) -> np.ndarray:
    F = spec.field
    p, q = spec.codomain
    X = spec.aut.table[arr]
    if spec.transposed:
        X = np.swapaxes(X, 1, 2)
    N, a, b = X.shape
    E = np.zeros((N, p, q), dtype=np.int64)
    E[:, :a, :b] = X
    out = batch_matmul(F, batch_matmul(F, spec.T.data[None], E), spec.S.data[None])
    return F.add_table[out, spec.R.data[None]]


def eval_standard(spec: StandardMapSpec, A: Matrix) -> Matrix:
    if A.shape != spec.domain:
        raise ValueError(f"matrix of shape {A.shape} outside the domain {spec.domain}")
    if A.field != spec.field:
        raise TypeError("matrix over a different field")
    return Matrix._wrap(spec.field, _eval_stack(spec, A.data[None])[0])


@functools.lru_cache(maxsize=16)
def general_linear(n: int, field: FieldDescriptor) -> tuple[Matrix, ...]:
    """All invertible n x n matrices, in code order (small cases only)."""
    allm = all_matrices_array(field, n, n)
    return tuple(Matrix._wrap(field, d) for d in allm[batch_rank(field, allm) == n])


def random_invertible(field: FieldDescriptor, n: int, rng: np.random.Generator) -> Matrix:
    while True:
        M = Matrix._wrap(field, rng.integers(0, field.order, size=(n, n)))
        if M.is_invertible():
            return M


def random_standard_spec(
    field: FieldDescriptor,
    domain: Shape,
    codomain: Shape,
    rng: np.random.Generator,
    transposed: bool | None = None,
    translate: bool = True,
) -> StandardMapSpec:
    m, n = domain
    p, q = codomain
    fits = [t for t in (False, True) if ((n, m) if t else (m, n))[0] <= p and ((n, m) if t else (m, n))[1] <= q]
    if transposed is None:
        if not fits:
            raise ValueError(f"no standard map from {domain} to {codomain}")
        transposed = bool(fits[rng.integers(len(fits))])
    R = Matrix._wrap(field, rng.integers(0, field.order, size=(p, q))) if translate else Matrix.zeros(field, p, q)
    return StandardMapSpec(
        random_invertible(field, p, rng),
        random_invertible(field, q, rng),
        FieldAutomorphism(field, int(rng.integers(field.k))),
        transposed,
        R,
        (m, n),
        (p, q),
    )


# ---------------------------------------------------------------------------
# tabulated maps


@dataclass(frozen=True, eq=False)
class TabulatedMap:
    field: FieldDescriptor
    domain: Shape
    codomain: Shape
    outputs: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        m, n = self.domain
        p, q = self.codomain
        object.__setattr__(self, "domain", (int(m), int(n)))
        object.__setattr__(self, "codomain", (int(p), int(q)))
        out = np.ascontiguousarray(self.outputs, dtype=np.int64)
        if out.shape != (self.size, p, q):
            raise ValueError(f"table must hold {self.size} matrices of shape {(p, q)}, got {out.shape}")
        if out.size and (out.min() < 0 or out.max() >= self.field.order):
            raise ValueError("table entries must be element codes")
        out.setflags(write=False)
        object.__setattr__(self, "outputs", out)

    @property
    def size(self) -> int:
        m, n = self.domain
        return self.field.order ** (m * n)

    def __len__(self):
        return self.size

    def __eq__(self, other):
        if not isinstance(other, TabulatedMap):
            return NotImplemented
        return (
            self.field == other.field
            and self.domain == other.domain
            and self.codomain == other.codomain
            and np.array_equal(self.outputs, other.outputs)
        )

    def __hash__(self):
        return hash((self.field, self.domain, self.codomain, self.outputs.tobytes()))

    def __call__(self, A: Matrix) -> Matrix:
        if A.shape != self.domain:
            raise ValueError("matrix outside the domain")
        return Matrix._wrap(self.field, self.outputs[A.code])

    def image_of_code(self, code: int) -> Matrix:
        return Matrix._wrap(self.field, self.outputs[code])

    @functools.cached_property
    def domain_array(self) -> np.ndarray:
        return all_matrices_array(self.field, *self.domain)

    def image_codes(self) -> np.ndarray:
        return codes_of(self.field, self.outputs)

    def range(self) -> list[Matrix]:
        _, idx = np.unique(self.image_codes(), return_index=True)
        return [Matrix._wrap(self.field, self.outputs[i]) for i in sorted(idx)]

    def translated(self, R: Matrix, sign: int = 1) -> TabulatedMap:
        """The map A -> phi(A) + R (or - R when sign is -1)."""
        op = self.field.add_table if sign > 0 else self.field.sub_table
        return TabulatedMap(self.field, self.domain, self.codomain, op[self.outputs, R.data[None]])

    def transposed(self) -> TabulatedMap:
        p, q = self.codomain
        return TabulatedMap(self.field, self.domain, (q, p), np.swapaxes(self.outputs, 1, 2))

    @classmethod
    def from_function(cls, field, domain: Shape, codomain: Shape, fn: Callable[[Matrix], Matrix]) -> TabulatedMap:
        dom = all_matrices_array(field, *domain)
        out = np.stack([fn(Matrix._wrap(field, d)).data for d in dom])
        return cls(field, domain, codomain, out)

    def to_json(self) -> dict:
        p, q = self.codomain
        return {
            "field": self.field.to_json(),
            "domain": list(self.domain),
            "codomain": list(self.codomain),
            "outputs": [{"m": p, "n": q, "entries": o.tolist()} for o in self.outputs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> TabulatedMap:
        F = FieldDescriptor.from_json(obj["field"])
        p, q = obj["codomain"]
        outs = []
        for i, o in enumerate(obj["outputs"]):
            M = Matrix.from_json(F, o)
            if M.shape != (p, q):
                raise ValueError(f"output {i} has shape {M.shape}, expected {(p, q)}")
            outs.append(M.data)
        arr = np.stack(outs) if outs else np.zeros((0, p, q), dtype=np.int64)
        return cls(F, tuple(obj["domain"]), (p, q), arr)


def tabulate(spec: StandardMapSpec) -> TabulatedMap:
    dom = all_matrices_array(spec.field, *spec.domain)
    return TabulatedMap(spec.field, spec.domain, spec.codomain, _eval_stack(spec, dom))


def make_degenerate_vec(m: int, n: int, field: FieldDescriptor, q_target: int = 1) -> TabulatedMap:
    """A -> (vec A) x with x the first standard row vector; codomain is mn x q_target."""
    if q_target < 1:
        raise ValueError("q_target must be >= 1")
    dom = all_matrices_array(field, m, n)
    out = np.zeros((dom.shape[0], m * n, q_target), dtype=np.int64)
    out[:, :, 0] = dom.reshape(dom.shape[0], -1)
    return TabulatedMap(field, (m, n), (m * n, q_target), out)


# ---------------------------------------------------------------------------
# unit balls and adjacency checks


@functools.lru_cache(maxsize=64)
def _rank_le1_offsets(field: FieldDescriptor, m: int, n: int) -> np.ndarray:
    """0 followed by every rank-one m x n matrix (as col @ canonical row), in code order."""
    cols = all_matrices_array(field, m, 1)[1:]
    rows = np.array([p.rep for p in proj_points(n, ROW, field)], dtype=np.int64)
    r1 = field.mul_table[cols[:, None, :, :], rows[None, :, None, :]].reshape(-1, m, n)
    r1 = r1[np.argsort(codes_of(field, r1), kind="stable")]
    out = np.concatenate([np.zeros((1, m, n), dtype=np.int64), r1])
    out.setflags(write=False)
    return out


def rank_le1_matrices(m: int, n: int, field: FieldDescriptor) -> list[Matrix]:
    return [Matrix._wrap(field, d) for d in _rank_le1_offsets(field, m, n)]


def _ball_codes(field: FieldDescriptor, m: int, n: int, codes: np.ndarray) -> np.ndarray:
    """Codes of every ball member, shape (len(codes), K); column 0 is the center."""
    off = _rank_le1_offsets(field, m, n)
    centers = matrices_from_codes(field, m, n, codes)
    sums = field.add_table[centers[:, None], off[None]]
    K = off.shape[0]
    return codes_of(field, sums.reshape(-1, m, n)).reshape(-1, K)


def unit_ball(A: Matrix) -> list[Matrix]:
    """A + every matrix of rank at most one; A itself comes first."""
    off = _rank_le1_offsets(A.field, *A.shape)
    return [Matrix._wrap(A.field, d) for d in A.field.add_table[A.data[None], off]]


@dataclass(frozen=True)
class PreservationReport:
    preserves_adjacency: bool
    preserves_both_directions: bool
    contraction_ok: bool
    first_violation: tuple[int, int] | None = None
    violation_kind: str | None = None

    def to_json(self) -> dict:
        return {
            "preserves_adjacency": self.preserves_adjacency,
            "preserves_both_directions": self.preserves_both_directions,
            "contraction_ok": self.contraction_ok,
            "first_violation": list(self.first_violation) if self.first_violation else None,
            "violation_kind": self.violation_kind,
        }


def _image_distances(field: FieldDescriptor, outputs: np.ndarray, i: np.ndarray, j: np.ndarray, chunk: int = 1 << 18) -> np.ndarray:
    out = np.empty(i.size, dtype=np.int64)
    for lo in range(0, i.size, chunk):
        a, b = i[lo : lo + chunk], j[lo : lo + chunk]
        out[lo : lo + chunk] = batch_rank(field, field.sub_table[outputs[a], outputs[b]])
    return out


def preserves_adjacency(phi: TabulatedMap) -> tuple[int, int] | None:
    """First adjacent domain pair (in code order) whose images are not adjacent, or None."""
    m, n = phi.domain
    codes = np.arange(phi.size)
    ball = _ball_codes(phi.field, m, n, codes)[:, 1:]
    i = np.repeat(codes, ball.shape[1])
    j = ball.reshape(-1)
    keep = i < j
    i, j = i[keep], j[keep]
    bad = _image_distances(phi.field, phi.outputs, i, j) != 1
    if not bad.any():
        return None
    pairs = sorted(zip(i[bad].tolist(), j[bad].tolist()))
    return pairs[0]


def check_preserver(phi: TabulatedMap, chunk: int = 1 << 18) -> PreservationReport:
    """Exhaustive scan over all unordered domain pairs."""
    F = phi.field
    m, n = phi.domain
    N = phi.size
    ranks = rank_lookup(F, m, n)
    dom = phi.domain_array
    one_way = both = contraction = True
    first_one = first_both = first_con = None
    weights = F.order ** np.arange(m * n, dtype=np.int64)
    for lo in range(0, N, max(1, chunk // max(N, 1))):
        hi = min(N, lo + max(1, chunk // max(N, 1)))
        ii, jj = [], []
        for a in range(lo, hi):
            ii.append(np.full(N - a - 1, a, dtype=np.int64))
            jj.append(np.arange(a + 1, N, dtype=np.int64))
        i = np.concatenate(ii)
        j = np.concatenate(jj)
        if i.size == 0:
            continue
        diff = F.sub_table[dom[i], dom[j]].reshape(i.size, -1)
        d = ranks[diff @ weights]
        e = _image_distances(F, phi.outputs, i, j)
        v1 = (d == 1) & (e != 1)
        v2 = (d != 1) & (e == 1)
        v3 = e > d
        if one_way and v1.any():
            one_way = False
            k = int(np.argmax(v1))
            first_one = (int(i[k]), int(j[k]))
        if both and v2.any():
            both = False
            k = int(np.argmax(v2))
            first_both = (int(i[k]), int(j[k]))
        if contraction and v3.any():
            contraction = False
            k = int(np.argmax(v3))
            first_con = (int(i[k]), int(j[k]))
    both = both and one_way
    if first_one:
        first, kind = first_one, "adjacent_pair_not_preserved"
    elif first_both:
        first, kind = first_both, "nonadjacent_pair_mapped_adjacent"
    elif first_con:
        first, kind = first_con, "distance_increased"
    else:
        first, kind = None, None
    return PreservationReport(one_way, both, contraction, first, kind)


def distance_matrices(phi: TabulatedMap) -> tuple[np.ndarray, np.ndarray]:
    """Full N x N domain and image distance matrices (small domains only)."""
    F = phi.field
    m, n = phi.domain
    N = phi.size
    i, j = np.triu_indices(N, 1)
    ranks = rank_lookup(F, m, n)
    weights = F.order ** np.arange(m * n, dtype=np.int64)
    dom = phi.domain_array
    D = np.zeros((N, N), dtype=np.int64)
    E = np.zeros((N, N), dtype=np.int64)
    D[i, j] = D[j, i] = ranks[F.sub_table[dom[i], dom[j]].reshape(i.size, -1) @ weights]
    E[i, j] = E[j, i] = _image_distances(F, phi.outputs, i, j)
    return D, E


# ---------------------------------------------------------------------------
# degeneracy


def _first_point(field: FieldDescriptor, ambient: int, side: str) -> ProjectivePoint:
    return ProjectivePoint(field, side, (0,) * (ambient - 1) + (1,))


def _rank1_points(field: FieldDescriptor, D: np.ndarray) -> tuple[list[tuple], list[tuple]]:
    """Canonical (row rep, column rep) of each rank-one matrix in the stack."""
    mul, inv = field.mul_table, field.inv_table
    K = D.shape[0]
    ar = np.arange(K)
    rowvec = D[ar, D.any(axis=2).argmax(axis=1)]
    rowrep = mul[inv[rowvec[ar, (rowvec != 0).argmax(axis=1)]][:, None], rowvec]
    colvec = D[ar, :, D.any(axis=1).argmax(axis=1)]
    colrep = mul[inv[colvec[ar, (colvec != 0).argmax(axis=1)]][:, None], colvec]
    return [tuple(r) for r in rowrep.tolist()], [tuple(c) for c in colrep.tolist()]


def _witness(field: FieldDescriptor, codomain: Shape, diffs: np.ndarray):
    p, q = codomain
    nonzero = diffs[diffs.reshape(diffs.shape[0], -1).any(axis=1)]
    first_y = _first_point(field, q, ROW)
    first_x = _first_point(field, p, COL)
    if nonzero.shape[0] == 0:
        return first_x, first_y
    if (batch_rank(field, nonzero) > 1).any():
        return None
    rows, cols = _rank1_points(field, nonzero)
    r0, c0 = rows[0], cols[0]
    candidates = []
    # y = r0: the remaining differences must share one column point.
    rest = {c for r, c in zip(rows, cols) if r != r0}
    if not rest:
        candidates.append((r0, first_x.rep))
    elif len(rest) == 1:
        candidates.append((r0, rest.pop()))
    # x = c0: the remaining differences must share one row point.
    rest = {r for r, c in zip(rows, cols) if c != c0}
    if not rest:
        candidates.append((first_y.rep, c0))
    elif len(rest) == 1:
        candidates.append((rest.pop(), c0))
    if not candidates:
        return None
    y, x = min(candidates)
    return ProjectivePoint(field, COL, x), ProjectivePoint(field, ROW, y)


def degenerate_at(phi: TabulatedMap, A: Matrix) -> tuple[ProjectivePoint, ProjectivePoint] | None:
    """Witnesses (x, y) with phi(B(A,1)) inside (phi(A) + R(y)) u (phi(A) + L(x)), or None."""
    if A.shape != phi.domain:
        raise ValueError("matrix outside the domain")
    return _degenerate_at_code(phi, A.code)


def _degenerate_at_code(phi: TabulatedMap, code: int):
    F = phi.field
    ball = _ball_codes(F, *phi.domain, np.array([code]))[0]
    diffs = F.sub_table[phi.outputs[ball], phi.outputs[code][None]]
    return _witness(F, phi.codomain, diffs)


def is_degenerate(phi: TabulatedMap) -> bool:
    return all(_degenerate_at_code(phi, c) is not None for c in range(phi.size))


def degeneracy_profile(phi: TabulatedMap) -> Iterator[tuple[int, tuple | None]]:
    for c in range(phi.size):
        yield c, _degenerate_at_code(phi, c)
