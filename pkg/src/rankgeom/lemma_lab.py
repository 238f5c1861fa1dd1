"""Exhaustive sweeps of adjacency facts over small fields, and a resumable
backtracking enumerator of adjacency preservers between tiny matrix spaces."""

from __future__ import annotations

import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterator

import numpy as np

from .classify import DEGENERATE, SMALL, STANDARD, NotAPreserver, RecoveryFailed, classify, try_recover
from .field import GF, FieldDescriptor, endomorphisms_brute_force
from .geometry import (
    COL,
    ROW,
    L_pencil,
    ProjectivePoint,
    R_pencil,
    is_adjacent_set,
    is_affine_line,
    orthocomplement,
    pencils,
    proj_points,
)
from .maps import TabulatedMap, is_degenerate
from .matrix import (
    Matrix,
    all_matrices_array,
    batch_matmul,
    batch_rank,
    codes_of,
    rank_lookup,
    rank_normal_form,
)

LEMMA_IDS = ("3.1", "3.2", "3.3", "3.4", "3.5", "3.6", "3.7", "rank-additivity", "4.1", "4.2")
EXTRA_IDS = ("eas",)
DEFAULT_BUDGET = 10**7


@dataclass(frozen=True)
class GridCase:
    """One parameter point of a sweep: a field, a matrix shape and extra knobs."""

    field: FieldDescriptor
    shape: tuple[int, int]
    params: tuple = ()

    def param(self, key, default=None):
        return dict(self.params).get(key, default)

    def to_json(self) -> dict:
        out = {"field": self.field.to_json(), "shape": list(self.shape)}
        out.update(dict(self.params))
        return out


@dataclass
class LemmaReport:
    lemma_id: str
    grid: list[GridCase]
    instances: int = 0
    violations: list = dc_field(default_factory=list)
    complete: bool = True
    wall_time: float = 0.0
    notes: dict = dc_field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.complete and not self.violations

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "lemma": self.lemma_id,
            "grid": [g.to_json() for g in self.grid],
            "instances": self.instances,
            "violations": self.violations,
            "complete": self.complete,
        }
        if self.notes:
            out["notes"] = self.notes
        if timing:
            out["wall_time"] = round(self.wall_time, 6)
        return out


# ---------------------------------------------------------------------------
# helpers shared by the sweeps


def _pairwise_rank(F: FieldDescriptor, arr: np.ndarray) -> np.ndarray:
    """rank(arr[i] - arr[j]) for all i, j."""
    N = arr.shape[0]
    m, n = arr.shape[1:]
    i, j = np.divmod(np.arange(N * N), N)
    return batch_rank(F, F.sub_table[arr[i], arr[j]]).reshape(N, N)


def _codes(F: FieldDescriptor, stack) -> set[int]:
    return set(codes_of(F, stack).tolist()) if len(stack) else set()


def _hstack_rank(F, a, b):
    return batch_rank(F, np.concatenate([a, b], axis=2))


def _vstack_rank(F, a, b):
    return batch_rank(F, np.concatenate([a, b], axis=1))


# ---------------------------------------------------------------------------
# the sweeps; each takes a GridCase and returns (instances, violations, notes)


def _sweep_idempotent_neighbours(case: GridCase):
    """Rank n-1 neighbours of P = [[I_n, 0], [0, 0]] are the embedded rank n-1 idempotents."""
    F = case.field
    p, q = case.shape
    n = case.param("n")
    P = Matrix.block(Matrix.identity(F, n), p, q)
    allm = all_matrices_array(F, p, q)
    ranks = batch_rank(F, allm)
    dist = batch_rank(F, F.sub_table[allm, P.data[None]])
    found = _codes(F, allm[(ranks == n - 1) & (dist == 1)])

    sq = all_matrices_array(F, n, n)
    idem = sq[(batch_matmul(F, sq, sq) == sq).all(axis=(1, 2)) & (batch_rank(F, sq) == n - 1)]
    emb = np.zeros((idem.shape[0], p, q), dtype=np.int64)
    emb[:, :n, :n] = idem
    expected = _codes(F, emb)
    viol = [
        {"matrix": Matrix.from_code(F, p, q, c).tolist(), "reason": "adjacent rank n-1 matrix not an embedded idempotent"}
        for c in sorted(found - expected)
    ] + [
        {"matrix": Matrix.from_code(F, p, q, c).tolist(), "reason": "embedded idempotent not found among neighbours"}
        for c in sorted(expected - found)
    ]
    return allm.shape[0], viol, {"neighbours": len(found)}


def _sweep_equal_rank_pairs(case: GridCase):
    """Adjacent matrices of equal rank share their image or their kernel."""
    F = case.field
    m, n = case.shape
    allm = all_matrices_array(F, m, n)
    N = allm.shape[0]
    ranks = rank_lookup(F, m, n)
    dist = _pairwise_rank(F, allm)
    i, j = np.nonzero((dist == 1) & (ranks[:, None] == ranks[None, :]))
    A, B = allm[i], allm[j]
    r = ranks[i]
    same_image = _vstack_rank(F, A, B) == r
    same_kernel = _hstack_rank(F, A, B) == r
    bad = np.nonzero(~(same_image | same_kernel))[0]
    viol = [{"A": allm[i[k]].tolist(), "B": allm[j[k]].tolist()} for k in bad]
    return N * N, viol, {"equal_rank_adjacent_pairs": int(i.size)}


def _sweep_coadjacency(case: GridCase):
    """If every rank r-1 neighbour of A (rank r >= 2) is adjacent to B, then B = A, or B = 0 and r = 2."""
    F = case.field
    m, n = case.shape
    only_r = case.param("r")
    allm = all_matrices_array(F, m, n)
    N = allm.shape[0]
    ranks = rank_lookup(F, m, n)
    adj = _pairwise_rank(F, allm) == 1
    viol, checked, exempt = [], 0, 0
    for a in range(N):
        r = int(ranks[a])
        if r < 2 or (only_r is not None and r != only_r):
            continue
        nb = np.nonzero(adj[a] & (ranks == r - 1))[0]
        cand = adj[nb].all(axis=0)
        checked += N
        for b in np.nonzero(cand)[0]:
            if b == a:
                continue
            if b == 0 and r == 2:
                exempt += 1
                continue
            viol.append({"A": allm[a].tolist(), "B": allm[b].tolist(), "rank": r})
        if not cand[a]:
            viol.append({"A": allm[a].tolist(), "reason": "A itself fails the hypothesis"})
    return checked, viol, {"zero_exemptions": exempt}


def _sweep_pencil_intersections(case: GridCase):
    """Two pencils of one kind meet only in 0 exactly when their points differ."""
    F = case.field
    m, n = case.shape
    viol, count = [], 0
    for kind, pts, make in (("R", proj_points(n, ROW, F), lambda d: R_pencil(d, m)), ("L", proj_points(m, COL, F), lambda e: L_pencil(e, n))):
        members = {d: _codes(F, make(d).member_array()) for d in pts}
        for d, d2 in itertools.product(pts, pts):
            count += 1
            trivial = members[d] & members[d2] == {0}
            if trivial != (d != d2):
                viol.append({"kind": kind, "points": [list(d.rep), list(d2.rep)], "intersection": sorted(members[d] & members[d2])})
    return count, viol, {}


def _idempotents_rank1(F, stack):
    if not len(stack):
        return stack
    keep = (batch_matmul(F, stack, stack) == stack).all(axis=(1, 2)) & (batch_rank(F, stack) == 1)
    return stack[keep]


def _sweep_one_idempotent(case: GridCase):
    """R_d cap L_e holds one rank-one idempotent if d != e-perp, else none."""
    F = case.field
    viol, count = [], 0
    for d in proj_points(2, ROW, F):
        Rd = R_pencil(d, 2).member_array()
        for e in proj_points(2, COL, F):
            count += 1
            Le = _codes(F, L_pencil(e, 2).member_array())
            inter = Rd[np.isin(codes_of(F, Rd), list(Le))]
            k = _idempotents_rank1(F, inter).shape[0]
            expected = 0 if orthocomplement(e).as_point() == d else 1
            if k != expected:
                viol.append({"d": list(d.rep), "e": list(e.rep), "idempotents": k, "expected": expected})
    return count, viol, {}


def _sweep_rank1_neighbour_in_cell(case: GridCase):
    """For invertible A: R_d cap L_e has a rank-one neighbour of A iff d != (A^-1 e)-perp."""
    F = case.field
    allm = all_matrices_array(F, 2, 2)
    inv = allm[batch_rank(F, allm) == 2]
    cells = {}
    for d in proj_points(2, ROW, F):
        Rd = R_pencil(d, 2).member_array()
        for e in proj_points(2, COL, F):
            Le = _codes(F, L_pencil(e, 2).member_array())
            inter = Rd[np.isin(codes_of(F, Rd), list(Le))]
            cells[d, e] = inter[batch_rank(F, inter) == 1]
    viol, count = [], 0
    for A in inv:
        Am = Matrix._wrap(F, A)
        Ainv = Am.inverse()
        for (d, e), r1 in cells.items():
            count += 1
            found = bool((batch_rank(F, F.sub_table[r1, A[None]]) == 1).any())
            col = Ainv @ Matrix.column(F, e.rep)
            perp = orthocomplement(ProjectivePoint.spanned_by(F, col.data[:, 0], COL)).as_point()
            if found != (d != perp):
                viol.append({"A": A.tolist(), "d": list(d.rep), "e": list(e.rep), "found": found})
    return count, viol, {}


def _affine_lines_avoiding_zero(F: FieldDescriptor, dim: int) -> set[frozenset]:
    lines = set()
    vecs = [tuple(v) for v in all_matrices_array(F, 1, dim).reshape(-1, dim).tolist()]
    for p in proj_points(dim, ROW, F):
        v = np.array(p.rep)
        for u in vecs:
            line = frozenset(tuple(F.add_table[np.array(u), F.mul_table[t, v]].tolist()) for t in range(F.order))
            if (0,) * dim not in line:
                lines.add(line)
    return lines


def _sweep_affine_lines(case: GridCase):
    """Neighbours of an invertible A inside a pencil form an affine line missing 0, and every such line arises."""
    F = case.field
    allm = all_matrices_array(F, 2, 2)
    inv = allm[batch_rank(F, allm) == 2]
    targets = _affine_lines_avoiding_zero(F, 2)
    viol, count = [], 0
    for P in pencils(2, 2, F):
        mem = P.member_array()
        seen = set()
        for A in inv:
            count += 1
            near = mem[batch_rank(F, F.sub_table[mem, A[None]]) == 1]
            coords = [P.coordinates(Matrix._wrap(F, M)) for M in near]
            if not is_affine_line(F, coords) or (0, 0) in coords:
                viol.append({"pencil": P.to_json(), "A": A.tolist(), "coordinates": [list(c) for c in coords]})
            seen.add(frozenset(coords))
        missing = targets - seen
        count += len(targets)
        for line in sorted(sorted(l) for l in missing):
            viol.append({"pencil": P.to_json(), "missing_line": [list(c) for c in line]})
    return count, viol, {"lines_per_pencil": len(targets)}


def _sweep_rank_additivity(case: GridCase):
    """rank(A+B) = rank A + rank B forces Im(A+B) = Im A (+) Im B and Ker(A+B) = Ker A cap Ker B."""
    F = case.field
    m, n = case.shape
    allm = all_matrices_array(F, m, n)
    N = allm.shape[0]
    ranks = rank_lookup(F, m, n)
    viol, additive = [], 0
    for a in range(N):
        A = allm[a]
        S = F.add_table[A[None], allm]
        rs = ranks[codes_of(F, S)]
        hit = np.nonzero(rs == ranks[a] + ranks)[0]
        if not hit.size:
            continue
        additive += hit.size
        B, AB = allm[hit], S[hit]
        Ab = np.broadcast_to(A, B.shape)
        r = rs[hit]
        stacked = _vstack_rank(F, Ab, B)
        image_ok = (stacked == r) & (_vstack_rank(F, np.concatenate([Ab, B], axis=1), AB) == r)
        side = _hstack_rank(F, Ab, B)
        kernel_ok = (side == r) & (_hstack_rank(F, np.concatenate([Ab, B], axis=2), AB) == r)
        for k in np.nonzero(~(image_ok & kernel_ok))[0]:
            viol.append({"A": A.tolist(), "B": B[k].tolist(), "image_ok": bool(image_ok[k]), "kernel_ok": bool(kernel_ok[k])})
    return N * N, viol, {"additive_pairs": additive}


def _sweep_large_adjacent_set(case: GridCase):
    """Every A of rank r >= 2 has c^(r-1) pairwise-adjacent rank r-1 neighbours."""
    F = case.field
    m, n = case.shape
    c = F.order
    viol, count = [], 0
    for code, A in enumerate(all_matrices_array(F, m, n)):
        Am = Matrix._wrap(F, A)
        T, S, r = rank_normal_form(Am)
        if r < 2:
            continue
        count += 1
        Ti, Si = T.inverse(), S.inverse()
        xs = all_matrices_array(F, r - 1, 1)
        core = np.zeros((xs.shape[0], m, n), dtype=np.int64)
        core[:, np.arange(r - 1), np.arange(r - 1)] = 1
        core[:, : r - 1, r - 1] = xs[:, :, 0]
        V = batch_matmul(F, batch_matmul(F, np.broadcast_to(Ti.data, core.shape[:1] + Ti.shape), core), np.broadcast_to(Si.data, (core.shape[0],) + Si.shape))
        problems = []
        if len(_codes(F, V)) != c ** (r - 1):
            problems.append("size")
        if (batch_rank(F, V) != r - 1).any():
            problems.append("rank")
        if (batch_rank(F, F.sub_table[V, A[None]]) != 1).any():
            problems.append("not adjacent to A")
        if not is_adjacent_set([Matrix._wrap(F, v) for v in V]):
            problems.append("not an adjacent set")
        if problems:
            viol.append({"A": A.tolist(), "problems": problems})
    return count, viol, {"c": c}


def _sweep_pencil_counts(case: GridCase):
    """For rank-two A: pencil neighbours of A, and rank-one members of A + pencil, number 0 or c (never 0 when 2 x 2)."""
    F = case.field
    m, n = case.shape
    c = F.order
    square2 = (m, n) == (2, 2)
    allm = all_matrices_array(F, m, n)
    rank2 = allm[batch_rank(F, allm) == 2]
    viol, count = [], 0
    sizes: dict[int, int] = {}
    for P in pencils(m, n, F):
        mem = P.member_array()
        for A in rank2:
            count += 1
            near = int((batch_rank(F, F.sub_table[mem, A[None]]) == 1).sum())
            shifted = int((batch_rank(F, F.add_table[mem, A[None]]) == 1).sum())
            for label, k in (("adjacent", near), ("rank_one_in_translate", shifted)):
                sizes[k] = sizes.get(k, 0) + 1
                if k not in (0, c) or (square2 and k == 0):
                    viol.append({"pencil": P.to_json(), "A": A.tolist(), "set": label, "size": k})
    return count, viol, {"c": c, "size_histogram": {str(k): v for k, v in sorted(sizes.items())}}


def _sweep_eas(case: GridCase):
    """Every unital endomorphism of F_{p^k} is bijective and there are exactly k of them."""
    F = case.field
    found = endomorphisms_brute_force(F)
    viol = []
    if len(found) != F.k:
        viol.append({"reason": "endomorphism count differs from k", "count": len(found), "k": F.k})
    for t in found:
        if len(set(t.tolist())) != F.order:
            viol.append({"reason": "non-bijective endomorphism", "table": t.tolist()})
    return F.order ** (F.k - 1), viol, {"endomorphisms": len(found)}


_SWEEPS: dict[str, Callable] = {
    "3.1": _sweep_idempotent_neighbours,
    "3.2": _sweep_equal_rank_pairs,
    "3.3": _sweep_coadjacency,
    "3.4": _sweep_pencil_intersections,
    "3.5": _sweep_one_idempotent,
    "3.6": _sweep_rank1_neighbour_in_cell,
    "3.7": _sweep_affine_lines,
    "rank-additivity": _sweep_rank_additivity,
    "4.1": _sweep_large_adjacent_set,
    "4.2": _sweep_pencil_counts,
    "eas": _sweep_eas,
}


def _estimate(lemma_id: str, case: GridCase) -> int:
    """Upper bound on instances a case will examine, for budget checks."""
    F = case.field
    m, n = case.shape
    N = F.order ** (m * n)
    if lemma_id in ("3.2", "3.3", "rank-additivity"):
        return N * N
    if lemma_id in ("3.1", "4.1"):
        return N
    if lemma_id in ("3.6", "3.7", "4.2"):
        return N * 2 * (F.order + 1) ** 2
    if lemma_id == "eas":
        return F.order ** (F.k - 1)
    return (F.order + 1) ** 2 * 4


# ---------------------------------------------------------------------------
# grids


def default_grid(lemma_id: str, fields=None) -> list[GridCase]:
    """The standard sweep grid; 3 x 3 cases are added over F_2 only."""
    if lemma_id == "eas":
        fields = fields or [GF(2, 2), GF(2, 3), GF(3, 2)]
        return [GridCase(F, (1, 1)) for F in fields]
    fields = fields or [GF(2), GF(3)]
    grid: list[GridCase] = []
    for F in fields:
        small = F.order == 2
        if lemma_id == "3.1":
            grid += [GridCase(F, (2, 2), (("n", 2),)), GridCase(F, (3, 3), (("n", 2),))]
            if small:
                grid += [GridCase(F, (3, 3), (("n", 3),)), GridCase(F, (2, 3), (("n", 2),))]
        elif lemma_id == "3.3":
            grid.append(GridCase(F, (2, 2)))
            if small:
                grid += [GridCase(F, (3, 3), (("r", 2),)), GridCase(F, (3, 3), (("r", 3),))]
        elif lemma_id in ("3.2", "4.1", "3.4", "rank-additivity", "4.2"):
            grid.append(GridCase(F, (2, 2)))
            if small:
                grid.append(GridCase(F, (2, 3)))
                if lemma_id in ("3.2", "4.1", "3.4"):
                    grid.append(GridCase(F, (3, 3)))
        elif lemma_id in ("3.5", "3.6", "3.7"):
            grid.append(GridCase(F, (2, 2)))
        else:
            raise KeyError(f"unknown lemma id {lemma_id!r}")
    return grid


def _run_case(args):
    lemma_id, case = args
    t0 = time.perf_counter()
    count, viol, notes = _SWEEPS[lemma_id](case)
    return count, viol, notes, time.perf_counter() - t0


def verify_lemma(lemma_id: str, grid: list[GridCase] | None = None, budget: int = DEFAULT_BUDGET, jobs: int = 1) -> LemmaReport:
    """Sweep one statement over every case of the grid.

    Cases whose estimated size would push the running total past `budget`
    are skipped and the report is marked incomplete.
    """
    if lemma_id not in _SWEEPS:
        raise KeyError(f"unknown lemma id {lemma_id!r}; choose from {', '.join(LEMMA_IDS + EXTRA_IDS)}")
    grid = list(grid) if grid is not None else default_grid(lemma_id)
    report = LemmaReport(lemma_id, grid)
    t0 = time.perf_counter()
    planned, total = [], 0
    for case in grid:
        est = _estimate(lemma_id, case)
        if total + est > budget:
            report.complete = False
            report.notes.setdefault("skipped", []).append(case.to_json())
            continue
        total += est
        planned.append(case)
    work = [(lemma_id, case) for case in planned]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_case, work))
    else:
        results = [_run_case(w) for w in work]
    per_case = []
    for case, (count, viol, notes, _) in zip(planned, results):
        report.instances += count
        for v in viol:
            report.violations.append({"case": case.to_json(), **v})
        per_case.append({"case": case.to_json(), "instances": count, **notes})
    report.notes["cases"] = per_case
    report.wall_time = time.perf_counter() - t0
    return report


def verify_all(fields=None, budget: int = DEFAULT_BUDGET, jobs: int = 1) -> list[LemmaReport]:
    return [verify_lemma(i, default_grid(i, fields), budget=budget, jobs=jobs) for i in LEMMA_IDS]


# ---------------------------------------------------------------------------
# enumeration of adjacency preservers


@dataclass
class EnumerationTask:
    """Search for all adjacency preservers domain -> codomain over one field.

    The cursor is the partial assignment (image codes of domain codes
    0, 1, ...) of the next search node to visit; [] is the root and None
    means the search is finished.
    """

    field: FieldDescriptor
    domain: tuple[int, int]
    codomain: tuple[int, int]
    fix_zero: bool = True
    cursor: list[int] | None = dc_field(default_factory=list)

    def __post_init__(self):
        self.domain = tuple(int(x) for x in self.domain)
        self.codomain = tuple(int(x) for x in self.codomain)
        for label, shape in (("domain", self.domain), ("codomain", self.codomain)):
            if self.field.order ** (shape[0] * shape[1]) > MAX_SPACE:
                raise ValueError(f"{label} {shape} over {self.field} exceeds {MAX_SPACE} matrices")

    @property
    def finished(self) -> bool:
        return self.cursor is None

    def spec_json(self) -> dict:
        return {
            "field": self.field.to_json(),
            "domain": list(self.domain),
            "codomain": list(self.codomain),
            "fix_zero": self.fix_zero,
        }

    @classmethod
    def from_json(cls, obj: dict, cursor=None) -> EnumerationTask:
        return cls(FieldDescriptor.from_json(obj["field"]), tuple(obj["domain"]), tuple(obj["codomain"]), bool(obj.get("fix_zero", True)), cursor)


MAX_SPACE = 64


class _Search:
    """Adjacency bitmasks and successor logic for the preorder walk."""

    def __init__(self, task: EnumerationTask):
        F = task.field
        self.F = F
        dom = all_matrices_array(F, *task.domain)
        cod = all_matrices_array(F, *task.codomain)
        self.cod = cod
        self.N, self.M = dom.shape[0], cod.shape[0]
        adj_d = _pairwise_rank(F, dom) == 1
        adj_c = _pairwise_rank(F, cod) == 1
        self.masks = [sum(1 << int(j) for j in np.nonzero(adj_c[i])[0]) for i in range(self.M)]
        self.earlier = [[int(u) for u in np.nonzero(adj_d[v, :v])[0]] for v in range(self.N)]
        self.full = (1 << self.M) - 1
        self.fix_zero = task.fix_zero

    def allowed(self, prefix: list[int]) -> int:
        v = len(prefix)
        mask = 1 if (v == 0 and self.fix_zero) else self.full
        for u in self.earlier[v]:
            mask &= self.masks[prefix[u]]
        return mask

    def consistent(self, prefix: list[int]) -> bool:
        return all((self.allowed(prefix[:v]) >> prefix[v]) & 1 for v in range(len(prefix)))

    def next_after(self, node: list[int], floor: int = 0) -> list[int] | None:
        """First preorder node outside the subtree of `node`, never leaving depth >= floor."""
        node = list(node)
        while len(node) > floor:
            last = node.pop()
            rest = self.allowed(node) >> (last + 1)
            if rest:
                node.append(last + 1 + ((rest & -rest).bit_length() - 1))
                return node
        return None

    def successor(self, node: list[int], floor: int = 0) -> list[int] | None:
        if len(node) < self.N:
            mask = self.allowed(node)
            if mask:
                return node + [(mask & -mask).bit_length() - 1]
        return self.next_after(node, floor)

    def table(self, leaf: list[int], task: EnumerationTask) -> TabulatedMap:
        return TabulatedMap(self.F, task.domain, task.codomain, self.cod[np.array(leaf)])


@dataclass
class EnumerationRun:
    """Budget for one segment of a search."""

    max_nodes: int | None = None
    deadline: float | None = None
    nodes: int = 0
    budget_hit: bool = False

    def spent(self) -> bool:
        if self.max_nodes is not None and self.nodes >= self.max_nodes:
            return True
        return self.deadline is not None and time.monotonic() >= self.deadline


def _walk(search: _Search, start: list[int] | None, floor: int, run: EnumerationRun) -> Iterator[tuple[list[int], list[int] | None]]:
    """Visit nodes in preorder from `start`; yields (leaf, next_cursor) for each full assignment.

    Ends with the cursor of the first unvisited node (None when done) as the
    return value of the generator.
    """
    node = start
    while node is not None:
        if run.spent():
            run.budget_hit = True
            return node
        run.nodes += 1
        nxt = search.successor(node, floor)
        if len(node) == search.N:
            yield node, nxt
        node = nxt
    return None


def enumerate_preservers(task: EnumerationTask, max_nodes: int | None = None, budget_seconds: float | None = None) -> Iterator[TabulatedMap]:
    """Tables of every adjacency preserver, in lexicographic order of image codes.

    Advances task.cursor as it goes; stopping early (budget or the caller
    abandoning the iterator) leaves a cursor from which a new call resumes
    the exact same stream.
    """
    if task.cursor is None:
        return
    search = _Search(task)
    if not search.consistent(task.cursor):
        raise ValueError("cursor is not a consistent partial assignment")
    run = EnumerationRun(max_nodes, None if budget_seconds is None else time.monotonic() + budget_seconds)
    gen = _walk(search, list(task.cursor), 0, run)
    while True:
        try:
            leaf, nxt = next(gen)
        except StopIteration as stop:
            task.cursor = stop.value
            return
        task.cursor = nxt
        yield search.table(leaf, task)


SUMMARY_KEYS = ("nodes", "emitted", "standard", "degenerate", "both", "neither", "unclassified_small", "degenerate_range_failures")


def empty_summary() -> dict:
    return {k: 0 for k in SUMMARY_KEYS}


def merge_summaries(a: dict, b: dict) -> dict:
    return {k: a.get(k, 0) + b.get(k, 0) for k in SUMMARY_KEYS}


class NeitherFound(Exception):
    """A preserver that is neither standard nor degenerate, or a degenerate one with a non-adjacent range."""

    def __init__(self, table: TabulatedMap, reason: str):
        super().__init__(reason)
        self.table = table
        self.reason = reason


def classify_table(phi: TabulatedMap) -> dict:
    """Counts contributed by one emitted table; raises NeitherFound on a counterexample."""
    out = empty_summary()
    out["emitted"] = 1
    m, n = phi.domain
    p, q = phi.codomain
    degenerate = is_degenerate(phi)
    if degenerate and not is_adjacent_set(phi.range()):
        raise NeitherFound(phi, "degenerate table whose range is not an adjacent set")
    if min(m, n) == 1 or min(p, q) == 1:
        out["degenerate" if degenerate else "unclassified_small"] = 1
        return out
    standard = try_recover(phi) is not None
    if standard and degenerate:
        out["both"] = 1
    elif standard:
        out["standard"] = 1
    elif degenerate:
        out["degenerate"] = 1
    else:
        raise NeitherFound(phi, "table is neither standard nor degenerate")
    return out


def _subtree_job(args):
    task_json, start, floor = args
    task = EnumerationTask.from_json(task_json)
    search = _Search(task)
    run = EnumerationRun()
    summary = empty_summary()
    gen = _walk(search, start, floor, run)
    for leaf, _ in gen:
        try:
            summary = merge_summaries(summary, classify_table(search.table(leaf, task)))
        except NeitherFound as exc:
            return summary, {"reason": exc.reason, "table": exc.table.to_json()}
    summary["nodes"] = run.nodes
    return summary, None


@dataclass
class StreamOutcome:
    task: EnumerationTask
    summary: dict
    counterexample: dict | None = None

    @property
    def finished(self) -> bool:
        return self.task.finished and self.counterexample is None

    def checkpoint(self) -> dict:
        return {"task": self.task.spec_json(), "cursor": self.task.cursor, "summary": self.summary}


def classify_stream(
    task: EnumerationTask,
    summary: dict | None = None,
    max_nodes: int | None = None,
    budget_seconds: float | None = None,
    jobs: int = 1,
    checkpoint_path: str | None = None,
    checkpoint_every: int = 10**6,
    on_table: Callable[[TabulatedMap, dict], None] | None = None,
) -> StreamOutcome:
    """Enumerate and classify every preserver, tallying verdicts.

    Stops at the first counterexample, leaving the cursor on it.  With
    jobs > 1 the subtrees below the first free domain matrix run in worker
    processes and merge in tree order, so counts match a sequential run.
    """
    summary = merge_summaries(empty_summary(), summary or {})
    if jobs > 1 and on_table is None:
        return _classify_parallel(task, summary, budget_seconds, jobs, checkpoint_path)
    outcome = StreamOutcome(task, summary)
    if task.cursor is None:
        return outcome
    search = _Search(task)
    base = summary["nodes"]
    run = EnumerationRun(max_nodes, None if budget_seconds is None else time.monotonic() + budget_seconds)
    gen = _walk(search, list(task.cursor), 0, run)
    last_saved = 0
    while True:
        try:
            leaf, nxt = next(gen)
        except StopIteration as stop:
            task.cursor = stop.value
            break
        phi = search.table(leaf, task)
        try:
            tally = classify_table(phi)
        except NeitherFound as exc:
            # leave the cursor on the offending leaf so a resume revisits it
            task.cursor = list(leaf)
            summary["nodes"] = base + run.nodes - 1
            outcome.counterexample = {"reason": exc.reason, "table": exc.table.to_json()}
            _save(checkpoint_path, outcome)
            return outcome
        summary.update(merge_summaries(summary, tally))
        if on_table is not None:
            on_table(phi, tally)
        task.cursor = nxt
        if checkpoint_path and run.nodes - last_saved >= checkpoint_every:
            summary["nodes"] = base + run.nodes
            last_saved = run.nodes
            _save(checkpoint_path, outcome)
    summary["nodes"] = base + run.nodes
    _save(checkpoint_path, outcome)
    return outcome


def _plan(search: _Search, cursor: list[int], split: int):
    """Shallow nodes and subtree roots at depth `split`, in preorder from cursor."""
    items = []
    node = cursor
    while node is not None:
        if len(node) < split and len(node) < search.N:
            items.append(("node", node))
            node = search.successor(node)
        else:
            items.append(("subtree", node))
            node = search.next_after(node[:split])
    return items


def _classify_parallel(task, summary, budget_seconds, jobs, checkpoint_path) -> StreamOutcome:
    outcome = StreamOutcome(task, summary)
    if task.cursor is None:
        return outcome
    search = _Search(task)
    split = 2 if task.fix_zero else 1
    items = _plan(search, list(task.cursor), split)
    deadline = None if budget_seconds is None else time.monotonic() + budget_seconds
    spec = task.spec_json()
    jobs_in = [(spec, start, split) for kind, start in items if kind == "subtree"]
    pool = ProcessPoolExecutor(max_workers=jobs)
    try:
        futures = iter([pool.submit(_subtree_job, j) for j in jobs_in])
        for idx, (kind, start) in enumerate(items):
            if deadline is not None and time.monotonic() >= deadline:
                task.cursor = start
                _save(checkpoint_path, outcome)
                return outcome
            if kind == "node":
                summary["nodes"] += 1
                continue
            fut = next(futures)
            timeout = None if deadline is None else max(0.0, deadline - time.monotonic())
            try:
                part, bad = fut.result(timeout=timeout)
            except FutureTimeout:
                task.cursor = start
                _save(checkpoint_path, outcome)
                return outcome
            if bad is not None:
                summary.update(merge_summaries(summary, part))
                task.cursor = start
                outcome.counterexample = bad
                _save(checkpoint_path, outcome)
                return outcome
            summary.update(merge_summaries(summary, part))
            task.cursor = items[idx + 1][1] if idx + 1 < len(items) else None
            _save(checkpoint_path, outcome)
    finally:
        pool.shutdown(wait=False, cancel_futures=True)
    task.cursor = None
    _save(checkpoint_path, outcome)
    return outcome


def _save(path: str | None, outcome: StreamOutcome):
    if not path:
        return
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(outcome.checkpoint(), fh, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def load_checkpoint(path: str) -> tuple[EnumerationTask, dict]:
    with open(path) as fh:
        obj = json.load(fh)
    task = EnumerationTask.from_json(obj["task"], obj.get("cursor"))
    if task.cursor is not None:
        task.cursor = [int(c) for c in task.cursor]
        if not _Search(task).consistent(task.cursor):
            raise ValueError("checkpoint cursor is not a consistent partial assignment")
    return task, merge_summaries(empty_summary(), obj.get("summary", {}))


__all__ = [
    "LEMMA_IDS",
    "EXTRA_IDS",
    "GridCase",
    "LemmaReport",
    "default_grid",
    "verify_lemma",
    "verify_all",
    "EnumerationTask",
    "enumerate_preservers",
    "classify_stream",
    "classify_table",
    "load_checkpoint",
    "NeitherFound",
    "StreamOutcome",
    "STANDARD",
    "DEGENERATE",
    "SMALL",
    "NotAPreserver",
    "RecoveryFailed",
    "classify",
]
