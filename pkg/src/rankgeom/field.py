"""Finite fields GF(p^k) in a polynomial basis.

Elements are identified with integer codes: the element
c_0 + c_1 x + ... + c_{k-1} x^{k-1} has code sum(c_i * p**i).  All
arithmetic goes through precomputed lookup tables indexed by code, which
keeps the matrix layer free to work on plain integer arrays.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

# Lookup tables are q x q; keep them within a few megabytes.
MAX_ORDER = 1024


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, int(p**0.5) + 1))


def _poly_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    """Remainder of a modulo b over F_p (coefficient lists, low degree first)."""
    a = _poly_trim(list(a))
    b = _poly_trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(b[-1], -1, p)
    while len(a) >= len(b):
        c = a[-1] * inv_lead % p
        shift = len(a) - len(b)
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - c * bi) % p
        _poly_trim(a)
    return a


def is_irreducible(modulus: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..k//2."""
    k = len(modulus) - 1
    for deg in range(1, k // 2 + 1):
        for low in itertools.product(range(p), repeat=deg):
            if not _poly_mod(modulus, list(low) + [1], p):
                return False
    return True


def default_modulus(p: int, k: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible of degree k.

    Coefficients are compared low degree first.
    """
    if k == 1:
        return (0, 1)
    for low in itertools.product(range(p), repeat=k):
        cand = tuple(low) + (1,)
        if is_irreducible(cand, p):
            return cand
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover


@dataclass(frozen=True)
class FieldDescriptor:
    """The field F_p[x]/(modulus), modulus given low degree first."""

    p: int
    k: int
    modulus: tuple[int, ...] = dc_field(default=())

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"characteristic {self.p} is not prime")
        if self.k < 1:
            raise ValueError("extension degree must be >= 1")
        if self.p**self.k > MAX_ORDER:
            raise ValueError(f"field order {self.p}^{self.k} exceeds {MAX_ORDER}")
        mod = tuple(int(c) for c in self.modulus) if self.modulus else default_modulus(self.p, self.k)
        if len(mod) != self.k + 1 or mod[-1] != 1:
            raise ValueError("modulus must be monic of degree k")
        if any(not 0 <= c < self.p for c in mod):
            raise ValueError("modulus coefficients must lie in [0, p)")
        if not is_irreducible(mod, self.p):
            raise ValueError(f"modulus {list(mod)} is reducible over F_{self.p}")
        object.__setattr__(self, "modulus", mod)

    @property
    def order(self) -> int:
        return self.p**self.k

    q = order

    def __repr__(self):
        if self.k == 1:
            return f"GF({self.p})"
        return f"GF({self.p}^{self.k})"

    # -- code <-> coefficients ------------------------------------------------

    def coeffs(self, code: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.k):
            code, r = divmod(code, self.p)
            out.append(r)
        return tuple(out)

    def from_coeffs(self, coeffs: Sequence[int]) -> int:
        if len(coeffs) > self.k:
            coeffs = _poly_mod(coeffs, self.modulus, self.p)
        return sum((int(c) % self.p) * self.p**i for i, c in enumerate(coeffs))

    # -- tables ---------------------------------------------------------------

    @functools.cached_property
    def _digits(self) -> np.ndarray:
        codes = np.arange(self.order)
        return np.stack([(codes // self.p**i) % self.p for i in range(self.k)], axis=1)

    @functools.cached_property
    def add_table(self) -> np.ndarray:
        d = self._digits
        s = (d[:, None, :] + d[None, :, :]) % self.p
        return _readonly((s * self.p ** np.arange(self.k)).sum(axis=2))

    @functools.cached_property
    def neg_table(self) -> np.ndarray:
        d = (-self._digits) % self.p
        return _readonly((d * self.p ** np.arange(self.k)).sum(axis=1))

    @functools.cached_property
    def sub_table(self) -> np.ndarray:
        return _readonly(self.add_table[:, self.neg_table])

    @functools.cached_property
    def mul_table(self) -> np.ndarray:
        q = self.order
        table = np.zeros((q, q), dtype=np.int64)
        polys = [self.coeffs(c) for c in range(q)]
        for a in range(1, q):
            for b in range(a, q):
                prod = [0] * (2 * self.k - 1)
                for i, ai in enumerate(polys[a]):
                    if ai:
                        for j, bj in enumerate(polys[b]):
                            prod[i + j] += ai * bj
                c = self.from_coeffs(_poly_mod([x % self.p for x in prod], self.modulus, self.p))
                table[a, b] = table[b, a] = c
        return _readonly(table)

    @functools.cached_property
    def inv_table(self) -> np.ndarray:
        """inv_table[0] is 0; callers must reject zero themselves."""
        inv = np.zeros(self.order, dtype=np.int64)
        a, b = np.nonzero(self.mul_table == 1)
        inv[a] = b
        return _readonly(inv)

    # -- scalar helpers on codes ----------------------------------------------

    def add(self, a: int, b: int) -> int:
        return int(self.add_table[a, b])

    def sub(self, a: int, b: int) -> int:
        return int(self.sub_table[a, b])

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_table[a, b])

    def neg(self, a: int) -> int:
        return int(self.neg_table[a])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in " + repr(self))
        return int(self.inv_table[a])

    def power(self, a: int, e: int) -> int:
        r = 1
        for _ in range(e):
            r = self.mul(r, a)
        return r

    def element(self, value) -> FieldElement:
        if isinstance(value, FieldElement):
            _check_same(self, value.field)
            return value
        if isinstance(value, (list, tuple)):
            return FieldElement(self, self.from_coeffs(value))
        return FieldElement(self, int(value))

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {"p": self.p, "k": self.k, "modulus": list(self.modulus)}

    @classmethod
    def from_json(cls, obj: dict) -> FieldDescriptor:
        return cls(int(obj["p"]), int(obj.get("k", 1)), tuple(obj.get("modulus") or ()))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@functools.lru_cache(maxsize=None)
def GF(p: int, k: int = 1, modulus: tuple[int, ...] | None = None) -> FieldDescriptor:
    """Cached field constructor; the default modulus is the lexicographic minimum."""
    return FieldDescriptor(p, k, tuple(modulus) if modulus else ())


def parse_field(spec: str) -> FieldDescriptor:
    """Parse ``"p,k"`` or ``"p,k,c0,c1,...,ck"`` (modulus low degree first)."""
    parts = [int(s) for s in spec.replace(" ", "").split(",") if s]
    if not parts:
        raise ValueError("empty field specification")
    p = parts[0]
    k = parts[1] if len(parts) > 1 else 1
    modulus = tuple(parts[2:]) or None
    return GF(p, k, modulus)


def _check_same(f1: FieldDescriptor, f2: FieldDescriptor):
    if f1 != f2:
        raise TypeError(f"mixed-field operands: {f1!r} and {f2!r}")


@dataclass(frozen=True)
class FieldElement:
    field: FieldDescriptor
    code: int

    def __post_init__(self):
        if not 0 <= self.code < self.field.order:
            raise ValueError(f"code {self.code} out of range for {self.field!r}")

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.field.coeffs(self.code)

    def __int__(self):
        return self.code

    def __index__(self):
        return self.code

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            _check_same(self.field, other.field)
            return other.code
        if isinstance(other, int):
            return other % self.field.p
        return NotImplemented

    def __add__(self, other):
        b = self._other(other)
        if b is NotImplemented:
            return b
        return FieldElement(self.field, self.field.add(self.code, b))

    __radd__ = __add__

    def __sub__(self, other):
        b = self._other(other)
        if b is NotImplemented:
            return b
        return FieldElement(self.field, self.field.sub(self.code, b))

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        b = self._other(other)
        if b is NotImplemented:
            return b
        return FieldElement(self.field, self.field.mul(self.code, b))

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(self.field, self.field.neg(self.code))

    def inverse(self) -> FieldElement:
        return FieldElement(self.field, self.field.inv(self.code))

    def __truediv__(self, other):
        b = self._other(other)
        if b is NotImplemented:
            return b
        return self * FieldElement(self.field, self.field.inv(b))

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return FieldElement(self.field, self.field.power(self.code, e))

    def __bool__(self):
        return self.code != 0

    def __repr__(self):
        if self.field.k == 1:
            return str(self.code)
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
                terms.append(mono if c == 1 and mono else f"{c}{mono}")
        return "+".join(reversed(terms)) or "0"


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    _check_same(a.field, b.field)
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    _check_same(a.field, b.field)
    return a * b


def neg(a: FieldElement) -> FieldElement:
    return -a


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def list_elements(desc: FieldDescriptor) -> list[FieldElement]:
    return [FieldElement(desc, c) for c in range(desc.order)]


@dataclass(frozen=True)
class FieldAutomorphism:
    """The Frobenius power x -> x^(p^j)."""

    field: FieldDescriptor
    j: int

    def __post_init__(self):
        if not 0 <= self.j < self.field.k:
            raise ValueError(f"Frobenius exponent {self.j} out of range [0, {self.field.k})")

    @functools.cached_property
    def table(self) -> np.ndarray:
        e = self.field.p**self.j
        return _readonly([self.field.power(a, e) for a in range(self.field.order)])

    @property
    def is_identity(self) -> bool:
        return self.j == 0

    def __call__(self, a):
        if isinstance(a, FieldElement):
            _check_same(self.field, a.field)
            return FieldElement(self.field, int(self.table[a.code]))
        return int(self.table[a])

    def inverse(self) -> FieldAutomorphism:
        return FieldAutomorphism(self.field, (-self.j) % self.field.k)

    def compose(self, other: FieldAutomorphism) -> FieldAutomorphism:
        """self after other."""
        _check_same(self.field, other.field)
        return FieldAutomorphism(self.field, (self.j + other.j) % self.field.k)


def automorphisms(desc: FieldDescriptor) -> list[FieldAutomorphism]:
    return [FieldAutomorphism(desc, j) for j in range(desc.k)]


def apply_automorphism(aut: FieldAutomorphism, a: FieldElement) -> FieldElement:
    return aut(a)


def match_automorphism(desc: FieldDescriptor, table) -> FieldAutomorphism | None:
    """Return the Frobenius power whose code table equals ``table``, if any."""
    table = np.asarray(table)
    for aut in automorphisms(desc):
        if np.array_equal(aut.table, table):
            return aut
    return None


def endomorphisms_brute_force(desc: FieldDescriptor) -> list[np.ndarray]:
    """All unital ring endomorphisms, found without reference to Frobenius.

    An additive map is F_p-linear, so it is fixed by the images of the basis
    x^1..x^{k-1} (the image of 1 is 1).  Every such candidate is checked for
    multiplicativity on all pairs.
    """
    q, p, k = desc.order, desc.p, desc.k
    add_t, mul_t = desc.add_table, desc.mul_table
    digits = desc._digits
    found = []
    for images in itertools.product(range(q), repeat=k - 1):
        basis = (1,) + images
        table = np.zeros(q, dtype=np.int64)
        for code in range(q):
            acc = 0
            for i in range(k):
                for _ in range(int(digits[code, i])):
                    acc = int(add_t[acc, basis[i]])
            table[code] = acc
        if np.array_equal(table[mul_t], mul_t[table[:, None], table[None, :]]):
            found.append(table)
    return found
