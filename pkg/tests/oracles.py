"""Slow, independent reference computations used to cross-check the package.

Nothing here calls into the table-driven kernels: field products are done
with schoolbook polynomial arithmetic and ranks by counting the row span.
"""

import itertools


def poly_mulmod(a, b, modulus, p):
    """Product of coefficient lists (low degree first) reduced by a monic modulus."""
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] = (prod[i + j] + x * y) % p
    k = len(modulus) - 1
    for d in range(len(prod) - 1, k - 1, -1):
        c = prod[d]
        if c:
            for i in range(k + 1):
                prod[d - k + i] = (prod[d - k + i] - c * modulus[i]) % p
    out = prod[:k] + [0] * max(0, k - len(prod))
    return out


def code_to_coeffs(code, p, k):
    return [(code // p**i) % p for i in range(k)]


def coeffs_to_code(coeffs, p):
    return sum(c * p**i for i, c in enumerate(coeffs))


def slow_mul(field, a, b):
    p, k = field.p, field.k
    return coeffs_to_code(poly_mulmod(code_to_coeffs(a, p, k), code_to_coeffs(b, p, k), list(field.modulus), p), p)


def slow_add(field, a, b):
    p, k = field.p, field.k
    return coeffs_to_code([(x + y) % p for x, y in zip(code_to_coeffs(a, p, k), code_to_coeffs(b, p, k))], p)


def span_size(field, rows):
    """Number of distinct vectors in the span of the given rows (brute force)."""
    seen = set()
    for coeffs in itertools.product(range(field.order), repeat=len(rows)):
        acc = [0] * (len(rows[0]) if rows else 0)
        for c, row in zip(coeffs, rows):
            acc = [slow_add(field, u, slow_mul(field, c, v)) for u, v in zip(acc, row)]
        seen.add(tuple(acc))
    return len(seen)


def slow_rank(field, rows):
    """Rank as log_q of the size of the row span."""
    size = span_size(field, [list(r) for r in rows])
    r = 0
    while field.order**r < size:
        r += 1
    assert field.order**r == size
    return r


def monic_polys(p, deg):
    for low in itertools.product(range(p), repeat=deg):
        yield list(low) + [1]


def poly_is_irreducible_slow(f, p):
    """No monic factor of degree 1..deg/2 divides f (checked by multiplying out)."""
    deg = len(f) - 1
    for d in range(1, deg // 2 + 1):
        for g in monic_polys(p, d):
            for h in monic_polys(p, deg - d):
                prod = [0] * (deg + 1)
                for i, x in enumerate(g):
                    for j, y in enumerate(h):
                        prod[i + j] = (prod[i + j] + x * y) % p
                if prod == list(f):
                    return False
    return True
