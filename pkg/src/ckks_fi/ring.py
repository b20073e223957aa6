"""Exact arithmetic in the negacyclic ring Z_Q[X]/(X^N + 1).

Coefficients are plain Python integers, stored canonically in ``[0, Q)``.
A fault may leave a coefficient outside that range; such polynomials are
still representable so that :func:`validate` can catch them later.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import gmpy2
import numpy as np


class DimensionError(ValueError):
    """Operands live in rings of different dimension."""


class RepresentationError(ValueError):
    """A stored value lies outside its canonical range.

    Raised by validity checks on polynomial state; the fault harness maps it
    to the DETECTED outcome.
    """


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class BigPoly:
    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(int(c) for c in self.coeffs)
        if len(coeffs) < 2 or not is_power_of_two(len(coeffs)):
            raise DimensionError(f"ring dimension must be a power of two >= 2, got {len(coeffs)}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, i: int) -> int:
        return self.coeffs[i]

    @classmethod
    def zero(cls, n: int) -> "BigPoly":
        return cls((0,) * n)

    @classmethod
    def from_ints(cls, values: Iterable[int], Q: int) -> "BigPoly":
        """Lift arbitrary (possibly negative) integers into ``[0, Q)``."""
        return cls(tuple(int(v) % Q for v in values))

    def centered(self, Q: int) -> list[int]:
        return [centered_lift(c, Q) for c in self.coeffs]


def validate(p: BigPoly, Q: int) -> None:
    for i, c in enumerate(p.coeffs):
        if not 0 <= c < Q:
            raise RepresentationError(f"coefficient {i} = {c} outside [0, Q)")


def _check_dims(a: BigPoly, b: BigPoly) -> None:
    if a.n != b.n:
        raise DimensionError(f"ring dimension mismatch: {a.n} vs {b.n}")


def poly_add(a: BigPoly, b: BigPoly, Q: int) -> BigPoly:
    _check_dims(a, b)
    return BigPoly(tuple((x + y) % Q for x, y in zip(a.coeffs, b.coeffs)))


def poly_sub(a: BigPoly, b: BigPoly, Q: int) -> BigPoly:
    _check_dims(a, b)
    return BigPoly(tuple((x - y) % Q for x, y in zip(a.coeffs, b.coeffs)))


def poly_neg(a: BigPoly, Q: int) -> BigPoly:
    return BigPoly(tuple(-x % Q for x in a.coeffs))


def poly_negacyclic_mul(a: BigPoly, b: BigPoly, Q: int) -> BigPoly:
    """Schoolbook product modulo ``(X^N + 1, Q)``.

    Quadratic in N and deliberately naive: this is the reference the fast
    paths are tested against. Each row ``a[i] * X^i * b`` is accumulated as
    a negacyclic shift of ``b``.
    """
    _check_dims(a, b)
    n = a.n
    bv = np.array(b.coeffs, dtype=object)
    acc = np.zeros(n, dtype=object)
    for i, ai in enumerate(a.coeffs):
        if ai == 0:
            continue
        # X^i * b: entries pushed past degree N-1 come back negated
        shifted = np.concatenate((-bv[n - i:], bv[: n - i]))
        acc = acc + ai * shifted
    return BigPoly(tuple(int(c) % Q for c in acc))


def poly_mul(a: BigPoly, b: BigPoly, Q: int) -> BigPoly:
    """Negacyclic product by Kronecker substitution.

    Both polynomials are packed into single integers with slots wide enough
    that no partial sum can carry into its neighbour, multiplied once with
    GMP, and unpacked. Exact, and far faster than the schoolbook loop for
    large N.
    """
    _check_dims(a, b)
    n = a.n
    width = 2 * Q.bit_length() + n.bit_length()
    product = gmpy2.pack([c % Q for c in a.coeffs], width) * gmpy2.pack([c % Q for c in b.coeffs], width)
    full = gmpy2.unpack(product, width)
    full += [0] * (2 * n - len(full))
    return BigPoly(tuple(int((full[k] - full[k + n]) % Q) for k in range(n)))


def centered_lift(c: int, Q: int) -> int:
    """Map ``c`` in ``[0, Q)`` to its representative in ``(-Q/2, Q/2]``."""
    if not 0 <= c < Q:
        raise RepresentationError(f"value {c} outside [0, {Q})")
    return c if 2 * c <= Q else c - Q


def monomial(n: int, i: int, coeff: int, Q: int) -> BigPoly:
    values = [0] * n
    values[i] = coeff
    return BigPoly.from_ints(values, Q)


def sample_ternary(n: int, rng: np.random.Generator, Q: int) -> BigPoly:
    return BigPoly.from_ints(rng.integers(-1, 2, size=n).tolist(), Q)


def sample_gaussian(n: int, sigma: float, rng: np.random.Generator, Q: int) -> BigPoly:
    """Rounded continuous Gaussian. ``sigma == 0`` yields the zero polynomial."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    draws = np.rint(rng.normal(0.0, sigma, size=n)).astype(np.int64)
    return BigPoly.from_ints(draws.tolist(), Q)


def sample_uniform(n: int, Q: int, rng: np.random.Generator) -> BigPoly:
    """Uniform coefficients in ``[0, Q)`` by rejection on ``bitlen(Q)``-bit draws."""
    nbits = Q.bit_length()
    nbytes = (nbits + 7) // 8
    mask = (1 << nbits) - 1
    out: list[int] = []
    while len(out) < n:
        raw = rng.bytes(nbytes * n)
        for k in range(n):
            v = int.from_bytes(raw[k * nbytes:(k + 1) * nbytes], "little") & mask
            if v < Q:
                out.append(v)
                if len(out) == n:
                    break
    return BigPoly(tuple(out))
