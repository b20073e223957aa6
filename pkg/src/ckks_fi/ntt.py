"""Negacyclic number theoretic transform, one RNS limb at a time.

Forward transform: iterative Cooley-Tukey with the ``psi`` weighting merged
into bit-reversed twiddles, so no separate pre-scaling pass is needed. The
inverse is the matching Gentleman-Sande network followed by ``N^-1``.

Output order of the forward transform: entry ``i`` is the input polynomial
evaluated at ``psi^(2*bitrev(i) + 1)``.

All butterflies of one stage are applied at once on object arrays of Python
ints, across every limb, so products never overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .ring import DimensionError, is_power_of_two
from .rns import Domain, PrimeChain, RnsPoly, validate


class NTTParameterError(ValueError):
    """Prime does not support a negacyclic transform of the requested size."""


def bit_reverse(i: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (i & 1)
        i >>= 1
    return out


def find_primitive_root(q: int, order: int) -> int:
    """Smallest element of multiplicative order exactly ``order`` mod ``q``.

    ``order`` must be a power of two dividing ``q - 1``. Any generator of the
    order-``order`` subgroup is found first; the minimum over its odd powers
    is returned so the choice is canonical.
    """
    if order < 2 or not is_power_of_two(order):
        raise NTTParameterError(f"order must be a power of two >= 2, got {order}")
    if (q - 1) % order:
        raise NTTParameterError(f"q = {q} is not 1 mod {order}")
    half = order // 2
    cofactor = (q - 1) // order
    for x in range(2, q):
        root = pow(x, cofactor, q)
        if pow(root, half, q) == q - 1:
            break
    else:
        raise NTTParameterError(f"no element of order {order} mod {q}; is q prime?")
    best = root
    sq = root * root % q
    power = root
    for _ in range(half - 1):
        power = power * sq % q
        best = min(best, power)
    return best


def butterfly(a: int, b: int, w: int, q: int) -> tuple[int, int]:
    t = w * b % q
    return (a + t) % q, (a - t) % q


@dataclass(frozen=True)
class TwiddleTable:
    q: int
    n: int
    psi: int
    forward: tuple[int, ...]  # psi^bitrev(i)
    inverse: tuple[int, ...]  # psi^-bitrev(i)
    n_inv: int


@lru_cache(maxsize=None)
def make_twiddle_table(q: int, n: int) -> TwiddleTable:
    if n < 2 or not is_power_of_two(n):
        raise DimensionError(f"transform length must be a power of two >= 2, got {n}")
    psi = find_primitive_root(q, 2 * n)
    psi_inv = pow(psi, -1, q)
    logn = n.bit_length() - 1
    forward = tuple(pow(psi, bit_reverse(i, logn), q) for i in range(n))
    inverse = tuple(pow(psi_inv, bit_reverse(i, logn), q) for i in range(n))
    return TwiddleTable(q=q, n=n, psi=psi, forward=forward, inverse=inverse, n_inv=pow(n, -1, q))


def chain_tables(chain: PrimeChain, n: int) -> tuple[TwiddleTable, ...]:
    return tuple(make_twiddle_table(q, n) for q in chain.primes)


def _stacked(tables: Sequence[TwiddleTable]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    q = np.array([t.q for t in tables], dtype=object)[:, None, None]
    fwd = np.array([t.forward for t in tables], dtype=object)
    inv = np.array([t.inverse for t in tables], dtype=object)
    n_inv = np.array([t.n_inv for t in tables], dtype=object)[:, None]
    return q, fwd, inv, n_inv


def _forward_batch(x: np.ndarray, tables: Sequence[TwiddleTable]) -> np.ndarray:
    L, n = x.shape
    q, fwd, _, _ = _stacked(tables)
    a = x % q[:, :, 0]
    m = 1
    while m < n:
        t = n // (2 * m)
        v = a.reshape(L, m, 2, t)
        w = fwd[:, m:2 * m, None]
        upper = v[:, :, 0, :]
        lower = v[:, :, 1, :] * w % q
        a = np.stack(((upper + lower) % q, (upper - lower) % q), axis=2).reshape(L, n)
        m *= 2
    return a


def _inverse_batch(x: np.ndarray, tables: Sequence[TwiddleTable]) -> np.ndarray:
    L, n = x.shape
    q, _, inv, n_inv = _stacked(tables)
    a = x % q[:, :, 0]
    t = 1
    m = n
    while m > 1:
        h = m // 2
        v = a.reshape(L, h, 2, t)
        w = inv[:, h:m, None]
        upper = v[:, :, 0, :]
        lower = v[:, :, 1, :]
        a = np.stack(((upper + lower) % q, (upper - lower) * w % q), axis=2).reshape(L, n)
        t *= 2
        m = h
    return a * n_inv % q[:, :, 0]


def _as_limb(limb: Sequence[int], table: TwiddleTable) -> np.ndarray:
    x = np.array([int(v) for v in limb], dtype=object)
    if x.shape != (table.n,):
        raise DimensionError(f"expected {table.n} residues, got {x.shape[0]}")
    return x[None, :]


def ntt_forward(limb: Sequence[int], table: TwiddleTable) -> np.ndarray:
    """Forward negacyclic NTT of one limb; returns fully reduced uint64 residues."""
    out = _forward_batch(_as_limb(limb, table), (table,))
    return np.array(out[0].tolist(), dtype=np.uint64)


def ntt_inverse(limb: Sequence[int], table: TwiddleTable) -> np.ndarray:
    out = _inverse_batch(_as_limb(limb, table), (table,))
    return np.array(out[0].tolist(), dtype=np.uint64)


def to_ntt(r: RnsPoly, chain: PrimeChain) -> RnsPoly:
    """Move every limb to the NTT domain. Inputs must be valid residues."""
    if r.domain is Domain.NTT:
        return r
    validate(r, chain)
    out = _forward_batch(r.as_objects(), chain_tables(chain, r.n))
    return RnsPoly.from_objects(out, Domain.NTT)


def from_ntt(r: RnsPoly, chain: PrimeChain) -> RnsPoly:
    if r.domain is Domain.COEFFICIENT:
        return r
    validate(r, chain)
    out = _inverse_batch(r.as_objects(), chain_tables(chain, r.n))
    return RnsPoly.from_objects(out, Domain.COEFFICIENT)
