"""Residue number system over a chain of word-sized primes.

A coefficient ``p`` in ``[0, Q)`` with ``Q = q_1 * ... * q_L`` is held as the
residues ``r_k = p mod q_k``, each in one unsigned 64-bit word.
Reconstruction uses the CRT sum

    p = (sum_k r_k * [(Q/q_k)^-1 mod q_k] * (Q/q_k)) mod Q
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from .ring import BigPoly, DimensionError, RepresentationError


class ChainError(ValueError):
    """Prime chain cannot be built or does not match its operands."""


class Domain(enum.Enum):
    COEFFICIENT = "coefficient"
    NTT = "ntt"


@dataclass(frozen=True)
class PrimeChain:
    primes: tuple[int, ...]
    Q: int = field(init=False)
    Q_k: tuple[int, ...] = field(init=False, repr=False)
    inv_k: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        primes = tuple(int(q) for q in self.primes)
        if not primes:
            raise ChainError("prime chain needs at least one prime")
        if len(set(primes)) != len(primes):
            raise ChainError(f"primes must be distinct: {primes}")
        if any(q >= 1 << 62 or q < 2 for q in primes):
            raise ChainError("every prime must lie in [2, 2^62)")
        if any(math.gcd(a, b) != 1 for i, a in enumerate(primes) for b in primes[i + 1:]):
            raise ChainError(f"moduli must be pairwise coprime: {primes}")
        Q = math.prod(primes)
        Q_k = tuple(Q // q for q in primes)
        inv_k = tuple(pow(Qk % q, -1, q) for Qk, q in zip(Q_k, primes))
        object.__setattr__(self, "primes", primes)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "Q_k", Q_k)
        object.__setattr__(self, "inv_k", inv_k)

    def __len__(self) -> int:
        return len(self.primes)

    def crt_factor(self, k: int) -> int:
        """``inv_k * Q_k``, the weight a unit change in limb ``k`` carries into Z_Q."""
        return self.inv_k[k] * self.Q_k[k]

    def is_ntt_friendly(self, n: int) -> bool:
        return all(q % (2 * n) == 1 for q in self.primes)

    @property
    def moduli(self) -> np.ndarray:
        return np.array(self.primes, dtype=object)


def generate_prime_chain(n: int, L: int, bit_size: int, seed: int | None = None) -> PrimeChain:
    """Pick ``L`` distinct primes ``q = 1 (mod 2n)`` below ``2^bit_size``.

    Without a seed the scan runs downward from ``2^bit_size``, so the chain is
    the largest such primes. With a seed, the scan is confined to exactly
    ``bit_size``-bit primes and starts at a seed-derived point, wrapping once.
    """
    if not 2 <= bit_size <= 62:
        raise ChainError(f"bit_size must be in [2, 62], got {bit_size}")
    if L < 1:
        raise ChainError(f"L must be >= 1, got {L}")
    step = 2 * n
    top = ((1 << bit_size) - 2) // step * step + 1  # largest 1 mod 2n below 2^bit_size
    if seed is None:
        candidates = range(top, 1, -step)
    else:
        low = ((1 << (bit_size - 1)) + step - 2) // step * step + 1
        count = (top - low) // step + 1 if top >= low else 0
        start = int(np.random.default_rng(seed).integers(count)) if count else 0
        candidates = (top - ((start + i) % count) * step for i in range(count))
    found: list[int] = []
    for c in candidates:
        if gmpy2.is_prime(c):
            found.append(c)
            if len(found) == L:
                return PrimeChain(tuple(found))
    raise ChainError(f"only {len(found)} primes = 1 mod {step} of at most {bit_size} bits; need {L}")


@dataclass(frozen=True, eq=False)
class RnsPoly:
    """``L x N`` residues in 64-bit words plus a shared domain flag.

    Words are kept raw: a fault can leave ``limbs[k, i] >= q_k``; see
    :func:`validate`.
    """

    limbs: np.ndarray
    domain: Domain = Domain.COEFFICIENT

    def __post_init__(self) -> None:
        limbs = np.array(self.limbs, dtype=np.uint64)
        if limbs.ndim != 2:
            raise DimensionError(f"limbs must be 2-D (L, N), got shape {limbs.shape}")
        limbs.setflags(write=False)
        object.__setattr__(self, "limbs", limbs)

    @property
    def n(self) -> int:
        return self.limbs.shape[1]

    @property
    def num_limbs(self) -> int:
        return self.limbs.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RnsPoly):
            return NotImplemented
        return self.domain == other.domain and np.array_equal(self.limbs, other.limbs)

    def __hash__(self) -> int:
        return hash((self.domain, self.limbs.tobytes()))

    def as_objects(self) -> np.ndarray:
        """Residues as Python ints, for exact wide arithmetic."""
        return self.limbs.astype(object)

    @classmethod
    def from_objects(cls, values: np.ndarray, domain: Domain) -> "RnsPoly":
        return cls(np.array(values.tolist(), dtype=np.uint64), domain)


def _check_chain(r: RnsPoly, chain: PrimeChain) -> None:
    if r.num_limbs != len(chain):
        raise ChainError(f"polynomial has {r.num_limbs} limbs, chain has {len(chain)}")


def validate(r: RnsPoly, chain: PrimeChain) -> None:
    """Raise :class:`RepresentationError` if any residue is ``>= q_k``."""
    _check_chain(r, chain)
    bounds = np.array(chain.primes, dtype=np.uint64)[:, None]
    bad = np.argwhere(r.limbs >= bounds)
    if bad.size:
        k, i = (int(x) for x in bad[0])
        raise RepresentationError(
            f"limb {k} coefficient {i}: residue {int(r.limbs[k, i])} >= q_{k} = {chain.primes[k]}"
        )


def to_rns(p: BigPoly, chain: PrimeChain) -> RnsPoly:
    coeffs = np.array(p.coeffs, dtype=object)
    return RnsPoly.from_objects(coeffs[None, :] % chain.moduli[:, None], Domain.COEFFICIENT)


def from_rns(r: RnsPoly, chain: PrimeChain) -> BigPoly:
    if r.domain is not Domain.COEFFICIENT:
        raise ValueError("CRT reconstruction needs coefficient-domain residues")
    validate(r, chain)
    weights = np.array([chain.crt_factor(k) for k in range(len(chain))], dtype=object)
    total = (r.as_objects() * weights[:, None]).sum(axis=0)
    return BigPoly(tuple(int(v) % chain.Q for v in total))


def _binary_operands(a: RnsPoly, b: RnsPoly, chain: PrimeChain) -> tuple[np.ndarray, np.ndarray]:
    _check_chain(a, chain)
    _check_chain(b, chain)
    if a.n != b.n:
        raise DimensionError(f"ring dimension mismatch: {a.n} vs {b.n}")
    if a.domain is not b.domain:
        raise ValueError(f"domain mismatch: {a.domain.value} vs {b.domain.value}")
    return a.as_objects(), b.as_objects()


def rns_add(a: RnsPoly, b: RnsPoly, chain: PrimeChain) -> RnsPoly:
    x, y = _binary_operands(a, b, chain)
    return RnsPoly.from_objects((x + y) % chain.moduli[:, None], a.domain)


def rns_sub(a: RnsPoly, b: RnsPoly, chain: PrimeChain) -> RnsPoly:
    x, y = _binary_operands(a, b, chain)
    return RnsPoly.from_objects((x - y) % chain.moduli[:, None], a.domain)


def rns_neg(a: RnsPoly, chain: PrimeChain) -> RnsPoly:
    _check_chain(a, chain)
    return RnsPoly.from_objects(-a.as_objects() % chain.moduli[:, None], a.domain)


def rns_mul_pointwise(a: RnsPoly, b: RnsPoly, chain: PrimeChain) -> RnsPoly:
    x, y = _binary_operands(a, b, chain)
    if a.domain is not Domain.NTT:
        raise ValueError("pointwise multiplication is only a ring product in the NTT domain")
    return RnsPoly.from_objects((x * y) % chain.moduli[:, None], Domain.NTT)
