"""Single-level CKKS with two interchangeable backends.

``TEXTBOOK`` keeps every polynomial as a :class:`BigPoly` over Z_Q.
``RNS_NTT`` keeps keys, plaintexts and ciphertexts as NTT-domain RNS limbs.
Both draw the same random polynomials in the same order, so for one seed
they decrypt to the same integer polynomial.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Union

import numpy as np

from . import ntt, rns
from .ring import (
    BigPoly,
    centered_lift,
    is_power_of_two,
    poly_add,
    poly_mul,
    poly_neg,
    sample_gaussian,
    sample_ternary,
    sample_uniform,
)
from .ring import validate as validate_big
from .rns import PrimeChain, RnsPoly

Poly = Union[BigPoly, RnsPoly]

DEFAULT_SIGMA = 3.2
DEFAULT_DELTA = 2**40


class Backend(enum.Enum):
    TEXTBOOK = "textbook"
    RNS_NTT = "rns-ntt"


class ParameterError(ValueError):
    pass


class EncodingOverflowError(ValueError):
    """Scaled message would not fit in (-Q/2, Q/2]."""


@dataclass(frozen=True)
class Params:
    n: int
    delta: int
    chain: PrimeChain
    sigma: float = DEFAULT_SIGMA
    backend: Backend = Backend.TEXTBOOK
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2 or not is_power_of_two(self.n):
            raise ParameterError(f"N must be a power of two >= 2, got {self.n}")
        if self.delta < 2 or not is_power_of_two(self.delta):
            raise ParameterError(f"delta must be a power of two >= 2, got {self.delta}")
        if self.sigma < 0:
            raise ParameterError(f"sigma must be non-negative, got {self.sigma}")
        if self.backend is Backend.RNS_NTT and not self.chain.is_ntt_friendly(self.n):
            raise ParameterError(f"primes {self.chain.primes} are not 1 mod 2N = {2 * self.n}")
        if 2 * self.delta >= self.Q:
            raise ParameterError("delta leaves no headroom below Q/2")

    @property
    def Q(self) -> int:
        return self.chain.Q

    @property
    def slots(self) -> int:
        return self.n // 2

    def with_delta(self, delta: int) -> "Params":
        return replace(self, delta=delta)


def make_params(
    n: int,
    delta: int = DEFAULT_DELTA,
    *,
    num_primes: int = 3,
    prime_bits: int = 59,
    sigma: float = DEFAULT_SIGMA,
    backend: Backend = Backend.TEXTBOOK,
    seed: int = 0,
    chain_seed: int | None = None,
) -> Params:
    """Params with a freshly generated chain; primes are NTT-friendly for ``n``."""
    chain = rns.generate_prime_chain(n, num_primes, prime_bits, seed=chain_seed)
    return Params(n=n, delta=delta, chain=chain, sigma=sigma, backend=backend, seed=seed)


@dataclass(frozen=True)
class Plaintext:
    poly: Poly
    delta: int


@dataclass(frozen=True)
class SecretKey:
    s: BigPoly
    s_ntt: RnsPoly | None = None


@dataclass(frozen=True)
class PublicKey:
    b: Poly
    a: Poly


@dataclass(frozen=True)
class Ciphertext:
    c0: Poly
    c1: Poly
    delta: int


def pipeline_rngs(seed: int, stream: int = 0) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for key generation and for encryption ``stream``."""
    return np.random.default_rng([seed, 0]), np.random.default_rng([seed, 1, stream])


# canonical embedding


@lru_cache(maxsize=8)
def _embedding(n: int) -> np.ndarray:
    """``E[j, k] = zeta_j^k`` with ``zeta_j = exp(i*pi*(5^j mod 2N)/N)``."""
    two_n = 2 * n
    exps = [pow(5, j, two_n) for j in range(n // 2)]
    k = np.arange(n)
    phase = (np.array(exps)[:, None] * k[None, :]) % two_n
    E = np.exp(1j * np.pi * phase / n)
    E.setflags(write=False)
    return E


@lru_cache(maxsize=8)
def _embedding_adjoint(n: int) -> np.ndarray:
    E_H = np.ascontiguousarray(np.conj(_embedding(n)).T)
    E_H.setflags(write=False)
    return E_H


def embed_inverse(z: np.ndarray, n: int) -> np.ndarray:
    """Real coefficients whose evaluations at the slot roots are ``z``."""
    return (2.0 / n) * np.real(_embedding_adjoint(n) @ z)


def embed(coeffs: np.ndarray, n: int) -> np.ndarray:
    return _embedding(n) @ coeffs


def _as_message(z, params: Params) -> np.ndarray:
    msg = np.asarray(z, dtype=np.complex128)
    if msg.shape != (params.slots,):
        raise ParameterError(f"message must have N/2 = {params.slots} slots, got shape {msg.shape}")
    return msg


def encode(z, params: Params) -> Plaintext:
    msg = _as_message(z, params)
    peak = float(np.max(np.abs(msg))) if msg.size else 0.0
    # coefficient magnitude is at most delta * max|z|; keep N-fold headroom
    if params.delta * peak * params.n >= params.Q / 2:
        raise EncodingOverflowError(
            f"delta * max|z| * N = {params.delta * peak * params.n:.3e} reaches Q/2"
        )
    scaled = np.rint(embed_inverse(msg, params.n) * params.delta)
    p = BigPoly.from_ints((int(c) for c in scaled), params.Q)
    if params.backend is Backend.TEXTBOOK:
        return Plaintext(p, params.delta)
    return Plaintext(ntt.to_ntt(rns.to_rns(p, params.chain), params.chain), params.delta)


def to_bigpoly(poly: Poly, params: Params) -> BigPoly:
    """Canonical coefficient form of a backend polynomial, after validity checks."""
    if isinstance(poly, BigPoly):
        validate_big(poly, params.Q)
        return poly
    return rns.from_rns(ntt.from_ntt(poly, params.chain), params.chain)


def decode(pt: Plaintext, params: Params) -> np.ndarray:
    p = to_bigpoly(pt.poly, params)
    coeffs = np.array([centered_lift(c, params.Q) / pt.delta for c in p.coeffs])
    return embed(coeffs, params.n)


# keys, encryption, decryption


def _lift(p: BigPoly, params: Params) -> Poly:
    if params.backend is Backend.TEXTBOOK:
        return p
    return ntt.to_ntt(rns.to_rns(p, params.chain), params.chain)


def _native(poly: Poly, params: Params) -> Poly:
    """Validate ``poly`` and bring it into the backend's working form."""
    if params.backend is Backend.TEXTBOOK:
        if not isinstance(poly, BigPoly):
            raise ParameterError("textbook backend expects BigPoly state")
        validate_big(poly, params.Q)
        return poly
    if not isinstance(poly, RnsPoly):
        raise ParameterError("RNS_NTT backend expects RnsPoly state")
    rns.validate(poly, params.chain)
    return ntt.to_ntt(poly, params.chain)


def _add(a: Poly, b: Poly, params: Params) -> Poly:
    if params.backend is Backend.TEXTBOOK:
        return poly_add(a, b, params.Q)
    return rns.rns_add(a, b, params.chain)


def _mul(a: Poly, b: Poly, params: Params) -> Poly:
    if params.backend is Backend.TEXTBOOK:
        return poly_mul(a, b, params.Q)
    return rns.rns_mul_pointwise(a, b, params.chain)


def keygen(params: Params, rng: np.random.Generator) -> tuple[SecretKey, PublicKey]:
    n, Q = params.n, params.Q
    s = sample_ternary(n, rng, Q)
    a = sample_uniform(n, Q, rng)
    e = sample_gaussian(n, params.sigma, rng, Q)
    if params.backend is Backend.TEXTBOOK:
        b = poly_add(poly_neg(poly_mul(a, s, Q), Q), e, Q)
        return SecretKey(s), PublicKey(b, a)
    chain = params.chain
    s_n, a_n, e_n = (_lift(x, params) for x in (s, a, e))
    b_n = rns.rns_add(rns.rns_neg(rns.rns_mul_pointwise(a_n, s_n, chain), chain), e_n, chain)
    return SecretKey(s, s_n), PublicKey(b_n, a_n)


def encrypt(pt: Plaintext, pk: PublicKey, params: Params, rng: np.random.Generator) -> Ciphertext:
    """``c0 = b*u + e0 + p``, ``c1 = a*u + e1``.

    The plaintext is checked for representation validity first, so a
    corrupted plaintext is reported instead of silently reduced.
    """
    p = _native(pt.poly, params)
    n, Q = params.n, params.Q
    u = _lift(sample_ternary(n, rng, Q), params)
    e0 = _lift(sample_gaussian(n, params.sigma, rng, Q), params)
    e1 = _lift(sample_gaussian(n, params.sigma, rng, Q), params)
    c0 = _add(_add(_mul(pk.b, u, params), e0, params), p, params)
    c1 = _add(_mul(pk.a, u, params), e1, params)
    return Ciphertext(c0, c1, pt.delta)


def decrypt(ct: Ciphertext, sk: SecretKey, params: Params) -> Plaintext:
    """``m' = c0 + c1*s mod Q``; raises RepresentationError on corrupt state."""
    c0 = _native(ct.c0, params)
    c1 = _native(ct.c1, params)
    if params.backend is Backend.TEXTBOOK:
        return Plaintext(poly_add(c0, poly_mul(c1, sk.s, params.Q), params.Q), ct.delta)
    s = sk.s_ntt if sk.s_ntt is not None else _lift(sk.s, params)
    m = rns.rns_add(c0, rns.rns_mul_pointwise(c1, s, params.chain), params.chain)
    return Plaintext(ntt.from_ntt(m, params.chain), ct.delta)
