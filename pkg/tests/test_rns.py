import itertools

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from ckks_fi.ntt import from_ntt, to_ntt
from ckks_fi.ring import BigPoly, RepresentationError, poly_add, poly_negacyclic_mul, sample_uniform
from ckks_fi.rns import (
    ChainError,
    Domain,
    PrimeChain,
    RnsPoly,
    from_rns,
    generate_prime_chain,
    rns_add,
    rns_mul_pointwise,
    rns_sub,
    to_rns,
    validate,
)

DEFAULT_CHAIN = generate_prime_chain(1024, 3, 59)


def crt_brute_force(residues, primes):
    Q = int(np.prod(primes))
    matches = [v for v in range(Q) if all(v % q == r for q, r in zip(primes, residues))]
    assert len(matches) == 1
    return matches[0]


def test_tiny_chain():
    chain = generate_prime_chain(2, 2, 4)
    assert set(chain.primes) == {5, 13}
    assert all(sympy.isprime(q) and q % 4 == 1 for q in chain.primes)


def test_single_limb_chain():
    chain = generate_prime_chain(8, 1, 30)
    assert chain.Q == chain.primes[0]
    assert chain.crt_factor(0) % chain.Q == 1


def test_default_size_chain():
    assert len(DEFAULT_CHAIN) == 3
    for q in DEFAULT_CHAIN.primes:
        assert sympy.isprime(q)
        assert q % 2048 == 1
        assert q.bit_length() == 59
    assert len(set(DEFAULT_CHAIN.primes)) == 3


def test_chain_precomputation():
    for q, Qk, inv in zip(DEFAULT_CHAIN.primes, DEFAULT_CHAIN.Q_k, DEFAULT_CHAIN.inv_k):
        assert Qk * q == DEFAULT_CHAIN.Q
        assert Qk * inv % q == 1


def test_seeded_chain_is_deterministic_and_sized():
    a = generate_prime_chain(16, 3, 40, seed=5)
    assert a == generate_prime_chain(16, 3, 40, seed=5)
    assert all(q.bit_length() == 40 and q % 32 == 1 and sympy.isprime(q) for q in a.primes)


def test_chain_errors():
    with pytest.raises(ChainError):
        generate_prime_chain(4, 50, 5)
    with pytest.raises(ChainError):
        generate_prime_chain(4, 1, 63)
    with pytest.raises(ChainError):
        PrimeChain((7, 7))


def test_to_rns_example(small_chain):
    r = to_rns(BigPoly((18, 0)), small_chain)
    assert r.limbs.tolist() == [[3, 0], [4, 0]]
    assert r.domain is Domain.COEFFICIENT


def test_to_rns_zero(small_chain):
    assert not to_rns(BigPoly.zero(8), small_chain).limbs.any()


def test_from_rns_example(small_chain):
    r = RnsPoly(np.array([[3, 0], [4, 0]]))
    assert from_rns(r, small_chain).coeffs == (18, 0)
    assert crt_brute_force((3, 4), (5, 7)) == 18
    # the CRT weights used along the way
    assert small_chain.crt_factor(0) == 3 * 7 and small_chain.crt_factor(1) == 3 * 5


def test_from_rns_low_bit_flip_jumps(small_chain):
    flipped = RnsPoly(np.array([[3 ^ 1, 0], [4, 0]]))
    assert from_rns(flipped, small_chain).coeffs == (32, 0)
    assert crt_brute_force((2, 4), (5, 7)) == 32


def test_from_rns_rejects_invalid_residue(small_chain):
    with pytest.raises(RepresentationError):
        from_rns(RnsPoly(np.array([[5, 0], [4, 0]])), small_chain)
    with pytest.raises(RepresentationError):
        validate(RnsPoly(np.array([[0, 0], [0, 7]])), small_chain)


def test_from_rns_exhaustive_small_chain(small_chain):
    for v in range(35):
        p = BigPoly((v, 0))
        assert from_rns(to_rns(p, small_chain), small_chain) == p
    for r0, r1 in itertools.product(range(5), range(7)):
        r = RnsPoly(np.array([[r0, 0], [r1, 0]]))
        assert from_rns(r, small_chain).coeffs[0] == crt_brute_force((r0, r1), (5, 7))


@given(st.lists(st.integers(0, DEFAULT_CHAIN.Q - 1), min_size=8, max_size=8))
def test_roundtrip_random(values):
    p = BigPoly(tuple(values))
    assert from_rns(to_rns(p, DEFAULT_CHAIN), DEFAULT_CHAIN) == p


def test_rns_add_example(small_chain):
    s = rns_add(to_rns(BigPoly((18, 0)), small_chain), to_rns(BigPoly((20, 0)), small_chain), small_chain)
    assert s == to_rns(BigPoly((3, 0)), small_chain)


def test_rns_add_zero_identity(small_chain):
    a = to_rns(BigPoly((18, 33)), small_chain)
    assert rns_add(a, to_rns(BigPoly.zero(2), small_chain), small_chain) == a


def test_domain_and_chain_mismatch(small_chain):
    a = to_rns(BigPoly((1, 2)), small_chain)
    with pytest.raises(ValueError):
        rns_mul_pointwise(a, a, small_chain)
    with pytest.raises(ValueError):
        rns_add(a, RnsPoly(a.limbs, Domain.NTT), small_chain)
    with pytest.raises(ChainError):
        rns_add(a, a, PrimeChain((5, 7, 11)))


@given(st.data())
@settings(max_examples=40)
def test_add_sub_homomorphism(data):
    Q = DEFAULT_CHAIN.Q
    a = BigPoly(tuple(data.draw(st.lists(st.integers(0, Q - 1), min_size=8, max_size=8))))
    b = BigPoly(tuple(data.draw(st.lists(st.integers(0, Q - 1), min_size=8, max_size=8))))
    ra, rb = to_rns(a, DEFAULT_CHAIN), to_rns(b, DEFAULT_CHAIN)
    assert to_rns(poly_add(a, b, Q), DEFAULT_CHAIN) == rns_add(ra, rb, DEFAULT_CHAIN)
    assert from_rns(rns_sub(rns_add(ra, rb, DEFAULT_CHAIN), rb, DEFAULT_CHAIN), DEFAULT_CHAIN) == a


def test_pointwise_mul_matches_schoolbook():
    rng = np.random.default_rng(8)
    Q = DEFAULT_CHAIN.Q
    for _ in range(10):
        a = sample_uniform(8, Q, rng)
        b = sample_uniform(8, Q, rng)
        prod = rns_mul_pointwise(
            to_ntt(to_rns(a, DEFAULT_CHAIN), DEFAULT_CHAIN), to_ntt(to_rns(b, DEFAULT_CHAIN), DEFAULT_CHAIN), DEFAULT_CHAIN
        )
        assert from_rns(from_ntt(prod, DEFAULT_CHAIN), DEFAULT_CHAIN) == poly_negacyclic_mul(a, b, Q)


def flip_delta(chain, value, k, j):
    """Change in the reconstructed coefficient when bit j of residue k flips."""
    r = to_rns(BigPoly((value, 0)), chain)
    limbs = r.limbs.copy()
    limbs[k, 0] ^= np.uint64(1 << j)
    if int(limbs[k, 0]) >= chain.primes[k]:
        return None
    return from_rns(RnsPoly(limbs), chain).coeffs[0] - value, int(r.limbs[k, 0]) >> j & 1


def test_flip_amplification_formula():
    rng = np.random.default_rng(21)
    checked = 0
    while checked < 200:
        value = int(sample_uniform(2, DEFAULT_CHAIN.Q, rng).coeffs[0])
        k = int(rng.integers(3))
        j = int(rng.integers(59))
        out = flip_delta(DEFAULT_CHAIN, value, k, j)
        if out is None:
            continue
        delta, bit = out
        sign = -1 if bit else 1
        assert delta % DEFAULT_CHAIN.Q == sign * 2**j * DEFAULT_CHAIN.crt_factor(k) % DEFAULT_CHAIN.Q
        checked += 1
