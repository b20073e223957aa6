"""Single-bit fault injection into the CKKS pipeline.

A :class:`FaultSpec` names one bit: which polynomial (plaintext, ``c0`` or
``c1``), in which representation (big-integer coefficient, coefficient-domain
RNS limb, or NTT-domain RNS limb), at which coefficient and bit. The pipeline
is run once without the fault and once with it, using identical randomness,
so the flipped bit is the only difference between the two runs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import ntt
from .ckks import (
    Backend,
    Ciphertext,
    Params,
    Plaintext,
    decode,
    decrypt,
    encode,
    encrypt,
    keygen,
    pipeline_rngs,
    to_bigpoly,
)
from .ring import BigPoly, RepresentationError
from .rns import Domain, RnsPoly

WORD_BITS = 64
DEFAULT_TAU_BENIGN = 2.0
EPS = 1e-18


class FaultAddressError(ValueError):
    """FaultSpec does not address a bit of the given state."""


class Stage(enum.Enum):
    POST_ENCODE = "post-encode"
    POST_ENCRYPT = "post-encrypt"


class Target(enum.Enum):
    PLAINTEXT = "plaintext"
    C0 = "c0"
    C1 = "c1"


class Representation(enum.Enum):
    BIG = "big"
    RNS_LIMB = "rns"
    NTT_LIMB = "ntt"


class Outcome(enum.Enum):
    BENIGN = "BENIGN"
    SDC = "SDC"
    DETECTED = "DETECTED"


@dataclass(frozen=True)
class FaultSpec:
    target: Target
    representation: Representation
    coeff_index: int
    bit_index: int
    limb: int | None = None

    def __post_init__(self) -> None:
        if self.representation is Representation.BIG:
            if self.limb is not None:
                raise FaultAddressError("BIG faults take no limb index")
        elif self.limb is None or self.limb < 0:
            raise FaultAddressError(f"{self.representation.name} faults need a limb index >= 0")
        if self.coeff_index < 0 or self.bit_index < 0:
            raise FaultAddressError("coefficient and bit indices must be non-negative")

    @property
    def stage(self) -> Stage:
        return Stage.POST_ENCODE if self.target is Target.PLAINTEXT else Stage.POST_ENCRYPT

    def check(self, params: Params) -> None:
        """Reject addresses that do not exist under ``params``."""
        if self.coeff_index >= params.n:
            raise FaultAddressError(f"coefficient {self.coeff_index} out of range for N = {params.n}")
        if self.representation is Representation.BIG:
            if params.backend is not Backend.TEXTBOOK:
                raise FaultAddressError("BIG addressing requires the textbook backend")
            if self.bit_index >= params.Q.bit_length():
                raise FaultAddressError(f"bit {self.bit_index} beyond bitlen(Q) = {params.Q.bit_length()}")
        else:
            if params.backend is not Backend.RNS_NTT:
                raise FaultAddressError("limb addressing requires the RNS_NTT backend")
            if self.limb >= len(params.chain):
                raise FaultAddressError(f"limb {self.limb} out of range for L = {len(params.chain)}")
            if self.bit_index >= WORD_BITS:
                raise FaultAddressError(f"bit {self.bit_index} beyond a {WORD_BITS}-bit word")


@dataclass(frozen=True)
class InjectionResult:
    recovered: np.ndarray | None
    l2_error: float
    max_slot_error: float
    outcome: Outcome
    baseline_l2: float
    # L2 distance to the fault-free recovered message
    fault_l2: float


def classify(
    l2_error: float,
    baseline_l2: float,
    detected: bool,
    tau_benign: float = DEFAULT_TAU_BENIGN,
    eps: float = EPS,
) -> Outcome:
    if detected:
        return Outcome.DETECTED
    if l2_error <= tau_benign * max(baseline_l2, eps):
        return Outcome.BENIGN
    return Outcome.SDC


def apply_fault(state: BigPoly | RnsPoly, spec: FaultSpec) -> BigPoly | RnsPoly:
    """Return ``state`` with exactly one bit toggled.

    ``state`` must already be in the addressed representation: a BigPoly for
    BIG, a coefficient-domain RnsPoly for RNS_LIMB, an NTT-domain RnsPoly for
    NTT_LIMB.
    """
    i, j = spec.coeff_index, spec.bit_index
    if spec.representation is Representation.BIG:
        if not isinstance(state, BigPoly):
            raise FaultAddressError("BIG fault needs a BigPoly")
        if i >= state.n:
            raise FaultAddressError(f"coefficient {i} out of range for N = {state.n}")
        coeffs = list(state.coeffs)
        coeffs[i] ^= 1 << j
        return BigPoly(tuple(coeffs))

    if not isinstance(state, RnsPoly):
        raise FaultAddressError(f"{spec.representation.name} fault needs an RnsPoly")
    want = Domain.NTT if spec.representation is Representation.NTT_LIMB else Domain.COEFFICIENT
    if state.domain is not want:
        raise FaultAddressError(f"{spec.representation.name} fault needs {want.value}-domain limbs")
    if spec.limb >= state.num_limbs or i >= state.n or j >= WORD_BITS:
        raise FaultAddressError(f"address (limb {spec.limb}, coeff {i}, bit {j}) out of range")
    limbs = state.limbs.copy()
    limbs[spec.limb, i] ^= np.uint64(1 << j)
    return RnsPoly(limbs, state.domain)


def _to_addressed(poly, spec: FaultSpec, params: Params):
    if spec.representation is Representation.RNS_LIMB:
        return ntt.from_ntt(poly, params.chain)
    if spec.representation is Representation.NTT_LIMB:
        return ntt.to_ntt(poly, params.chain)
    return poly


def l2_error(z: np.ndarray, z_ref: np.ndarray) -> float:
    z = np.asarray(z)
    z_ref = np.asarray(z_ref)
    if z.shape != z_ref.shape:
        raise ValueError(f"length mismatch: {z.shape} vs {z_ref.shape}")
    return float(np.sqrt(np.sum(np.abs(z - z_ref) ** 2)))


class PreparedPipeline:
    """Keys, plaintext and ciphertext for one (params, message, stream).

    Built once and reused for every fault of a sweep; each :meth:`run`
    replays only the stages after the injection point, with the same
    encryption randomness the baseline used.
    """

    def __init__(self, params: Params, z, *, stream: int = 0) -> None:
        self.params = params
        self.z = np.asarray(z, dtype=np.complex128)
        self.stream = stream
        key_rng, _ = pipeline_rngs(params.seed, stream)
        self.sk, self.pk = keygen(params, key_rng)
        self.plaintext = encode(self.z, params)
        self.ciphertext = self._encrypt(self.plaintext)

    def _encrypt(self, pt: Plaintext) -> Ciphertext:
        _, enc_rng = pipeline_rngs(self.params.seed, self.stream)
        return encrypt(pt, self.pk, self.params, enc_rng)

    @cached_property
    def decrypted(self) -> BigPoly:
        """Fault-free ``m' = c0 + c1*s`` as a canonical BigPoly."""
        return to_bigpoly(decrypt(self.ciphertext, self.sk, self.params).poly, self.params)

    @cached_property
    def baseline(self) -> np.ndarray:
        return decode(decrypt(self.ciphertext, self.sk, self.params), self.params)

    @cached_property
    def baseline_l2(self) -> float:
        return l2_error(self.baseline, self.z)

    def faulty_ciphertext(self, spec: FaultSpec) -> Ciphertext:
        """The ciphertext as it reaches decryption, with ``spec`` applied."""
        spec.check(self.params)
        if spec.target is Target.PLAINTEXT:
            poly = apply_fault(_to_addressed(self.plaintext.poly, spec, self.params), spec)
            return self._encrypt(Plaintext(poly, self.plaintext.delta))
        ct = self.ciphertext
        if spec.target is Target.C0:
            return Ciphertext(apply_fault(_to_addressed(ct.c0, spec, self.params), spec), ct.c1, ct.delta)
        return Ciphertext(ct.c0, apply_fault(_to_addressed(ct.c1, spec, self.params), spec), ct.delta)

    def run(self, spec: FaultSpec | None = None, tau_benign: float = DEFAULT_TAU_BENIGN) -> InjectionResult:
        if spec is None:
            recovered = self.baseline
        else:
            try:
                ct = self.faulty_ciphertext(spec)
                recovered = decode(decrypt(ct, self.sk, self.params), self.params)
            except RepresentationError:
                return InjectionResult(
                    recovered=None,
                    l2_error=float("inf"),
                    max_slot_error=float("inf"),
                    outcome=Outcome.DETECTED,
                    baseline_l2=self.baseline_l2,
                    fault_l2=float("inf"),
                )
        err = l2_error(recovered, self.z)
        return InjectionResult(
            recovered=recovered,
            l2_error=err,
            max_slot_error=float(np.max(np.abs(recovered - self.z))),
            outcome=classify(err, self.baseline_l2, False, tau_benign),
            baseline_l2=self.baseline_l2,
            fault_l2=l2_error(recovered, self.baseline),
        )


def run_pipeline_with_fault(
    params: Params,
    z,
    spec: FaultSpec | None = None,
    *,
    tau_benign: float = DEFAULT_TAU_BENIGN,
    stream: int = 0,
) -> InjectionResult:
    """encode -> [fault] -> encrypt -> [fault] -> decrypt -> decode, against a clean run."""
    return PreparedPipeline(params, z, stream=stream).run(spec, tau_benign)
