"""Desk-scale CKKS with a textbook and an RNS+NTT backend, plus a
single-bit fault-injection harness for error-sensitivity studies."""

from .ckks import Backend, Ciphertext, Params, Plaintext, decode, decrypt, encode, encrypt, keygen, make_params
from .fault import FaultSpec, InjectionResult, Outcome, Representation, Target, run_pipeline_with_fault

__all__ = [
    "Backend",
    "Ciphertext",
    "FaultSpec",
    "InjectionResult",
    "Outcome",
    "Params",
    "Plaintext",
    "Representation",
    "Target",
    "decode",
    "decrypt",
    "encode",
    "encrypt",
    "keygen",
    "make_params",
    "run_pipeline_with_fault",
]

__version__ = "0.1.0"
