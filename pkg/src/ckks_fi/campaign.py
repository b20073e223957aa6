"""Fault-injection sweeps and their CSV output.

A sweep enumerates every (target, representation, coefficient, bit) address
in its axes, runs each against one prepared pipeline, and emits one row per
fault. Rows are sorted before output so results never depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from ._io import write_atomic
from .ckks import Backend, Params
from .fault import (
    DEFAULT_TAU_BENIGN,
    WORD_BITS,
    FaultSpec,
    InjectionResult,
    Outcome,
    PreparedPipeline,
    Representation,
    Target,
    l2_error,
)

__all__ = [
    "Address",
    "CampaignConfig",
    "CampaignRow",
    "ImageResult",
    "default_message",
    "emit_csv",
    "enumerate_specs",
    "format_csv",
    "image_campaign",
    "l2_error",
    "sweep_bits",
    "sweep_scale_factors",
]

Address = tuple[Representation, "int | None"]

_TARGET_ORDER = {t.value: i for i, t in enumerate(Target)}
_REPR_ORDER = {r.value: i for i, r in enumerate(Representation)}


def default_message(n: int) -> np.ndarray:
    """Slots ``(k + 1) / (N/2)``: deterministic and free of symmetries."""
    slots = n // 2
    return (np.arange(slots) + 1.0) / slots + 0j


@dataclass(frozen=True)
class CampaignConfig:
    params: Params
    message: np.ndarray | None = None
    targets: tuple[Target, ...] = (Target.C0, Target.C1)
    representations: tuple[Address, ...] | None = None
    bits: Sequence[int] | None = None
    coeffs: Sequence[int] | None = None
    deltas: tuple[int, ...] = ()
    tau_benign: float = DEFAULT_TAU_BENIGN
    jobs: int = 1

    def resolved_message(self) -> np.ndarray:
        if self.message is None:
            return default_message(self.params.n)
        return np.asarray(self.message, dtype=np.complex128)

    def resolved_representations(self) -> tuple[Address, ...]:
        if self.representations is not None:
            return tuple(self.representations)
        if self.params.backend is Backend.TEXTBOOK:
            return ((Representation.BIG, None),)
        return tuple((Representation.NTT_LIMB, k) for k in range(len(self.params.chain)))


@dataclass(frozen=True)
class CampaignRow:
    backend: str
    target: str
    representation: str
    limb: int | None
    coeff_index: int
    bit_index: int
    delta: int
    outcome: str
    l2_error: float
    max_slot_error: float
    baseline_l2: float
    seed: int
    fault_l2: float

    @classmethod
    def build(cls, params: Params, spec: FaultSpec, result: InjectionResult) -> "CampaignRow":
        return cls(
            backend=params.backend.value,
            target=spec.target.value,
            representation=spec.representation.value,
            limb=spec.limb,
            coeff_index=spec.coeff_index,
            bit_index=spec.bit_index,
            delta=params.delta,
            outcome=result.outcome.value,
            l2_error=result.l2_error,
            max_slot_error=result.max_slot_error,
            baseline_l2=result.baseline_l2,
            seed=params.seed,
            fault_l2=result.fault_l2,
        )

    def sort_key(self) -> tuple:
        return (
            self.backend,
            _TARGET_ORDER.get(self.target, -1),
            _REPR_ORDER.get(self.representation, -1),
            -1 if self.limb is None else self.limb,
            self.coeff_index,
            self.bit_index,
            self.delta,
            self.seed,
        )


CSV_HEADER = tuple(f.name for f in fields(CampaignRow))


def enumerate_specs(config: CampaignConfig, params: Params | None = None) -> list[FaultSpec]:
    params = params or config.params
    coeffs = range(params.n) if config.coeffs is None else config.coeffs
    specs = []
    for target in config.targets:
        for rep, limb in config.resolved_representations():
            width = params.Q.bit_length() if rep is Representation.BIG else WORD_BITS
            bits = range(width) if config.bits is None else config.bits
            for i in coeffs:
                for j in bits:
                    spec = FaultSpec(target, rep, i, j, limb)
                    spec.check(params)
                    specs.append(spec)
    return specs


def _run_chunk(params: Params, z: np.ndarray, specs: list[FaultSpec], tau: float) -> list[CampaignRow]:
    pipeline = PreparedPipeline(params, z)
    return [CampaignRow.build(params, s, pipeline.run(s, tau)) for s in specs]


def _run_specs(params: Params, z: np.ndarray, specs: list[FaultSpec], tau: float, jobs: int) -> list[CampaignRow]:
    if jobs <= 1 or len(specs) < 2:
        return _run_chunk(params, z, specs, tau)
    size = math.ceil(len(specs) / (4 * jobs))
    chunks = [specs[i:i + size] for i in range(0, len(specs), size)]
    rows: list[CampaignRow] = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_run_chunk, *zip(*((params, z, c, tau) for c in chunks))):
            rows.extend(part)
    return rows


def sweep_bits(config: CampaignConfig) -> list[CampaignRow]:
    """One row per address in the config's axes, sorted by address."""
    params = config.params
    specs = enumerate_specs(config, params)
    rows = _run_specs(params, config.resolved_message(), specs, config.tau_benign, config.jobs)
    return sorted(rows, key=CampaignRow.sort_key)


def sweep_scale_factors(config: CampaignConfig) -> list[CampaignRow]:
    """The bit sweep repeated for every delta, with the same seed and message."""
    if not config.deltas:
        raise ValueError("delta sweep needs a non-empty delta list")
    z = config.resolved_message()
    rows: list[CampaignRow] = []
    for delta in config.deltas:
        params = config.params.with_delta(delta)
        specs = enumerate_specs(config, params)
        rows.extend(_run_specs(params, z, specs, config.tau_benign, config.jobs))
    return sorted(rows, key=CampaignRow.sort_key)


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_csv(rows: Iterable[CampaignRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in sorted(rows, key=CampaignRow.sort_key):
        writer.writerow([_csv_value(v) for v in astuple(row)])
    return buf.getvalue()


def emit_csv(rows: Iterable[CampaignRow], path: str | os.PathLike) -> None:
    write_atomic(path, format_csv(rows).encode("utf-8"))


# image experiment


@dataclass(frozen=True)
class ImageResult:
    image: np.ndarray | None  # None when the fault was detected
    baseline_image: np.ndarray
    row: CampaignRow
    blocks: int = field(default=1)


def image_to_messages(image: np.ndarray, slots: int) -> list[np.ndarray]:
    flat = np.asarray(image, dtype=np.float64).ravel() / 255.0
    count = max(1, math.ceil(flat.size / slots))
    padded = np.zeros(count * slots)
    padded[: flat.size] = flat
    return [padded[b * slots:(b + 1) * slots] + 0j for b in range(count)]


def messages_to_image(blocks: Sequence[np.ndarray], shape: tuple[int, int]) -> np.ndarray:
    flat = np.concatenate([np.real(b) for b in blocks])[: shape[0] * shape[1]]
    return np.clip(np.rint(flat * 255.0), 0, 255).astype(np.uint8).reshape(shape)


def image_campaign(
    params: Params,
    image: np.ndarray,
    spec: FaultSpec | None,
    *,
    block: int = 0,
    tau_benign: float = DEFAULT_TAU_BENIGN,
) -> ImageResult:
    """Encrypt an 8-bit grayscale image block by block; fault one block.

    Pixels are scaled to [0, 1] and packed row-major, N/2 per message. Every
    block uses the same keys and its own encryption stream. The output image
    is rounded back to gray levels and clamped to [0, 255].
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got shape {image.shape}")
    messages = image_to_messages(image, params.slots)
    if not 0 <= block < len(messages):
        raise ValueError(f"block {block} out of range; image spans {len(messages)} blocks")
    clean, faulty = [], []
    row = None
    for b, z in enumerate(messages):
        pipeline = PreparedPipeline(params, z, stream=b)
        clean.append(pipeline.baseline)
        if b != block:
            faulty.append(pipeline.baseline)
            continue
        result = pipeline.run(spec, tau_benign)
        faulty.append(result.recovered)
        row = CampaignRow.build(params, spec, result) if spec is not None else _baseline_row(params, result)
    baseline_image = messages_to_image(clean, image.shape)
    detected = row.outcome == Outcome.DETECTED.value
    out = None if detected else messages_to_image(faulty, image.shape)
    return ImageResult(out, baseline_image, row, len(messages))


def _baseline_row(params: Params, result: InjectionResult) -> CampaignRow:
    return CampaignRow(
        backend=params.backend.value,
        target="none",
        representation="none",
        limb=None,
        coeff_index=-1,
        bit_index=-1,
        delta=params.delta,
        outcome=result.outcome.value,
        l2_error=result.l2_error,
        max_slot_error=result.max_slot_error,
        baseline_l2=result.baseline_l2,
        seed=params.seed,
        fault_l2=result.fault_l2,
    )
