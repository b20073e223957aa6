"""Command-line entry point.

Subcommands: ``roundtrip``, ``inject``, ``sweep``, ``delta-sweep``, ``image``.
Every run prints its effective configuration as a ``# config:`` line first.

Exit codes: 0 success / BENIGN, 1 roundtrip above the precision bound,
2 usage or validation error, 3 SDC, 4 DETECTED, 5 I/O error or unreadable
input file.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import campaign, pgm
from .ckks import Backend, Params, make_params
from .fault import (
    DEFAULT_TAU_BENIGN,
    FaultSpec,
    Outcome,
    Representation,
    Target,
    run_pipeline_with_fault,
)

EXIT_OK = 0
EXIT_IMPRECISE = 1
EXIT_USAGE = 2
EXIT_SDC = 3
EXIT_DETECTED = 4
EXIT_IO = 5

SEED_ENV = "CKKS_FI_SEED"
OUTCOME_EXIT = {Outcome.BENIGN: EXIT_OK, Outcome.SDC: EXIT_SDC, Outcome.DETECTED: EXIT_DETECTED}
DEFAULT_N = {"roundtrip": 4, "inject": 4, "sweep": 4, "delta-sweep": 4, "image": 2048}


def precision_bound(n: int) -> float:
    """Fault-free L2 bound used by ``roundtrip``: 1e-6 * sqrt(N/2)."""
    return 1e-6 * math.sqrt(n / 2)


def parse_power(text: str) -> int:
    """Integers given as ``2^k``, ``2**k`` or plain decimal."""
    s = text.strip()
    try:
        for sep in ("^", "**"):
            if sep in s:
                base, exp = s.split(sep, 1)
                return int(base) ** int(exp)
        return int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer or power: {text!r}") from None


def parse_int_range(text: str) -> list[int]:
    """``5``, ``0:64`` (half-open) or ``1,3,7``."""
    try:
        if ":" in text:
            lo, hi = text.split(":", 1)
            return list(range(int(lo), int(hi)))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad index list: {text!r}") from None


def _powers(text: str) -> list[int]:
    return [parse_power(v) for v in text.split(",") if v.strip()]


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=None, help="ring dimension N (power of two)")
    p.add_argument("--delta", type=parse_power, default=2**40, help="scale factor, e.g. 2^40")
    p.add_argument("--backend", choices=[b.value for b in Backend], default=Backend.TEXTBOOK.value)
    p.add_argument("--L", dest="num_primes", type=int, default=3, help="number of RNS primes")
    p.add_argument("--prime-bits", type=int, default=59)
    p.add_argument("--sigma", type=float, default=3.2)
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU_BENIGN, help="benign threshold, x baseline L2")


def _add_fault(p: argparse.ArgumentParser, default_target: str) -> None:
    p.add_argument("--target", choices=[t.value for t in Target], default=default_target)
    p.add_argument("--repr", dest="representation", choices=[r.value for r in Representation], default=None,
                   help="big (textbook), rns or ntt (rns-ntt); default follows the backend")
    p.add_argument("--limb", type=int, default=0)
    p.add_argument("--coeff", type=int, default=0)
    p.add_argument("--bit", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ckks-fi", description="CKKS single-bit fault injection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("roundtrip", help="fault-free pipeline precision check")
    _add_common(p)

    p = sub.add_parser("inject", help="run one fault and print its CSV row")
    _add_common(p)
    _add_fault(p, Target.C0.value)

    for name, text in (("sweep", "bit-position sweep"), ("delta-sweep", "bit sweep per scale factor")):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        p.add_argument("--targets", default="c0,c1", help="comma list of plaintext,c0,c1")
        p.add_argument("--repr", dest="representation", choices=[r.value for r in Representation], default=None)
        p.add_argument("--limbs", type=parse_int_range, default=None, help="limbs for rns/ntt (default all)")
        p.add_argument("--bits", type=parse_int_range, default=None, help="e.g. 0:64 (default full word)")
        p.add_argument("--coeffs", type=parse_int_range, default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", required=True, help="CSV output path")
        if name == "delta-sweep":
            p.add_argument("--deltas", type=_powers, default=[2**20, 2**40, 2**50])

    p = sub.add_parser("image", help="push a PGM image through the pipeline with one fault")
    _add_common(p)
    _add_fault(p, Target.PLAINTEXT.value)
    p.add_argument("--image", required=True, help="input PGM (P2 or P5, 8-bit)")
    p.add_argument("--out", required=True, help="output PGM")
    p.add_argument("--block", type=int, default=0)
    p.add_argument("--no-fault", action="store_true", help="run without injecting")
    p.add_argument("--csv", default=None, help="also write the result row here")
    return parser


def _params(args: argparse.Namespace) -> Params:
    return make_params(
        args.n,
        args.delta,
        num_primes=args.num_primes,
        prime_bits=args.prime_bits,
        sigma=args.sigma,
        backend=Backend(args.backend),
        seed=args.seed,
    )


def _representation(args: argparse.Namespace) -> Representation:
    if args.representation is not None:
        return Representation(args.representation)
    return Representation.BIG if args.backend == Backend.TEXTBOOK.value else Representation.NTT_LIMB


def _spec(args: argparse.Namespace) -> FaultSpec:
    rep = _representation(args)
    limb = None if rep is Representation.BIG else args.limb
    return FaultSpec(Target(args.target), rep, args.coeff, args.bit, limb)


def _config_line(args: argparse.Namespace) -> str:
    items = {k: v for k, v in sorted(vars(args).items()) if k != "command"}
    for k, v in items.items():
        if isinstance(v, list):
            items[k] = ",".join(str(x) for x in v)
    body = " ".join(f"{k}={v}" for k, v in items.items())
    return f"# config: command={args.command} {body}"


def _roundtrip(args: argparse.Namespace, params: Params) -> int:
    result = run_pipeline_with_fault(params, campaign.default_message(params.n), tau_benign=args.tau)
    bound = precision_bound(params.n)
    ok = result.l2_error <= bound
    print(f"baseline_l2={result.l2_error!r}")
    print(f"max_slot_error={result.max_slot_error!r}")
    print(f"bound={bound!r} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_IMPRECISE


def _inject(args: argparse.Namespace, params: Params) -> int:
    spec = _spec(args)
    spec.check(params)
    result = run_pipeline_with_fault(params, campaign.default_message(params.n), spec, tau_benign=args.tau)
    row = campaign.CampaignRow.build(params, spec, result)
    sys.stdout.write(campaign.format_csv([row]))
    return OUTCOME_EXIT[result.outcome]


def _sweep_config(args: argparse.Namespace, params: Params) -> campaign.CampaignConfig:
    targets = tuple(Target(t.strip()) for t in args.targets.split(",") if t.strip())
    rep = _representation(args)
    if rep is Representation.BIG:
        reps = ((rep, None),)
    else:
        limbs = args.limbs if args.limbs is not None else range(len(params.chain))
        reps = tuple((rep, k) for k in limbs)
    return campaign.CampaignConfig(
        params=params,
        targets=targets,
        representations=reps,
        bits=args.bits,
        coeffs=args.coeffs,
        deltas=tuple(getattr(args, "deltas", ()) or ()),
        tau_benign=args.tau,
        jobs=args.jobs,
    )


def _sweep(args: argparse.Namespace, params: Params) -> int:
    config = _sweep_config(args, params)
    if args.command == "delta-sweep":
        rows = campaign.sweep_scale_factors(config)
    else:
        rows = campaign.sweep_bits(config)
    campaign.emit_csv(rows, args.out)
    counts = {o.value: sum(r.outcome == o.value for r in rows) for o in Outcome}
    print(f"rows={len(rows)} " + " ".join(f"{k}={v}" for k, v in counts.items()) + f" out={args.out}")
    return EXIT_OK


def _image(args: argparse.Namespace, params: Params) -> int:
    image = pgm.read_pgm(args.image)
    spec = None if args.no_fault else _spec(args)
    if spec is not None:
        spec.check(params)
    result = campaign.image_campaign(params, image, spec, block=args.block, tau_benign=args.tau)
    if args.csv:
        campaign.emit_csv([result.row], args.csv)
    if result.image is None:
        print(f"outcome=DETECTED blocks={result.blocks} (no image written)")
        return EXIT_DETECTED
    pgm.write_pgm(args.out, result.image)
    dev = np.abs(result.image.astype(int) - image.astype(int))
    print(
        f"outcome={result.row.outcome} blocks={result.blocks} max_pixel_dev={int(dev.max())} "
        f"frac_dev_gt16={float(np.mean(dev > 16))!r} out={args.out}"
    )
    return OUTCOME_EXIT[Outcome(result.row.outcome)]


HANDLERS = {
    "roundtrip": _roundtrip,
    "inject": _inject,
    "sweep": _sweep,
    "delta-sweep": _sweep,
    "image": _image,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.n is None:
        args.n = DEFAULT_N[args.command]
    if args.seed is None:
        args.seed = _env_seed()
    if args.command in ("inject", "image") and args.representation is None:
        args.representation = _representation(args).value
    print(_config_line(args), flush=True)
    try:
        params = _params(args)
        return HANDLERS[args.command](args, params)
    except (OSError, pgm.PGMError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
