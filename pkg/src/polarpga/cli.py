"""Command-line front end: construct, compare, encode, decode, simulate, phi.

Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .channel import NoiseModel, demap, modulate
from .codec import SCDecoder, encode
from .construction import (
    TABLE1_LENGTHS,
    TABLE1_RATES,
    CodeSpec,
    FrozenMask,
    SpecError,
    construct,
    frozen_mask,
    mask_difference,
    table1_grid,
)
from .formats import format_bits, frozen_text, parse_bits, parse_llrs, profile_csv, read_frozen, split_frames
from .gamath import PhiKind, phi, phi_inverse
from .simulation import CampaignIOError, CampaignSpec, default_workers, results_csv, run_campaign, write_results

SCHEMA_VERSION = 1
METHODS = [k.value for k in PhiKind]


class UsageError(Exception):
    """Invalid flags or input; maps to exit code 1."""


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _add_code_flags(p, k_required=True):
    p.add_argument("--n", type=int, help="code length N (power of two)")
    p.add_argument("--k", type=int, help="information bits K")
    snr = p.add_mutually_exclusive_group()
    snr.add_argument("--design-snr-db", type=float, help="design-SNR E_dB = R*Eb/N0 in dB (default 1)")
    snr.add_argument("--design-ebn0-db", type=float, help="design point given as Eb/N0 in dB")
    p.add_argument("--method", choices=METHODS, default="pga-approx")


def _code_spec(args, method=None) -> CodeSpec:
    if args.n is None or args.k is None:
        raise UsageError("--n and --k are required")
    method = method or args.method
    try:
        if args.design_ebn0_db is not None:
            if args.n <= 0 or args.k <= 0:
                raise SpecError("N and K must be positive")
            return CodeSpec.from_ebn0(args.n, args.k, args.design_ebn0_db, method)
        snr = 1.0 if args.design_snr_db is None else args.design_snr_db
        return CodeSpec(args.n, args.k, snr, method)
    except SpecError as exc:
        raise UsageError(str(exc)) from None


def _code_config(spec: CodeSpec) -> dict:
    return {"n_bits": spec.n_bits, "k_bits": spec.k_bits, "design_snr_db": spec.design_snr_db,
            "method": spec.method.value}


def _metadata(command: str, config: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "toolkit": {"name": "polarpga", "version": __version__},
           "command": command, "config": config}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _check_writable(prefix: str):
    parent = Path(prefix).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise UsageError(f"output directory {parent} is not writable")


def _write_atomic(files: dict[Path, str]):
    """Write all files or none."""
    staged = []
    try:
        for path, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    except OSError:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def _mask_from_args(args) -> FrozenMask:
    if args.frozen:
        if args.n is None:
            raise UsageError("--frozen needs --n")
        try:
            return FrozenMask.from_frozen(read_frozen(Path(args.frozen).read_text()), args.n)
        except SpecError as exc:
            raise UsageError(str(exc)) from None
    spec = _code_spec(args)
    return frozen_mask(construct(spec), spec.k_bits)


def cmd_construct(args, out=None):
    out = out or sys.stdout
    spec = _code_spec(args)
    profile = construct(spec)
    mask = frozen_mask(profile, spec.k_bits)
    csv_text = profile_csv(profile)
    if args.out is None:
        out.write(csv_text)
        return 0
    _check_writable(args.out)
    base = Path(args.out)
    _write_atomic({
        base.with_suffix(".csv"): csv_text,
        base.with_suffix(".frozen"): frozen_text(mask.frozen),
        base.with_suffix(".json"): _metadata("construct", _code_config(spec)),
    })
    return 0


def _read_frozen_file(path: str) -> list[int]:
    try:
        return read_frozen(Path(path).read_text())
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_compare(args, out=None):
    out = out or sys.stdout
    factor = 2 if args.metric == "symmetric" else 1
    if args.table1:
        grid = table1_grid(PhiKind(args.baseline), PhiKind(args.proposed),
                           1.0 if args.design_ebn0_db is None else args.design_ebn0_db)
        out.write("R," + ",".join(str(n) for n in TABLE1_LENGTHS) + "\n")
        for label in TABLE1_RATES:
            out.write(label + "," + ",".join(str(factor * grid[label][n]) for n in TABLE1_LENGTHS) + "\n")
        return 0
    if args.a or args.b:
        if not (args.a and args.b):
            raise UsageError("give both --a and --b frozen-set files")
        fa, fb = _read_frozen_file(args.a), _read_frozen_file(args.b)
        if len(fa) != len(fb):
            raise UsageError(f"frozen sets differ in size ({len(fa)} vs {len(fb)})")
        n = max(fa + fb, default=-1) + 1 if args.n is None else args.n
        try:
            ma, mb = FrozenMask.from_frozen(fa, n), FrozenMask.from_frozen(fb, n)
        except SpecError as exc:
            raise UsageError(str(exc)) from None
    else:
        ma = frozen_mask(construct(_code_spec(args, args.baseline)), args.k)
        mb = frozen_mask(construct(_code_spec(args, args.proposed)), args.k)
    count = mask_difference(ma, mb)
    out.write(f"{factor * count}\n")
    if args.verbose:
        only_a = sorted(set(ma.info) - set(mb.info))
        only_b = sorted(set(mb.info) - set(ma.info))
        out.write("info_only_a," + " ".join(map(str, only_a)) + "\n")
        out.write("info_only_b," + " ".join(map(str, only_b)) + "\n")
    return 0


def _read_input(path):
    if path in (None, "-"):
        return sys.stdin.read()
    return Path(path).read_text()


def cmd_encode(args, out=None):
    out = out or sys.stdout
    mask = _mask_from_args(args)
    try:
        frames = split_frames(parse_bits(_read_input(args.input), args.format), mask.k_bits)
        lines = [format_bits(cw, args.format) for cw in encode(frames, mask)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.write("".join(line + "\n" for line in lines))
    return 0


def cmd_decode(args, out=None):
    out = out or sys.stdout
    mask = _mask_from_args(args)
    text = _read_input(args.input)
    try:
        if args.llr:
            llrs = parse_llrs(text, mask.n_bits)
        else:
            # hard codeword bits through a nearly noiseless BPSK channel
            noise = NoiseModel(1e-6)
            llrs = demap(modulate(split_frames(parse_bits(text, args.format), mask.n_bits)), noise)
        msgs, _ = SCDecoder(mask).decode(llrs)
        lines = [format_bits(m, args.format) for m in msgs]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.write("".join(line + "\n" for line in lines))
    return 0


def cmd_simulate(args, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    code = _code_spec(args)
    if not args.ebn0_db:
        raise UsageError("--ebn0-db needs at least one value")
    try:
        spec = CampaignSpec(code, tuple(args.ebn0_db), args.target_frame_errors, args.max_frames, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out is not None:
        _check_writable(args.out)
    workers = args.workers or default_workers()

    def report(st):
        flag = " (upper bound)" if st.is_upper_bound else ""
        err.write(f"Eb/N0={st.ebn0_db:g} dB frames={st.frames} frame_errors={st.frame_errors} "
                  f"FER={st.fer:.4e}{flag} BER={st.ber:.4e} time={st.elapsed_s:.1f}s\n")

    results = run_campaign(spec, workers=workers, progress=report)
    if args.out is None:
        out.write(results_csv(results))
    else:
        write_results(spec, results, args.out)
    return 0


def cmd_phi(args, out=None):
    out = out or sys.stdout
    kind = PhiKind(args.kind)
    if args.x is not None:
        xs = np.asarray(args.x)
        if np.any(xs < 0):
            raise UsageError("--x must be nonnegative")
        ys = np.atleast_1d(phi(xs, kind))
        pairs = zip(xs, ys)
    else:
        ys = np.asarray(args.y)
        if np.any((ys < 0) | (ys > 1)):
            raise UsageError("--y must lie in [0, 1]")
        pairs = zip(ys, np.atleast_1d(phi_inverse(ys, kind)))
    out.write("input,output,kind\n")
    for a, b in pairs:
        out.write(f"{float(a)!r},{float(b)!r},{kind.value}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarpga", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON or YAML file whose keys mirror the flags (flags win)")
    parser.add_argument("-v", "--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="mean-LLR profile and frozen set of one code")
    _add_code_flags(p)
    p.add_argument("--out", help="prefix for <out>.csv, <out>.frozen and <out>.json (default: CSV to stdout)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("compare", help="count subchannels chosen by one construction and not the other")
    _add_code_flags(p)
    p.add_argument("--a", help="frozen-set file of the first code")
    p.add_argument("--b", help="frozen-set file of the second code")
    p.add_argument("--baseline", choices=METHODS, default="ga-exact")
    p.add_argument("--proposed", choices=METHODS, default="pga-approx")
    p.add_argument("--metric", choices=["swapped", "symmetric"], default="swapped",
                   help="swapped: |A_a minus A_b|; symmetric: size of the symmetric difference")
    p.add_argument("--table1", action="store_true", help="sweep R in {1/2,1/3,2/3} and N in 128..2048")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_compare)

    for name, func, helptext in (("encode", cmd_encode, "message bits -> codewords, one per line"),
                                 ("decode", cmd_decode, "codewords or LLR rows -> SC-decoded messages")):
        p = sub.add_parser(name, help=helptext)
        _add_code_flags(p)
        p.add_argument("--frozen", help="frozen-set file (needs --n) instead of constructing")
        p.add_argument("--in", dest="input", help="input file (default stdin)")
        p.add_argument("--format", choices=["bin", "hex"], default="bin")
        if name == "decode":
            p.add_argument("--llr", action="store_true", help="input holds real LLRs, N per frame")
        p.set_defaults(func=func)

    p = sub.add_parser("simulate", help="Monte Carlo FER/BER over BPSK-AWGN with SC decoding")
    _add_code_flags(p)
    p.add_argument("--ebn0-db", type=_float_list, help="comma-separated Eb/N0 grid in dB")
    p.add_argument("--target-frame-errors", type=int, default=200)
    p.add_argument("--max-frames", type=int, default=10**8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default $POLARPGA_WORKERS or CPU count)")
    p.add_argument("--out", help="prefix for <out>.csv and <out>.json (default: CSV to stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("phi", help="evaluate phi(x) or its inverse")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--x", type=_float_list)
    g.add_argument("--y", type=_float_list)
    p.add_argument("--kind", choices=METHODS, default="pga-approx")
    p.set_defaults(func=cmd_phi)
    return parser


def _load_config(path: str) -> dict:
    text = Path(path).read_text()
    data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            cfg = _load_config(args.config)
            subparser = parser._subparsers._group_actions[0].choices[args.command]
            if "ebn0_db" in cfg and not isinstance(cfg["ebn0_db"], list):
                cfg["ebn0_db"] = _float_list(cfg["ebn0_db"])
            known = {a.dest for a in subparser._actions}
            unknown = set(cfg) - known
            if unknown:
                raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
            subparser.set_defaults(**cfg)
            args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, CampaignIOError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
