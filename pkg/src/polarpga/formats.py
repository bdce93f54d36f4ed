"""Text formats shared by the CLI: reliability CSV, frozen-index lists, bit strings."""

from __future__ import annotations

import csv
import io
import re

import numpy as np

from .construction import ReliabilityProfile

PROFILE_FIELDS = ("index", "mean_llr", "rank")


def profile_csv(profile: ReliabilityProfile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_FIELDS)
    for i, (m, r) in enumerate(zip(profile.mean_llrs, profile.ranks())):
        w.writerow((i, repr(float(m)), int(r)))
    return buf.getvalue()


def read_profile_csv(text: str) -> ReliabilityProfile:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or tuple(rows[0].keys()) != PROFILE_FIELDS:
        raise ValueError(f"reliability CSV must have header {','.join(PROFILE_FIELDS)}")
    rows.sort(key=lambda r: int(r["index"]))
    if [int(r["index"]) for r in rows] != list(range(len(rows))):
        raise ValueError("reliability CSV indices must cover 0..N-1")
    return ReliabilityProfile.from_means([float(r["mean_llr"]) for r in rows])


def frozen_text(frozen) -> str:
    return "".join(f"{int(i)}\n" for i in frozen)


def read_frozen(text: str) -> list[int]:
    """Ascending frozen indices, one per line; blank lines and '#' comments are skipped."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise ValueError(f"line {lineno}: not an integer index: {line!r}") from None
    if out != sorted(set(out)):
        raise ValueError("frozen indices must be strictly ascending")
    return out


_WS = re.compile(r"\s+")


def parse_bits(text: str, fmt: str = "bin") -> np.ndarray:
    """Bit stream from '0'/'1' characters or hex digits (MSB first); whitespace ignored."""
    s = _WS.sub("", text)
    if fmt == "bin":
        if set(s) - {"0", "1"}:
            raise ValueError("binary input may only contain 0 and 1")
        return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")
    if fmt == "hex":
        try:
            nibbles = [int(c, 16) for c in s]
        except ValueError:
            raise ValueError("hex input may only contain hex digits") from None
        return np.array([(v >> (3 - b)) & 1 for v in nibbles for b in range(4)], dtype=np.uint8)
    raise ValueError(f"unknown bit format {fmt!r}")


def format_bits(bits, fmt: str = "bin") -> str:
    bits = np.asarray(bits, dtype=np.uint8)
    if fmt == "bin":
        return "".join("1" if b else "0" for b in bits)
    if fmt == "hex":
        if bits.size % 4:
            raise ValueError("hex output needs a multiple of 4 bits")
        quads = bits.reshape(-1, 4)
        return "".join(f"{int(q[0]) << 3 | int(q[1]) << 2 | int(q[2]) << 1 | int(q[3]):x}" for q in quads)
    raise ValueError(f"unknown bit format {fmt!r}")


def split_frames(bits: np.ndarray, size: int) -> np.ndarray:
    if bits.size == 0 or bits.size % size:
        raise ValueError(f"input holds {bits.size} bits, not a positive multiple of the frame size {size}")
    return bits.reshape(-1, size)


def parse_llrs(text: str, size: int) -> np.ndarray:
    """LLR frames: numbers separated by commas or whitespace, grouped into rows of ``size``."""
    vals = [float(t) for t in re.split(r"[,\s]+", text.strip()) if t]
    return split_frames(np.asarray(vals), size)
