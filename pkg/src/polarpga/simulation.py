"""Monte Carlo FER/BER estimation for SC-decoded polar codes over BPSK-AWGN.

Trial ``t`` at a given Eb/N0 always draws its message and noise from an RNG
seeded by (master_seed, point key, t), and a point stops at the first trial
index where the running frame-error count reaches the target. Both choices
make the statistics independent of how many workers produced them.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channel import NoiseModel, demap, modulate
from .codec import SCDecoder, encode
from .construction import CodeSpec, FrozenMask, build_mask

log = logging.getLogger(__name__)

BATCH_FRAMES = 64
SCHEMA_VERSION = 1
CSV_FIELDS = ("ebn0_db", "frames", "frame_errors", "bit_errors", "fer", "ber", "is_upper_bound")


@dataclass(frozen=True)
class CampaignSpec:
    code: CodeSpec
    ebn0_grid_db: tuple[float, ...]
    target_frame_errors: int = 200
    max_frames: int = 10**8
    master_seed: int = 0

    def __post_init__(self):
        grid = tuple(float(v) for v in self.ebn0_grid_db)
        object.__setattr__(self, "ebn0_grid_db", grid)
        if not grid:
            raise ValueError("Eb/N0 grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("Eb/N0 grid must be strictly increasing")
        if not all(math.isfinite(v) for v in grid):
            raise ValueError("Eb/N0 grid values must be finite")
        if self.target_frame_errors < 1:
            raise ValueError("target_frame_errors must be at least 1")
        if self.max_frames < 1:
            raise ValueError("max_frames must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def config(self) -> dict:
        return {
            "n_bits": self.code.n_bits,
            "k_bits": self.code.k_bits,
            "design_snr_db": self.code.design_snr_db,
            "method": self.code.method.value,
            "ebn0_grid_db": list(self.ebn0_grid_db),
            "target_frame_errors": self.target_frame_errors,
            "max_frames": self.max_frames,
            "master_seed": self.master_seed,
        }


@dataclass
class FerStats:
    ebn0_db: float
    frames: int = 0
    frame_errors: int = 0
    bit_errors: int = 0
    k_bits: int = 1
    elapsed_s: float = field(default=0.0, compare=False)

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.k_bits) if self.frames else 0.0

    @property
    def is_upper_bound(self) -> bool:
        """True when no frame error was seen, so the FER is only bounded from above."""
        return self.frame_errors == 0

    @property
    def fer_stderr(self) -> float:
        if not self.frames:
            return 0.0
        p = self.fer
        return math.sqrt(p * (1.0 - p) / self.frames)

    def row(self) -> dict:
        return {
            "ebn0_db": repr(self.ebn0_db),
            "frames": self.frames,
            "frame_errors": self.frame_errors,
            "bit_errors": self.bit_errors,
            "fer": repr(self.fer),
            "ber": repr(self.ber),
            "is_upper_bound": str(self.is_upper_bound).lower(),
        }


def point_key(ebn0_db: float) -> int:
    """Stable nonnegative integer identifying an Eb/N0 value (its IEEE-754 bits)."""
    return struct.unpack("<Q", struct.pack("<d", float(ebn0_db)))[0]


def trial_rng(master_seed: int, key: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, key, trial_index]))


class TrialContext:
    """Frozen mask plus a decoder; owned by one worker."""

    def __init__(self, mask: FrozenMask):
        self.mask = mask
        self.decoder = SCDecoder(mask)

    def draw(self, noise: NoiseModel, master_seed: int, key: int, first: int, count: int):
        k, n = self.mask.k_bits, self.mask.n_bits
        msgs = np.empty((count, k), dtype=np.uint8)
        z = np.empty((count, n))
        for r in range(count):
            rng = trial_rng(master_seed, key, first + r)
            msgs[r] = rng.integers(0, 2, size=k, dtype=np.uint8)
            z[r] = rng.standard_normal(n)
        return msgs, z

    def run_trials(self, noise: NoiseModel, master_seed: int, key: int, first: int, count: int):
        """Per-trial (frame_error flags, bit error counts) for trials first..first+count-1."""
        msgs, z = self.draw(noise, master_seed, key, first, count)
        y = modulate(encode(msgs, self.mask)) + noise.sigma * z
        decoded, _ = self.decoder.decode(demap(y, noise))
        errs = (decoded != msgs).sum(axis=1)
        return errs > 0, errs


def run_trial(ctx: TrialContext, noise: NoiseModel, trial_index: int, master_seed: int, key: int = 0):
    """Single end-to-end frame: returns (frame_error, bit_errors)."""
    flags, errs = ctx.run_trials(noise, master_seed, key, trial_index, 1)
    return bool(flags[0]), int(errs[0])


_WORKER_CTX: TrialContext | None = None


def _init_worker(frozen, n_bits):
    global _WORKER_CTX
    _WORKER_CTX = TrialContext(FrozenMask.from_frozen(frozen, n_bits))


def _worker_batch(sigma2, master_seed, key, first, count):
    flags, errs = _WORKER_CTX.run_trials(NoiseModel(sigma2), master_seed, key, first, count)
    return first, flags, errs


def default_workers() -> int:
    env = os.environ.get("POLARPGA_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_point(spec: CampaignSpec, ebn0_db: float, *, mask: FrozenMask | None = None, workers: int = 1,
              batch_frames: int = BATCH_FRAMES) -> FerStats:
    """Simulate one Eb/N0 point until the frame-error target or the frame cap is hit."""
    if ebn0_db not in spec.ebn0_grid_db:
        raise ValueError(f"{ebn0_db} dB is not on the campaign grid")
    mask = mask or build_mask(spec.code)
    noise = NoiseModel.from_ebn0(ebn0_db, spec.code.rate)
    key = point_key(ebn0_db)
    stats = FerStats(ebn0_db=ebn0_db, k_bits=mask.k_bits)
    t0 = time.perf_counter()

    batches = ((first, min(batch_frames, spec.max_frames - first))
               for first in range(0, spec.max_frames, batch_frames))

    def consume(first, flags, errs) -> bool:
        cum = np.cumsum(flags)
        need = spec.target_frame_errors - stats.frame_errors
        hit = np.searchsorted(cum, need)
        take = len(flags) if hit >= len(flags) else int(hit) + 1
        stats.frames += take
        stats.frame_errors += int(cum[take - 1])
        stats.bit_errors += int(errs[:take].sum())
        return stats.frame_errors >= spec.target_frame_errors

    if workers <= 1:
        ctx = TrialContext(mask)
        for first, count in batches:
            flags, errs = ctx.run_trials(noise, spec.master_seed, key, first, count)
            if consume(first, flags, errs):
                break
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(mask.frozen, mask.n_bits)) as pool:
            pending = []
            done = False
            for first, count in batches:
                pending.append(pool.submit(_worker_batch, noise.sigma2, spec.master_seed, key, first, count))
                if len(pending) < 2 * workers:
                    continue
                # results are folded strictly in trial order
                if consume(*pending.pop(0).result()):
                    done = True
                    break
            while pending and not done:
                done = consume(*pending.pop(0).result())
            for fut in pending:
                fut.cancel()

    stats.elapsed_s = time.perf_counter() - t0
    return stats


class CampaignIOError(OSError):
    def __init__(self, message, results):
        super().__init__(message)
        self.results = results


def results_csv(results: list[FerStats]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for st in results:
        writer.writerow(st.row())
    return buf.getvalue()


def results_json(spec: CampaignSpec, results: list[FerStats]) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "toolkit": {"name": "polarpga", "version": __version__},
        "config": spec.config(),
        "results": [{**st.row(), "fer_stderr": repr(st.fer_stderr)} for st in results],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def run_campaign(spec: CampaignSpec, *, out: str | Path | None = None, workers: int = 1,
                 progress=None) -> list[FerStats]:
    """Sweep the grid in order; with ``out`` write ``<out>.csv`` and ``<out>.json``."""
    mask = build_mask(spec.code)
    results = []
    for ebn0 in spec.ebn0_grid_db:
        st = run_point(spec, ebn0, mask=mask, workers=workers)
        log.info("Eb/N0 %.3f dB: %d frames, %d errors, FER %.3e", ebn0, st.frames, st.frame_errors, st.fer)
        results.append(st)
        if progress is not None:
            progress(st)
    if out is not None:
        write_results(spec, results, out)
    return results


def write_results(spec: CampaignSpec, results: list[FerStats], out: str | Path) -> tuple[Path, Path]:
    base = Path(out)
    csv_path, json_path = base.with_suffix(".csv"), base.with_suffix(".json")
    try:
        csv_path.write_text(results_csv(results))
        json_path.write_text(results_json(spec, results))
    except OSError as exc:
        raise CampaignIOError(f"could not write results to {base}: {exc}", results) from exc
    return csv_path, json_path


def stats_dict(st: FerStats) -> dict:
    d = asdict(st)
    d.update(fer=st.fer, ber=st.ber, is_upper_bound=st.is_upper_bound, fer_stderr=st.fer_stderr)
    return d
