"""Density-evolution construction of polar codes under the Gaussian approximation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gamath import (
    DEFAULT_BISECTION,
    DEFAULT_PGA,
    DEFAULT_QUAD,
    BisectionSpec,
    PgaConstants,
    PhiKind,
    QuadratureSpec,
    phi,
    phi_inverse,
)


class SpecError(ValueError):
    pass


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def ebn0_to_design_snr(ebn0_db: float, rate: float) -> float:
    """E_dB = R * Eb/N0 expressed in dB."""
    return ebn0_db + 10.0 * math.log10(rate)


@dataclass(frozen=True)
class CodeSpec:
    """Code length, payload size, design-SNR E_dB (= R*Eb/N0 in dB) and phi flavour."""

    n_bits: int
    k_bits: int
    design_snr_db: float = 1.0
    method: PhiKind = PhiKind.PGA_APPROX

    def __post_init__(self):
        if not is_power_of_two(self.n_bits):
            raise SpecError(f"N must be a power of two, got {self.n_bits}")
        if not 0 < self.k_bits <= self.n_bits:
            raise SpecError(f"K must satisfy 0 < K <= N, got K={self.k_bits}, N={self.n_bits}")
        if not math.isfinite(self.design_snr_db):
            raise SpecError("design-SNR must be finite")
        object.__setattr__(self, "method", PhiKind(self.method))

    @classmethod
    def from_ebn0(cls, n_bits: int, k_bits: int, ebn0_db: float, method=PhiKind.PGA_APPROX) -> "CodeSpec":
        """Build a spec whose design point is given as Eb/N0 rather than E_dB."""
        return cls(n_bits, k_bits, ebn0_to_design_snr(ebn0_db, k_bits / n_bits), method)

    @property
    def rate(self) -> float:
        return self.k_bits / self.n_bits

    @property
    def stages(self) -> int:
        return self.n_bits.bit_length() - 1


@dataclass(frozen=True)
class ReliabilityProfile:
    mean_llrs: np.ndarray
    order: np.ndarray

    @classmethod
    def from_means(cls, mean_llrs) -> "ReliabilityProfile":
        means = np.asarray(mean_llrs, dtype=float)
        # lexsort keys are last-major: sort by mean, ties by index
        order = np.lexsort((np.arange(means.size), means))
        means.setflags(write=False)
        order.setflags(write=False)
        return cls(means, order)

    @property
    def n_bits(self) -> int:
        return int(self.mean_llrs.size)

    def ranks(self) -> np.ndarray:
        """Position of each subchannel in the ascending reliability order."""
        r = np.empty(self.n_bits, dtype=np.int64)
        r[self.order] = np.arange(self.n_bits)
        return r


@dataclass(frozen=True)
class FrozenMask:
    frozen: tuple[int, ...]
    info: tuple[int, ...]

    def __post_init__(self):
        n = len(self.frozen) + len(self.info)
        if sorted(self.frozen + self.info) != list(range(n)):
            raise SpecError("frozen and info sets must partition 0..N-1")
        if list(self.frozen) != sorted(self.frozen) or list(self.info) != sorted(self.info):
            raise SpecError("index sets must be ascending")

    @classmethod
    def from_frozen(cls, frozen, n_bits: int) -> "FrozenMask":
        frozen = sorted(int(i) for i in frozen)
        if len(set(frozen)) != len(frozen) or (frozen and not 0 <= frozen[0] <= frozen[-1] < n_bits):
            raise SpecError(f"frozen indices must be distinct and inside 0..{n_bits - 1}")
        fs = set(frozen)
        return cls(tuple(frozen), tuple(i for i in range(n_bits) if i not in fs))

    @property
    def n_bits(self) -> int:
        return len(self.frozen) + len(self.info)

    @property
    def k_bits(self) -> int:
        return len(self.info)

    def is_frozen(self) -> np.ndarray:
        out = np.zeros(self.n_bits, dtype=bool)
        out[list(self.frozen)] = True
        return out


def evolve_pair(w, kind=PhiKind.PGA_APPROX, *, bisection: BisectionSpec = DEFAULT_BISECTION,
                quad: QuadratureSpec = DEFAULT_QUAD, consts: PgaConstants = DEFAULT_PGA):
    """Split mean LLR(s) ``w`` into the (degraded, upgraded) children.

    The degraded child is phi^-1(1 - (1 - phi(w))^2); the argument is formed
    as phi*(2 - phi), which is the same number without the cancellation that
    turns 1 - (1 - tiny)^2 into 0 for very reliable parents.
    """
    scalar = np.ndim(w) == 0
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("mean LLR must be nonnegative")
    p = np.asarray(phi(w, kind, quad=quad, consts=consts))
    y = np.clip(p * (2.0 - p), 0.0, 1.0)
    odd = phi_inverse(y, kind, bisection, quad=quad, consts=consts)
    even = 2.0 * w
    if scalar:
        return float(odd), float(even)
    return np.asarray(odd), even


def construct(spec: CodeSpec, *, bisection: BisectionSpec = DEFAULT_BISECTION, quad: QuadratureSpec = DEFAULT_QUAD,
              consts: PgaConstants = DEFAULT_PGA) -> ReliabilityProfile:
    """Mean LLR of every synthetic subchannel, natural index order.

    Starts from W(0) = 4S with S = 10^(E_dB/10) and applies log2(N) stages,
    each splitting every live entry into its degraded and upgraded child.
    Children are interleaved (entry j feeds 2j and 2j + 1), which puts the
    first split on the most significant index bit. That is the order in
    which the bit-reversal-free encoder and the SC decoder see the
    subchannels; writing children to j and d/2 + j instead would produce the
    bit-reversed labelling.
    """
    w = np.array([4.0 * 10.0 ** (spec.design_snr_db / 10.0)])
    while w.size < spec.n_bits:
        odd, even = evolve_pair(w, spec.method, bisection=bisection, quad=quad, consts=consts)
        nxt = np.empty(2 * w.size)
        nxt[0::2] = odd
        nxt[1::2] = even
        w = nxt
    return ReliabilityProfile.from_means(w)


def frozen_mask(profile: ReliabilityProfile, k_bits: int) -> FrozenMask:
    n = profile.n_bits
    if not 0 <= k_bits <= n:
        raise SpecError(f"K must satisfy 0 <= K <= N, got K={k_bits}, N={n}")
    return FrozenMask.from_frozen(profile.order[: n - k_bits], n)


def build_mask(spec: CodeSpec, **kwargs) -> FrozenMask:
    return frozen_mask(construct(spec, **kwargs), spec.k_bits)


def mask_difference(a: FrozenMask, b: FrozenMask) -> int:
    """Number of information positions of ``a`` that ``b`` freezes."""
    if a.n_bits != b.n_bits or a.k_bits != b.k_bits:
        raise SpecError(f"cannot compare masks of shape (N={a.n_bits}, K={a.k_bits}) and (N={b.n_bits}, K={b.k_bits})")
    return len(set(a.info) - set(b.info))


def compare_constructions(spec_a: CodeSpec, spec_b: CodeSpec) -> int:
    if (spec_a.n_bits, spec_a.k_bits) != (spec_b.n_bits, spec_b.k_bits):
        raise SpecError("specs must share N and K")
    return mask_difference(build_mask(spec_a), build_mask(spec_b))


TABLE1_RATES = {"1/2": (1, 2), "1/3": (1, 3), "2/3": (2, 3)}
TABLE1_LENGTHS = (128, 256, 512, 1024, 2048)


def table1_grid(baseline=PhiKind.GA_EXACT, proposed=PhiKind.PGA_APPROX, design_ebn0_db: float = 1.0,
                rates=TABLE1_RATES, lengths=TABLE1_LENGTHS) -> dict[str, dict[int, int]]:
    """Swapped-channel counts between two constructions over a rate x length grid.

    K is floor(R*N) and the design point is given as Eb/N0, so each code is
    built at E_dB = design_ebn0_db + 10*log10(R).
    """
    grid: dict[str, dict[int, int]] = {}
    for label, (num, den) in rates.items():
        grid[label] = {}
        for n in lengths:
            k = n * num // den
            a = CodeSpec.from_ebn0(n, k, design_ebn0_db, baseline)
            b = CodeSpec.from_ebn0(n, k, design_ebn0_db, proposed)
            grid[label][n] = compare_constructions(a, b)
    return grid
