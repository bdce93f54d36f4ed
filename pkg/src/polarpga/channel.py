"""BPSK over AWGN with LLR demapping (bit 0 -> +1, positive LLR favours 0)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0 or not math.isfinite(self.sigma2):
            raise ValueError(f"noise variance must be positive and finite, got {self.sigma2}")

    @classmethod
    def from_design_snr(cls, design_snr_db: float) -> "NoiseModel":
        """sigma^2 = 1 / (2 S) with S = 10^(E_dB/10); channel LLR mean is then 4S."""
        return cls(1.0 / (2.0 * 10.0 ** (design_snr_db / 10.0)))

    @classmethod
    def from_ebn0(cls, ebn0_db: float, rate: float) -> "NoiseModel":
        if not 0 < rate <= 1:
            raise ValueError("rate must lie in (0, 1]")
        return cls(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def llr_mean(self) -> float:
        return 2.0 / self.sigma2


def modulate(codeword) -> np.ndarray:
    cw = np.asarray(codeword)
    if cw.size and not np.isin(cw, (0, 1)).all():
        raise ValueError("codeword must be binary")
    return 1.0 - 2.0 * cw.astype(float)


def transmit(symbols, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    s = np.asarray(symbols, dtype=float)
    return s + noise.sigma * rng.standard_normal(s.shape)


def demap(y, noise: NoiseModel) -> np.ndarray:
    return 2.0 * np.asarray(y, dtype=float) / noise.sigma2
