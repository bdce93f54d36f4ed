"""Polar encoder (x = u F^{(x)n}, no bit reversal) and successive-cancellation decoder.

Decoding runs in the LLR domain with the exact boxplus at f nodes. Positive
LLR favours bit 0, and an LLR of exactly 0 decides 0.
"""

from __future__ import annotations

import numba
import numpy as np

from .construction import FrozenMask


class CodecError(ValueError):
    pass


def _bits(a, name):
    arr = np.asarray(a)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise CodecError(f"{name} must contain only 0 and 1")
    return arr.astype(np.uint8)


def polar_transform(u) -> np.ndarray:
    """Multiply by F^{(x)n} over GF(2) along the last axis (self-inverse)."""
    x = _bits(u, "u").copy()
    n = x.shape[-1]
    if n & (n - 1):
        raise CodecError("block length must be a power of two")
    lead = x.shape[:-1]
    h = 1
    while h < n:
        v = x.reshape(*lead, n // (2 * h), 2, h)
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


def assemble(msg, mask: FrozenMask, frozen_values=None) -> np.ndarray:
    """Place the payload on the information positions; frozen positions get ``frozen_values`` (zeros)."""
    msg = _bits(msg, "msg")
    if msg.shape[-1] != mask.k_bits:
        raise CodecError(f"message has {msg.shape[-1]} bits, mask carries {mask.k_bits}")
    u = np.zeros(msg.shape[:-1] + (mask.n_bits,), dtype=np.uint8)
    u[..., list(mask.info)] = msg
    if frozen_values is not None:
        fv = _bits(frozen_values, "frozen_values")
        if fv.shape[-1] != len(mask.frozen):
            raise CodecError("frozen_values must match the frozen set size")
        u[..., list(mask.frozen)] = fv
    return u


def encode(msg, mask: FrozenMask, frozen_values=None) -> np.ndarray:
    """Codeword(s) for one message of K bits or a (batch, K) array of them."""
    return polar_transform(assemble(msg, mask, frozen_values))


def f_llr(la, lb):
    """Boxplus 2*atanh(tanh(la/2)*tanh(lb/2)) in its overflow-free form."""
    la = np.asarray(la, dtype=float)
    lb = np.asarray(lb, dtype=float)
    s = np.sign(la) * np.sign(lb) * np.minimum(np.abs(la), np.abs(lb))
    return s + np.log1p(np.exp(-np.abs(la + lb))) - np.log1p(np.exp(-np.abs(la - lb)))


def g_llr(la, lb, u_sum):
    """g node: lb + (1 - 2*u_sum) * la."""
    return np.asarray(lb, dtype=float) + (1.0 - 2.0 * np.asarray(u_sum, dtype=float)) * np.asarray(la, dtype=float)


@numba.njit(cache=True, inline="always")
def _boxplus(a, b):
    aa = abs(a)
    ab = abs(b)
    m = aa if aa < ab else ab
    if (a < 0.0) != (b < 0.0):
        m = -m
    if a == 0.0 or b == 0.0:
        m = 0.0
    return m + np.log1p(np.exp(-abs(a + b))) - np.log1p(np.exp(-abs(a - b)))


@numba.njit(cache=True)
def _sc_decode_batch(llrs, frozen, frozen_vals, u_hat, alpha, beta):
    batch, n_len = llrs.shape
    n = 0
    while (1 << n) < n_len:
        n += 1
    for fr in range(batch):
        # node of size s lives at alpha[s:2s]; the channel layer is [N:2N]
        for j in range(n_len):
            alpha[n_len + j] = llrs[fr, j]
        for i in range(n_len):
            if i == 0:
                depth = 1
            else:
                t = 0
                while (i >> t) & 1 == 0:
                    t += 1
                depth = n - t
            while depth <= n:
                s = n_len >> depth
                right = (i >> (n - depth)) & 1
                if right:
                    for j in range(s):
                        a = alpha[2 * s + j]
                        if beta[0, s + j]:
                            a = -a
                        alpha[s + j] = alpha[3 * s + j] + a
                else:
                    for j in range(s):
                        alpha[s + j] = _boxplus(alpha[2 * s + j], alpha[3 * s + j])
                depth += 1
            if frozen[i]:
                bit = frozen_vals[i]
            else:
                bit = 1 if alpha[1] < 0.0 else 0
            u_hat[fr, i] = bit
            side = i & 1
            beta[side, 1] = bit
            # fold finished right subtrees back into their parents
            d = n
            while side == 1 and d > 0:
                s = n_len >> d
                pside = (i >> (n - d + 1)) & 1
                for j in range(s):
                    r = beta[1, s + j]
                    beta[pside, 2 * s + j] = beta[0, s + j] ^ r
                    beta[pside, 3 * s + j] = r
                side = pside
                d -= 1


class SCDecoder:
    """Reusable successive-cancellation decoder bound to one frozen mask.

    Holds the LLR lattice and partial-sum workspaces (O(N) each); one
    instance per thread.
    """

    def __init__(self, mask: FrozenMask, frozen_values=None):
        self.mask = mask
        n = mask.n_bits
        self._frozen = mask.is_frozen()
        self._frozen_vals = np.zeros(n, dtype=np.uint8)
        if frozen_values is not None:
            fv = _bits(frozen_values, "frozen_values")
            if fv.shape != (len(mask.frozen),):
                raise CodecError("frozen_values must match the frozen set size")
            self._frozen_vals[list(mask.frozen)] = fv
        self._info = np.asarray(mask.info, dtype=np.int64)
        self._alpha = np.zeros(2 * n)
        self._beta = np.zeros((2, 2 * n), dtype=np.uint8)

    def decode(self, llrs):
        """Return (msg, u_hat) for one LLR block of length N or a (batch, N) array."""
        arr = np.asarray(llrs, dtype=float)
        single = arr.ndim == 1
        arr = np.ascontiguousarray(np.atleast_2d(arr))
        if arr.ndim != 2 or arr.shape[1] != self.mask.n_bits:
            raise CodecError(f"expected LLR blocks of length {self.mask.n_bits}, got shape {np.shape(llrs)}")
        if not np.isfinite(arr).all():
            arr = np.nan_to_num(arr, nan=0.0, posinf=1e300, neginf=-1e300)
        u_hat = np.empty(arr.shape, dtype=np.uint8)
        _sc_decode_batch(arr, self._frozen, self._frozen_vals, u_hat, self._alpha, self._beta)
        msg = u_hat[:, self._info]
        if single:
            return msg[0], u_hat[0]
        return msg, u_hat


def sc_decode(llrs, mask: FrozenMask, frozen_values=None):
    """One-shot convenience wrapper around :class:`SCDecoder`."""
    return SCDecoder(mask, frozen_values).decode(llrs)
