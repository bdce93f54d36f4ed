"""Gaussian-approximation nonlinearities and their inverses.

Every evaluation is vectorised over numpy arrays and also accepts plain
floats. Four flavours of the phi function are available, selected by
:class:`PhiKind`:

* ``ga-exact``    1 - E[tanh(u/2)], u ~ N(x, 2x), by Gauss-Hermite quadrature
* ``ga-approx``   the classic three-piece closed-form approximation of the above
* ``pga-exact``   the same expectation with tanh replaced by a clamped
                  double exponential
* ``pga-approx``  the three-piece closed form of the piecewise approximation

All functions are strictly decreasing from phi(0) = 1 towards 0 (``pga-exact``
only when its constants describe a tanh-like inner function).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr, roots_hermite

BREAK_LOW = 0.867861
BREAK_HIGH = 10.0
# phi_exact switches to the asymptotic tail beyond this mean
EXACT_TAIL_START = 100.0


class PhiKind(str, enum.Enum):
    GA_EXACT = "ga-exact"
    GA_APPROX = "ga-approx"
    PGA_EXACT = "pga-exact"
    PGA_APPROX = "pga-approx"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PgaConstants:
    """Coefficients of the clamped inner function a*e^(b*v) + c*e^(d*v)."""

    a: float = 1.9e7
    b: float = 8.4e-9
    c: float = -1.8e7
    d: float = -8.5e-9
    clamp: float = 3.1

    def __post_init__(self):
        if not self.clamp > 0:
            raise ValueError("clamp must be positive")


@dataclass(frozen=True)
class QuadratureSpec:
    node_count: int = 256
    scheme: str = "gauss-hermite"

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        if self.scheme != "gauss-hermite":
            raise ValueError(f"unsupported quadrature scheme {self.scheme!r}")


@dataclass(frozen=True)
class BisectionSpec:
    iteration_times: int = 20
    coarse_down_factor: float = 0.1
    coarse_up_step: float = 10.0

    def __post_init__(self):
        if self.iteration_times < 1:
            raise ValueError("iteration_times must be positive")
        if not 0 < self.coarse_down_factor < 1:
            raise ValueError("coarse_down_factor must lie in (0, 1)")
        if not self.coarse_up_step > 0:
            raise ValueError("coarse_up_step must be positive")


DEFAULT_QUAD = QuadratureSpec()
DEFAULT_PGA = PgaConstants()
DEFAULT_BISECTION = BisectionSpec()


def _as_array(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise ValueError(f"{name} contains NaN")
    return arr


def _check_nonnegative(arr):
    if np.any(arr < 0):
        raise ValueError("phi is only defined for x >= 0")


def _unwrap(scalar_in, arr):
    return float(arr) if scalar_in else arr


@lru_cache(maxsize=16)
def _hermite_rule(n):
    t, w = roots_hermite(n)
    return t, w / math.sqrt(math.pi)


def _ga_tail(x):
    # valid for x >= 10
    return np.sqrt(np.pi / x) * (1.0 - 10.0 / (7.0 * x)) * np.exp(-x / 4.0)


# the raw tail starts 2.3% above the middle piece at x = 10; rescaling it
# keeps the closed form continuous and strictly decreasing there
_GA_CLOSED_TAIL_SCALE = float(np.exp(-0.4527 * BREAK_HIGH**0.86 + 0.0218) / _ga_tail(BREAK_HIGH))


def phi_exact(x, quad: QuadratureSpec = DEFAULT_QUAD):
    """1 - E[tanh(u/2)] with u ~ N(x, 2x); 1 at x = 0.

    The expectation is taken on the Gauss-Hermite grid after substituting
    u = x + 2*sqrt(x)*t. Beyond ``EXACT_TAIL_START`` the quadrature loses its
    relative accuracy, so the value at the switch point is continued along
    the asymptotic tail sqrt(pi/x)*(1 - 10/(7x))*exp(-x/4), scaled to meet the
    quadrature there.
    """
    scalar = np.ndim(x) == 0
    x = _as_array(x)
    _check_nonnegative(x)
    out = np.ones_like(x)
    t, w = _hermite_rule(quad.node_count)

    mid = (x > 0) & (x <= EXACT_TAIL_START)
    if np.any(mid):
        xm = x[mid]
        u = xm[:, None] + 2.0 * np.sqrt(xm)[:, None] * t[None, :]
        # 1 - tanh(u/2) = 2 / (1 + e^u), free of cancellation for large u
        # the weight sum rounds a hair above 1 for tiny x
        out[mid] = np.minimum(2.0 * (w[None, :] * _logistic_neg(u)).sum(axis=1), 1.0)
    tail = x > EXACT_TAIL_START
    if np.any(tail):
        out[tail] = np.exp(_exact_tail_log(x[tail], quad))
    return _unwrap(scalar, out)


@lru_cache(maxsize=16)
def _exact_tail_offset(node_count):
    x0 = np.array([EXACT_TAIL_START])
    body = float(phi_exact(x0, QuadratureSpec(node_count))[0])
    return math.log(body) - float(_log_tail(x0, 10.0 / 7.0, 4.0)[0])


def _exact_tail_log(x, quad):
    return _log_tail(x, 10.0 / 7.0, 4.0) + _exact_tail_offset(quad.node_count)


def _logistic_neg(u):
    """1 / (1 + e^u) without overflow."""
    return np.exp(-np.logaddexp(0.0, u))


def pga_inner(v, consts: PgaConstants = DEFAULT_PGA):
    """Clamped double exponential that stands in for tanh."""
    scalar = np.ndim(v) == 0
    v = _as_array(v, "v")
    out = consts.a * np.exp(consts.b * v) + consts.c * np.exp(consts.d * v)
    out = np.where(v > consts.clamp, 1.0, out)
    out = np.where(v < -consts.clamp, -1.0, out)
    return _unwrap(scalar, out)


def _gauss_exp_window(s, mean, sd, lo, hi):
    """E[exp(s*u) * 1{lo <= u <= hi}] for u ~ N(mean, sd^2)."""
    shift = mean + s * sd * sd
    scale = np.exp(s * mean + 0.5 * (s * sd) ** 2)
    return scale * (ndtr((hi - shift) / sd) - ndtr((lo - shift) / sd))


def phi_p_exact(x, consts: PgaConstants = DEFAULT_PGA, quad: QuadratureSpec = DEFAULT_QUAD):
    """1 - E[f(u/2)] with u ~ N(x, 2x) and f = :func:`pga_inner`; 1 at x = 0.

    The inner function jumps at +-clamp, so instead of quadrature the
    expectation is split at the jumps and each exponential piece integrated in
    closed form against the Gaussian. ``quad`` is accepted for interface
    symmetry with :func:`phi_exact` and does not change the result.
    """
    del quad
    scalar = np.ndim(x) == 0
    x = _as_array(x)
    _check_nonnegative(x)
    out = np.ones_like(x)
    pos = x > 0
    if np.any(pos):
        xm = x[pos]
        sd = np.sqrt(2.0 * xm)
        lo, hi = -2.0 * consts.clamp, 2.0 * consts.clamp
        above = ndtr((xm - hi) / sd)
        below = ndtr((lo - xm) / sd)
        inner = consts.a * _gauss_exp_window(consts.b / 2.0, xm, sd, lo, hi) + consts.c * _gauss_exp_window(
            consts.d / 2.0, xm, sd, lo, hi
        )
        out[pos] = 1.0 - (above - below + inner)
    return _unwrap(scalar, out)


def phi_p_closed(x):
    """Three-piece closed form of the piecewise approximation."""
    scalar = np.ndim(x) == 0
    x = _as_array(x)
    _check_nonnegative(x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        low = np.exp(-0.0484 * x * x - 0.3258 * x)
        mid = np.exp(-0.4777 * x**0.8512 + 0.1094)
        high = np.sqrt(np.pi / x) * (1.0 - 1.509 / x) * np.exp(-x / 3.936)
    out = np.where(x < BREAK_LOW, low, np.where(x < BREAK_HIGH, mid, high))
    return _unwrap(scalar, out)


def phi_ga_closed(x):
    """Three-piece closed-form approximation of :func:`phi_exact`.

    The middle and tail pieces are the usual exp(-0.4527 x^0.86 + 0.0218) and
    sqrt(pi/x)(1 - 10/(7x))exp(-x/4), the tail rescaled to meet the middle
    piece at 10. The quadratic-exponent piece below 0.867861 keeps the
    function at or under 1 near the origin.
    """
    scalar = np.ndim(x) == 0
    x = _as_array(x)
    _check_nonnegative(x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        low = np.exp(0.0564 * x * x - 0.48560 * x)
        mid = np.exp(-0.4527 * x**0.86 + 0.0218)
        high = _ga_tail(x) * _GA_CLOSED_TAIL_SCALE
    out = np.where(x < BREAK_LOW, low, np.where(x < BREAK_HIGH, mid, high))
    return _unwrap(scalar, out)


def phi(x, kind: PhiKind | str = PhiKind.PGA_APPROX, *, quad: QuadratureSpec = DEFAULT_QUAD,
        consts: PgaConstants = DEFAULT_PGA):
    """Dispatch to the phi function selected by ``kind``."""
    kind = PhiKind(kind)
    if kind is PhiKind.GA_EXACT:
        return phi_exact(x, quad)
    if kind is PhiKind.GA_APPROX:
        return phi_ga_closed(x)
    if kind is PhiKind.PGA_EXACT:
        return phi_p_exact(x, consts, quad)
    return phi_p_closed(x)


def log_phi(x, kind: PhiKind | str = PhiKind.PGA_APPROX, *, quad: QuadratureSpec = DEFAULT_QUAD,
            consts: PgaConstants = DEFAULT_PGA):
    """Natural log of phi, finite far beyond the point where phi underflows."""
    kind = PhiKind(kind)
    scalar = np.ndim(x) == 0
    x = _as_array(x)
    _check_nonnegative(x)
    if kind is PhiKind.PGA_EXACT:
        with np.errstate(invalid="ignore", divide="ignore"):
            return _unwrap(scalar, np.log(np.asarray(phi_p_exact(x, consts, quad))))
    if kind is PhiKind.PGA_APPROX:
        low = -0.0484 * x * x - 0.3258 * x
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            mid = -0.4777 * x**0.8512 + 0.1094
        high = _log_tail(x, 1.509, 3.936)
    else:
        low = 0.0564 * x * x - 0.48560 * x
        mid = -0.4527 * x**0.86 + 0.0218
        high = _log_tail(x, 10.0 / 7.0, 4.0) + np.log(_GA_CLOSED_TAIL_SCALE)
    out = np.where(x < BREAK_LOW, low, np.where(x < BREAK_HIGH, mid, high))
    if kind is PhiKind.GA_EXACT:
        body = x <= EXACT_TAIL_START
        out = np.where(body, 0.0, _exact_tail_log(x, quad))
        if np.any(body):
            with np.errstate(divide="ignore"):
                out[body] = np.log(np.asarray(phi_exact(x[body], quad)))
    return _unwrap(scalar, out)


def _log_tail(x, shift, scale):
    """log of sqrt(pi/x) * (1 - shift/x) * exp(-x/scale), for x >= 10."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return 0.5 * np.log(np.pi / x) + np.log1p(-shift / x) - x / scale


def phi_inverse(y, kind: PhiKind | str = PhiKind.PGA_APPROX, spec: BisectionSpec = DEFAULT_BISECTION, *,
                quad: QuadratureSpec = DEFAULT_QUAD, consts: PgaConstants = DEFAULT_PGA):
    """Invert phi by coarse bracketing followed by a fixed number of bisections.

    y = 0 returns 0. Otherwise the bracket starts from aux = 1: when the root
    lies below 1, aux is shrunk by ``coarse_down_factor`` until phi(aux) >= y
    and the bracket is [aux, aux/factor]; when it lies above 1, aux grows by
    ``coarse_up_step`` until phi(aux) < y and the bracket is [aux - step, aux].
    Exactly ``iteration_times`` bisection steps follow and the last midpoint
    is returned.
    """
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(_as_array(y, "y"))
    if np.any((y < 0) | (y > 1)):
        raise ValueError("phi_inverse needs y in [0, 1]")
    with np.errstate(divide="ignore"):
        out = phi_inverse_log(np.log(y), kind, spec, quad=quad, consts=consts)
    return float(out[0]) if scalar else out


def phi_inverse_log(log_y, kind: PhiKind | str = PhiKind.PGA_APPROX, spec: BisectionSpec = DEFAULT_BISECTION, *,
                    quad: QuadratureSpec = DEFAULT_QUAD, consts: PgaConstants = DEFAULT_PGA):
    """:func:`phi_inverse` for targets given as log(y); -inf plays the role of y = 0.

    The bracketing and bisection comparisons are made between log(y) and
    log(phi), which orders exactly like y and phi but keeps working where phi
    itself underflows. ``pga-exact`` is compared in the linear domain since it
    need not be positive.
    """
    kind = PhiKind(kind)
    log_y = np.atleast_1d(np.asarray(log_y, dtype=float))
    if np.any(np.isnan(log_y)) or np.any(log_y > 0):
        raise ValueError("phi_inverse needs y in [0, 1]")
    if kind is PhiKind.PGA_EXACT:
        target = np.exp(log_y)

        def f(v):
            return np.asarray(phi_p_exact(v, consts, quad), dtype=float)
    else:
        target = log_y

        def f(v):
            return np.asarray(log_phi(v, kind, quad=quad, consts=consts), dtype=float)

    out = np.zeros_like(log_y)
    # y = 1 is phi(0) for every kind; the shrink loop only reaches 0 through
    # underflow, and a phi that rounds to 1 just above 0 would stop it early
    live = (log_y > -np.inf) & (log_y < 0)
    t = target[live]
    if t.size:
        base = float(f(1.0))
        lo = np.empty_like(t)
        hi = np.empty_like(t)
        down = t >= base
        if np.any(down):
            lo[down], hi[down] = _bracket_down(f, t[down], spec.coarse_down_factor)
        up = ~down
        if np.any(up):
            lo[up], hi[up] = _bracket_up(f, t[up], spec.coarse_up_step)

        mid = lo
        for _ in range(spec.iteration_times):
            mid = 0.5 * (lo + hi)
            left = t >= f(mid)
            hi = np.where(left, mid, hi)
            lo = np.where(left, lo, mid)
        out[live] = mid
    return out


def _bracket_down(f, y, factor):
    aux = np.ones_like(y)
    todo = y > f(aux)
    while np.any(todo):
        aux[todo] = aux[todo] * factor
        todo[todo] = y[todo] > f(aux[todo])
    return aux, aux / factor


def _bracket_up(f, y, step):
    # aux walks 1, 1 + step, 1 + 2*step, ... until phi(aux) < y. The predicate
    # is monotone in the step count, so galloping plus binary search lands on
    # the same first crossing as the linear walk.
    lo = np.zeros(y.shape, dtype=np.int64)  # phi(1 + step*lo) >= y holds
    hi = np.ones(y.shape, dtype=np.int64)
    todo = ~(f(1.0 + step * hi) < y)
    while np.any(todo):
        lo[todo] = hi[todo]
        hi[todo] *= 2
        todo[todo] = ~(f(1.0 + step * hi[todo]) < y[todo])
    while np.any(hi - lo > 1):
        gap = hi - lo > 1
        m = (lo + hi) // 2
        ok = np.zeros(y.shape, dtype=bool)
        ok[gap] = f(1.0 + step * m[gap]) < y[gap]
        hi = np.where(gap & ok, m, hi)
        lo = np.where(gap & ~ok, m, lo)
    aux = 1.0 + step * hi.astype(float)
    return aux - step, aux
