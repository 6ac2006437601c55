"""The fractional series ``S_z(t) = sum_{k>=1} k^z e^{-itk}``, ``-1 < Re z < 0``.

The series converges only conditionally, so it is summed with an Abel damping
``e^{-eps k}`` and the damped values are Richardson-extrapolated to
``eps = 0``.  Near ``t = 0`` it behaves like ``Gamma(z+1) (it)^{-z-1}`` plus
a bounded remainder; :func:`smooth_remainder` exposes that split.

Only ``k >= 1`` contributes: ``0_+^z = 0`` for ``Re z < 0``.  The
normalisation ``1/Gamma(z+1)`` used when assembling space-time kernels is
*not* applied here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import AccuracyError, ParameterError

TAIL_CUTOFF = 1e-16
MIN_EPS = 1e-6
# eps_0 as a fraction of the distance to the nearest singularity of the
# damped sum (t = 0 mod 2 pi); sets the Richardson truncation error
EPS_FRACTION = 0.02
ABEL_LEVELS = 4
DEFAULT_TOL = 1e-6
_CHUNK = 1 << 20


@dataclass(frozen=True)
class SeriesQuery:
    z: complex
    t: float
    eps: tuple
    n_max: int | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        z = complex(self.z)
        object.__setattr__(self, "z", z)
        if not -1 < z.real < 0:
            raise ParameterError(f"need -1 < Re z < 0, got z={z}")
        if not 0 < abs(self.t) <= math.pi:
            raise ParameterError(f"need 0 < |t| <= pi, got t={self.t}")
        eps = tuple(float(e) for e in self.eps)
        if len(eps) < 2 or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ParameterError("Abel schedule must be strictly decreasing with >= 2 entries")
        if eps[-1] < MIN_EPS:
            raise ParameterError(f"smallest eps {eps[-1]} below {MIN_EPS}")
        object.__setattr__(self, "eps", eps)

    @classmethod
    def default(cls, z, t, *, levels: int = ABEL_LEVELS, fraction: float = EPS_FRACTION,
                tol: float = DEFAULT_TOL) -> "SeriesQuery":
        """Geometric schedule ``eps_j = eps_0 / 2^j``, scaled to the distance
        from ``t`` to the singular point."""
        radius = min(abs(t), 2 * math.pi - abs(t))
        top = max(fraction * radius, MIN_EPS * 2 ** (levels - 1))
        return cls(z=z, t=t, eps=tuple(top / 2**j for j in range(levels)), tol=tol)

    def terms_for(self, eps: float) -> int:
        n = math.ceil(math.log(1 / TAIL_CUTOFF) / eps)
        return n if self.n_max is None else min(n, self.n_max)


@dataclass(frozen=True)
class SeriesValue:
    value: complex
    error: float
    damped: tuple


@dataclass(frozen=True)
class SingularComparison:
    series: complex
    singular: complex
    remainder: complex
    error: float


def damped_sum(z: complex, t: float, eps: float, n_terms: int) -> complex:
    """``sum_{k=1}^{n_terms} k^z e^{-(eps + it) k}``, summed in chunks."""
    total = 0j
    w = complex(eps, t)
    for start in range(1, n_terms + 1, _CHUNK):
        k = np.arange(start, min(n_terms, start + _CHUNK - 1) + 1, dtype=float)
        total += np.sum(np.exp(z * np.log(k) - w * k))
    return total


def richardson_zero(eps, values):
    """Polynomial extrapolation of ``values(eps)`` to ``eps = 0`` (Neville).

    Returns the extrapolated value and the gap between the two highest-order
    estimates, used as the error estimate.
    """
    eps = list(eps)
    row = list(values)
    prev_best = row[-1]
    for m in range(1, len(eps)):
        row = [(eps[i + m] * row[i] - eps[i] * row[i + 1]) / (eps[i + m] - eps[i])
               for i in range(len(row) - 1)]
        if len(row) == 2:
            prev_best = row[-1]
    best = row[0]
    return best, abs(best - prev_best)


def eval_fractional_series(q: SeriesQuery) -> SeriesValue:
    """Abel-regularised, Richardson-extrapolated value of ``S_z(t)``.

    Raises
    ------
    AccuracyError
        If the extrapolation error estimate exceeds ``q.tol`` relative to
        ``max(1, |S|)``.
    """
    damped = tuple(damped_sum(q.z, q.t, e, q.terms_for(e)) for e in q.eps)
    value, err = richardson_zero(q.eps, damped)
    if not np.isfinite(value) or err > q.tol * max(1.0, abs(value)):
        raise AccuracyError(
            f"Abel extrapolation for z={q.z}, t={q.t} did not converge "
            f"(estimate {err:.3e}, tolerance {q.tol:.1e})")
    return SeriesValue(complex(value), float(err), damped)


def singular_part(z, t: float) -> complex:
    """``Gamma(z+1) (it)^{-z-1}`` on the principal branch, ``arg(it) = pi/2``."""
    if t <= 0:
        raise ParameterError("singular_part needs t > 0")
    z = complex(z)
    return complex(gamma_fn(z + 1) * t ** (-z - 1) * np.exp(-0.5j * math.pi * (z + 1)))


def smooth_remainder(q: SeriesQuery) -> SingularComparison:
    """Split ``S_z(t)`` into its singular part and the remainder ``b(t)``."""
    s = eval_fractional_series(q)
    sing = singular_part(q.z, q.t)
    return SingularComparison(series=s.value, singular=sing, remainder=s.value - sing, error=s.error)


def blowup_slope(z, ts) -> float:
    """Least-squares slope of ``log|S_z(t)|`` against ``log t``.

    The singular part alone gives ``-Re z - 1``.
    """
    ts = np.asarray(ts, dtype=float)
    logs = [math.log(abs(eval_fractional_series(SeriesQuery.default(z, t)).value)) for t in ts]
    return float(np.polyfit(np.log(ts), logs, 1)[0])


def log_grid(t_min: float, t_max: float, per_decade: int = 10) -> np.ndarray:
    """Log-uniform grid ``t_min ... t_max`` with ``per_decade`` steps per decade."""
    decades = math.log10(t_max / t_min)
    n = int(round(decades * per_decade)) + 1
    return t_min * 10 ** (np.arange(n) * decades / (n - 1))
