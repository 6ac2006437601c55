"""Reference computations that share no code path with the library."""

import mpmath
import numpy as np


def euler_alternating(a, n_terms=60, sweeps=40):
    """sum_{k>=0} (-1)^k a(k) by repeated averaging of partial sums (Euler)."""
    terms = [(-1) ** k * a(k) for k in range(n_terms)]
    sums = list(np.cumsum(terms))
    for _ in range(sweeps):
        sums = [(x + y) / 2 for x, y in zip(sums, sums[1:])]
    return sums[-1]


def averaged_partial_sums(z, t, n_terms=10_000_000, chunk=1 << 21):
    """Mean of the partial sums S_N of sum_{k>=1} k^z e^{-itk}, N in (n/2, n].

    Averaging over many oscillation periods cancels the O(N^z / t) wobble of
    the raw partial sums; starting at n/2 keeps the early sums out of the mean.
    """
    half = n_terms // 2
    window = n_terms - half
    total = 0j
    for start in range(1, n_terms + 1, chunk):
        k = np.arange(start, min(n_terms, start + chunk - 1) + 1, dtype=float)
        # a_k enters every S_N with N >= k inside the window
        mult = np.where(k <= half, 1.0, (n_terms - k + 1) / window)
        total += np.sum(np.exp(z * np.log(k) - 1j * t * k) * mult)
    return total


def polylog_series(z, t, dps=30):
    """S_z(t) = Li_{-z}(e^{-it}) in arbitrary precision."""
    with mpmath.workdps(dps):
        return complex(mpmath.polylog(-z, mpmath.exp(-1j * mpmath.mpf(t))))
