"""The Schrodinger flow ``e^{-itH}`` for ``H = -Delta + |x|^2``.

Two independent routes: diagonal phases on Hermite coefficients, and
quadrature against the Mehler kernel

    K_t(x, y) = e^{-i pi n/4} (2 pi sin 2t)^{-n/2}
                exp[(i/2)(cot 2t (|x|^2 + |y|^2) - 2 x.y / sin 2t)],   0 < t < pi/2.

Outside ``(0, pi/2)`` the kernel is continued with the group law: writing
``t = t0 + k pi/2`` gives ``K_t(x, y) = e^{-i k pi n/2} K_{t0}(x, (-1)^k y)``,
i.e. the Maslov phase is inherited from the spectral flow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SingularTimeError
from .hermite_basis import HermiteBasis1D, SpectralState, _as_grid_array

DELTA_SING = 1e-2
METHODS = ("spectral", "mehler")


@dataclass(frozen=True)
class PropagatorSpec:
    t: float
    method: str = "spectral"
    delta_sing: float = DELTA_SING

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}")
        if self.method == "mehler":
            check_regular_time(self.t, self.delta_sing)


def singular_distance(t: float) -> float:
    """Distance from ``t`` to the set ``{k pi / 2}``."""
    r = math.remainder(t, math.pi / 2)
    return abs(r)


def check_regular_time(t: float, delta_sing: float = DELTA_SING) -> None:
    if singular_distance(t) < delta_sing:
        raise SingularTimeError(
            f"t={t} lies within {delta_sing} of the singular set k*pi/2"
        )


def evolve_spectral(state: SpectralState, t: float) -> SpectralState:
    """``c_mu -> exp(-i t (2|mu| + n)) c_mu``."""
    phases = np.exp(-1j * t * state.index.eigenvalues)
    return SpectralState(state.index, phases * state.coeffs)


def _reduce_time(t: float):
    k = math.floor(t / (math.pi / 2))
    return k, t - k * math.pi / 2


def mehler_kernel(x, y, t: float, *, n: int = 1, delta_sing: float = DELTA_SING) -> np.ndarray:
    """Kernel of ``e^{-itH}``.

    ``x`` and ``y`` broadcast against each other; for ``n = 2`` their last
    axis holds the two coordinates.
    """
    check_regular_time(t, delta_sing)
    k, t0 = _reduce_time(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float) * (-1.0) ** k
    if n == 1:
        xx, yy, xy = x * x, y * y, x * y
    else:
        xx = np.sum(x * x, axis=-1)
        yy = np.sum(y * y, axis=-1)
        xy = np.sum(x * y, axis=-1)
    s = math.sin(2 * t0)
    cot = math.cos(2 * t0) / s
    pref = np.exp(-1j * math.pi * n * (0.25 + 0.5 * k)) * (2 * math.pi * s) ** (-n / 2)
    return pref * np.exp(0.5j * (cot * (xx + yy) - 2 * xy / s))


def kernel_matrix(basis: HermiteBasis1D, t: float, *, delta_sing: float = DELTA_SING) -> np.ndarray:
    """Matrix ``K_t(x_i, x_j) * wdw_j`` on the basis nodes (one dimension)."""
    x = basis.nodes
    return mehler_kernel(x[:, None], x[None, :], t, delta_sing=delta_sing) * basis.deweighted[None, :]


def evolve_kernel(samples, t: float, basis: HermiteBasis1D, *, n: int = 1,
                  delta_sing: float = DELTA_SING) -> np.ndarray:
    """Apply ``e^{-itH}`` by quadrature against the Mehler kernel.

    The samples live on the tensor grid of ``basis`` and are expected to
    decay at least like ``exp(-x^2/4)``.  Accuracy is governed by how well
    the rule resolves the chirp ``cot(2t) y^2``: near the singular set
    (e.g. t = 0.3) roughly ``M >= 4K`` nodes are needed for degree-K data,
    while ``M = 2K + 1`` suffices for t near pi/4.
    """
    f = _as_grid_array(samples, basis, n)
    A = kernel_matrix(basis, t, delta_sing=delta_sing)
    if n == 1:
        return A @ f
    # the n-dimensional kernel is the tensor product of 1-d kernels
    return A @ f @ A.T


def propagate(state: SpectralState, spec: PropagatorSpec, basis: HermiteBasis1D | None = None):
    """Dispatch on ``spec.method``.

    Spectral returns a :class:`SpectralState`; Mehler returns grid samples
    and therefore needs ``basis``.
    """
    if spec.method == "spectral":
        return evolve_spectral(state, spec.t)
    if basis is None:
        raise ParameterError("the mehler route needs a quadrature basis")
    from .hermite_basis import synthesize_on_grid

    return evolve_kernel(synthesize_on_grid(state, basis), spec.t, basis,
                         n=state.index.n, delta_sing=spec.delta_sing)
