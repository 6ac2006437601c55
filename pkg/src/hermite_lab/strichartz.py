"""Weighted orthonormal systems, their evolved densities and the
orthonormal Strichartz ratio.

A system ``gamma_0 = sum_j n_j |u_j><u_j|`` is stored as a matrix ``U`` whose
columns are Hermite coefficient vectors.  Its density under the flow is

    rho(t, x) = sum_j n_j |(e^{-itH} u_j)(x)|^2,

which is ``pi``-periodic and a trigonometric polynomial of degree ``2K`` in t.
The ratio ``||rho||_{L^p_t L^q_x} / ||gamma_0||_{S^{2q/(q+1)}}`` is bounded
uniformly in the system when ``2/p + n/q = n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DegenerateSystemError, ParameterError, ShapeError
from .hermite_basis import HermiteBasis1D, MultiIndexSet, SpectralState, synthesize_on_grid
from .propagator import evolve_spectral

ORTHONORMAL_TOL = 1e-10
QUADRATURE_WARN_Q = 16.0
FAMILIES = ("random", "spectral")


@dataclass(frozen=True)
class OrthonormalSystem:
    """``gamma_0 = sum_j n_j |u_j><u_j|`` with orthonormal ``u_j``.

    ``weights`` must be real so that ``gamma_0`` is self-adjoint; a complex
    array with vanishing imaginary part is accepted.
    """

    index: MultiIndexSet
    weights: np.ndarray
    U: np.ndarray = field(repr=False)

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        w = np.asarray(self.weights)
        if np.iscomplexobj(w):
            if np.any(w.imag != 0):
                raise ParameterError("weights must be real (gamma_0 self-adjoint)")
            w = w.real
        w = np.asarray(w, dtype=float)
        if U.ndim != 2 or U.shape[0] != len(self.index):
            raise ShapeError(f"U must have {len(self.index)} rows, got shape {U.shape}")
        if w.shape != (U.shape[1],):
            raise ShapeError(f"expected {U.shape[1]} weights, got shape {w.shape}")
        if U.shape[1] > len(self.index):
            raise ParameterError("more functions than the index set can hold")
        gram_err = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[1]))) if U.size else 0.0
        if gram_err > ORTHONORMAL_TOL:
            raise ParameterError(f"columns not orthonormal (deviation {gram_err:.2e})")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "weights", w)

    @property
    def J(self) -> int:
        return self.U.shape[1]

    def member(self, j: int) -> SpectralState:
        return SpectralState(self.index, self.U[:, j])

    def reweighted(self, weights) -> "OrthonormalSystem":
        return OrthonormalSystem(self.index, weights, self.U)


def random_orthonormal_system(J: int, index: MultiIndexSet, seed: int,
                              weights=None) -> OrthonormalSystem:
    """Orthonormalise a seeded complex Gaussian ``len(index) x J`` matrix.

    The QR factor is normalised so ``R`` has a positive diagonal, which
    makes the result Haar-distributed and deterministic per seed.  Weights
    default to all ones.
    """
    L = len(index)
    if not 1 <= J <= L:
        raise ParameterError(f"J={J} must lie in [1, {L}]")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((L, J)) + 1j * rng.standard_normal((L, J))
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R)
    Q = Q * (d / np.abs(d))
    return OrthonormalSystem(index, np.ones(J) if weights is None else weights, Q)


def spectral_projection_system(J: int, index: MultiIndexSet, weights=None) -> OrthonormalSystem:
    """The first ``J`` eigenfunctions in index order."""
    L = len(index)
    if not 1 <= J <= L:
        raise ParameterError(f"J={J} must lie in [1, {L}]")
    return OrthonormalSystem(index, np.ones(J) if weights is None else weights, np.eye(L)[:, :J])


def make_system(family: str, J: int, index: MultiIndexSet, seed: int) -> OrthonormalSystem:
    if family == "random":
        return random_orthonormal_system(J, index, seed)
    if family == "spectral":
        return spectral_projection_system(J, index)
    raise ParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")


def density(system: OrthonormalSystem, t: float, basis: HermiteBasis1D) -> np.ndarray:
    """``rho(t, .)`` on the tensor grid of ``basis``, shape ``(M,) * n``."""
    n = system.index.n
    rho = np.zeros((basis.M,) * n)
    for j in range(system.J):
        if system.weights[j] == 0:
            continue
        u = synthesize_on_grid(evolve_spectral(system.member(j), t), basis)
        rho += system.weights[j] * (u.real**2 + u.imag**2)
    return rho


def default_time_count(K: int, q: float) -> int:
    """Number of uniform samples on ``[-pi, pi)``.

    ``int rho^q dx`` is a trigonometric polynomial of degree ``2qK`` for
    integer ``q``; more than that many samples make the periodic trapezoid
    rule exact.  At least ``4K + 3`` samples resolve ``rho`` itself.
    """
    qq = 1 if math.isinf(q) else math.ceil(q)
    return max(4 * K + 3, 2 * qq * K + 3)


@dataclass(frozen=True)
class DensityField:
    """``rho(t_i, x)`` on a uniform periodic time grid and a tensor node grid."""

    times: np.ndarray
    basis: HermiteBasis1D = field(repr=False)
    values: np.ndarray = field(repr=False)
    n: int = 1

    @property
    def dt(self) -> float:
        return 2 * math.pi / self.times.size

    @property
    def space_weights(self) -> np.ndarray:
        return self.basis.grid_weights(self.n)

    def traces(self) -> np.ndarray:
        """``int rho(t_i, x) dx`` for every time sample."""
        return self.values.reshape(self.times.size, -1) @ self.space_weights

    def scaled(self, lam: float) -> "DensityField":
        return DensityField(self.times, self.basis, lam * self.values, self.n)


def density_field(system: OrthonormalSystem, basis: HermiteBasis1D,
                  n_times: int | None = None) -> DensityField:
    """Density on ``n_times`` uniform samples of ``[-pi, pi)``.

    The periodic trapezoid rule on these samples is the time integral.
    """
    index = system.index
    if index.K > basis.K:
        raise ShapeError(f"system degree {index.K} exceeds basis degree {basis.K}")
    if n_times is None:
        n_times = default_time_count(index.K, 2.0)
    times = -math.pi + 2 * math.pi * np.arange(n_times) / n_times
    phases = np.exp(-1j * np.outer(times, index.eigenvalues))
    n = index.n
    vals = np.zeros((n_times,) + (basis.M,) * n)
    active = np.flatnonzero(system.weights)
    if n == 1:
        T = basis.table[index.indices[:, 0]]
        for j in active:
            u = (phases * system.U[:, j]) @ T
            vals += system.weights[j] * (u.real**2 + u.imag**2)
    else:
        for i in range(n_times):
            for j in active:
                u = synthesize_on_grid(SpectralState(index, phases[i] * system.U[:, j]), basis)
                vals[i] += system.weights[j] * (u.real**2 + u.imag**2)
    return DensityField(times=times, basis=basis, values=vals, n=n)


@dataclass(frozen=True)
class MixedNormSpec:
    """Exponents of ``L^p_t L^q_x``; finite pairs must satisfy ``2/p + n/q = n``."""

    p: float
    q: float
    n: int = 1

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if not (p >= 1 and q >= 1):
            raise ParameterError(f"exponents must be >= 1, got p={p}, q={q}")
        if self.n not in (1, 2):
            raise ParameterError(f"dimension n={self.n} not supported")
        if math.isfinite(p) and math.isfinite(q) and abs(2 / p + self.n / q - self.n) > 1e-12:
            raise ParameterError(f"(p, q) = ({p}, {q}) violates 2/p + n/q = n")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_q(cls, q: float, n: int = 1) -> "MixedNormSpec":
        """Pair ``q`` with the ``p`` fixed by the scaling relation."""
        if q == 1:
            return cls(math.inf, 1.0, n)
        return cls(2 * q / (n * (q - 1)), q, n)

    @property
    def admissible(self) -> bool:
        """``q < (n+1)/(n-1)``; no upper bound in one dimension."""
        return self.n == 1 or self.q < (self.n + 1) / (self.n - 1)

    @property
    def quadrature_warning(self) -> bool:
        """Large ``q`` concentrates ``rho^q``; the node rule loses accuracy."""
        return self.q > QUADRATURE_WARN_Q

    @property
    def critical_schatten(self) -> float:
        """``2q/(q+1)``, the Schatten exponent on the right-hand side."""
        return 2.0 if math.isinf(self.q) else 2 * self.q / (self.q + 1)


def basis_for(K: int, q: float) -> HermiteBasis1D:
    """Basis with ``2K + 1`` nodes, doubled for ``q >= 4`` where ``rho^q``
    carries a higher-degree polynomial factor."""
    M = 2 * K + 1
    if q >= 4:
        M = min(2 * M, 512)
    return HermiteBasis1D.build(K, M)


def mixed_norm(field_: DensityField, spec: MixedNormSpec) -> float:
    """``(sum_i dt (sum_x w_x |rho|^q)^{p/q})^{1/p}``, with max for infinite exponents."""
    vals = np.abs(field_.values.reshape(field_.times.size, -1))
    if not np.all(np.isfinite(vals)):
        raise DataError("density contains non-finite values")
    if field_.n != spec.n:
        raise ParameterError(f"field dimension {field_.n} differs from spec dimension {spec.n}")
    if math.isinf(spec.q):
        inner = vals.max(axis=1)
    else:
        inner = (vals**spec.q @ field_.space_weights) ** (1 / spec.q)
    if math.isinf(spec.p):
        return float(inner.max())
    return float((field_.dt * np.sum(inner**spec.p)) ** (1 / spec.p))


def _check_r(r: float) -> float:
    r = float(r)
    if not r >= 1:
        raise ParameterError(f"Schatten exponent must be >= 1, got {r}")
    return r


def schatten_norm_diagonal(weights, r: float) -> float:
    """``(sum |n_j|^r)^{1/r}``, or ``max |n_j|`` for ``r = inf``."""
    r = _check_r(r)
    a = np.abs(np.asarray(weights, dtype=complex))
    if a.size == 0:
        return 0.0
    if math.isinf(r):
        return float(a.max())
    top = a.max()
    if top == 0:
        return 0.0
    # scale out the largest entry so large r cannot overflow
    return float(top * np.sum((a / top) ** r) ** (1 / r))


def schatten_norm_matrix(A, r: float) -> float:
    """``l^r`` norm of the singular values of ``A``."""
    r = _check_r(r)
    A = np.asarray(A, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise DataError("matrix contains non-finite entries")
    return schatten_norm_diagonal(np.linalg.svd(A, compute_uv=False), r)


def strichartz_ratio(system: OrthonormalSystem, spec: MixedNormSpec, basis: HermiteBasis1D, *,
                     r: float | None = None, n_times: int | None = None) -> float:
    """``||rho||_{L^p_t L^q_x} / ||gamma_0||_{S^r}`` with ``r = 2q/(q+1)`` by default."""
    if not spec.admissible:
        raise ParameterError(f"q={spec.q} is not admissible in dimension {spec.n}")
    r = spec.critical_schatten if r is None else r
    den = schatten_norm_diagonal(system.weights, r)
    if den == 0:
        raise DegenerateSystemError("all weights vanish")
    if n_times is None:
        n_times = default_time_count(system.index.K, spec.q)
    return mixed_norm(density_field(system, basis, n_times), spec) / den


@dataclass(frozen=True)
class RatioSample:
    seed: int
    J: int
    K: int
    p: float
    q: float
    r: float
    ratio: float
    trace_error: float


def ratio_sample(family: str, J: int, K: int, q: float, seed: int, *, r: float | None = None,
                 n: int = 1, basis: HermiteBasis1D | None = None) -> RatioSample:
    """One equal-weight system, its ratio and its worst trace deviation."""
    spec = MixedNormSpec.from_q(q, n)
    r = spec.critical_schatten if r is None else float(r)
    basis = basis_for(K, q) if basis is None else basis
    system = make_system(family, J, MultiIndexSet(n, K), seed)
    fld = density_field(system, basis, default_time_count(K, q))
    ratio = mixed_norm(fld, spec) / schatten_norm_diagonal(system.weights, r)
    trace_error = float(np.max(np.abs(fld.traces() - system.weights.sum())))
    return RatioSample(seed, J, K, spec.p, spec.q, r, ratio, trace_error)


def log_ratio_slope(samples) -> float:
    """Slope of the per-J mean of ``log ratio`` against ``log J``."""
    by_J: dict[int, list[float]] = {}
    for s in samples:
        by_J.setdefault(s.J, []).append(math.log(s.ratio))
    Js = sorted(by_J)
    if len(Js) < 2:
        raise ParameterError("need at least two distinct J values")
    means = [float(np.mean(by_J[J])) for J in Js]
    return float(np.polyfit(np.log(Js), means, 1)[0])
