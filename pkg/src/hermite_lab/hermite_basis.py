"""Normalized Hermite functions, Gauss-Hermite quadrature and the
Fourier-Hermite analysis/synthesis pair in one and two dimensions.

Conventions
-----------
``h_k(x) = (2^k sqrt(pi) k!)^{-1/2} H_k(x) exp(-x^2/2)`` and
``Phi_mu(x) = prod_d h_{mu_d}(x_d)``.  Quadrature rules use the weight
``exp(-x^2)``; integrals of plain (non-weighted) functions use the
*de-weighted* weights ``w_i exp(x_i^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ParameterError, ShapeError

MAX_NODES = 512
MAX_DEGREE = 512
SUPPORTED_DIMS = (1, 2)

# mantissas are renormalised past this size; the log-scale carries the rest
_RESCALE = 1e8


def _scaled_recurrence(K: int, x: np.ndarray):
    """Yield ``(k, mantissa, previous, logscale)``.

    ``h_k(x) = mantissa * exp(logscale)`` and ``previous`` is the mantissa of
    ``h_{k-1}`` on the same scale.

    The three-term recurrence runs on normalised functions, so no factorials
    appear; the Gaussian envelope is carried in log form so that h_k stays
    finite where h_0 alone would already have underflowed.
    """
    logscale = -0.5 * x * x
    prev = np.zeros_like(x)
    cur = np.full_like(x, np.pi ** -0.25)
    yield 0, cur, prev, logscale
    for k in range(K):
        nxt = x * math.sqrt(2.0 / (k + 1)) * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            s = np.abs(cur[big])
            cur = cur.copy()
            prev = prev.copy()
            cur[big] /= s
            prev[big] /= s
            logscale = logscale.copy()
            logscale[big] += np.log(s)
        yield k + 1, cur, prev, logscale


def eval_hermite_functions(K: int, x) -> np.ndarray:
    """Values ``h_0(x), ..., h_K(x)``.

    Parameters
    ----------
    K : int
        Maximal degree, ``0 <= K <= 512``.
    x : float or array_like
        Evaluation points, ``|x| <= 60``.

    Returns
    -------
    ndarray
        Shape ``(K + 1,)`` for scalar ``x``, else ``(K + 1,) + x.shape``.
        Entries may underflow to zero far outside the oscillatory region.
    """
    if not 0 <= K <= MAX_DEGREE:
        raise ParameterError(f"degree K={K} outside [0, {MAX_DEGREE}]")
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 60):
        raise ParameterError("|x| must not exceed 60")
    flat = xa.ravel()
    out = np.empty((K + 1, flat.size))
    for k, mant, _, logscale in _scaled_recurrence(K, flat):
        out[k] = mant * np.exp(logscale)
    return out.reshape((K + 1,) + xa.shape)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for the weight ``exp(-x^2)``."""

    nodes: np.ndarray
    weights: np.ndarray
    # w_i * exp(x_i^2); stays representable where ``weights`` underflows
    deweighted: np.ndarray

    @property
    def M(self) -> int:
        return self.nodes.size

    def integrate(self, values) -> complex | float:
        """Approximate ``int f(x) dx`` from samples of ``f`` at the nodes."""
        return np.asarray(values) @ self.deweighted


def build_quadrature(M: int) -> QuadratureRule:
    """Gauss-Hermite rule with ``M`` nodes.

    Nodes are eigenvalues of the symmetric Jacobi matrix (off-diagonal
    ``sqrt(k/2)``), polished by one Newton step on ``h_M``.  Weights use the
    Christoffel form ``exp(-x^2) / sum_{k<M} h_k(x)^2``.
    """
    if not isinstance(M, (int, np.integer)) or not 1 <= M <= MAX_NODES:
        raise ParameterError(f"node count M={M} outside [1, {MAX_NODES}]")
    M = int(M)
    if M == 1:
        x = np.zeros(1)
    else:
        off = np.sqrt(np.arange(1, M) / 2.0)
        x = eigh_tridiagonal(np.zeros(M), off, eigvals_only=True)
        # Newton step on h_M; h_M' = sqrt(2M) h_{M-1} - x h_M, scales cancel
        for _, last, prev, _ in _scaled_recurrence(M, x):
            pass
        x = x - last / (math.sqrt(2.0 * M) * prev - x * last)
        x = 0.5 * (x - x[::-1])
    table = eval_hermite_functions(M - 1, x)
    deweighted = 1.0 / np.sum(table * table, axis=0)
    deweighted = 0.5 * (deweighted + deweighted[::-1])
    weights = deweighted * np.exp(-x * x)
    return QuadratureRule(nodes=x, weights=weights, deweighted=deweighted)


@dataclass(frozen=True)
class HermiteBasis1D:
    """Quadrature rule together with the table ``h_k(x_i)``, ``k <= K``."""

    K: int
    rule: QuadratureRule
    table: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, K: int, M: int | None = None) -> "HermiteBasis1D":
        """Basis of degree ``K`` on an ``M``-node rule (default ``2K + 1``)."""
        if M is None:
            M = 2 * K + 1
        if M < K + 1:
            raise ParameterError(f"need M >= K + 1, got M={M}, K={K}")
        rule = build_quadrature(M)
        return cls(K=K, rule=rule, table=eval_hermite_functions(K, rule.nodes))

    @property
    def M(self) -> int:
        return self.rule.M

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def deweighted(self) -> np.ndarray:
        return self.rule.deweighted

    def grid(self, n: int = 1) -> np.ndarray:
        """Tensor grid points, shape ``(M,)`` for n = 1 and ``(M**n, n)`` else."""
        _check_dim(n)
        if n == 1:
            return self.nodes.copy()
        mesh = np.meshgrid(*([self.nodes] * n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def grid_weights(self, n: int = 1) -> np.ndarray:
        """De-weighted tensor weights, flattened in the order of :meth:`grid`."""
        _check_dim(n)
        w = self.deweighted
        for _ in range(n - 1):
            w = np.multiply.outer(w, self.deweighted).ravel()
        return w


def _check_dim(n: int) -> None:
    if n not in SUPPORTED_DIMS:
        raise ParameterError(f"dimension n={n} not supported (only 1 and 2)")


@dataclass(frozen=True)
class MultiIndexSet:
    """Multi-indices ``mu`` with ``|mu| <= K``.

    Ordered by total degree, lexicographically within a degree.
    """

    n: int
    K: int

    def __post_init__(self):
        _check_dim(self.n)
        if self.K < 0:
            raise ParameterError("K must be non-negative")

    @cached_property
    def indices(self) -> np.ndarray:
        rows = []
        for d in range(self.K + 1):
            rows.extend(mu for mu in product(range(d + 1), repeat=self.n) if sum(mu) == d)
        return np.array(rows, dtype=int).reshape(-1, self.n)

    @cached_property
    def position(self) -> dict:
        return {tuple(mu): i for i, mu in enumerate(self.indices)}

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues ``2|mu| + n`` of H, in index order."""
        return 2 * self.degrees + self.n

    def __len__(self) -> int:
        return math.comb(self.K + self.n, self.n)


@dataclass(frozen=True)
class SpectralState:
    """Coefficients ``c_mu`` of a function in the Hermite eigenbasis."""

    index: MultiIndexSet
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (len(self.index),):
            raise ShapeError(f"expected {len(self.index)} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    @classmethod
    def unit(cls, index: MultiIndexSet, mu) -> "SpectralState":
        c = np.zeros(len(index), dtype=complex)
        c[index.position[tuple(np.atleast_1d(mu))]] = 1.0
        return cls(index, c)


def _check_basis(index: MultiIndexSet, basis: HermiteBasis1D) -> None:
    if index.K > basis.K:
        raise ShapeError(f"index set degree {index.K} exceeds basis degree {basis.K}")


def _as_grid_array(samples, basis: HermiteBasis1D, n: int) -> np.ndarray:
    f = np.asarray(samples)
    M = basis.M
    if f.shape == (M**n,):
        f = f.reshape((M,) * n)
    if f.shape != (M,) * n:
        raise ShapeError(f"samples of shape {np.shape(samples)} do not match a {n}-d grid of {M} nodes")
    return f


def analyze(samples, basis: HermiteBasis1D, index: MultiIndexSet) -> SpectralState:
    """Fourier-Hermite coefficients ``c_mu ~ int f Phi_mu`` by quadrature.

    ``samples`` are values on the tensor grid of ``basis``, either shaped
    ``(M,) * n`` or flattened in :meth:`HermiteBasis1D.grid` order.
    """
    _check_basis(index, basis)
    n = index.n
    f = _as_grid_array(samples, basis, n)
    A = basis.table * basis.deweighted  # (K+1, M)
    if n == 1:
        full = A @ f
        return SpectralState(index, full[index.indices[:, 0]])
    full = A @ f @ A.T
    mu = index.indices
    return SpectralState(index, full[mu[:, 0], mu[:, 1]])


def synthesize(state: SpectralState, points) -> np.ndarray:
    """Evaluate ``sum_mu c_mu Phi_mu`` at arbitrary points.

    ``points`` has shape ``(P,)`` in one dimension and ``(P, 2)`` in two.
    """
    index = state.index
    pts = np.asarray(points, dtype=float)
    if index.n == 1:
        if pts.ndim == 2 and pts.shape[1] == 1:
            pts = pts[:, 0]
        tab = eval_hermite_functions(index.K, pts)
        return np.tensordot(state.coeffs, tab[index.indices[:, 0]], axes=1)
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != index.n:
        raise ShapeError(f"points must have trailing dimension {index.n}")
    vals = np.ones((len(index),) + pts.shape[:-1], dtype=float)
    for d in range(index.n):
        tab = eval_hermite_functions(index.K, pts[..., d])
        vals = vals * tab[index.indices[:, d]]
    return np.tensordot(state.coeffs, vals, axes=1)


def synthesize_on_grid(state: SpectralState, basis: HermiteBasis1D) -> np.ndarray:
    """Synthesis on the tensor quadrature grid, shape ``(M,) * n``.

    Uses the precomputed table, so it is much cheaper than :func:`synthesize`.
    """
    _check_basis(state.index, basis)
    index = state.index
    if index.n == 1:
        return state.coeffs @ basis.table[index.indices[:, 0]]
    C = np.zeros((basis.K + 1, basis.K + 1), dtype=complex)
    C[index.indices[:, 0], index.indices[:, 1]] = state.coeffs
    return basis.table.T @ C @ basis.table


def coefficient_matrix(index: MultiIndexSet, basis: HermiteBasis1D) -> np.ndarray:
    """Matrix ``Phi_mu(grid point)`` of shape ``(len(index), M**n)``."""
    _check_basis(index, basis)
    if index.n == 1:
        return basis.table[index.indices[:, 0]]
    T = basis.table
    return (T[index.indices[:, 0]][:, :, None] * T[index.indices[:, 1]][:, None, :]).reshape(len(index), -1)
