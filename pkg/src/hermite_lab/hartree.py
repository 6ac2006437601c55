"""Strang splitting for the Hermite-Hartree system ``i d/dt gamma = [H + w * rho_gamma, gamma]``.

``gamma = sum_j n_j |u_j><u_j|`` is evolved in rank-J form with fixed weights.
Each ``u_j`` is held by its scaled nodal values ``v_ij = sqrt(wdw_i) u_j(x_i)``
on an M-node Gauss-Hermite rule.  The map ``Q_ik = sqrt(wdw_i) h_k(x_i)``,
``k < M``, is square and orthogonal, so

* the linear step is ``v -> Q diag(e^{-i dt (2k+1)}) Q^T v`` (exactly unitary);
* the potential step multiplies every ``u_j`` by the same phase
  ``e^{-i dt V(x_i)}`` (exactly unitary, and the Gram matrix is untouched).

The potential comes from a direct convolution on a uniform grid.  Nodal
densities reach the grid through the hat-function interpolation matrix ``P``
and return through ``P^T``, so the discrete potential is the exact gradient of
the discrete interaction energy and the scheme conserves the energy up to
``O(dt^2)`` without drift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BandLimitError, InstabilityError, ParameterError, ShapeError
from .hermite_basis import build_quadrature, eval_hermite_functions, QuadratureRule
from .strichartz import OrthonormalSystem

MIN_HALF_WIDTH = 8.0
MAX_GRID_POINTS = 2048
# modes in the top eighth of the rule count as the band edge
BAND_EDGE_FRACTION = 1 / 8
BAND_EDGE_TOL = 1e-6


@dataclass(frozen=True)
class UniformGrid:
    """``N`` equispaced points on ``[-R, R]``."""

    R: float
    N: int

    def __post_init__(self):
        if self.R <= 0 or not 2 <= self.N <= MAX_GRID_POINTS:
            raise ParameterError(f"need R > 0 and 2 <= N <= {MAX_GRID_POINTS}, got R={self.R}, N={self.N}")

    @property
    def spacing(self) -> float:
        return 2 * self.R / (self.N - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(-self.R, self.R, self.N)

    @classmethod
    def resolving(cls, R: float, M: int) -> "UniformGrid":
        """Coarsest grid meeting :func:`max_spacing` for an ``M``-node rule."""
        return cls(R, int(math.ceil(2 * R / max_spacing(M))) + 1)


def max_spacing(M: int) -> float:
    """Half the shortest wavelength of a density built from ``M`` modes.

    ``|u|^2`` with ``u`` in the span of ``h_0 .. h_{M-1}`` oscillates with
    local wavenumber at most ``2 sqrt(2M - 1)``.
    """
    return math.pi / (2 * math.sqrt(2 * M - 1))


@dataclass(frozen=True)
class InteractionKernel:
    """Even, bounded pair interaction ``w``.

    ``gaussian``: ``w(x) = w0 exp(-x^2 / (2 sigma^2))``.
    ``tabulated``: odd-length samples centred at 0 with a given spacing;
    they are symmetrised on construction and taken as zero outside.
    """

    kind: str
    w0: float = 0.0
    sigma: float = 1.0
    samples: np.ndarray | None = field(default=None, repr=False)
    spacing: float | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            if not self.sigma > 0 or not math.isfinite(self.w0):
                raise ParameterError(f"gaussian kernel needs sigma > 0 and finite w0, got {self.sigma}, {self.w0}")
        elif self.kind == "tabulated":
            s = np.asarray(self.samples, dtype=float)
            if s.ndim != 1 or s.size % 2 == 0:
                raise ShapeError("tabulated kernel needs an odd number of samples centred at 0")
            if not np.all(np.isfinite(s)):
                raise ParameterError("tabulated kernel must be finite")
            if self.spacing is None or not self.spacing > 0:
                raise ParameterError("tabulated kernel needs a positive spacing")
            object.__setattr__(self, "samples", 0.5 * (s + s[::-1]))
        else:
            raise ParameterError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def gaussian(cls, w0: float, sigma: float = 1.0) -> "InteractionKernel":
        return cls("gaussian", w0=float(w0), sigma=float(sigma))

    @classmethod
    def tabulated(cls, samples, spacing: float) -> "InteractionKernel":
        return cls("tabulated", samples=samples, spacing=float(spacing))

    @property
    def is_zero(self) -> bool:
        if self.kind == "gaussian":
            return self.w0 == 0
        return not np.any(self.samples)

    @property
    def l1_norm(self) -> float:
        if self.kind == "gaussian":
            return abs(self.w0) * self.sigma * math.sqrt(2 * math.pi)
        return float(np.sum(np.abs(self.samples)) * self.spacing)

    def offsets(self, grid: UniformGrid) -> np.ndarray:
        """``w(k dy)`` for ``k = -(N-1) .. N-1``."""
        k = np.arange(-(grid.N - 1), grid.N)
        if self.kind == "gaussian":
            d = k * grid.spacing
            return self.w0 * np.exp(-d * d / (2 * self.sigma**2))
        if not math.isclose(self.spacing, grid.spacing, rel_tol=1e-12):
            raise ShapeError(f"kernel spacing {self.spacing} differs from grid spacing {grid.spacing}")
        half = self.samples.size // 2
        out = np.zeros(k.size)
        inside = np.abs(k) <= half
        out[inside] = self.samples[k[inside] + half]
        return out


def convolve(kernel: InteractionKernel, rho, grid: UniformGrid) -> np.ndarray:
    """``(w * rho)(y_a) = dy sum_b w(y_a - y_b) rho(y_b)`` by direct summation."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (grid.N,):
        raise ShapeError(f"density has shape {rho.shape}, grid has {grid.N} points")
    full = np.convolve(rho, kernel.offsets(grid))
    return grid.spacing * full[grid.N - 1: 2 * grid.N - 1]


def hat_matrix(nodes: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Linear interpolation from values at sorted ``nodes`` to points ``y``.

    Rows for points outside the node range are zero.
    """
    P = np.zeros((y.size, nodes.size))
    j = np.searchsorted(nodes, y, side="right") - 1
    inside = (j >= 0) & (j < nodes.size - 1)
    a = np.flatnonzero(inside)
    jj = j[inside]
    lam = (y[a] - nodes[jj]) / (nodes[jj + 1] - nodes[jj])
    P[a, jj] = 1 - lam
    P[a, jj + 1] = lam
    # a point exactly on the last node
    P[y == nodes[-1], -1] = 1.0
    return P


@dataclass(frozen=True)
class HartreeConfig:
    dt: float
    steps: int
    kernel: InteractionKernel
    M: int = 65
    grid: UniformGrid | None = None

    def __post_init__(self):
        if not self.dt > 0 or self.steps < 0:
            raise ParameterError(f"need dt > 0 and steps >= 0, got {self.dt}, {self.steps}")
        if self.dt * self.steps > 2 * math.pi * (1 + 1e-12):
            raise ParameterError(f"dt * steps = {self.dt * self.steps} exceeds 2 pi")
        rule = build_quadrature(self.M)
        R_needed = max(MIN_HALF_WIDTH, float(rule.nodes[-1]))
        grid = self.grid or UniformGrid.resolving(R_needed, self.M)
        if grid.R < R_needed:
            raise ParameterError(f"grid half-width {grid.R} must cover [-{R_needed:.3f}, {R_needed:.3f}]")
        if grid.spacing > max_spacing(self.M) * (1 + 1e-12):
            raise ParameterError(f"grid spacing {grid.spacing:.4f} does not resolve {self.M} modes "
                                 f"(need <= {max_spacing(self.M):.4f})")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class Discretization:
    rule: QuadratureRule
    Q: np.ndarray  # (M, M) orthogonal, nodes x modes
    energies: np.ndarray  # 2k + 1
    grid: UniformGrid
    P: np.ndarray  # (N, M) hat interpolation
    kernel: InteractionKernel

    @classmethod
    def build(cls, config: HartreeConfig) -> "Discretization":
        rule = build_quadrature(config.M)
        table = eval_hermite_functions(config.M - 1, rule.nodes)
        Q = np.sqrt(rule.deweighted)[:, None] * table.T
        return cls(rule=rule, Q=Q, energies=2.0 * np.arange(config.M) + 1, grid=config.grid,
                   P=hat_matrix(rule.nodes, config.grid.points), kernel=config.kernel)

    def nodal_density(self, v: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return (np.abs(v) ** 2 @ weights) / self.rule.deweighted

    def potential(self, rho_nodes: np.ndarray):
        """Nodal potential and the interaction energy ``1/2 dy rho_u . V_u``."""
        if self.kernel.is_zero:
            return np.zeros_like(rho_nodes), 0.0
        rho_u = self.P @ rho_nodes
        V_u = convolve(self.kernel, rho_u, self.grid)
        V = self.grid.spacing * (self.P.T @ V_u) / self.rule.deweighted
        return V, 0.5 * self.grid.spacing * float(rho_u @ V_u)


@dataclass(frozen=True)
class HartreeState:
    """Nodal amplitudes ``v`` (M x J), fixed weights ``n_j`` and elapsed time."""

    v: np.ndarray
    weights: np.ndarray
    time: float = 0.0

    @classmethod
    def from_system(cls, system: OrthonormalSystem, disc: Discretization) -> "HartreeState":
        if system.index.n != 1:
            raise ParameterError("the Hartree solver is one-dimensional")
        M = disc.Q.shape[0]
        if system.index.K >= M:
            raise ShapeError(f"system degree {system.index.K} needs more than {M} nodes")
        C = np.zeros((M, system.J), dtype=complex)
        C[system.index.indices[:, 0]] = system.U
        return cls(v=disc.Q @ C, weights=system.weights.copy())

    def coefficients(self, disc: Discretization) -> np.ndarray:
        """Hermite coefficients ``c_kj``, ``k < M``."""
        return disc.Q.T @ self.v

    def values(self, disc: Discretization) -> np.ndarray:
        """``u_j(x_i)`` at the nodes."""
        return self.v / np.sqrt(disc.rule.deweighted)[:, None]

    def gram(self) -> np.ndarray:
        return self.v.conj().T @ self.v


def linear_step(v: np.ndarray, disc: Discretization, dt: float) -> np.ndarray:
    c = disc.Q.T @ v
    return disc.Q @ (np.exp(-1j * dt * disc.energies)[:, None] * c)


def strang_step(state: HartreeState, disc: Discretization, dt: float) -> HartreeState:
    """Half potential phase, full linear step, half phase from the new density."""
    V, _ = disc.potential(disc.nodal_density(state.v, state.weights))
    v = np.exp(-0.5j * dt * V)[:, None] * state.v
    v = linear_step(v, disc, dt)
    V, _ = disc.potential(disc.nodal_density(v, state.weights))
    v = np.exp(-0.5j * dt * V)[:, None] * v
    return HartreeState(v=v, weights=state.weights, time=state.time + dt)


def energy(state: HartreeState, disc: Discretization) -> float:
    """``sum_j n_j <u_j, H u_j> + 1/2 int int w(x-y) rho(x) rho(y)``."""
    c = state.coefficients(disc)
    kinetic = float(np.sum(state.weights * (disc.energies @ np.abs(c) ** 2)))
    _, interaction = disc.potential(disc.nodal_density(state.v, state.weights))
    return kinetic + interaction


def band_edge_mass(state: HartreeState, disc: Discretization) -> float:
    """Largest fraction of any ``u_j``'s mass in the top modes of the rule."""
    c = state.coefficients(disc)
    M = c.shape[0]
    top = M - max(1, int(M * BAND_EDGE_FRACTION))
    mass = np.sum(np.abs(c) ** 2, axis=0)
    return float(np.max(np.sum(np.abs(c[top:]) ** 2, axis=0) / mass))


@dataclass(frozen=True)
class StepRecord:
    step: int
    time: float
    trace: float
    mass_drift: float  # max_j | ||u_j||^2 - previous |
    gram_drift: float  # Frobenius distance to the initial Gram matrix
    energy: float
    band_edge: float


@dataclass(frozen=True)
class HartreeRun:
    initial: HartreeState
    final: HartreeState
    records: list
    disc: Discretization = field(repr=False)


def evolve_hartree(system: OrthonormalSystem, config: HartreeConfig, *,
                   check_band: bool = True) -> HartreeRun:
    """Apply ``config.steps`` Strang steps and record diagnostics.

    Raises
    ------
    InstabilityError
        If amplitudes become non-finite; carries the step index.
    BandLimitError
        If more than ``1e-6`` of some ``u_j``'s mass reaches the top modes.
    """
    disc = Discretization.build(config)
    state = HartreeState.from_system(system, disc)
    initial = state
    G0 = state.gram()
    masses = np.real(np.diagonal(G0))
    records = []
    step = 0
    try:
        with np.errstate(over="raise", invalid="raise"):
            records.append(StepRecord(0, 0.0, float(masses @ state.weights), 0.0, 0.0,
                                      energy(state, disc), band_edge_mass(state, disc)))
            for step in range(1, config.steps + 1):
                state = strang_step(state, disc, config.dt)
                if not np.all(np.isfinite(state.v)):
                    raise InstabilityError("amplitudes became non-finite", step)
                G = state.gram()
                new_masses = np.real(np.diagonal(G))
                edge = band_edge_mass(state, disc)
                if check_band and edge > BAND_EDGE_TOL:
                    raise BandLimitError(f"step {step}: {edge:.2e} of the mass reached the top modes; increase M")
                records.append(StepRecord(
                    step=step,
                    time=step * config.dt,
                    trace=float(new_masses @ state.weights),
                    mass_drift=float(np.max(np.abs(new_masses - masses))),
                    gram_drift=float(np.linalg.norm(G - G0)),
                    energy=energy(state, disc),
                    band_edge=edge,
                ))
                masses = new_masses
    except FloatingPointError as exc:
        raise InstabilityError(f"floating-point failure: {exc}", step) from exc
    return HartreeRun(initial=initial, final=state, records=records, disc=disc)


def energy_drift(run: HartreeRun) -> float:
    e0 = run.records[0].energy
    return max(abs(r.energy - e0) for r in run.records)
