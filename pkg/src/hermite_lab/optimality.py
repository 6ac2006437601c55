"""Coherent-state ensembles showing that the Schatten exponent ``2q/(q+1)``
cannot be raised.

For ``beta, L, mu > 0`` the operator

    gamma_0 = (2 pi)^{-n} int e^{-|x|^2/L^2 - |xi|^2/mu} |F_{x,xi}><F_{x,xi}| dx dxi,
    F_{x,xi}(z) = (2 pi beta)^{-n/4} e^{-|z-x|^2/(4 beta)} e^{i xi.z},

has trace ``N = (mu L^2)^{n/2} / 2^n`` while its evolved density stays a
Gaussian.  In the regime ``1/mu << beta << L^2`` the mixed norm grows like
``N^{(1+q)/(2q)}`` and the Berezin-Lieb bound like ``N^{1/r}``.

Time evolution is ``e^{-itH}`` throughout, as in :mod:`hermite_lab.propagator`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ParameterError, RegimeError, ResolutionError
from .hermite_basis import HermiteBasis1D, MultiIndexSet, build_quadrature, eval_hermite_functions

REGIME_RATIO = 10.0
MAX_ORACLE_DEGREE = 128
MAX_PHASE_RULE = 128
TRACE_DEFICIT_LIMIT = 0.05


@dataclass(frozen=True)
class CoherentParams:
    beta: float
    L: float
    mu: float
    n: int = 1

    def __post_init__(self):
        if not (self.beta > 0 and self.L > 0 and self.mu > 0):
            raise ParameterError(f"beta, L, mu must be positive, got {self.beta}, {self.L}, {self.mu}")
        if self.n not in (1, 2):
            raise ParameterError(f"dimension n={self.n} not supported")

    @property
    def regime_ratio(self) -> float:
        """``min(beta mu, L^2 / beta)``: how deep ``1/mu << beta << L^2`` holds."""
        return min(self.beta * self.mu, self.L**2 / self.beta)

    @property
    def in_regime(self) -> bool:
        return self.regime_ratio >= REGIME_RATIO


def coherent_state(x, xi, beta: float, points, *, n: int = 1) -> np.ndarray:
    """Samples of ``F_{x,xi}``.

    For ``n = 1`` all arguments broadcast elementwise.  For ``n = 2`` the
    last axis of ``x``, ``xi`` and ``points`` holds the coordinates.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    z = np.asarray(points, dtype=float)
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if n == 1:
        d2, phase = (z - x) ** 2, xi * z
    else:
        d2 = np.sum((z - x) ** 2, axis=-1)
        phase = np.sum(xi * z, axis=-1)
    return (2 * math.pi * beta) ** (-n / 4) * np.exp(-d2 / (4 * beta) + 1j * phase)


def _spread(beta: float, t: float) -> float:
    c, s = math.cos(2 * t), math.sin(2 * t)
    return 4 * beta**2 * c * c + s * s


def evolved_coherent_magnitude(x, xi, beta: float, t: float, z, *, n: int = 1) -> np.ndarray:
    """``|e^{-itH} F_{x,xi}(z)|``.

    The packet stays Gaussian; its centre follows the classical orbit
    ``x cos 2t + xi sin 2t`` and its width breathes with period ``pi/2``.
    Broadcasting follows :func:`coherent_state`.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    D = _spread(beta, t)
    c, s = math.cos(2 * t), math.sin(2 * t)
    z = np.asarray(z, dtype=float)
    centre = np.asarray(x, dtype=float) * c + np.asarray(xi, dtype=float) * s
    d2 = (z - centre) ** 2 if n == 1 else np.sum((z - centre) ** 2, axis=-1)
    return (2 * beta / (math.pi * D)) ** (n / 4) * np.exp(-beta * d2 / D)


def density_denominator(params: CoherentParams, t: float) -> float:
    """``D(t) = (4 beta^2 + 2 beta L^2) cos^2 2t + (1 + 2 mu beta) sin^2 2t``."""
    b, L, mu = params.beta, params.L, params.mu
    c, s = math.cos(2 * t), math.sin(2 * t)
    return (4 * b * b + 2 * b * L * L) * c * c + (1 + 2 * mu * b) * s * s


def closed_form_density(params: CoherentParams, t: float, z) -> np.ndarray:
    """``rho(t, z) = (beta mu L^2 / (2 pi D))^{n/2} exp(-2 beta |z|^2 / D)``.

    This is the phase-space integral of ``|e^{-itH} F|^2`` against
    ``e^{-|x|^2/L^2 - |xi|^2/mu} dx dxi / (2 pi)^n``.
    """
    b, n = params.beta, params.n
    D = density_denominator(params, t)
    z = np.asarray(z, dtype=float)
    r2 = z * z if n == 1 else np.sum(z * z, axis=-1)
    return (b * params.mu * params.L**2 / (2 * math.pi * D)) ** (n / 2) * np.exp(-2 * b * r2 / D)


def _check_exponents(n: int, p: float, q: float) -> None:
    if not (p >= 1 and q > 1 and math.isfinite(p)):
        raise ParameterError(f"need finite p >= 1 and q > 1, got p={p}, q={q}")
    if abs(n * (q - 1) * p - 2 * q) > 1e-12 * 2 * q:
        raise ParameterError(f"(p, q) = ({p}, {q}) violates n(q-1)p = 2q for n={n}")


def closed_form_mixed_norm(params: CoherentParams, p: float, q: float) -> float:
    """``||rho||_{L^p_t L^q_x}`` over ``t in [-pi, pi]``, exact.

    With ``n(q-1)p = 2q`` the spatial norm to the power ``p`` is
    ``C / D(t)``, and ``int dt / (a cos^2 2t + b sin^2 2t) = 2 pi / sqrt(ab)``.
    """
    n = params.n
    _check_exponents(n, p, q)
    b, L, mu = params.beta, params.L, params.mu
    C = ((b * mu * L * L / (2 * math.pi)) ** (n * p / 2)
         * (math.pi / (2 * b * q)) ** (n * p / (2 * q)))
    a_cos = 4 * b * b + 2 * b * L * L
    a_sin = 1 + 2 * mu * b
    return float((C * 2 * math.pi / math.sqrt(a_cos * a_sin)) ** (1 / p))


def asymptotic_mixed_norm(params: CoherentParams, p: float, q: float) -> float:
    """Leading behaviour of :func:`closed_form_mixed_norm` for
    ``1/mu << beta << L^2``: a constant times ``(mu L^2)^{n(1+1/q)/4}``."""
    n = params.n
    _check_exponents(n, p, q)
    const = ((2 * math.pi) ** (-n * p / 2) * (math.pi / (2 * q)) ** (n * p / (2 * q)) * math.pi) ** (1 / p)
    return float(const * (params.mu * params.L**2) ** (n * (1 + 1 / q) / 4))


def mixed_norm_by_quadrature(params: CoherentParams, p: float, q: float) -> float:
    """Mixed norm of :func:`closed_form_density` by adaptive quadrature in
    ``z`` and ``t`` (one dimension); a check on :func:`closed_form_mixed_norm`."""
    if params.n != 1:
        raise ParameterError("quadrature check is one-dimensional")
    _check_exponents(1, p, q)

    def space(t):
        width = math.sqrt(density_denominator(params, t) / params.beta)
        inner = quad(lambda z: float(closed_form_density(params, t, z)) ** q, -12 * width, 12 * width,
                     epsabs=0, epsrel=1e-13, limit=200)[0]
        return inner ** (p / q)

    return quad(space, -math.pi, math.pi, epsabs=0, epsrel=1e-12, limit=400)[0] ** (1 / p)


def trace_N(params: CoherentParams) -> float:
    """``Tr gamma_0 = (mu L^2)^{n/2} / 2^n``."""
    return (params.mu * params.L**2) ** (params.n / 2) / 2**params.n


def berezin_bound(params: CoherentParams, r: float) -> float:
    """``(r^{-n} N)^{1/r}``, an upper bound for the Schatten-``r`` norm."""
    if not r >= 1:
        raise ParameterError(f"Schatten exponent must be >= 1, got {r}")
    return (r ** (-params.n) * trace_N(params)) ** (1 / r)


@dataclass(frozen=True)
class EnsembleSummary:
    N: float
    mixed_norm: float
    berezin_bound: float
    ratio: float


def ensemble_summary(params: CoherentParams, p: float, q: float, r: float) -> EnsembleSummary:
    """Closed-form quantities; ``ratio`` bounds the Strichartz quotient from below."""
    mn = closed_form_mixed_norm(params, p, q)
    bb = berezin_bound(params, r)
    return EnsembleSummary(N=trace_N(params), mixed_norm=mn, berezin_bound=bb, ratio=mn / bb)


def scaling_schedule(ms, beta: float = 1.0, n: int = 1) -> list[CoherentParams]:
    """``mu = L^2 = 10^m`` with fixed ``beta``: regime ratios ``10^m / beta``."""
    return [CoherentParams(beta=beta, L=10 ** (m / 2), mu=10.0**m, n=n) for m in ms]


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    N: np.ndarray
    ratios: np.ndarray


def scaling_exponent_fit(params_seq, p: float, q: float, r: float) -> ScalingFit:
    """Least-squares fit of ``log ratio`` against ``log N``.

    Raises
    ------
    RegimeError
        If any point lies outside ``1/mu << beta << L^2``.
    ParameterError
        With fewer than 5 points or ``N`` spanning under two decades.
    """
    params_seq = list(params_seq)
    if len(params_seq) < 5:
        raise ParameterError("need at least 5 parameter points")
    off = [P for P in params_seq if not P.in_regime]
    if off:
        raise RegimeError(f"{len(off)} point(s) outside the regime, e.g. {off[0]}")
    summaries = [ensemble_summary(P, p, q, r) for P in params_seq]
    N = np.array([s.N for s in summaries])
    ratios = np.array([s.ratio for s in summaries])
    if math.log10(N.max() / N.min()) < 2:
        raise ParameterError("N must span at least two decades")
    slope, intercept = np.polyfit(np.log(N), np.log(ratios), 1)
    return ScalingFit(float(slope), float(intercept), N, ratios)


@dataclass(frozen=True)
class PhaseSpaceRule:
    """Product Gauss-Hermite rule in ``(x, xi)`` carrying the envelope."""

    x: np.ndarray
    xi: np.ndarray
    weights: np.ndarray  # includes e^{-x^2/L^2 - xi^2/mu} dx dxi / (2 pi)

    @classmethod
    def build(cls, params: CoherentParams, size: int = 96) -> "PhaseSpaceRule":
        if not 1 <= size <= MAX_PHASE_RULE:
            raise ParameterError(f"phase-space rule size must lie in [1, {MAX_PHASE_RULE}]")
        rule = build_quadrature(size)
        s, w = rule.nodes, rule.weights
        # x = L s, xi = sqrt(mu) s turn the envelope into the rule's weight
        scale = params.L * math.sqrt(params.mu) / (2 * math.pi)
        return cls(x=params.L * s, xi=math.sqrt(params.mu) * s, weights=scale * np.outer(w, w))


def gamma0_matrix(params: CoherentParams, index: MultiIndexSet, basis: HermiteBasis1D,
                  rule: PhaseSpaceRule | None = None) -> np.ndarray:
    """``<Phi_j, gamma_0 Phi_k>`` assembled as ``B B^H``.

    Column ``(a, b)`` of ``B`` is ``sqrt(w_ab) <Phi_j, F_{x_a, xi_b}>``, with
    overlaps from the node rule of ``basis``; the product is PSD by
    construction.

    Raises
    ------
    ResolutionError
        If the trace falls short of ``trace_N`` by more than 5%.
    """
    if params.n != 1 or index.n != 1:
        raise ParameterError("the matrix oracle is one-dimensional")
    if index.K > MAX_ORACLE_DEGREE:
        raise ParameterError(f"K={index.K} exceeds {MAX_ORACLE_DEGREE}")
    if index.K > basis.K:
        raise ParameterError("index degree exceeds basis degree")
    rule = PhaseSpaceRule.build(params) if rule is None else rule
    z = basis.nodes
    X, XI = np.meshgrid(rule.x, rule.xi, indexing="ij")
    F = coherent_state(X.ravel()[:, None], XI.ravel()[:, None], params.beta, z[None, :])
    overlaps = (basis.table[index.indices[:, 0]] * basis.deweighted) @ F.T
    B = overlaps * np.sqrt(rule.weights.ravel())
    A = B @ B.conj().T
    deficit = 1 - np.trace(A).real / trace_N(params)
    if deficit > TRACE_DEFICIT_LIMIT:
        raise ResolutionError(
            f"trace deficit {deficit:.1%}: K={index.K} does not resolve the ensemble")
    return A


def density_from_matrix(A: np.ndarray, index: MultiIndexSet, t: float, z) -> np.ndarray:
    """``rho(t, z) = sum_jk (e^{-itH} A e^{itH})_jk Phi_j(z) Phi_k(z)``."""
    E = index.eigenvalues
    At = np.exp(-1j * t * E)[:, None] * A * np.exp(1j * t * E)[None, :]
    tab = eval_hermite_functions(index.K, np.asarray(z, dtype=float))[index.indices[:, 0]]
    return np.einsum("j...,jk,k...->...", tab, At, tab).real
