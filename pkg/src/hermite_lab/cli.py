"""``hermite-lab``: config-driven batch runner for every experiment.

Usage::

    hermite-lab SUBCOMMAND [CONFIG.ini] [--set KEY=VALUE ...] [--output PATH]

Parameters come from the ``[SUBCOMMAND]`` section of the INI file, then from
``--set`` overrides.  Each run writes a result table (CSV or JSON) and a
``.summary.txt`` with pass/fail lines for the checks it performs.

Exit status: 0 success, 2 configuration error, 3 numerical accuracy error,
4 instability.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AccuracyError, ConfigError, HermiteLabError, InstabilityError
from .hermite_basis import HermiteBasis1D, MultiIndexSet, SpectralState, analyze, synthesize, synthesize_on_grid
from .propagator import evolve_kernel, evolve_spectral

SCHEMA_VERSION = 1
WORKERS_ENV = "HERMITE_LAB_WORKERS"
EXIT_OK, EXIT_CONFIG, EXIT_ACCURACY, EXIT_INSTABILITY = 0, 2, 3, 4

# sum_{k>=1} (-1)^k k^{-1/2}, from Euler-accelerated partial sums
ALTERNATING_REFERENCE = -0.6048986434216304


# ---------------------------------------------------------------- parameters

def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_list(conv):
    def parse(s: str):
        items = [x for x in s.replace(";", ",").split(",") if x.strip()]
        if not items:
            raise ValueError("empty list")
        return [conv(x.strip()) for x in items]
    return parse


def _parse_complex(s: str) -> complex:
    return complex(s.replace(" ", ""))


PARSERS = {
    "int": int,
    "float": float,
    "complex": _parse_complex,
    "bool": _parse_bool,
    "str": str,
    "floats": _parse_list(float),
    "ints": _parse_list(int),
    "complexes": _parse_list(_parse_complex),
}


@dataclass(frozen=True)
class Param:
    kind: str
    default: object
    help: str = ""
    choices: tuple | None = None


COMMON = {
    "seed": Param("int", 0, "base seed; every random draw derives from it"),
    "output": Param("str", None, "result path (default SUBCOMMAND.csv or .json)"),
    "format": Param("str", "csv", "csv or json", ("csv", "json")),
    "workers": Param("int", None, f"worker processes (default ${WORKERS_ENV} or 1)"),
}


def parse_params(spec: dict, raw: dict, sub: str) -> dict:
    unknown = sorted(set(raw) - set(spec))
    if unknown:
        raise ConfigError(f"[{sub}] unknown key(s): {', '.join(unknown)}; allowed: {', '.join(sorted(spec))}")
    out = {}
    for key, p in spec.items():
        if key not in raw:
            out[key] = p.default
            continue
        try:
            val = PARSERS[p.kind](raw[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{sub}] {key} = {raw[key]!r}: expected {p.kind} ({exc})") from None
        if p.choices is not None and val not in p.choices:
            raise ConfigError(f"[{sub}] {key} = {val!r}: expected one of {', '.join(p.choices)}")
        out[key] = val
    return out


# ---------------------------------------------------------------- results

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class Result:
    columns: list
    rows: list
    checks: list
    notes: list


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, sub: str, result: Result) -> None:
    lines = [f"# hermite-lab {sub} schema {SCHEMA_VERSION}", ",".join(result.columns)]
    lines += [",".join(_cell(v) for v in row) for row in result.rows]
    path.write_text("\n".join(lines) + "\n")


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def write_json(path: Path, sub: str, result: Result) -> None:
    doc = {
        "schema": f"hermite-lab/{sub}/{SCHEMA_VERSION}",
        "columns": result.columns,
        "rows": [[_json_value(v) for v in row] for row in result.rows],
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in result.checks],
    }
    path.write_text(json.dumps(doc, indent=1) + "\n")


def summary_text(sub: str, result: Result) -> str:
    cmd = COMMANDS[sub]
    out = [f"hermite-lab {__version__}: {sub}", f"Result exercised: {cmd.theorem}", ""]
    out += result.notes
    if result.notes:
        out.append("")
    for c in result.checks:
        out.append(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
    passed = sum(c.passed for c in result.checks)
    out += ["", f"{passed}/{len(result.checks)} checks passed"]
    return "\n".join(out) + "\n"


def _check(name: str, value: float, limit: float, *, at_least: bool = False) -> Check:
    ok = value >= limit if at_least else value <= limit
    rel = ">=" if at_least else "<="
    return Check(name, bool(ok), f"{value:.3e} (require {rel} {limit:g})")


def _check_range(name: str, value: float, lo: float, hi: float) -> Check:
    return Check(name, bool(lo <= value <= hi), f"{value:.4f} (require [{lo:g}, {hi:g}])")


# ---------------------------------------------------------------- transform

def _random_coeffs(rng, size):
    c = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return c / np.linalg.norm(c)


def run_transform(p: dict, pmap) -> Result:
    K, n = p["K"], p["n"]
    basis = HermiteBasis1D.build(K, p["M"])
    idx = MultiIndexSet(n, K)
    weights = basis.grid_weights(n)
    rng = np.random.default_rng(p["seed"])
    rows = []
    for i in range(p["states"]):
        s = SpectralState(idx, _random_coeffs(rng, len(idx)))
        f = synthesize_on_grid(s, basis)
        back = analyze(f, basis, idx)
        coef_err = float(np.max(np.abs(back.coeffs - s.coeffs)))
        norm_err = abs(float(np.abs(f.ravel()) ** 2 @ weights) - s.norm**2)
        rows.append([i, coef_err, norm_err])
    return Result(
        columns=["state", "coef_error", "norm_error"],
        rows=rows,
        checks=[
            _check("coefficient round trip", max(r[1] for r in rows), 1e-10),
            _check("norm identity", max(r[2] for r in rows), 1e-10),
        ],
        notes=[f"n={n}, K={K}, M={basis.M}, {p['states']} unit-norm random states"],
    )


# ---------------------------------------------------------------- propagate

def run_propagate(p: dict, pmap) -> Result:
    K, n = p["K"], p["n"]
    basis = HermiteBasis1D.build(K, p["M"])
    idx = MultiIndexSet(n, K)
    inside = np.abs(basis.nodes) <= p["window"]
    mask = inside if n == 1 else np.logical_and.outer(inside, inside)
    rng = np.random.default_rng(p["seed"])
    s2 = p["second_time"]
    rows = []
    for i in range(p["states"]):
        s = SpectralState(idx, _random_coeffs(rng, len(idx)))
        for t in p["times"]:
            ev = evolve_spectral(s, t)
            via_kernel = evolve_kernel(synthesize_on_grid(s, basis), t, basis, n=n)
            kernel_err = float(np.max(np.abs(via_kernel - synthesize_on_grid(ev, basis))[mask]))
            unitarity = abs(ev.norm - s.norm)
            group = float(np.max(np.abs(evolve_spectral(ev, s2).coeffs - evolve_spectral(s, t + s2).coeffs)))
            rows.append([i, t, kernel_err, unitarity, group])
    return Result(
        columns=["state", "t", "kernel_error", "unitarity_drift", "group_law_error"],
        rows=rows,
        checks=[
            _check("spectral vs Mehler kernel", max(r[2] for r in rows), 1e-6),
            _check("unitarity drift", max(r[3] for r in rows), 1e-12),
            _check("group law", max(r[4] for r in rows), 1e-13),
        ],
        notes=[f"n={n}, K={K}, M={basis.M}, window |x| <= {p['window']}, second time {s2}"],
    )


# ---------------------------------------------------------------- series

def _series_point(args):
    from .series import SeriesQuery, smooth_remainder

    z, t, tol = args
    c = smooth_remainder(SeriesQuery.default(z, t, tol=tol))
    return c.series, c.singular, c.remainder, c.error


def run_series(p: dict, pmap) -> Result:
    from .series import log_grid

    ts = log_grid(p["t_min"], p["t_max"], p["per_decade"])
    zs = p["z"]
    tasks = [(z, float(t), p["tol"]) for z in zs for t in ts]
    tasks += [(z, 1.0, p["tol"]) for z in zs]
    tasks.append((-0.5, math.pi, p["tol"]))
    out = pmap(_series_point, tasks)
    rows = []
    checks = []
    nt = len(ts)
    for iz, z in enumerate(zs):
        block = out[iz * nt:(iz + 1) * nt]
        for t, (S, sing, b, err) in zip(ts, block):
            rows.append([z.real, z.imag, float(t), S.real, S.imag, sing.real, sing.imag,
                         b.real, b.imag, abs(b), err])
        b1 = abs(out[len(zs) * nt + iz][2])
        sup = max(abs(r[2]) for r in block)
        checks.append(_check(f"z={z:g}: sup|b| / |b(1)|", sup / b1, 10.0))
        sel = [(t, abs(r[0])) for t, r in zip(ts, block) if t <= p["slope_t_max"] * (1 + 1e-12)]
        if len(sel) >= 2:
            slope = float(np.polyfit(np.log([s[0] for s in sel]), np.log([s[1] for s in sel]), 1)[0])
            target = -z.real - 1
            checks.append(Check(f"z={z:g}: blow-up slope", abs(slope - target) <= 0.03,
                                f"{slope:.4f} vs {target:.4f} (require within 0.03)"))
    alt = out[-1][0]
    checks.append(Check("alternating value S(-1/2, pi)", abs(alt - ALTERNATING_REFERENCE) <= 1e-3,
                        f"{alt.real:.9f} vs {ALTERNATING_REFERENCE:.9f} (require within 1e-3)"))
    return Result(
        columns=["z_re", "z_im", "t", "series_re", "series_im", "singular_re", "singular_im",
                 "remainder_re", "remainder_im", "remainder_abs", "error_estimate"],
        rows=rows,
        checks=checks,
        notes=[f"t from {p['t_min']:g} to {p['t_max']:g}, {p['per_decade']} points per decade; "
               f"slope fitted on t <= {p['slope_t_max']:g} against log t"],
    )


# ---------------------------------------------------------------- strichartz

def _strichartz_point(args):
    from .strichartz import ratio_sample, schatten_norm_diagonal

    family, J, K, q, seed, r_alt, n = args
    s = ratio_sample(family, J, K, q, seed, n=n)
    ones = np.ones(J)
    alt = s.ratio * schatten_norm_diagonal(ones, s.r) / schatten_norm_diagonal(ones, r_alt)
    return s, alt


def run_strichartz(p: dict, pmap) -> Result:
    from .strichartz import RatioSample, log_ratio_slope

    seeds = [p["seed"] + i for i in range(p["seeds"])] if p["family"] == "random" else [p["seed"]]
    tasks = [(p["family"], J, p["K"], p["q"], s, p["r_alt"], p["n"]) for J in p["J"] for s in seeds]
    out = pmap(_strichartz_point, tasks)
    rows = [[p["family"], s.seed, s.J, s.K, s.p, s.q, s.r, s.ratio, p["r_alt"], alt, s.trace_error]
            for s, alt in out]
    checks = [_check("trace conservation", max(r[-1] for r in rows), 1e-9)]
    if len(set(p["J"])) >= 2:
        crit = log_ratio_slope([s for s, _ in out])
        alt = log_ratio_slope([RatioSample(s.seed, s.J, s.K, s.p, s.q, p["r_alt"], a, 0.0) for s, a in out])
        checks.append(_check_range(f"log-ratio slope at critical r={out[0][0].r:g}", crit, -0.05, 0.05))
        checks.append(_check(f"log-ratio slope at r={p['r_alt']:g}", alt, 0.1, at_least=True))
    return Result(
        columns=["family", "seed", "J", "K", "p", "q", "r", "ratio", "r_alt", "ratio_alt", "trace_error"],
        rows=rows,
        checks=checks,
        notes=[f"{p['family']} systems, equal weights, n={p['n']}, K={p['K']}, q={p['q']:g}, "
               f"{len(seeds)} seed(s) per J"],
    )


# ---------------------------------------------------------------- optimality

CROSS_CHECK_PARAMS = [(0.5, 2.0, 2.0), (1.0, 3.0, 5.0), (0.2, 1.5, 10.0), (2.0, 4.0, 0.8), (0.7, 10.0, 30.0)]


def run_optimality(p: dict, pmap) -> Result:
    from . import optimality as opt
    from .strichartz import MixedNormSpec, schatten_norm_matrix

    q = p["q"]
    spec = MixedNormSpec.from_q(q)
    ms = np.linspace(p["m_min"], p["m_max"], p["points"])
    seq = opt.scaling_schedule(ms, beta=p["beta"])
    rows, checks = [], []
    for r in p["r"]:
        fit = opt.scaling_exponent_fit(seq, spec.p, q, r)
        for m, P in zip(ms, seq):
            s = opt.ensemble_summary(P, spec.p, q, r)
            rows.append([r, float(m), s.N, s.mixed_norm, s.berezin_bound, s.ratio])
        target = (1 + q) / (2 * q) - 1 / r
        checks.append(Check(f"scaling slope r={r:g}", abs(fit.slope - target) <= 0.05,
                            f"{fit.slope:.4f} vs {target:.4f} (require within 0.05)"))
    notes = [f"beta={p['beta']:g}, mu = L^2 = 10^m for m in [{p['m_min']:g}, {p['m_max']:g}], "
             f"q={q:g}, p={spec.p:g}"]

    if p["oracle"]:
        P = opt.CoherentParams(p["oracle_beta"], p["oracle_L"], p["oracle_mu"])
        K = p["oracle_K"]
        idx = MultiIndexSet(1, K)
        A = opt.gamma0_matrix(P, idx, HermiteBasis1D.build(K))
        deficit = 1 - np.trace(A).real / opt.trace_N(P)
        checks.append(_check("matrix trace deficit", deficit, 0.01))
        for r in (1.0, 1.5, 2.0, 4.0):
            bound = opt.berezin_bound(P, r)
            actual = schatten_norm_matrix(A, r)
            checks.append(Check(f"Berezin-Lieb r={r:g}", actual <= bound * (1 + 1e-9),
                                f"norm {actual:.6f} <= bound {bound:.6f}, slack {bound - actual:.3e}"))
        z = np.linspace(-3, 3, 13)
        t = p["oracle_t"]
        rel = np.max(np.abs(opt.density_from_matrix(A, idx, t, z) / opt.closed_form_density(P, t, z) - 1))
        checks.append(_check("closed-form vs matrix density (relative)", float(rel), 1e-6))

    if p["cross_checks"]:
        K = 96
        basis = HermiteBasis1D.build(K)
        idx = MultiIndexSet(1, K)
        x, xi, beta = 1.0, 0.5, 0.2
        s = analyze(opt.coherent_state(x, xi, beta, basis.nodes), basis, idx)
        z = np.linspace(-3, 3, 13)
        worst = 0.0
        for t in (0.4, 1.1, 2.3):
            num = np.abs(synthesize(evolve_spectral(s, t), z))
            worst = max(worst, float(np.max(np.abs(num - opt.evolved_coherent_magnitude(x, xi, beta, t, z)))))
        checks.append(_check("evolved coherent magnitude vs spectral", worst, 1e-6))
        rel = max(abs(opt.closed_form_mixed_norm(opt.CoherentParams(*c), 3, 3)
                      / opt.mixed_norm_by_quadrature(opt.CoherentParams(*c), 3, 3) - 1)
                  for c in CROSS_CHECK_PARAMS)
        checks.append(_check("closed-form vs quadrature mixed norm (relative, 5 sets)", rel, 1e-6))

    return Result(columns=["r", "m", "N", "mixed_norm", "berezin_bound", "ratio"],
                  rows=rows, checks=checks, notes=notes)


# ---------------------------------------------------------------- hartree

def run_hartree(p: dict, pmap) -> Result:
    from . import hartree as hr
    from .strichartz import make_system

    K, M = p["K"], p["M"]
    system = make_system(p["family"], p["J"], MultiIndexSet(1, K), p["seed"])
    kernel = hr.InteractionKernel.gaussian(p["w0"], p["sigma"])
    run = hr.evolve_hartree(system, hr.HartreeConfig(p["dt"], p["steps"], kernel, M=M))
    rows = [[r.step, r.time, r.trace, r.mass_drift, r.gram_drift, r.energy, r.band_edge] for r in run.records]
    trace0 = float(system.weights.sum())
    checks = [
        _check("per-step mass drift", max(r.mass_drift for r in run.records), 1e-12),
        _check(f"Gram drift over {p['steps']} steps", max(r.gram_drift for r in run.records), 1e-10),
        _check("trace conservation", max(abs(r.trace - trace0) for r in run.records), 1e-10),
    ]
    if p["checks"]:
        zero = hr.InteractionKernel.gaussian(0.0)
        one = hr.evolve_hartree(system, hr.HartreeConfig(p["dt"], 1, zero, M=M))
        C = one.final.coefficients(one.disc)
        err = 0.0
        for j in range(system.J):
            ref = np.zeros(M, dtype=complex)
            ref[:K + 1] = evolve_spectral(system.member(j), p["dt"]).coeffs
            err = max(err, float(np.max(np.abs(C[:, j] - ref))))
        checks.append(_check("w=0 step vs linear flow", err, 1e-10))
        back = hr.evolve_hartree(system, hr.HartreeConfig(math.pi / 500, 500, zero, M=M))
        d = back.disc
        ret = np.max(np.abs(d.nodal_density(back.final.v, system.weights)
                            - d.nodal_density(back.initial.v, system.weights)))
        checks.append(_check("density return after t=pi at w=0", float(ret), 1e-8))
        dts = p["order_dts"]
        drifts = [hr.energy_drift(hr.evolve_hartree(
            system, hr.HartreeConfig(dt, int(round(p["order_time"] / dt)), kernel, M=M))) for dt in dts]
        slope = float(np.polyfit(np.log(dts), np.log(drifts), 1)[0])
        checks.append(_check_range("energy-drift order", slope, 1.8, 2.2))
    return Result(
        columns=["step", "time", "trace", "mass_drift", "gram_drift", "energy", "band_edge"],
        rows=rows,
        checks=checks,
        notes=[f"{p['family']} system J={p['J']}, K={K}, M={M}, dt={p['dt']:g}, steps={p['steps']}, "
               f"w0={p['w0']:g}, sigma={p['sigma']:g}"],
    )


# ---------------------------------------------------------------- registry

@dataclass(frozen=True)
class Command:
    params: dict
    runner: object
    theorem: str
    help: str


COMMANDS = {
    "transform": Command(
        {"K": Param("int", 64), "M": Param("int", None), "n": Param("int", 1), "states": Param("int", 100)},
        run_transform,
        "Plancherel identity for the Fourier-Hermite transform",
        "analysis/synthesis round trip on random band-limited states"),
    "propagate": Command(
        {"K": Param("int", 16), "M": Param("int", 129), "n": Param("int", 1), "states": Param("int", 20),
         "times": Param("floats", [0.3, 0.7, 1.2]), "window": Param("float", 6.0),
         "second_time": Param("float", 0.45)},
        run_propagate,
        "Mehler's formula for the kernel of e^{-itH}",
        "spectral vs Mehler-kernel evolution, unitarity and group law"),
    "series": Command(
        {"z": Param("complexes", [-0.25 + 0j, -0.5 + 0j, -0.75 + 0j]), "t_min": Param("float", 1e-3),
         "t_max": Param("float", 1.0), "per_decade": Param("int", 10), "slope_t_max": Param("float", 0.1),
         "tol": Param("float", 1e-6)},
        run_series,
        "singularity of sum_k k^z e^{-itk} at t = 0 (same singularity as Gamma(z+1)(it)^{-z-1})",
        "fractional series, singular part and remainder over a log t-grid"),
    "strichartz": Command(
        {"K": Param("int", 64), "q": Param("float", 3.0), "n": Param("int", 1),
         "J": Param("ints", [1, 2, 4, 8, 16, 32]), "seeds": Param("int", 100),
         "family": Param("str", "random", "random or spectral", ("random", "spectral")),
         "r_alt": Param("float", 2.0)},
        run_strichartz,
        "Strichartz inequality for orthonormal systems of the Hermite operator",
        "ratio sweep over system size and seeds"),
    "optimality": Command(
        {"q": Param("float", 3.0), "r": Param("floats", [2.0, 3.0, 1.5]), "beta": Param("float", 1.0),
         "m_min": Param("float", 1.0), "m_max": Param("float", 6.0), "points": Param("int", 6),
         "oracle": Param("bool", True), "oracle_K": Param("int", 96), "oracle_L": Param("float", 3.0),
         "oracle_mu": Param("float", 3.0), "oracle_beta": Param("float", 0.5), "oracle_t": Param("float", 0.4),
         "cross_checks": Param("bool", True)},
        run_optimality,
        "optimality of the Schatten exponent 2q/(q+1)",
        "coherent-state scaling fit, matrix oracle and closed-form cross-checks"),
    "hartree": Command(
        {"K": Param("int", 16), "J": Param("int", 4), "M": Param("int", 65), "dt": Param("float", 5e-3),
         "steps": Param("int", 1000), "w0": Param("float", 0.5), "sigma": Param("float", 1.0),
         "family": Param("str", "random", "random or spectral", ("random", "spectral")),
         "checks": Param("bool", True), "order_dts": Param("floats", [1e-2, 5e-3, 2.5e-3]),
         "order_time": Param("float", 1.0)},
        run_hartree,
        "global well-posedness of the Hermite-Hartree equation",
        "Strang-splitting trajectory with conservation diagnostics"),
}


# ---------------------------------------------------------------- driver

def _serial_map(fn, items):
    return [fn(x) for x in items]


def _pool_map(workers: int):
    def pmap(fn, items):
        items = list(items)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return pmap


def resolve_workers(value) -> int:
    if value is None:
        env = os.environ.get(WORKERS_ENV)
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV}={env!r} is not an integer") from None
    if value < 1:
        raise ConfigError(f"workers must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hermite-lab",
        description="Batch experiments for Strichartz estimates of the Hermite operator.",
        epilog="Exit status: 0 ok, 2 configuration error, 3 accuracy error, 4 instability.")
    ap.add_argument("--version", action="version", version=f"hermite-lab {__version__}")
    sp = ap.add_subparsers(dest="command", metavar="SUBCOMMAND")
    for name, cmd in COMMANDS.items():
        keys = ", ".join(sorted(set(cmd.params) | set(COMMON)))
        p = sp.add_parser(name, help=cmd.help, description=f"{cmd.help}. Keys: {keys}.")
        p.add_argument("config", nargs="?", help=f"INI file; keys are read from its [{name}] section")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a key")
        p.add_argument("--output", "-o", help="result path")
    return ap


def load_raw(args, sub: str) -> dict:
    raw: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not cp.sections():
            raise ConfigError(f"{path} is empty")
        unknown = sorted(set(cp.sections()) - set(COMMANDS))
        if unknown:
            raise ConfigError(f"{path}: unknown section(s) {', '.join(unknown)}")
        if cp.has_section(sub):
            raw.update(cp[sub])
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        raw[key.strip()] = value.strip()
    if args.output:
        raw["output"] = args.output
    return raw


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        print("hermite-lab: a SUBCOMMAND is required", file=sys.stderr)
        return EXIT_CONFIG
    sub = args.command
    cmd = COMMANDS[sub]
    try:
        params = parse_params({**COMMON, **cmd.params}, load_raw(args, sub), sub)
        workers = resolve_workers(params["workers"])
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"hermite-lab {sub}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    fmt = params["format"]
    out = Path(params["output"] or f"{sub}.{fmt}")
    pmap = _serial_map if workers == 1 else _pool_map(workers)
    try:
        result = cmd.runner(params, pmap)
    except InstabilityError as exc:
        print(f"hermite-lab {sub}: instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except AccuracyError as exc:
        print(f"hermite-lab {sub}: accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except (HermiteLabError, ValueError) as exc:
        print(f"hermite-lab {sub}: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out.parent.mkdir(parents=True, exist_ok=True)
    (write_json if fmt == "json" else write_csv)(out, sub, result)
    text = summary_text(sub, result)
    out.with_suffix(".summary.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
