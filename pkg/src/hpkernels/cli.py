"""Batch command-line front end.

Four commands: `check` runs a module's invariant suite and reports each
check as value/bound/pass; `table` tabulates kernels, weights, V-functions
or circle polynomials to CSV; `sample` runs a sampler into a replayable
archive; `experiment` drives the decomposition and tail studies into JSON
reports.  Every run is deterministic given its RunSpec, every artifact
carries the RunSpec as provenance, and exit codes are machine-checkable:
0 pass, 1 failed checks or runtime failure, 2 invalid parameters.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    DegreeError,
    DiscretizationWarning,
    DomainError,
    EigenFailure,
    GridTooCoarse,
    IllConditioned,
    MomentDivergence,
    NearSingular,
    NonConvergence,
    PoleError,
    QuadFailure,
    SingularCayley,
)
from .specfun import bessel_j, gamma_fn, jsq_over_t_integral
from .weights_opuc import (
    CircleWeight,
    HPParam,
    build_opuc,
    cd_identity_residual,
    eval_line_weight,
    top_sq_norm,
    trig_moment,
)
from .kernels import (
    LimitKernel,
    VFunction,
    build_finite_kernel,
    build_rescaled_circle_kernel,
    check_finite_recurrence,
    check_limit_recurrence,
    check_projection,
    eval_V,
    eval_limit_kernel,
    eval_phi_n,
    finite_kernel_matrix,
)
from .sampling import SamplerConfig, mcmc_draws, sample_projection_dpp_batch
from .ergodics import rho1_second_moment, tail_mass, variance_bound_check
from .ergodics import gamma1_balance_experiment
from .infmeasures import (
    VBasis,
    contraction_norm,
    damped_projection,
    eval_v_basis,
    growth_certificate,
    make_damped_grid,
    tail_growth_slope,
)

__all__ = ["RunSpec", "main"]

_RUNTIME_ERRORS = (
    PoleError,
    DomainError,
    NonConvergence,
    IllConditioned,
    MomentDivergence,
    DegreeError,
    GridTooCoarse,
    EigenFailure,
    NearSingular,
    SingularCayley,
    QuadFailure,
    np.linalg.LinAlgError,
)


class SpecError(ValueError):
    """Invalid RunSpec: bad flag value, unknown config key, precondition."""


@dataclass(frozen=True)
class RunSpec:
    """Resolved parameters of one command invocation.

    Built by merging flags over config-file entries over defaults; output
    plumbing (out/config/replay paths, jobs) is excluded from provenance so
    identical computations stamp identical artifacts.
    """

    command: str
    params: dict

    def provenance(self) -> str:
        skip = {"out", "config", "replay", "jobs"}
        parts = []
        for k in sorted(self.params):
            v = self.params[k]
            if k in skip or v is None:
                continue
            parts.append(f"{k}={v!r}" if isinstance(v, str) else f"{k}={v}")
        return self.command + " " + " ".join(parts)


def _fmt17(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


# ---------------------------------------------------------------------------
# RunSpec assembly

# per-command parameter tables: name -> (caster, default)
_COMMON = {
    "out": (str, None),
    "config": (str, None),
    "jobs": (int, 1),
}

_PARAMS = {
    "check": {
        **_COMMON,
        "suite": (str, None),
        "s": (float, 0.0),
        "N": (int, 8),
    },
    "table": {
        **_COMMON,
        "kind": (str, None),
        "s": (float, 0.0),
        "N": (int, 8),
        "n": (int, 4),
        "grid": (str, "0.2:3:20"),
    },
    "sample": {
        **_COMMON,
        "s": (float, 0.0),
        "N": (int, 4),
        "method": (str, "spectral"),
        "draws": (int, 100),
        "seed": (int, 0),
        "burn_in": (int, 2000),
        "thinning": (int, 10),
        "chains": (int, 32),
        "step_scale": (float, 0.5),
        "replay": (str, None),
    },
    "experiment": {
        **_COMMON,
        "name": (str, None),
        "s": (float, 0.0),
        "eps": (float, 0.2),
        "sigma": (float, 1.0),
        "sprime": (float, 0.5),
        "M": (int, 64),
        "draws": (int, 60),
        "seed": (int, 0),
    },
}


def _read_config(path: str) -> dict:
    kv = {}
    try:
        with io.open(path, "r", encoding="utf-8") as f:
            for ln, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise SpecError(f"{path}:{ln}: expected key=value")
                k, v = line.split("=", 1)
                kv[k.strip()] = v.strip()
    except OSError as e:
        raise SpecError(f"cannot read config {path}: {e}") from e
    return kv


def _merge_runspec(args: argparse.Namespace) -> RunSpec:
    command = args.command
    table = _PARAMS[command]
    params = {}
    file_kv = {}
    if getattr(args, "config", None):
        file_kv = _read_config(args.config)
        unknown = set(file_kv) - set(table)
        if unknown:
            raise SpecError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for name, (cast, default) in table.items():
        flag = getattr(args, name, None)
        if flag is not None:
            params[name] = flag
        elif name in file_kv:
            try:
                params[name] = cast(file_kv[name])
            except ValueError as e:
                raise SpecError(f"config key {name}: {e}") from e
        else:
            params[name] = default
    return RunSpec(command, params)


def _parse_grid(spec: str) -> np.ndarray:
    try:
        a_s, b_s, n_s = spec.split(":")
        a, b, count = float(a_s), float(b_s), int(n_s)
    except ValueError as e:
        raise SpecError(f"grid must be 'a:b:count', got {spec!r}") from e
    if count < 2 or not a < b:
        raise SpecError("grid needs a < b and count >= 2")
    pts = np.linspace(a, b, count)
    if np.any(pts == 0.0):
        raise SpecError("grid must exclude 0")
    return pts


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SpecError(msg)


def _validate(spec: RunSpec) -> None:
    p = spec.params
    _require(p["jobs"] >= 1, "jobs >= 1 required")
    if spec.command == "check":
        if p["suite"] in ("kernels", "opuc"):
            _require(p["s"] > -0.5, f"suite {p['suite']} requires s > -1/2")
            _require(p["N"] >= 2, "N >= 2 required")
    elif spec.command == "table":
        _require(p["s"] > -0.5, "table requires s > -1/2")
        _require(p["N"] >= 1, "N >= 1 required")
        _require(p["n"] >= 1, "n >= 1 required")
        _parse_grid(p["grid"])
    elif spec.command == "sample":
        if p["replay"] is None:
            _require(p["s"] > -0.5, "sampling requires s > -1/2")
            _require(p["N"] >= 1, "N >= 1 required")
            _require(p["method"] in ("spectral", "spectral_dpp", "mcmc"),
                     f"unknown method {p['method']!r}")
        _require(p["draws"] >= 1, "draws >= 1 required")
        _require(p["seed"] >= 0, "seed >= 0 required")
        _require(p["burn_in"] >= 1, "burn_in >= 1 required")
        _require(p["thinning"] >= 1, "thinning >= 1 required")
        _require(p["chains"] >= 1, "chains >= 1 required")
        _require(p["step_scale"] > 0, "step_scale > 0 required")
    elif spec.command == "experiment":
        name = p["name"]
        if name in ("gamma2", "tails", "variance"):
            _require(p["s"] > -0.5, f"experiment {name} requires s > -1/2")
        if name in ("gamma2", "variance"):
            _require(p["eps"] > 0, "eps > 0 required")
        if name == "contraction":
            _require(p["sprime"] > -0.5, "sprime > -1/2 required")
            _require(p["sigma"] > 0, "sigma > 0 required")
        if name == "gamma1":
            _require(p["M"] >= 8, "M >= 8 required")
            _require(p["draws"] >= 1, "draws >= 1 required")
            _require(p["seed"] >= 0, "seed >= 0 required")


def _out_path(spec: RunSpec, default_name: str) -> str:
    out = spec.params.get("out") or default_name
    if not os.path.isabs(out):
        out = os.path.join(os.environ.get("HPK_DATA_DIR", "."), out)
    d = os.path.dirname(out)
    if d:
        os.makedirs(d, exist_ok=True)
    return out


def _write_csv(path: str, spec: RunSpec, header: list[str], rows) -> int:
    n = 0
    with io.open(path, "w", encoding="ascii") as f:
        f.write(f"# runspec: {spec.provenance()}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt17(v) for v in row) + "\n")
            n += 1
    return n


# ---------------------------------------------------------------------------
# check

def _chk(name: str, value: float, bound: float, ok: bool | None = None) -> dict:
    if ok is None:
        ok = value <= bound
    return {"name": name, "value": float(value), "bound": float(bound),
            "pass": bool(ok)}


def _suite_specfun(p: dict) -> list[dict]:
    checks = []
    for s in (0.0, 0.5, 1.3):
        got = jsq_over_t_integral(s + 0.5)
        want = gamma_fn(s + 0.5) / (2.0 * gamma_fn(s + 1.5))
        checks.append(_chk(f"watson_s{s}", abs(got - want), 1e-8))
    for z in (0.3, 1.1, 2.5, 4.2):
        lhs = gamma_fn(z) * gamma_fn(z + 0.5)
        rhs = 2.0 ** (1.0 - 2.0 * z) * math.sqrt(math.pi) * gamma_fn(2.0 * z)
        checks.append(_chk(f"duplication_z{z}", abs(lhs - rhs) / abs(rhs), 1e-11))
    x = np.linspace(0.1, 50.0, 400)
    r_half = np.max(np.abs(bessel_j(0.5, x) - np.sqrt(2.0 / (np.pi * x)) * np.sin(x)))
    r_mhalf = np.max(np.abs(bessel_j(-0.5, x) - np.sqrt(2.0 / (np.pi * x)) * np.cos(x)))
    checks.append(_chk("half_order_sin", float(r_half), 1e-12))
    checks.append(_chk("half_order_cos", float(r_mhalf), 1e-12))
    return checks


def _suite_opuc(p: dict) -> list[dict]:
    param = HPParam(p["s"])
    N = p["N"]
    basis = build_opuc(CircleWeight(param, "lambda"), N + 1)
    checks = [
        _chk("moment0_normalized", abs(trig_moment(param, 0) - 1.0), 1e-12),
    ]
    for th, ta in ((0.3, 0.9), (1.2, -0.7), (2.0, 0.4)):
        checks.append(_chk(f"cd_identity_t{th}", cd_identity_residual(basis, N, th, ta), 1e-10))
    top = top_sq_norm(p["s"], N)
    checks.append(_chk("top_norm_positive", top, 0.0, ok=top > 0.0))
    return checks


def _suite_kernels(p: dict) -> list[dict]:
    s, N = p["s"], p["N"]
    checks = []
    rec = max(check_limit_recurrence(s, x, y)
              for x in (0.2, 1.0, 2.4) for y in (0.5, 1.7, 3.0))
    checks.append(_chk("limit_recurrence_grid", rec, 1e-10))
    for x, y in ((0.7, 1.3), (-1.1, 0.4)):
        checks.append(_chk(f"finite_recurrence_{x}_{y}",
                           check_finite_recurrence(s, N, x, y), 1e-8))
    k = LimitKernel(HPParam(s))
    for x, y in ((0.7, 1.3), (-0.9, 0.5), (1.8, 2.6)):
        res, bnd = check_projection(k, x, y, 100.0)
        checks.append(_chk(f"projection_{x}_{y}", res, bnd + 1e-12))
    if s == 0.0:
        dg = max(abs(eval_limit_kernel(k, float(x), float(x)) - 1.0 / (math.pi * x * x))
                 for x in (0.3, 0.8, 1.5, 2.2, 3.0))
        checks.append(_chk("diag_inverse_square", dg, 1e-10))
    return checks


def _suite_infinite(p: dict) -> list[dict]:
    grid = make_damped_grid()
    checks = []
    val = contraction_norm(0.5, 1.0, grid)
    checks.append(_chk("contraction_sp0.5_sig1", val, 1.0, ok=val < 1.0))
    dp = damped_projection(HPParam(-1.0), 1.0, grid, 8)
    checks.append(_chk("damped_idempotency", dp.idempotency_residual(), 1e-8))
    checks.append(_chk("damped_trace_rank", abs(dp.trace() - dp.rank), 0.05))
    vb = VBasis(HPParam(-1.0))
    exponent, _ = growth_certificate(vb, 1)
    slope = tail_growth_slope(vb, 1)
    checks.append(_chk("growth_slope_s-1", abs(slope - (2 * exponent + 1)), 0.1))
    x0 = 2.0 / math.pi
    checks.append(_chk("v1_oracle", abs(eval_v_basis(vb, 1, x0) - x0), 1e-12))
    return checks


_SUITES = {
    "specfun": _suite_specfun,
    "opuc": _suite_opuc,
    "kernels": _suite_kernels,
    "infinite": _suite_infinite,
}


def cmd_check(spec: RunSpec):
    checks = _SUITES[spec.params["suite"]](spec.params)
    passed = all(c["pass"] for c in checks)
    report = {"command": "check", "suite": spec.params["suite"],
              "runspec": spec.provenance(), "checks": checks, "passed": passed}
    return report, passed


# ---------------------------------------------------------------------------
# table

def cmd_table(spec: RunSpec):
    p = spec.params
    kind = p["kind"]
    grid = _parse_grid(p["grid"])
    param = HPParam(p["s"])
    if kind == "kernel":
        k = build_finite_kernel(param, p["N"])
        K = finite_kernel_matrix(k, grid, grid)
        rows = ((float(x), float(y), float(K[i, j]))
                for i, x in enumerate(grid) for j, y in enumerate(grid))
        header = ["x", "y", "value"]
    elif kind == "weight":
        w = eval_line_weight(param, p["N"], grid)
        rows = ((float(x), float(v)) for x, v in zip(grid, w))
        header = ["x", "weight"]
    elif kind == "vfunction":
        v = VFunction(param, "limit")
        vals = eval_V(v, grid)
        rows = ((float(x), float(val)) for x, val in zip(grid, vals))
        header = ["x", "V"]
    else:  # phi_n
        k = build_rescaled_circle_kernel(param, p["n"])
        rows = ((float(a), float(b), float(np.real(ph)), float(np.imag(ph)))
                for a in grid for b in grid
                for ph in (eval_phi_n(k, float(a), float(b)),))
        header = ["alpha", "beta", "re", "im"]
    path = _out_path(spec, f"table_{kind}.csv")
    n = _write_csv(path, spec, header, rows)
    report = {"command": "table", "kind": kind, "runspec": spec.provenance(),
              "path": path, "rows": n}
    return report, True


# ---------------------------------------------------------------------------
# sample

def _canonical_method(m: str) -> str:
    return "spectral_dpp" if m in ("spectral", "spectral_dpp") else "mcmc"


def cmd_sample(spec: RunSpec):
    p = dict(spec.params)
    if p["replay"]:
        try:
            with io.open(p["replay"], "r", encoding="ascii") as f:
                side = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise SpecError(f"cannot read sidecar {p['replay']}: {e}") from e
        for key in ("s", "N", "draws", "runspec"):
            if key not in side:
                raise SpecError(f"sidecar lacks {key}; not a sample archive sidecar")
        p.update({k: side[k] for k in ("s", "N", "draws")})
        cfg = SamplerConfig(**{k: v for k, v in side.items()
                               if k in SamplerConfig.__dataclass_fields__})
        prov = side["runspec"]
    else:
        cfg = SamplerConfig(
            seed=p["seed"], method=_canonical_method(p["method"]),
            burn_in=p["burn_in"], thinning=p["thinning"], n_chains=p["chains"],
            step_scale=p["step_scale"],
        )
        clean = RunSpec("sample", {**p, "method": cfg.method, "replay": None})
        prov = clean.provenance()
    param = HPParam(float(p["s"]))
    N, draws = int(p["N"]), int(p["draws"])
    stats: dict = {}
    if cfg.method == "spectral_dpp":
        arr = sample_projection_dpp_batch(build_finite_kernel(param, N), cfg, draws)
    else:
        arr = mcmc_draws(param, N, cfg, draws, stats)
    path = _out_path(spec, "samples.csv")
    with io.open(path, "w", encoding="ascii") as f:
        f.write(f"# runspec: {prov}\n")
        for row in arr:
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")
    sidecar = {**asdict(cfg), "s": float(p["s"]), "N": N, "draws": draws,
               "runspec": prov}
    with io.open(path + ".json", "w", encoding="ascii") as f:
        json.dump(sidecar, f, indent=1, sort_keys=True)
        f.write("\n")
    report = {"command": "sample", "runspec": prov, "path": path,
              "rows": draws, "method": cfg.method,
              "replay": bool(spec.params["replay"])}
    if stats:
        report["acceptance_rate"] = stats["acceptance_rate"]
        report["step_scale"] = stats["step_scale"]
    return report, True


# ---------------------------------------------------------------------------
# experiment

def _pmap(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _second_moment_cell(args):
    s, N, eps = args
    return rho1_second_moment(HPParam(s), N, eps)


def _tail_cell(args):
    s, N, R = args
    return tail_mass(HPParam(s), N, R)


def _variance_cell(args):
    s, N, eps = args
    return variance_bound_check(HPParam(s), N, eps)


def _experiment_gamma2(p: dict):
    s, jobs = p["s"], p["jobs"]
    fit_eps = (0.025, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0)
    fit_vals = _pmap(_second_moment_cell, [(s, 10, e) for e in fit_eps], jobs)
    C = max(v / e for v, e in zip(fit_vals, fit_eps))
    cells_in = [(s, N, e) for N in (20, 50) for e in (0.025, 0.05, 0.1)]
    vals = _pmap(_second_moment_cell, cells_in, jobs)
    cells = []
    for (s_, N, e), v in zip(cells_in, vals):
        cells.append({"N": N, "eps": e, "value": v, "ratio": v / e,
                      "bound": 3.0 * C, "pass": v / e <= 3.0 * C})
    passed = all(c["pass"] for c in cells)
    return {"name": "gamma2", "s": s, "C_fit_N10": C,
            "slack": 3.0 * C - max(c["ratio"] for c in cells),
            "cells": cells, "passed": passed}, passed


def _experiment_tails(p: dict):
    s, jobs = p["s"], p["jobs"]
    power = min(1.0, 1.0 + 2.0 * s)
    Rs = (5.0, 10.0, 20.0)
    fit_vals = _pmap(_tail_cell, [(s, 10, R) for R in Rs], jobs)
    C = max(v * R**power for v, R in zip(fit_vals, Rs))
    cells_in = [(s, N, R) for N in (20, 50) for R in Rs]
    vals = _pmap(_tail_cell, cells_in, jobs)
    cells = []
    for (s_, N, R), v in zip(cells_in, vals):
        scaled = v * R**power
        cells.append({"N": N, "R": R, "tail_mass": v, "scaled": scaled,
                      "bound": 3.0 * C, "pass": scaled <= 3.0 * C})
    passed = all(c["pass"] for c in cells)
    return {"name": "tails", "s": s, "power": power, "C_fit_N10": C,
            "cells": cells, "passed": passed}, passed


def _experiment_variance(p: dict):
    s, jobs = p["s"], p["jobs"]
    cells_in = [(s, N, e) for N in (6, 12) for e in (p["eps"], 2.0 * p["eps"])]
    vals = _pmap(_variance_cell, cells_in, jobs)
    cells = []
    for (s_, N, e), (T, bound) in zip(cells_in, vals):
        ok = -1e-12 <= T <= bound + 1e-12
        cells.append({"N": N, "eps": e, "T": T, "bound": bound, "pass": ok})
    passed = all(c["pass"] for c in cells)
    return {"name": "variance", "s": s, "cells": cells, "passed": passed}, passed


def _experiment_gamma1(p: dict):
    M = p["M"]
    N_list = [max(2, M // 4), max(2, M // 2), M]
    rep = gamma1_balance_experiment(M, N_list, (2, 3, 4), p["draws"], seed=p["seed"])
    by_key = {(c["N"], c["n"]): c["median_gap"] for c in rep["cells"]}
    diag = [by_key[k] for k in zip(N_list, (2, 3, 4))]
    trend = all(a > b for a, b in zip(diag, diag[1:]))
    # reported, never asserted: the trend is a desk-scale shadow
    return {"name": "gamma1", "M": M, "report": rep,
            "diagonal_medians": diag, "diagonal_decreasing": trend,
            "passed": True}, True


def _experiment_contraction(p: dict):
    grid = make_damped_grid()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        val = contraction_norm(p["sprime"], p["sigma"], grid)
    near_one = any(issubclass(w.category, DiscretizationWarning) for w in caught)
    k = build_finite_kernel(HPParam(p["sprime"]), 64)
    damp = -np.expm1(-p["sigma"] * grid.nodes**2)
    trace = float(np.sum(grid.weights * damp * k.rho1(grid.nodes)))
    ok = val < 1.0
    return {"name": "contraction", "sprime": p["sprime"], "sigma": p["sigma"],
            "norm": val, "trace_bound": trace, "near_one_warning": near_one,
            "passed": ok}, ok


_EXPERIMENTS = {
    "gamma2": _experiment_gamma2,
    "gamma1": _experiment_gamma1,
    "tails": _experiment_tails,
    "variance": _experiment_variance,
    "contraction": _experiment_contraction,
}


def cmd_experiment(spec: RunSpec):
    body, passed = _EXPERIMENTS[spec.params["name"]](spec.params)
    report = {"command": "experiment", "runspec": spec.provenance(), **body}
    return report, passed


# ---------------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hpk", description="ensemble kernels, samplers and experiments"
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *names: str) -> None:
        opts = {
            "s": dict(type=float, dest="s"),
            "N": dict(type=int, dest="N"),
            "n": dict(type=int, dest="n"),
            "eps": dict(type=float, dest="eps"),
            "R": dict(type=float, dest="R"),
            "sigma": dict(type=float, dest="sigma"),
            "sprime": dict(type=float, dest="sprime"),
            "seed": dict(type=int, dest="seed"),
            "grid": dict(type=str, dest="grid"),
            "M": dict(type=int, dest="M"),
            "method": dict(type=str, dest="method"),
            "draws": dict(type=int, dest="draws"),
            "burn-in": dict(type=int, dest="burn_in"),
            "thinning": dict(type=int, dest="thinning"),
            "chains": dict(type=int, dest="chains"),
            "step-scale": dict(type=float, dest="step_scale"),
            "replay": dict(type=str, dest="replay"),
        }
        for name in names:
            p.add_argument(f"--{name}", **opts[name])
        p.add_argument("--jobs", type=int, dest="jobs")
        p.add_argument("--out", type=str, dest="out")
        p.add_argument("--config", type=str, dest="config")

    pc = sub.add_parser("check", help="run a module invariant suite")
    pc.add_argument("suite", choices=sorted(_SUITES))
    common(pc, "s", "N")

    pt = sub.add_parser("table", help="tabulate a function to CSV")
    pt.add_argument("kind", choices=["kernel", "weight", "vfunction", "phi_n"])
    common(pt, "s", "N", "n", "grid")

    ps = sub.add_parser("sample", help="run a sampler into an archive")
    common(ps, "s", "N", "method", "draws", "seed", "burn-in", "thinning",
           "chains", "step-scale", "replay")

    pe = sub.add_parser("experiment", help="run a study into a JSON report")
    pe.add_argument("name", choices=sorted(_EXPERIMENTS))
    common(pe, "s", "eps", "sigma", "sprime", "M", "draws", "seed")

    return ap


_COMMANDS = {
    "check": cmd_check,
    "table": cmd_table,
    "sample": cmd_sample,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = _merge_runspec(args)
        _validate(spec)
    except SpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        report, passed = _COMMANDS[spec.command](spec)
    except SpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    text = json.dumps(report, sort_keys=True)
    print(text)
    out = spec.params.get("out")
    if out and spec.command in ("check", "experiment"):
        path = _out_path(spec, out)
        with io.open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    return 0 if passed else 1
