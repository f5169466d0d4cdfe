"""Samplers for the finite-N ensembles.

Three routes into the same family: an exact grid-discretized sampler for
the projection kernel (sequential conditioning), a random-walk Metropolis
chain on the unscaled ensemble, and the s=0 matrix-level construction via
the unitary transform of a Haar matrix.  Corner extraction feeds the
decomposition experiments.
"""

from __future__ import annotations

import io
import json
import math
import warnings
import dataclasses
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from .errors import (
    DomainError,
    EigenFailure,
    GridTooCoarse,
    NonConvergenceWarning,
    SingularCayley,
)
from .kernels import FiniteKernel
from .weights_opuc import CircleWeight, HPParam, eval_circle_weight

__all__ = [
    "Configuration",
    "SamplerConfig",
    "CornerSummary",
    "sample_projection_dpp",
    "sample_projection_dpp_batch",
    "sequential_projection_draws",
    "sample_pseudo_jacobi_mcmc",
    "mcmc_draws",
    "sample_hp_matrix_s0",
    "sample_hp_matrix_s0_batch",
    "corner_summaries",
    "write_sample_archive",
    "read_sample_archive",
]


@dataclass(frozen=True)
class Configuration:
    """Finite point configuration on R*: sorted, zero-free, square-summable."""

    points: tuple

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if any(p == 0.0 for p in pts):
            raise DomainError("configurations live on R*")
        if any(not math.isfinite(p) for p in pts):
            raise DomainError("non-finite point")
        object.__setattr__(self, "points", tuple(sorted(pts)))

    def s2(self) -> float:
        return float(sum(p * p for p in self.points))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    grid_points: int = 4096
    R: float = 1.0e6
    method: str = "spectral_dpp"
    step_scale: float = 0.5
    burn_in: int = 2000
    thinning: int = 10
    n_chains: int = 32

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must fit in 64 bits")
        if self.grid_points < 16 or self.grid_points % 2:
            raise DomainError("grid_points must be even and >= 16")
        if self.R <= 0:
            raise DomainError("truncation R must be positive")
        if self.method not in ("spectral_dpp", "mcmc"):
            raise DomainError(f"unknown method {self.method!r}")
        if min(self.step_scale, self.burn_in, self.thinning, self.n_chains) <= 0:
            raise DomainError("chain parameters must be positive")


@dataclass(frozen=True)
class CornerSummary:
    """Scaled corner spectrum split by sign, with trace summaries."""

    N: int
    a_plus: tuple
    a_minus: tuple
    c_N: float
    d_N: float


# ---------------------------------------------------------------------------
# Grid-based exact DPP sampler


def _dpp_grid(k: FiniteKernel, M: int, R: float):
    """Midpoint angle grid with the orthonormal feature rows.

    Returns (x positions, A) where A is (M, N) with A^H A = I exactly after
    the thin-QR polish; the pre-polish mass deficit measures discretization.
    """
    if k.route != "circle_cayley":
        raise DomainError("grid sampler needs the circle route")
    N = k.N
    delta = 2.0 * np.pi / M
    theta = -np.pi + (np.arange(M) + 0.5) * delta  # never hits 0 or +-pi
    lam = eval_circle_weight(CircleWeight(k.param, "lambda"), theta, normalized=True)
    P = k.opuc.eval_all(np.exp(1j * theta))[:, :N]
    A = P * np.sqrt(lam * delta / (2.0 * np.pi))[:, None]
    x = np.tan(theta / 2.0) / N
    keep = np.abs(x) <= R
    A = A * keep[:, None]
    deficit = N - float(np.sum(np.abs(A) ** 2))
    return x, A, deficit


def _prepare_grid(k: FiniteKernel, cfg: SamplerConfig):
    M = cfg.grid_points
    for _ in range(5):
        x, A, deficit = _dpp_grid(k, M, cfg.R)
        if abs(deficit) < 1e-4:
            break
        M *= 2
    if abs(deficit) >= 0.01:
        raise GridTooCoarse(
            f"grid mass deficit {deficit:.3e} at {M} nodes; "
            "raise grid_points or R"
        )
    # polish to an exact discrete projection so cardinality is exact
    Q, _ = np.linalg.qr(A)
    return x, np.ascontiguousarray(Q)


def sequential_projection_draws(
    Q: np.ndarray, x: np.ndarray, rng: np.random.Generator, n_draws: int
) -> np.ndarray:
    """Exact draws from the discrete projection DPP of the orthonormal
    feature rows Q (grid size, rank): (n_draws, rank) sorted positions."""
    N = Q.shape[1]
    out = np.empty((n_draws, N))
    if N == 1:
        # rank one is plain density sampling; draw all at once
        p = np.abs(Q[:, 0]) ** 2
        cdf = np.cumsum(p)
        cdf /= cdf[-1]
        idx = np.searchsorted(cdf, rng.random(n_draws))
        out[:, 0] = x[idx]
        return out
    for d in range(n_draws):
        A = Q.copy()
        p = np.einsum("ij,ij->i", A, A.conj()).real
        picks = np.empty(N, dtype=np.int64)
        for step in range(N):
            p = np.maximum(p, 0.0)
            cdf = np.cumsum(p)
            i = int(np.searchsorted(cdf, rng.random() * cdf[-1]))
            i = min(i, len(x) - 1)
            picks[step] = i
            p[i] = 0.0
            if step == N - 1:
                break
            v = A[i].conj()
            v = v / np.linalg.norm(v)
            c = A @ v
            A -= np.outer(c, v.conj())
            p -= np.abs(c) ** 2
            p[picks[: step + 1]] = 0.0
        out[d] = np.sort(x[picks])
    return out


def sample_projection_dpp_batch(
    k: FiniteKernel, cfg: SamplerConfig, n_draws: int
) -> np.ndarray:
    """n_draws independent configurations as a (n_draws, N) sorted array."""
    x, Q = _prepare_grid(k, cfg)
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    return sequential_projection_draws(Q, x, rng, n_draws)


def sample_projection_dpp(k: FiniteKernel, cfg: SamplerConfig) -> Configuration:
    """One exact draw of the rank-N projection process (grid-discretized)."""
    pts = sample_projection_dpp_batch(k, cfg, 1)[0]
    return Configuration(tuple(pts))


# ---------------------------------------------------------------------------
# Random-walk Metropolis on the unscaled ensemble


def _coord_terms(x: np.ndarray, col: np.ndarray, j: int, s: float, N: int) -> np.ndarray:
    """Log-density terms involving coordinate j only, with x[:, j] = col."""
    with np.errstate(divide="ignore"):
        lo = np.log(np.abs(x - col[:, None]))
    lo[:, j] = 0.0
    return 2.0 * np.sum(lo, axis=1) - (s + N) * np.log1p(col * col)


def sample_pseudo_jacobi_mcmc(
    param: HPParam, N: int, cfg: SamplerConfig, stats: dict | None = None
) -> Iterator[Configuration]:
    """Thinned Metropolis stream targeting the ensemble, rescaled by 1/N.

    Runs cfg.n_chains independent chains in lockstep.  Each sweep updates
    one coordinate at a time with a Cauchy step (single-coordinate moves
    are what lets the heavy x^-2 tails mix); the step scale adapts toward
    0.3 acceptance during burn-in, then freezes.  Yields states
    round-robin across chains.  Warns NonConvergenceWarning if the frozen
    acceptance rate leaves [0.1, 0.6].  A caller-supplied stats dict
    receives the running acceptance_rate and step_scale.
    """
    s = param.s
    if not isinstance(s, (int, float)) or s <= -0.5:
        raise DomainError("MCMC targets the probability regime s > -1/2, s real")
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    C = cfg.n_chains
    x = rng.standard_cauchy((C, N))
    scale = cfg.step_scale
    accepted = 0
    proposed = 0
    sweep = 0
    warned = False
    while True:
        for j in range(N):
            cur = x[:, j]
            prop = cur + scale * rng.standard_cauchy(C)
            delta = _coord_terms(x, prop, j, s, N) - _coord_terms(x, cur, j, s, N)
            acc = np.log(rng.random(C)) < delta
            x[acc, j] = prop[acc]
            accepted += int(np.sum(acc))
            proposed += C
        sweep += 1
        if sweep <= cfg.burn_in:
            if sweep % 50 == 0:
                rate = accepted / proposed
                scale = float(np.clip(scale * math.exp(rate - 0.3), 1e-3, 50.0))
                accepted = proposed = 0
                if stats is not None:
                    stats["acceptance_rate"] = rate
                    stats["step_scale"] = scale
            continue
        if not warned and sweep == cfg.burn_in + 500:
            rate = accepted / proposed
            if not 0.1 <= rate <= 0.6:
                warnings.warn(
                    f"acceptance rate {rate:.3f} outside [0.1, 0.6]",
                    NonConvergenceWarning,
                )
            warned = True
            if stats is not None:
                stats["acceptance_rate"] = rate
                stats["step_scale"] = scale
        if (sweep - cfg.burn_in) % cfg.thinning == 0:
            for c in range(C):
                pts = x[c] / N
                if np.any(pts == 0.0):  # measure-zero; perturb off the origin
                    pts = pts + 1e-300
                yield Configuration(tuple(pts))


def mcmc_draws(param: HPParam, N: int, cfg: SamplerConfig, n_draws: int,
               stats: dict | None = None) -> np.ndarray:
    """First n_draws thinned states as a (n_draws, N) sorted array."""
    gen = sample_pseudo_jacobi_mcmc(param, N, cfg, stats)
    out = np.empty((n_draws, N))
    for i in range(n_draws):
        out[i] = next(gen).points
    return out


# ---------------------------------------------------------------------------
# Matrix-level sampler at s=0


def _haar_unitary(M: int, rng: np.random.Generator) -> np.ndarray:
    Z = (rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))[None, :]


def sample_hp_matrix_s0(M: int, cfg: SamplerConfig) -> np.ndarray:
    """One Hermitian matrix whose spectrum follows the s=0 ensemble at N=M.

    X = i(1+U)(1-U)^{-1} for Haar unitary U, symmetrized exactly.  The
    measure-zero event of 1-U being numerically singular is retried a few
    times before SingularCayley escapes.
    """
    if M < 1:
        raise DomainError("M >= 1 required")
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    return _matrix_draw(M, rng)


def _matrix_draw(M: int, rng: np.random.Generator) -> np.ndarray:
    for _ in range(5):
        U = _haar_unitary(M, rng)
        eye = np.eye(M, dtype=complex)
        try:
            X = np.linalg.solve(eye - U, 1j * (eye + U))
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(X)):
            continue
        return 0.5 * (X + X.conj().T)
    raise SingularCayley("1-U numerically singular in repeated draws")


def sample_hp_matrix_s0_batch(M: int, cfg: SamplerConfig, n_draws: int) -> list:
    """n_draws matrices from one seeded stream (deterministic order)."""
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    return [_matrix_draw(M, rng) for _ in range(n_draws)]


# ---------------------------------------------------------------------------
# Corner spectra


def corner_summaries(X: np.ndarray, N_list) -> list:
    """Scaled corner spectra: for each N the eigenvalues of the upper-left
    N x N corner divided by N, split by sign, with c = tr/N, d = tr(X^2)/N^2."""
    X = np.asarray(X)
    out = []
    for N in N_list:
        N = int(N)
        if N < 1 or N > X.shape[0]:
            raise DomainError(f"corner size {N} outside matrix dimension")
        corner = X[:N, :N]
        try:
            ev = np.linalg.eigvalsh(corner)
        except np.linalg.LinAlgError as e:
            raise EigenFailure(str(e)) from e
        if not np.all(np.isfinite(ev)):
            raise EigenFailure("non-finite corner spectrum")
        a = ev / N
        a_plus = tuple(sorted((float(v) for v in a[a > 0]), reverse=True))
        a_minus = tuple(sorted((float(-v) for v in a[a < 0]), reverse=True))
        c = float(np.trace(corner).real) / N
        d = float(np.sum(ev * ev)) / (N * N)
        out.append(CornerSummary(N, a_plus, a_minus, c, d))
    return out


# ---------------------------------------------------------------------------
# Archives


def write_sample_archive(path: str, configs, cfg: SamplerConfig) -> None:
    """CSV, one configuration per row (variable length), plus a JSON sidecar
    with the full SamplerConfig for replay."""
    with io.open(path, "w", encoding="ascii") as f:
        for c in configs:
            f.write(",".join(f"{p:.17g}" for p in c.points) + "\n")
    with io.open(path + ".json", "w", encoding="ascii") as f:
        json.dump(asdict(cfg), f, indent=1, sort_keys=True)
        f.write("\n")


def read_sample_archive(path: str):
    """Inverse of write_sample_archive: (configurations, SamplerConfig).

    Comment lines and sidecar keys beyond the SamplerConfig fields (archives
    produced with extra provenance) are ignored.
    """
    configs = []
    with io.open(path, "r", encoding="ascii") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                configs.append(Configuration(tuple(float(t) for t in line.split(","))))
    names = {f.name for f in dataclasses.fields(SamplerConfig)}
    with io.open(path + ".json", "r", encoding="ascii") as f:
        raw = json.load(f)
    cfg = SamplerConfig(**{k: v for k, v in raw.items() if k in names})
    return configs, cfg
