"""Weights on the line and circle, and orthonormal bases for both.

Line weight (1+x^2)^{-s-N}; circle weight (2+2cos theta)^s (kind "lambda",
singular at +-pi) or its rotation (2-2cos theta)^s (kind "w", singular at 0).
Orthonormal circle polynomials come from an extended-precision Cholesky of
the Toeplitz matrix of trigonometric moments; monic line polynomials from
extended-precision Gram-Schmidt on closed-form even moments.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import DegreeError, DomainError, IllConditioned, MomentDivergence
from .specfun import gamma_fn

__all__ = [
    "HPParam",
    "CircleWeight",
    "OPUCBasis",
    "MonicLineBasis",
    "eval_line_weight",
    "eval_circle_weight",
    "weight_ratio_bound",
    "build_opuc",
    "cd_sum_circle",
    "cd_identity_residual",
    "szego_extremal",
    "golinskii_envelope",
    "build_monic_line",
    "trig_moment",
]

DEGREE_CAP = 120


@dataclass(frozen=True)
class HPParam:
    """Ensemble parameter s with its shifted representative.

    n_s is the smallest non-negative integer with s + n_s > -1/2, so the
    shifted parameter s_prime = s + n_s always lies in (-1/2, 1/2] when
    s <= -1/2 and equals s otherwise.
    """

    s: float
    n_s: int = field(init=False)
    s_prime: float = field(init=False)

    def __post_init__(self):
        # the shift count depends only on Re s
        re = self.s.real if isinstance(self.s, complex) else self.s
        n = 0 if re > -0.5 else math.ceil(-0.5 - re + 1e-15)
        while re + n <= -0.5:  # guard the boundary s + n = -1/2 exactly
            n += 1
        object.__setattr__(self, "n_s", n)
        object.__setattr__(self, "s_prime", self.s + n)

    def N_prime(self, N: int) -> int:
        return N - self.n_s


@dataclass(frozen=True)
class CircleWeight:
    """Circle weight of parameter s; kind "lambda" peaks/vanishes at theta=0
    with singular endpoint +-pi, kind "w" is its rotation by pi."""

    param: HPParam
    kind: str = "lambda"

    def __post_init__(self):
        if self.kind not in ("lambda", "w"):
            raise DomainError(f"unknown circle weight kind {self.kind!r}")

    def normalization(self) -> float:
        """Constant c_s with c_s * integral of the weight d theta/2pi = 1."""
        s = self.param.s
        return gamma_fn(s + 1.0) ** 2 / gamma_fn(2.0 * s + 1.0)


def eval_line_weight(param: HPParam, N: int, x) -> float | np.ndarray:
    """(1 + x^2)^(-s-N); invariant under (s, N) -> (s+m, N-m)."""
    if N < 1:
        raise DomainError("N >= 1 required")
    xx = np.asarray(x, dtype=float)
    out = (1.0 + xx * xx) ** (-(param.s + N))
    return float(out) if np.ndim(x) == 0 else out


def eval_circle_weight(w: CircleWeight, theta, normalized: bool = False):
    """Weight value at angle theta in (-pi, pi).

    Raises DomainError at the singular angle when s < 0 (the weight blows up
    there, integrably).  With normalized=True the probability normalization
    against d theta/2pi is included.
    """
    s = w.param.s
    tt = np.asarray(theta, dtype=float)
    if np.any(np.abs(tt) > np.pi):
        raise DomainError("theta must lie in [-pi, pi]")
    # 2 +- 2cos(theta) in the cancellation-free half-angle form
    if w.kind == "lambda":
        base = 4.0 * np.cos(tt / 2.0) ** 2
        at_sing = np.abs(tt) == np.pi
    else:
        base = 4.0 * np.sin(tt / 2.0) ** 2
        at_sing = tt == 0.0
    re_s = s.real if isinstance(s, complex) else s
    if re_s < 0 and (np.any(at_sing) or np.any(base == 0.0)):
        raise DomainError(f"weight singular at this angle for s={s}")
    base = np.where(at_sing, 0.0, base)  # pin the exact singular angle
    out = base**s
    if normalized:
        out = out * w.normalization()
    return float(out) if np.ndim(theta) == 0 else out


def weight_ratio_bound(s: complex, a: float) -> float:
    """Certified constant C with lambda^(a)/C <= |lambda^(s)| <= C lambda^(a).

    The modulus of the complex-parameter weight is
    (2 cos(theta/2))^(2 Re s) * exp(theta * Im s) on (-pi, pi), so the ratio
    to the real-parameter weight is exp(theta * Im s), bounded by e^(pi |Im s|).
    """
    sc = complex(s)
    if sc.real <= -0.5:
        raise DomainError("weight ratio bound requires Re s > -1/2")
    if a != sc.real:
        raise DomainError("reference parameter a must equal Re s")
    return math.exp(math.pi * abs(sc.imag))


def complex_lambda_modulus(s: complex, theta) -> np.ndarray:
    """|lambda^(s)(e^{i theta})| for complex s (grid verification helper)."""
    sc = complex(s)
    tt = np.asarray(theta, dtype=float)
    return (2.0 * np.cos(tt / 2.0)) ** (2.0 * sc.real) * np.exp(tt * sc.imag)


def trig_moment(param: HPParam, k: int, kind: str = "lambda") -> float:
    """Normalized trigonometric moment m_k = int e^{ik theta} dmu(theta).

    For the probability-normalized lambda weight, m_0 = 1 and
    m_k = prod_{j=1..k} (s+1-j)/(s+j); the "w" kind flips sign for odd k.
    """
    s = param.s
    k = abs(int(k))
    m = 1.0
    for j in range(1, k + 1):
        m *= (s + 1.0 - j) / (s + j)
    if kind == "w" and k % 2 == 1:
        m = -m
    return m


# ---------------------------------------------------------------------------
# OPUC basis


@dataclass(frozen=True)
class OPUCBasis:
    """Orthonormal polynomials p_0..p_{n-1} for a circle weight.

    coeff[k, j] is the z^j coefficient of p_k (real for real s); lead[k] > 0
    is the leading coefficient.  gram_residual is the max-norm residual of
    the orthonormality check carried out in extended precision.
    """

    param: HPParam
    kind: str
    degree_count: int
    coeff: np.ndarray
    lead: np.ndarray
    gram_residual: float
    coeff_str: tuple = ()

    def eval_all(self, z) -> np.ndarray:
        """Evaluate all basis polynomials: returns (len(z), degree_count)."""
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        n = self.degree_count
        V = np.empty((zz.size, n), dtype=complex)
        V[:, 0] = 1.0
        for j in range(1, n):
            V[:, j] = V[:, j - 1] * zz
        return V @ self.coeff.T

    def to_json(self) -> str:
        payload = {
            "s": self.param.s,
            "kind": self.kind,
            "degree_count": self.degree_count,
            "coefficients": [list(row) for row in self.coeff_str],
            "gram_residual": self.gram_residual,
        }
        return json.dumps(payload, sort_keys=True)


_OPUC_CACHE: dict = {}
_OPUC_LOCK = threading.Lock()


def build_opuc(w: CircleWeight, n: int) -> OPUCBasis:
    """Build p_0..p_{n-1} via extended-precision Cholesky of the Toeplitz
    moment matrix; raises IllConditioned if the certified Gram residual
    exceeds 1e-8 and refuses degrees beyond the cap."""
    s = w.param.s
    if s <= -0.5:
        raise DomainError("build_opuc requires s > -1/2")
    if n < 1 or n > DEGREE_CAP:
        raise DomainError(f"degree count must be in [1, {DEGREE_CAP}]")
    key = (s, w.kind, n)
    with _OPUC_LOCK:
        if key in _OPUC_CACHE:
            return _OPUC_CACHE[key]

    import mpmath as mp

    dps = max(40, 25 + n // 3)
    with mp.workdps(dps):
        moments = [mp.mpf(1)]
        sm = mp.mpf(s)
        for j in range(1, n):
            moments.append(moments[-1] * (sm + 1 - j) / (sm + j))
        if w.kind == "w":
            moments = [(-1) ** j * m for j, m in enumerate(moments)]
        G = mp.matrix(n, n)
        for i in range(n):
            for j in range(n):
                G[i, j] = moments[abs(i - j)]
        try:
            L = mp.cholesky(G)
        except ValueError as exc:
            raise IllConditioned(f"moment matrix not positive definite: {exc}")
        # A = L^{-1} row by row (forward substitution against unit vectors)
        A = mp.zeros(n, n)
        for i in range(n):
            for j in range(i + 1):
                rhs = mp.mpf(1) if i == j else -mp.fsum(
                    L[i, k] * A[k, j] for k in range(j, i)
                )
                A[i, j] = rhs / L[i, i]
        # certified residual of A G A^T - I
        resid = mp.mpf(0)
        AG = A * G
        for i in range(n):
            for j in range(i + 1):
                v = mp.fsum(AG[i, k] * A[j, k] for k in range(j + 1))
                if i == j:
                    v -= 1
                resid = max(resid, abs(v))
        coeff = np.zeros((n, n))
        coeff_str = []
        for i in range(n):
            row = []
            for j in range(n):
                coeff[i, j] = float(A[i, j])
                row.append(mp.nstr(A[i, j], 25))
            coeff_str.append(tuple(row))
        gram_residual = float(resid)

    if gram_residual > 1e-8:
        raise IllConditioned(
            f"orthonormality residual {gram_residual:.2e} exceeds 1e-8 at n={n}"
        )
    basis = OPUCBasis(
        param=w.param,
        kind=w.kind,
        degree_count=n,
        coeff=coeff,
        lead=np.diag(coeff).copy(),
        gram_residual=gram_residual,
        coeff_str=tuple(coeff_str),
    )
    with _OPUC_LOCK:
        _OPUC_CACHE[key] = basis
    return basis


def cd_sum_circle(basis: OPUCBasis, N: int, alpha: float, beta: float) -> complex:
    """Projection kernel on the circle at angle pair (alpha, beta):
    sqrt(lambda(alpha) lambda(beta)) * sum_{k<N} p_k(e^{i alpha}) conj(p_k(e^{i beta})),
    with the weight probability-normalized against d theta/2pi."""
    if N > basis.degree_count:
        raise DegreeError(f"kernel order {N} exceeds basis degrees {basis.degree_count}")
    w = CircleWeight(basis.param, basis.kind)
    la = eval_circle_weight(w, alpha, normalized=True)
    lb = eval_circle_weight(w, beta, normalized=True)
    pa = basis.eval_all(np.exp(1j * alpha))[0, :N]
    pb = basis.eval_all(np.exp(1j * beta))[0, :N]
    return complex(math.sqrt(la * lb) * np.sum(pa * np.conj(pb)))


def _reversed_poly(coeff_row: np.ndarray, n: int) -> np.ndarray:
    # q*(z) = z^n conj(q(1/conj z)): reverse and conjugate coefficients 0..n
    return np.conj(coeff_row[: n + 1][::-1])


def cd_identity_residual(basis: OPUCBasis, n: int, theta: float, tau: float) -> float:
    """Residual of the Christoffel-Darboux identity
    sum_{k<n} p_k(z) conj(p_k(w)) = (conj(p*_n(w)) p*_n(z) - conj(p_n(w)) p_n(z)) / (1 - z conj(w))
    at z = e^{i theta}, w = e^{i tau}."""
    if n + 1 > basis.degree_count:
        raise DegreeError(f"need degree {n}, basis holds {basis.degree_count}")
    z = np.exp(1j * theta)
    wz = np.exp(1j * tau)
    if abs(z - wz) < 1e-14:
        raise DomainError("coincident angles: identity denominator vanishes")
    P = basis.eval_all(np.array([z, wz]))
    direct = np.sum(P[0, :n] * np.conj(P[1, :n]))
    rev = _reversed_poly(basis.coeff[n], n)
    powers_z = z ** np.arange(n + 1)
    powers_w = wz ** np.arange(n + 1)
    pstar_z = np.sum(rev * powers_z)
    pstar_w = np.sum(rev * powers_w)
    closed = (np.conj(pstar_w) * pstar_z - np.conj(P[1, n]) * P[0, n]) / (
        1.0 - z * np.conj(wz)
    )
    return float(abs(direct - closed))


def szego_extremal(
    w: CircleWeight, N: int, theta: float, trial_count: int = 64, seed: int = 0
) -> float:
    """Best ratio |P(e^{i theta})|^2 / ||P||^2 over trial polynomials of
    degree < N: random coefficient trials plus the reproducing-kernel trial,
    which attains the supremum sum_{k<N} |p_k(e^{i theta})|^2."""
    if w.param.s <= -0.5:
        raise DomainError("szego_extremal requires s > -1/2")
    basis = build_opuc(w, N)
    v = basis.eval_all(np.exp(1j * theta))[0, :N]  # p_k at the target point
    rng = np.random.Generator(np.random.Philox(key=seed))
    best = 0.0
    for _ in range(trial_count):
        c = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        val = abs(np.vdot(c, v)) ** 2 / np.vdot(c, c).real
        best = max(best, float(val))
    # reproducing-kernel trial: c = conj coordinates of the point evaluation
    best = max(best, float(np.sum(np.abs(v) ** 2)))
    return best


def golinskii_envelope(param: HPParam, n: int, theta):
    """Envelope (|1+e^{i theta}| + 1/(n+1))^(-s) controlling |p_n| near the
    singular angle (vectorized over theta)."""
    tt = np.asarray(theta, dtype=float)
    mod = np.abs(1.0 + np.exp(1j * tt))
    out = (mod + 1.0 / (n + 1.0)) ** (-param.s)
    return float(out) if np.ndim(theta) == 0 else out


# ---------------------------------------------------------------------------
# Monic line basis


@dataclass(frozen=True)
class MonicLineBasis:
    """Monic orthogonal polynomials for the line weight (1+x^2)^(-s-N).

    Only degrees 0..N-1 are square-integrable against the weight.  coeff is
    lower-unitriangular (row k holds p_k, low-to-high degree); sq_norms[k]
    is the squared weight-norm h_k.
    """

    param: HPParam
    N: int
    degree_count: int
    coeff: np.ndarray
    sq_norms: np.ndarray
    coeff_str: tuple = ()

    def eval_all(self, x) -> np.ndarray:
        """Evaluate all polynomials: returns (len(x), degree_count)."""
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        d = self.degree_count
        V = np.empty((xx.size, d))
        V[:, 0] = 1.0
        for j in range(1, d):
            V[:, j] = V[:, j - 1] * xx
        return V @ self.coeff.T

    def to_json(self) -> str:
        payload = {
            "s": self.param.s,
            "N": self.N,
            "degree_count": self.degree_count,
            "coefficients": [list(row) for row in self.coeff_str],
            "sq_norms": [f"{h:.17g}" for h in self.sq_norms],
        }
        return json.dumps(payload, sort_keys=True)


_MONIC_CACHE: dict = {}
_MONIC_LOCK = threading.Lock()


def line_moment_mp(s, N: int, j: int, mp):
    """Even moment M_{2j} of (1+x^2)^(-s-N) as a Beta value (mpmath)."""
    return (
        mp.gamma(j + mp.mpf(1) / 2)
        * mp.gamma(mp.mpf(s) + N - j - mp.mpf(1) / 2)
        / mp.gamma(mp.mpf(s) + N)
    )


def top_sq_norm(s: float, N: int) -> float:
    """Closed form for h_{N-1} = int p_{N-1}^2 (1+x^2)^(-s-N) dx:
    pi 2^(-2s) Gamma(2s+1) Gamma(2s+2) Gamma(N) / (Gamma(s+1)^2 Gamma(N+1+2s))."""
    return float(
        math.pi
        * 2.0 ** (-2.0 * s)
        * gamma_fn(2.0 * s + 1.0)
        * gamma_fn(2.0 * s + 2.0)
        * gamma_fn(float(N))
        / (gamma_fn(s + 1.0) ** 2 * gamma_fn(N + 1.0 + 2.0 * s))
    )


def build_monic_line(param: HPParam, N: int, max_degree: int) -> MonicLineBasis:
    """Monic orthogonal polynomials by extended-precision Gram-Schmidt on the
    closed-form even moments; refuses degrees >= N (the moment integrals for
    the Gram matrix stop existing there)."""
    s = param.s
    if s <= -0.5:
        raise DomainError("build_monic_line requires effective s > -1/2")
    if max_degree >= N:
        raise MomentDivergence(
            f"degree {max_degree} needs moments beyond order 2N-2; only degrees <= N-1 exist"
        )
    if max_degree < 0:
        raise DomainError("max_degree must be >= 0")
    key = (s, N, max_degree)
    with _MONIC_LOCK:
        if key in _MONIC_CACHE:
            return _MONIC_CACHE[key]

    import mpmath as mp

    d = max_degree + 1
    # Hankel moment matrices are exponentially ill-conditioned; scale digits
    # with the degree so the certified residual stays tiny
    dps = max(50, 30 + 3 * max_degree)
    with mp.workdps(dps):
        M = []
        for j in range(0, 2 * d):
            M.append(
                mp.mpf(0) if j % 2 == 1 else line_moment_mp(s, N, j // 2, mp)
            )

        def ip(p, q):
            return mp.fsum(
                p[i] * q[j] * M[i + j]
                for i in range(len(p))
                for j in range(len(q))
                if p[i] != 0 and q[j] != 0
            )

        polys = []
        hs = []
        for k in range(d):
            c = [mp.mpf(0)] * k + [mp.mpf(1)]
            for jj in range(k):
                pj = polys[jj] + [mp.mpf(0)] * (len(c) - len(polys[jj]))
                proj = ip(c, polys[jj]) / hs[jj]
                if proj != 0:
                    c = [ci - proj * pji for ci, pji in zip(c, pj)]
            polys.append(c)
            hs.append(ip(c, c))
            if hs[-1] <= 0:
                raise IllConditioned(
                    f"lost positivity at degree {k} (dps={dps}); raise precision"
                )
        coeff = np.zeros((d, d))
        coeff_str = []
        for k, c in enumerate(polys):
            row = []
            for j in range(d):
                v = c[j] if j < len(c) else mp.mpf(0)
                coeff[k, j] = float(v)
                row.append(mp.nstr(v, 25) if v != 0 else "0")
            coeff_str.append(tuple(row))
        sq_norms = np.array([float(h) for h in hs])

    basis = MonicLineBasis(
        param=param,
        N=N,
        degree_count=d,
        coeff=coeff,
        sq_norms=sq_norms,
        coeff_str=tuple(coeff_str),
    )
    with _MONIC_LOCK:
        _MONIC_CACHE[key] = basis
    return basis
