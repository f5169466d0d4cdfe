"""Finite-rank projection kernels on circle and line, their scaling limit,
and the rank-one V-functions linking consecutive parameters.

The finite kernel of the 1/N-rescaled eigenvalue ensemble is built on two
independent routes:

- circle_cayley (default): orthonormal circle polynomials transported
  through x = tan(theta/2)/N, with the phase gauge gamma(t) =
  (N-1) * arg(i+t) pulled out so the kernel is real;
- line_direct: monic line polynomials against (1+x^2)^(-s-N) directly.

Both produce the orthogonal projection onto the same N-dimensional
subspace of L^2(R), so they agree pointwise; tests exploit that as a
dual-construction check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, QuadFailure
from .quadrature import panel_nodes
from .specfun import bessel_j, gamma_fn, jsq_over_t_tail
from .weights_opuc import (
    CircleWeight,
    HPParam,
    MonicLineBasis,
    OPUCBasis,
    build_monic_line,
    build_opuc,
    eval_circle_weight,
    top_sq_norm,
)

__all__ = [
    "FiniteKernel",
    "RescaledCircleKernel",
    "LimitKernel",
    "VFunction",
    "cayley",
    "cayley_inverse",
    "cayley_jacobian",
    "build_finite_kernel",
    "eval_finite_kernel",
    "finite_kernel_matrix",
    "build_rescaled_circle_kernel",
    "eval_phi_n",
    "eval_limit_kernel",
    "limit_kernel_matrix",
    "eval_V",
    "v_norm_sq_closed",
    "v_norm_sq_quadrature",
    "check_projection",
    "ProjectionQuad",
    "check_limit_recurrence",
    "check_finite_recurrence",
    "convergence_profile",
    "kernel_table_csv",
]


# ---------------------------------------------------------------------------
# Cayley correspondence


def cayley(x):
    """Angle theta in (-pi, pi) with e^{i theta} = (i-x)/(i+x); theta = 2 arctan x."""
    return 2.0 * np.arctan(x)


def cayley_inverse(theta):
    """x = tan(theta/2), inverse of cayley on (-pi, pi)."""
    return np.tan(np.asarray(theta) / 2.0)


def cayley_jacobian(x):
    """d theta/dx = 2/(1+x^2).

    theta(x) = 2 arctan x is increasing, forced by the angle convention of
    cayley (x=1 -> pi/2); density transports use the absolute value, so only
    the magnitude is load-bearing.
    """
    xx = np.asarray(x, dtype=float)
    out = 2.0 / (1.0 + xx * xx)
    return float(out) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# Finite kernel


@dataclass(frozen=True)
class FiniteKernel:
    """Rank-N projection kernel of the 1/N-rescaled eigenvalue ensemble."""

    param: HPParam
    N: int
    route: str
    opuc: OPUCBasis | None = None
    monic: MonicLineBasis | None = None

    def feature_matrix(self, x) -> np.ndarray:
        """Rows of orthonormal functions: returns (len(x), N).

        K(x, y) = sum_k M[x, k] conj(M[y, k]); for the circle route the
        phase gauge is already fixed so that the sum is real up to roundoff.
        """
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xx == 0.0):
            raise DomainError("kernel features are defined on R*")
        N, s = self.N, self.param.s
        t = N * xx
        if self.route == "line_direct":
            phi = (1.0 + t * t) ** (-0.5 * (s + N))
            P = self.monic.eval_all(t)[:, :N]
            scale = np.sqrt(N / self.monic.sq_norms[:N])
            return P * phi[:, None] * scale[None, :]
        theta = 2.0 * np.arctan(t)
        lam = eval_circle_weight(
            CircleWeight(self.param, "lambda"), theta, normalized=True
        )
        z = np.exp(1j * theta)
        P = self.opuc.eval_all(z)[:, :N]
        # gauge e^{i gamma}, gamma = (N-1) arg(i+t), makes the kernel real
        gauge = np.exp(1j * (N - 1) * (0.5 * np.pi - np.arctan(t)))
        radial = np.sqrt(lam * 2.0 * N / (2.0 * np.pi * (1.0 + t * t)))
        return P * (gauge * radial)[:, None]

    def kernel_matrix(self, x, y) -> np.ndarray:
        """K on the grid x (rows) by y (columns); real part returned, the
        imaginary part of the gauged circle route is roundoff only."""
        Mx = self.feature_matrix(x)
        My = self.feature_matrix(y)
        K = Mx @ My.conj().T
        return np.ascontiguousarray(K.real)

    def rho1(self, x) -> np.ndarray:
        """First correlation function rho_1(x) = K(x, x) (diagonal)."""
        M = self.feature_matrix(x)
        return np.sum(np.abs(M) ** 2, axis=1)

    def rho1_theta(self, theta) -> np.ndarray:
        """Circle-side density lambda(theta) sum |p_k|^2 w.r.t. d theta/2pi."""
        if self.route != "circle_cayley":
            raise DomainError("circle-side density needs the circle route")
        lam = eval_circle_weight(
            CircleWeight(self.param, "lambda"), theta, normalized=True
        )
        P = self.opuc.eval_all(np.exp(1j * np.atleast_1d(theta)))[:, : self.N]
        return lam * np.sum(np.abs(P) ** 2, axis=1)


def build_finite_kernel(param: HPParam, N: int, route: str = "circle_cayley") -> FiniteKernel:
    if param.s <= -0.5:
        raise DomainError("finite kernel requires s > -1/2")
    if N < 1:
        raise DomainError("N >= 1 required")
    if route == "circle_cayley":
        return FiniteKernel(param, N, route, opuc=build_opuc(CircleWeight(param, "lambda"), N))
    if route == "line_direct":
        return FiniteKernel(param, N, route, monic=build_monic_line(param, N, N - 1))
    raise DomainError(f"unknown route {route!r}")


def eval_finite_kernel(k: FiniteKernel, x: float, y: float) -> float:
    """Kernel value at a point pair of R*; DomainError at 0."""
    if x == 0.0 or y == 0.0:
        raise DomainError("kernel is defined on R*")
    return float(k.kernel_matrix([x], [y])[0, 0])


def finite_kernel_matrix(k: FiniteKernel, xs, ys) -> np.ndarray:
    return k.kernel_matrix(xs, ys)


# ---------------------------------------------------------------------------
# Rescaled circle kernel


@dataclass(frozen=True)
class RescaledCircleKernel:
    """n-fold rescaled projection kernel on the circle, window (-n pi, n pi)."""

    param: HPParam
    n: int
    basis: OPUCBasis  # orthonormal for the "w" weight (singular at 0)


def build_rescaled_circle_kernel(param: HPParam, n: int) -> RescaledCircleKernel:
    if param.s <= -0.5:
        raise DomainError("rescaled circle kernel requires s > -1/2")
    return RescaledCircleKernel(param, n, build_opuc(CircleWeight(param, "w"), n))


def eval_phi_n(k: RescaledCircleKernel, alpha: float, beta: float) -> complex:
    """Rescaled kernel (1/n) e^{-i(n-1)alpha/(2n)} K_w(alpha/n, beta/n)
    e^{+i(n-1)beta/(2n)}.

    The conjugating phases make the s=0 case exactly the ratio-of-sines
    kernel; phases are a gauge and leave all determinants unchanged.
    """
    n = k.n
    if not (abs(alpha) < n * np.pi and abs(beta) < n * np.pi):
        raise DomainError(f"angles must lie in (-{n}pi, {n}pi)")
    wa, wb = alpha / n, beta / n
    w = CircleWeight(k.param, "w")
    la = eval_circle_weight(w, wa, normalized=True)
    lb = eval_circle_weight(w, wb, normalized=True)
    P = k.basis.eval_all(np.exp(1j * np.array([wa, wb])))[:, :n]
    core = np.sum(P[0] * np.conj(P[1])) * math.sqrt(la * lb) / (2.0 * np.pi)
    phase = np.exp(-1j * (n - 1) * alpha / (2.0 * n) + 1j * (n - 1) * beta / (2.0 * n))
    return complex(phase * core / n)


# ---------------------------------------------------------------------------
# Limit kernel


@dataclass(frozen=True)
class LimitKernel:
    """Scaling limit of the sign-corrected finite kernels; built from the
    component functions F(x) = J_{s-1/2}(1/|x|)/(2 sqrt|x|) and
    G(x) = sgn(x) J_{s+1/2}(1/|x|)/sqrt|x|."""

    param: HPParam
    h_diag: float = 1e-5

    def __post_init__(self):
        if self.param.s <= -0.5:
            raise DomainError("limit kernel requires s > -1/2")


def _j_general(nu: float, z: np.ndarray) -> np.ndarray:
    """J_nu for nu > -1, extending the nu >= -1/2 evaluator one step down
    via J_{nu}(z) = (2(nu+1)/z) J_{nu+1}(z) - J_{nu+2}(z)."""
    if nu >= -0.5:
        return bessel_j(nu, z)
    return 2.0 * (nu + 1.0) / z * bessel_j(nu + 1.0, z) - bessel_j(nu + 2.0, z)


def _limit_FG(s: float, x: np.ndarray):
    ax = np.abs(x)
    z = 1.0 / ax
    F = _j_general(s - 0.5, z) / (2.0 * np.sqrt(ax))
    G = np.sign(x) * bessel_j(s + 0.5, z) / np.sqrt(ax)
    return F, G


def eval_limit_kernel(k: LimitKernel, x: float, y: float) -> float:
    """(F(x)G(y) - F(y)G(x))/(x - y), with the removable diagonal filled by
    central differences of F and G (step h_diag, one Richardson sweep)."""
    if x == 0.0 or y == 0.0:
        raise DomainError("limit kernel is defined on R*")
    s = k.param.s
    if abs(x - y) >= k.h_diag * max(abs(x), abs(y)):
        F, G = _limit_FG(s, np.array([x, y]))
        return float((F[0] * G[1] - F[1] * G[0]) / (x - y))
    m = 0.5 * (x + y)
    h = k.h_diag * abs(m)
    pts = np.array([m - 2 * h, m - h, m + h, m + 2 * h, m])
    F, G = _limit_FG(s, pts)
    # five-point first derivative: (8(f(+h)-f(-h)) - (f(+2h)-f(-2h)))/(12h)
    dF = (8.0 * (F[2] - F[1]) - (F[3] - F[0])) / (12.0 * h)
    dG = (8.0 * (G[2] - G[1]) - (G[3] - G[0])) / (12.0 * h)
    return float(dF * G[4] - F[4] * dG)


def limit_kernel_matrix(k: LimitKernel, xs, ys) -> np.ndarray:
    """Kernel on a grid, off-diagonal vectorized, near-diagonal entries via
    the central-difference path."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs == 0.0) or np.any(ys == 0.0):
        raise DomainError("limit kernel is defined on R*")
    Fx, Gx = _limit_FG(k.param.s, xs)
    Fy, Gy = _limit_FG(k.param.s, ys)
    num = Fx[:, None] * Gy[None, :] - Fy[None, :] * Gx[:, None]
    den = xs[:, None] - ys[None, :]
    scale = np.maximum(np.abs(xs)[:, None], np.abs(ys)[None, :])
    near = np.abs(den) < k.h_diag * scale
    out = np.empty_like(num)
    np.divide(num, den, out=out, where=~near)
    for i, j in zip(*np.nonzero(near)):
        out[i, j] = eval_limit_kernel(k, float(xs[i]), float(ys[j]))
    return out


# ---------------------------------------------------------------------------
# V-functions


@dataclass(frozen=True)
class VFunction:
    """Rank-one function linking parameters s and s+1.

    flavor "limit": V(x) = sgn(x) 2^{s+1/2} Gamma(s+3/2) J_{s+1/2}(1/|x|)/sqrt|x|;
    flavor "prelimit": V(x) = N^{1+s} sgn(x)^N p_{N-1}(Nx) sqrt(phi_N(Nx)).
    """

    param: HPParam
    flavor: str = "limit"
    N: int = 0
    monic: MonicLineBasis | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.param.s <= -0.5:
            raise DomainError("V requires s > -1/2")
        if self.flavor not in ("limit", "prelimit"):
            raise DomainError(f"unknown flavor {self.flavor!r}")
        if self.flavor == "prelimit":
            if self.N < 2:
                raise DomainError("prelimit flavor needs N >= 2")
            if self.monic is None:
                object.__setattr__(
                    self, "monic", build_monic_line(self.param, self.N, self.N - 1)
                )


def eval_V(v: VFunction, x):
    """V at points of R* (vectorized)."""
    xx = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xx == 0.0):
        raise DomainError("V is defined on R*")
    s = v.param.s
    if v.flavor == "limit":
        ax = np.abs(xx)
        out = (
            np.sign(xx)
            * 2.0 ** (s + 0.5)
            * gamma_fn(s + 1.5)
            * bessel_j(s + 0.5, 1.0 / ax)
            / np.sqrt(ax)
        )
    else:
        N = v.N
        t = N * xx
        p_top = v.monic.eval_all(t)[:, N - 1]
        phi_half = (1.0 + t * t) ** (-0.5 * (s + N))
        out = N ** (1.0 + s) * np.sign(xx) ** N * p_top * phi_half
    return float(out[0]) if np.ndim(x) == 0 else out


def v_norm_sq_closed(v: VFunction) -> float:
    """Closed form of the squared L^2 norm: 2^{2s+1} Gamma(s+1/2)^2 (s+1/2)
    for the limit flavor, N^{1+2s} h_{N-1} for the prelimit flavor."""
    s = v.param.s
    if v.flavor == "limit":
        return float(2.0 ** (2.0 * s + 1.0) * gamma_fn(s + 0.5) ** 2 * (s + 0.5))
    return float(v.N ** (1.0 + 2.0 * s) * top_sq_norm(s, v.N))


def v_norm_sq_quadrature(v: VFunction, T: float = 2000.0) -> float:
    """Squared norm by quadrature of eval_V itself.

    Limit flavor: substitute u = 1/x, integrate V(1/u)^2/u^2 by panel GL on
    (0, T] (panel length ~pi tracks the oscillation) plus the closed
    asymptotic tail of the resulting J^2/u integrand beyond T.
    Prelimit flavor: t = Nx panels on [0, T] plus the monic-leading tail
    T^(-2s-1)/(2s+1) (relative error O(T^-2)).
    """
    s = v.param.s
    if v.flavor == "limit":
        n_panels = max(8, int(math.ceil(T / math.pi)))
        u, wq = panel_nodes(0.0, T, n_panels, 16)
        vals = eval_V(v, 1.0 / u)
        main = float(np.sum(wq * vals**2 / (u * u)))
        c2 = (2.0 ** (s + 0.5) * gamma_fn(s + 1.5)) ** 2
        return 2.0 * (main + c2 * jsq_over_t_tail(s + 0.5, T))
    N = v.N
    n_panels = max(64, int(T))  # weight varies on unit scale in t = Nx
    t, wq = panel_nodes(0.0, T, n_panels, 12)
    vals = eval_V(v, t / N)
    # substitution t = Nx: integral of V^2 dx = integral of V(t/N)^2 dt / N;
    # beyond T the monic leading term gives N^{2+2s} t^{-2s-2}, hence the
    # closed tail below (relative error O(T^-2))
    main = float(np.sum(wq * vals**2)) / N
    tail = N ** (1.0 + 2.0 * s) * T ** (-(2.0 * s + 1.0)) / (2.0 * s + 1.0)
    return 2.0 * (main + tail)


# ---------------------------------------------------------------------------
# Identity checks


@dataclass(frozen=True)
class ProjectionQuad:
    """Quadrature plan for the projection check: |gamma| <= delta handled in
    the t = 1/gamma variable up to |t| = t_max; [delta, R] covered by panels
    graded like the local oscillation wavelength ~ pi gamma^2 / scale."""

    delta: float = 0.05
    t_max: float = 2.0e4
    nodes: int = 8
    grade: float = 0.5


def _graded_edges(a: float, b: float, grade: float) -> np.ndarray:
    edges = [a]
    g = a
    while g < b:
        g = g + grade * g * g
        edges.append(min(g, b))
    return np.asarray(edges)


def _kernel_products(k: LimitKernel, x: float, y: float, g: np.ndarray) -> np.ndarray:
    s = k.param.s
    Fg, Gg = _limit_FG(s, g)
    Fx, Gx = _limit_FG(s, np.array([x]))
    Fy, Gy = _limit_FG(s, np.array([y]))
    Kxg = (Fx[0] * Gg - Fg * Gx[0]) / (x - g)
    Kgy = (Fg * Gy[0] - Fy[0] * Gg) / (g - y)
    return Kxg * Kgy


def check_projection(
    k: LimitKernel,
    x: float,
    y: float,
    R_trunc: float = 100.0,
    quad: ProjectionQuad | None = None,
):
    """Residual of the reproducing identity int K(x,g) K(g,y) dg = K(x,y)
    truncated to |g| <= R_trunc; returns (residual, certified tail bound).

    The bound has two certified pieces: the |g| > R tail via Cauchy-Schwarz
    with the envelope |J_nu(z)| <= (z/2)^nu e^{z^2/4}/Gamma(nu+1), which is
    ~ R^(-2s-1) (O(1/R) at s=0 and dominant there), plus the unresolved
    window |g| < 1/t_max inside the oscillatory region, a floor ~ 1e-5 at
    the default plan that only matters once the tail piece is smaller.
    """
    s = k.param.s
    if s < -0.49:
        raise DomainError("projection check requires s >= -0.49")
    q = quad or ProjectionQuad()
    if R_trunc <= 2.0 * max(abs(x), abs(y), 1.0):
        raise DomainError("R_trunc too small for the tail estimate")
    total = 0.0
    gl_x, gl_w = np.polynomial.legendre.leggauss(q.nodes)
    # inner oscillatory region via t = 1/gamma on both sides
    t0 = 1.0 / q.delta
    n_panels = int(math.ceil((q.t_max - t0) / math.pi))
    tg, tw = panel_nodes(t0, q.t_max, n_panels, q.nodes)
    for sgn in (1.0, -1.0):
        g = sgn / tg
        vals = _kernel_products(k, x, y, g)
        total += float(np.sum(tw * vals / (tg * tg)))
    # graded panels on delta <= |gamma| <= R
    edges = _graded_edges(q.delta, R_trunc, q.grade)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    g_nodes = (mid[:, None] + half[:, None] * gl_x[None, :]).ravel()
    g_w = (half[:, None] * gl_w[None, :]).ravel()
    for sgn in (1.0, -1.0):
        g = sgn * g_nodes
        keep = np.abs(g - x) > 1e-9
        keep &= np.abs(g - y) > 1e-9
        vals = np.zeros_like(g)
        vals[keep] = _kernel_products(k, x, y, g[keep])
        total += float(np.sum(g_w * vals))
    if not math.isfinite(total):
        raise QuadFailure("projection quadrature produced non-finite value")
    target = eval_limit_kernel(k, x, y)
    residual = abs(total - target)

    def tail_l2(pt: float) -> float:
        # int_{|g|>R} K(pt,g)^2 dg <= closed bound from the small-argument
        # Bessel envelopes at |g| >= R
        R = R_trunc
        e = math.exp(1.0 / (4.0 * R * R))
        cF = 2.0 ** (-s - 0.5) * e / abs(gamma_fn(s + 0.5))
        cG = 2.0 ** (-s - 0.5) * e / gamma_fn(s + 1.5)
        Fp, Gp = _limit_FG(s, np.array([pt]))
        amp = cF * abs(Gp[0]) + cG * abs(Fp[0]) / R
        geom = (1.0 - abs(pt) / R) ** (-2.0)
        return 2.0 * geom * amp * amp * R ** (-2.0 * s - 1.0) / (2.0 * s + 1.0)

    # unresolved inner window |g| < 1/t_max: large-argument envelope
    # |J_nu(z)| <= 1.1 sqrt(2/(pi z)) for z >= 20 makes the product bounded
    def near_zero_amp(pt: float) -> float:
        Fp, Gp = _limit_FG(s, np.array([pt]))
        return (0.88 * abs(Fp[0]) + 0.44 * abs(Gp[0])) / (abs(pt) - 1.0 / q.t_max)

    inner = 2.0 / q.t_max * near_zero_amp(x) * near_zero_amp(y)
    bound = math.sqrt(tail_l2(x) * tail_l2(y)) + inner
    return residual, bound


def check_limit_recurrence(s: float, x: float, y: float) -> float:
    """Residual of the parameter-shift identity
    K^(s)(x,y) = sgn(x)sgn(y) [K^(s+1)(x,y) +
                 (s+1/2)/sqrt|xy| J_{s+1/2}(1/|x|) J_{s+1/2}(1/|y|)]."""
    if s <= -0.5:
        raise DomainError("requires s > -1/2")
    if x == 0.0 or y == 0.0:
        raise DomainError("defined on R*")
    k_s = LimitKernel(HPParam(s))
    k_s1 = LimitKernel(HPParam(s + 1.0))
    lhs = eval_limit_kernel(k_s, x, y)
    sg = math.copysign(1.0, x) * math.copysign(1.0, y)
    jx = bessel_j(s + 0.5, 1.0 / abs(x))
    jy = bessel_j(s + 0.5, 1.0 / abs(y))
    rank1 = (s + 0.5) / math.sqrt(abs(x * y)) * jx * jy
    rhs = sg * (eval_limit_kernel(k_s1, x, y) + rank1)
    return abs(lhs - rhs)


def check_finite_recurrence(s: float, N: int, x: float, y: float) -> float:
    """Residual of the finite-N shift identity: with P_N = sgn-corrected
    kernel, P_N^(s)(x,y) = sgn(x)sgn(y) (N/(N-1)) P_{N-1}^(s+1)(Nx/(N-1),
    Ny/(N-1)) + V(x)V(y)/||V||^2.

    The two kernels are built on different routes (circle transport vs
    direct line construction) so the identity doubles as a cross check.
    """
    if N < 2:
        raise DomainError("N >= 2 required")
    if x == 0.0 or y == 0.0:
        raise DomainError("defined on R*")
    kN = build_finite_kernel(HPParam(s), N, "circle_cayley")
    kM = build_finite_kernel(HPParam(s + 1.0), N - 1, "line_direct")
    sx, sy = math.copysign(1.0, x), math.copysign(1.0, y)
    lhs = sx**N * sy**N * eval_finite_kernel(kN, x, y)
    u, w = N * x / (N - 1.0), N * y / (N - 1.0)
    pi_small = (
        math.copysign(1.0, u) ** (N - 1)
        * math.copysign(1.0, w) ** (N - 1)
        * eval_finite_kernel(kM, u, w)
    )
    v = VFunction(HPParam(s), "prelimit", N)
    rank1 = float(eval_V(v, x) * eval_V(v, y)) / v_norm_sq_closed(v)
    rhs = sx * sy * (N / (N - 1.0)) * pi_small + rank1
    return abs(lhs - rhs)


def convergence_profile(s: float, N_list, grid) -> list[tuple[int, float]]:
    """Sup over the grid square of |sgn^N-corrected K_N - limit kernel|,
    reported per N (trend table; the limit is approached without a stated
    rate, so tests assert monotonicity with slack, not speed)."""
    grid = np.asarray(grid, dtype=float)
    lim = LimitKernel(HPParam(s))
    target = limit_kernel_matrix(lim, grid, grid)
    out = []
    for N in N_list:
        kN = build_finite_kernel(HPParam(s), int(N))
        K = kN.kernel_matrix(grid, grid)
        sg = np.sign(grid) ** N
        corrected = sg[:, None] * sg[None, :] * K
        out.append((int(N), float(np.max(np.abs(corrected - target)))))
    return out


def kernel_table_csv(values: np.ndarray, xs, ys) -> str:
    """CSV export (x, y, value) with 17 significant digits."""
    lines = ["x,y,value"]
    for i, xv in enumerate(xs):
        for j, yv in enumerate(ys):
            lines.append(f"{xv:.17g},{yv:.17g},{values[i, j]:.17g}")
    return "\n".join(lines) + "\n"
