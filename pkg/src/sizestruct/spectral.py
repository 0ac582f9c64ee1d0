"""Dominant eigenvalues from the characteristic equation and from the generator.

For a separable birth kernel ``beta(s, y) = sum_k b1_k(s) b2_k(y)`` the
active-phase eigenproblem with transfer ``c1`` counted as mortality reduces
to ``det(I - M(lam)) = 0`` where

    M_jk(lam) = int_0^m b2_j(s) int_0^s b1_k(y)/gamma1(y)
                    * exp(-(E(s) - E(y))) dy ds,
    E(s) = int_0^s (lam + mu + c1 + gamma1') / gamma1 dr.

For rank one, ``M_11 = K(lam)``. The integrals are evaluated by composite
Gauss-Legendre quadrature on panels aligned with every breakpoint of the
coefficients, so piecewise tables (including envelope indicators) are
integrated without smearing their jumps.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .coeffs import ModelParams, SeparableKernel
from .errors import ConfigError, ConvergenceError, NoRootError, NumericalError
from .solver import Grid, discretize

GL_ORDER = 4
DEFAULT_PANELS = 64
BRACKET_CAP = 1e6
SCAN_STEP = 0.5
# scan steps taken at SCAN_STEP before the step starts doubling
SCAN_LINEAR_STEPS = 200
POWER_MAX_ITER = 100_000
# exponents are clipped here; beyond it K is astronomically large anyway
_EXP_CLIP = 600.0


@dataclass(frozen=True)
class SpectralResult:
    lambda_star: float
    k_at_zero: float
    bracket: tuple
    method: str
    iterations: int


class CharacteristicQuadrature:
    """Precomputed quadrature for ``M(lam)`` given fixed model coefficients.

    Everything that does not depend on ``lam`` is tabulated once, so each
    call to :meth:`matrix` costs one ``N x N`` exponential with ``N`` the
    number of outer nodes.
    """

    def __init__(self, params: ModelParams, panels: int = DEFAULT_PANELS):
        beta = params.beta
        if not isinstance(beta, SeparableKernel):
            raise ConfigError("characteristic matrix needs a separable birth kernel")
        if panels < 1:
            raise ConfigError("panel count must be >= 1")
        self.params = params
        self.rank = beta.rank
        m = params.m

        bps = set(np.linspace(0.0, m, panels + 1))
        for f in (params.gamma1, params.mu, params.c1):
            bps.update(f.breakpoints())
        for b1, b2 in beta.terms:
            bps.update(b1.breakpoints())
            bps.update(b2.breakpoints())
        edges = np.unique(np.clip(np.array(sorted(bps)), 0.0, m))
        self.edges = edges
        x, w = np.polynomial.legendre.leggauss(GL_ORDER)
        self._x, self._w = x, w

        lo, hi = edges[:-1], edges[1:]
        half = 0.5 * (hi - lo)
        nodes = (lo[:, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        panel = np.repeat(np.arange(len(lo)), GL_ORDER)

        # cumulative integrals of 1/gamma1 and (mu + c1 + gamma1')/gamma1
        tau_edge, e0_edge = self._cumulative_edges()
        tau_s, e0_s = self._partial(tau_edge, e0_edge, panel, nodes)

        # partial-panel nodes [edge_p, s_i] for the inner integral
        left = lo[panel]
        phalf = 0.5 * (nodes - left)
        pnodes = left[:, None] + phalf[:, None] * (x[None, :] + 1.0)
        pweights = phalf[:, None] * w[None, :]
        tau_p, e0_p = self._partial(tau_edge, e0_edge,
                                    np.repeat(panel, GL_ORDER), pnodes.ravel())
        tau_p = tau_p.reshape(pnodes.shape)
        e0_p = e0_p.reshape(pnodes.shape)

        g1 = params.gamma1
        inner_full = np.array([b1(nodes) / g1(nodes) for b1, _ in beta.terms])
        inner_part = np.array([b1(pnodes) / g1(pnodes) for b1, _ in beta.terms])
        outer = np.array([b2(nodes) for _, b2 in beta.terms])

        self.n_nodes = nodes.size
        self._full_mask = panel[None, :] < panel[:, None]
        self._dtau_full = tau_s[:, None] - tau_s[None, :]
        self._de0_full = e0_s[:, None] - e0_s[None, :]
        self._dtau_part = tau_s[:, None] - tau_p
        self._de0_part = e0_s[:, None] - e0_p
        # weighted integrands: (rank, N) and (rank, N, GL_ORDER)
        self._gw_full = inner_full * weights[None, :]
        self._gw_part = inner_part * pweights[None, :, :]
        self._outer_w = outer * weights[None, :]

    def _rates(self, r):
        p = self.params
        g = p.gamma1(r)
        return 1.0 / g, (p.mu(r) + p.c1(r) + p.gamma1.derivative(r)) / g

    def _cumulative_edges(self):
        edges, x, w = self.edges, self._x, self._w
        lo, hi = edges[:-1], edges[1:]
        half = 0.5 * (hi - lo)
        r = lo[:, None] + half[:, None] * (x[None, :] + 1.0)
        inv_g, rate = self._rates(r)
        tau = np.concatenate([[0.0], np.cumsum((inv_g * w).sum(axis=1) * half)])
        e0 = np.concatenate([[0.0], np.cumsum((rate * w).sum(axis=1) * half)])
        return tau, e0

    def _partial(self, tau_edge, e0_edge, panel, pts):
        """Cumulative integrals at arbitrary points inside known panels."""
        x, w = self._x, self._w
        left = self.edges[panel]
        half = 0.5 * (pts - left)
        r = left[:, None] + half[:, None] * (x[None, :] + 1.0)
        inv_g, rate = self._rates(r)
        tau = tau_edge[panel] + half * (inv_g * w).sum(axis=1)
        e0 = e0_edge[panel] + half * (rate * w).sum(axis=1)
        return tau, e0

    def matrix(self, lam: float) -> tuple[np.ndarray, bool]:
        """Return ``(M(lam), saturated)``.

        ``saturated`` is true when some exponent hit the overflow clip, in
        which case entries are lower bounds of astronomically large values.
        """
        arg_full = -(lam * self._dtau_full + self._de0_full)
        arg_part = -(lam * self._dtau_part + self._de0_part)
        arg_full = np.where(self._full_mask, arg_full, -np.inf)
        saturated = bool(np.max(arg_full) > _EXP_CLIP or np.max(arg_part) > _EXP_CLIP)
        ef = np.exp(np.minimum(arg_full, _EXP_CLIP))
        ep = np.exp(np.minimum(arg_part, _EXP_CLIP))
        # inner[k, i] = int_0^{s_i} g_k(y) exp(-(E(s_i) - E(y))) dy
        inner = self._gw_full @ ef.T + np.einsum("kiq,iq->ki", self._gw_part, ep)
        mat = self._outer_w @ inner.T
        return mat, saturated


@functools.lru_cache(maxsize=64)
def _quadrature(params: ModelParams, panels: int) -> CharacteristicQuadrature:
    return CharacteristicQuadrature(params, panels)


def _require_rank_one(params: ModelParams):
    beta = params.beta
    if not isinstance(beta, SeparableKernel) or beta.rank != 1:
        raise ConfigError("K(lambda) needs a rank-one separable kernel; use the rank-n path")


def rank_n_char_matrix(params: ModelParams, lam: float,
                       panels: int = DEFAULT_PANELS) -> np.ndarray:
    """The ``n x n`` characteristic matrix ``M(lam)`` of a rank-n separable kernel."""
    mat, saturated = _quadrature(params, panels).matrix(float(lam))
    if saturated or not np.all(np.isfinite(mat)):
        raise NumericalError(f"characteristic matrix overflows at lambda={lam}")
    return mat


def K_of_lambda(params: ModelParams, lam: float, panels: int = DEFAULT_PANELS) -> float:
    _require_rank_one(params)
    return float(rank_n_char_matrix(params, lam, panels)[0, 0])


def closed_form_K(params: ModelParams, lam: float) -> float:
    """``K(lam)`` for constant ``gamma1, mu, c1`` and constant rank-one factors."""
    _require_rank_one(params)
    b1, b2 = params.beta.terms[0]
    coeffs = (params.gamma1, params.mu, params.c1, b1, b2)
    if any(f.form != "constant" for f in coeffs):
        raise ConfigError("closed form needs constant gamma1, mu, c1 and kernel factors")
    g, mu, c1, bb1, bb2 = (f.params[0] for f in coeffs)
    m = params.m
    kappa = (lam + mu + c1) / g
    x = kappa * m
    if abs(x) < 1e-4:
        # series of (1/kappa)[m - (1 - exp(-kappa m))/kappa]
        core = m * m * (0.5 - x / 6.0 + x * x / 24.0)
    else:
        core = (m + np.expm1(-x) / kappa) / kappa
    return bb1 * bb2 / g * core


def _bisect(fn, lo, hi, tol, positive_at_lo):
    """Bisection for a sign change; ``fn`` returns +1/-1/0."""
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        sign = fn(mid)
        it += 1
        if sign == 0:
            return mid, (mid, mid), it
        if (sign > 0) == positive_at_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), (lo, hi), it


def solve_lambda_star(params: ModelParams, tol: float = 1e-10,
                      panels: int = DEFAULT_PANELS, method: str = "quadrature") -> SpectralResult:
    """Unique real root of ``K(lam) = 1`` by bracket doubling and bisection.

    ``method="closed_form"`` evaluates ``K`` analytically (constant
    coefficients only) instead of by quadrature.
    """
    _require_rank_one(params)
    if params.beta.is_trivial():
        raise NoRootError("birth kernel is identically zero")
    if method == "quadrature":
        quad = _quadrature(params, panels)

        def kval(lam):
            mat, saturated = quad.matrix(lam)
            return np.inf if saturated else float(mat[0, 0])
        tag = "quadrature_bisection"
    elif method == "closed_form":
        def kval(lam):
            with np.errstate(over="ignore"):
                return float(closed_form_K(params, lam))
        tag = "closed_form"
    else:
        raise ConfigError(f"unknown method {method!r}")

    lo, hi = -1.0, 1.0
    it = 0
    while not kval(lo) > 1:
        lo *= 2
        it += 1
        if -lo > BRACKET_CAP:
            raise NoRootError("K(lambda) stays below 1; kernel is effectively zero")
    while not kval(hi) < 1:
        hi *= 2
        it += 1
        if hi > BRACKET_CAP:
            raise NoRootError("K(lambda) stays above 1 up to the bracket cap")

    def sign(lam):
        k = kval(lam)
        return 0 if k == 1 else (1 if k > 1 else -1)

    root, bracket, n = _bisect(sign, lo, hi, tol, positive_at_lo=True)
    return SpectralResult(root, kval(0.0), bracket, tag, it + n)


def det_char(params: ModelParams, lam: float, panels: int = DEFAULT_PANELS) -> float:
    """``det(I - M(lam))``."""
    mat = rank_n_char_matrix(params, lam, panels)
    return float(np.linalg.det(np.eye(mat.shape[0]) - mat))


def reproduction_number(params: ModelParams, panels: int = DEFAULT_PANELS) -> float:
    """Spectral radius of ``M(0)``; equals ``K(0)`` for a rank-one kernel."""
    mat = rank_n_char_matrix(params, 0.0, panels)
    if mat.shape == (1, 1):
        return float(mat[0, 0])
    return float(np.max(np.abs(np.linalg.eigvals(mat))))


def solve_rank_n_root(params: ModelParams, tol: float = 1e-10,
                      panels: int = DEFAULT_PANELS) -> SpectralResult:
    """Largest real root of ``det(I - M(lam))``.

    Starts from a ``lam`` where the row sums of ``M`` are below one (so no
    root lies above it) and scans downward in steps of 0.5 for a sign
    change, then bisects. After ``SCAN_LINEAR_STEPS`` steps the step doubles
    each time so the scan reaches the bracket cap in reasonable time. This
    is a heuristic: two roots closer than one scan step can be missed.
    """
    beta = params.beta
    if not isinstance(beta, SeparableKernel):
        raise ConfigError("rank-n root needs a separable kernel")
    if beta.is_trivial():
        raise NoRootError("birth kernel is identically zero")
    quad = _quadrature(params, panels)
    eye = np.eye(quad.rank)

    def fval(lam):
        mat, saturated = quad.matrix(lam)
        if saturated:
            return None, mat
        return float(np.linalg.det(eye - mat)), mat

    hi = 1.0
    it = 0
    while True:
        f_hi, mat = fval(hi)
        it += 1
        if f_hi is not None and np.max(mat.sum(axis=1)) < 1:
            break
        hi = 2 * hi if hi > 0 else 1.0
        if hi > BRACKET_CAP:
            raise NoRootError("characteristic matrix does not decay")

    step = SCAN_STEP
    upper = hi
    while True:
        lower = upper - step
        if lower < -BRACKET_CAP:
            raise NoRootError("no sign change of det(I - M) above the bracket cap")
        f_lower, _ = fval(lower)
        it += 1
        if f_lower is None:
            raise NoRootError(f"characteristic matrix overflowed at {lower} before a sign change")
        if f_lower <= 0:
            break
        upper = lower
        if it > SCAN_LINEAR_STEPS:
            step *= 2

    if f_lower == 0:
        root, bracket, n = lower, (lower, lower), 0
    else:
        def sign(lam):
            f, _ = fval(lam)
            return 0 if f == 0 else (1 if f > 0 else -1)
        # f > 0 at the upper end
        root, bracket, n = _bisect(sign, lower, upper, tol, positive_at_lo=False)
    return SpectralResult(root, reproduction_number(params, panels), bracket,
                          "rank_n_determinant", it + n)


# ---------------------------------------------------------------------------
# discretised generator


def transport_matrix(params: ModelParams, grid: Grid) -> np.ndarray:
    d = discretize(params, grid)
    n, h = grid.n_cells, grid.cell_width
    mat = np.zeros((2 * n, 2 * n))
    for block, speeds in ((0, d.gamma1_faces), (1, d.gamma2_faces)):
        off = block * n
        idx = np.arange(n)
        mat[off + idx, off + idx] = -speeds[1:] / h
        mat[off + idx[1:], off + idx[:-1]] = speeds[1:-1] / h
    return mat


def reaction_matrix(params: ModelParams, grid: Grid) -> np.ndarray:
    d = discretize(params, grid)
    n = grid.n_cells
    idx = np.arange(n)
    mat = np.zeros((2 * n, 2 * n))
    mat[:n, :n] = d.birth
    mat[idx, idx] -= d.loss1
    mat[idx, n + idx] = d.c2
    mat[n + idx, idx] = d.c1
    mat[n + idx, n + idx] = -d.c2
    return mat


def generator_matrix(params: ModelParams, grid: Grid) -> np.ndarray:
    """Matrix of the semi-discrete right-hand side acting on ``[u1, u2]``."""
    return transport_matrix(params, grid) + reaction_matrix(params, grid)


def dominant_eigenpair(matrix: np.ndarray, tol: float = 1e-10,
                       max_iter: int = POWER_MAX_ITER) -> tuple[float, np.ndarray]:
    lam, vec, _ = power_iteration(matrix, tol, max_iter)
    return lam, vec


def power_iteration(matrix: np.ndarray, tol: float = 1e-10,
                    max_iter: int = POWER_MAX_ITER) -> tuple[float, np.ndarray, int]:
    """Shifted power iteration for a Metzler matrix.

    Iterates on ``matrix + sigma*I`` with ``sigma = |min diag| + 1``, whose
    spectral radius is the dominant real eigenvalue plus ``sigma``. The
    eigenvector is returned with unit L1 norm and non-negative orientation.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError("matrix must be square")
    sigma = abs(float(np.min(np.diag(a)))) + 1.0
    shifted = a + sigma * np.eye(a.shape[0])
    v = np.full(a.shape[0], 1.0 / a.shape[0])
    rho_prev = np.inf
    for it in range(1, max_iter + 1):
        w = shifted @ v
        norm = np.sum(np.abs(w))
        if not np.isfinite(norm) or norm == 0:
            raise NumericalError("power iteration collapsed")
        rho = norm / np.sum(np.abs(v))
        if np.sum(w) < 0:
            w = -w
        v_new = w / norm
        lam = rho - sigma
        residual = np.sum(np.abs(a @ v_new - lam * v_new))
        if abs(rho - rho_prev) < tol and residual < tol:
            return float(lam), v_new, it
        rho_prev, v = rho, v_new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def generator_eigenvalue(params: ModelParams, grid: Grid, tol: float = 1e-10) -> SpectralResult:
    lam, _, it = power_iteration(generator_matrix(params, grid), tol)
    return SpectralResult(lam, float("nan"), (lam, lam), "generator_power_iteration", it)
