"""Long-time behaviour of simulations and the qualitative model conditions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import ModelParams
from .errors import ConfigError, DomainError, ExtinctError
from .solver import Grid, PopulationState, Trajectory, simulate

TAU_POINTS = 1000
SUPPORT_SAMPLES = 100
_trapezoid = getattr(np, "trapezoid", None) or np.trapz
AEG_VERDICT = "AEG-consistent"
NOT_AEG_VERDICT = "not-AEG-consistent"


@dataclass(frozen=True, eq=False)
class GrowthEstimate:
    """Exponential growth rate fitted on a trailing window.

    ``profile`` has shape ``(2, n_cells)`` (active, resting) and unit L1 mass.
    """

    rate: float
    window: tuple
    r_squared: float
    profile: np.ndarray


def tau(params: ModelParams, s: float) -> float:
    """Upper bound on the time needed to grow from size 0 to size ``s``."""
    if not 0 <= s <= params.m * (1 + 1e-12):
        raise DomainError(f"size {s} outside [0, {params.m}]")
    if s == 0:
        return 0.0
    r = np.linspace(0.0, min(s, params.m), TAU_POINTS)
    return float(_trapezoid(1.0 / params.gamma_min(r), r))


def normalized_profile(state: PopulationState, grid: Grid) -> np.ndarray:
    mass = state.l1_norm(grid)
    if mass <= 0:
        raise ExtinctError(f"state at t={state.t} carries no mass")
    return np.vstack([state.u1, state.u2]) / mass


def profile_distance(a: np.ndarray, b: np.ndarray, grid: Grid) -> float:
    """L1 distance between two stacked profiles."""
    return grid.cell_width * float(np.sum(np.abs(a - b)))


def growth_rate(trajectory: Trajectory, window_fraction: float = 0.5) -> GrowthEstimate:
    """Least-squares slope of ``log(total mass)`` over the trailing window."""
    if not 0 < window_fraction <= 1:
        raise ConfigError("window_fraction must lie in (0, 1]")
    obs = np.asarray(trajectory.observables)
    if len(obs) < 10:
        raise ConfigError("growth-rate fit needs at least 10 observable points")
    t, total = obs[:, 0], obs[:, 3]
    t_start = t[-1] - window_fraction * (t[-1] - t[0])
    sel = t >= t_start
    tw, mw = t[sel], total[sel]
    if np.any(mw <= 0):
        raise ExtinctError("total mass vanished inside the fitting window")
    y = np.log(mw)
    slope, intercept = np.polyfit(tw, y, 1)
    resid = y - (slope * tw + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    profile = normalized_profile(trajectory.final, trajectory.grid)
    return GrowthEstimate(float(slope), (float(tw[0]), float(tw[-1])), r2, profile)


def profile_distances(trajectory: Trajectory) -> np.ndarray:
    """Distance of every normalized snapshot to the final normalized profile."""
    grid = trajectory.grid
    final = normalized_profile(trajectory.final, grid)
    return np.array([profile_distance(normalized_profile(st, grid), final, grid)
                     for st in trajectory.states])


@dataclass(frozen=True)
class AEGReport:
    rate_a: float
    rate_b: float
    profile_distance: float
    settle_distance_a: float
    settle_distance_b: float
    verdict: str


def aeg_check(params: ModelParams, grid: Grid, initial_a: PopulationState,
              initial_b: PopulationState, t_end: float, tol: float = 0.05,
              window_fraction: float = 0.5, output_count: int = 20) -> AEGReport:
    """Compare the long-time profiles reached from two initial conditions.

    ``settle_distance_*`` is the distance between each run's normalized
    profile at ``t_end/2`` and at ``t_end``.
    """
    for init in (initial_a, initial_b):
        if init.min_density() < 0 or init.total_mass(grid) <= 0:
            raise ConfigError("AEG initial states must be non-negative and non-zero")
    times = np.linspace(0.0, t_end, 2 * (output_count // 2) + 1)[1:]
    runs = [simulate(params, grid, init, t_end, times) for init in (initial_a, initial_b)]
    estimates = [growth_rate(tr, window_fraction) for tr in runs]
    settle = []
    for tr in runs:
        mid = tr.states[int(np.argmin(np.abs(tr.times - 0.5 * t_end)))]
        settle.append(profile_distance(normalized_profile(mid, grid),
                                       normalized_profile(tr.final, grid), grid))
    dist = profile_distance(estimates[0].profile, estimates[1].profile, grid)
    ok = (dist < tol and max(settle) < tol
          and abs(estimates[0].rate - estimates[1].rate) < tol)
    return AEGReport(estimates[0].rate, estimates[1].rate, dist, settle[0], settle[1],
                     AEG_VERDICT if ok else NOT_AEG_VERDICT)


@dataclass(frozen=True)
class ExtinctionCheck:
    holds: bool
    lhs: float
    rhs: float
    birth_bound: float
    transfer_bound: float


def extinction_sufficient(params: ModelParams) -> ExtinctionCheck:
    """Sufficient condition ``m*B + C < min(inf(mu + c1), inf c2)`` for decay."""
    b = params.birth_bound()
    c = params.transfer_bound()
    lhs = params.m * b + c
    # mu + c1 is piecewise linear between the union of breakpoints
    s = np.union1d(params.mu.breakpoints(), params.c1.breakpoints())
    if "gaussian_bump" in (params.mu.form, params.c1.form):
        s = np.union1d(s, np.linspace(0.0, params.m, 10 * TAU_POINTS + 1))
    inf_loss = float(np.min(params.mu(s) + params.c1(s)))
    rhs = min(inf_loss, params.c2.inf_value())
    return ExtinctionCheck(bool(lhs < rhs), lhs, rhs, b, c)


@dataclass(frozen=True)
class IrreducibilityReport:
    birth_corner_ok: bool
    c1_at_zero_ok: bool
    c2_at_m_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.birth_corner_ok and self.c1_at_zero_ok and self.c2_at_m_ok


def birth_corner_integral(params: ModelParams, delta: float) -> float:
    """Midpoint rule for the kernel mass on ``[0, delta] x [m - delta, m]``."""
    m, n = params.m, SUPPORT_SAMPLES
    h = delta / n
    s = (np.arange(n) + 0.5) * h
    y = m - delta + (np.arange(n) + 0.5) * h
    return float(h * h * np.sum(params.beta(s[:, None], y[None, :])))


def irreducibility_conditions(params: ModelParams, epsilon: float) -> IrreducibilityReport:
    """Check the birth-corner and transfer-support conditions at eps, eps/2, eps/4."""
    m = params.m
    if not 0 < epsilon <= m / 2:
        raise ConfigError("epsilon must lie in (0, m/2]")
    deltas = (epsilon, epsilon / 2, epsilon / 4)
    corner = all(birth_corner_integral(params, d) > 0 for d in deltas)
    c1_ok = all(np.max(params.c1(np.linspace(0.0, d, SUPPORT_SAMPLES))) > 0 for d in deltas)
    c2_ok = all(np.max(params.c2(np.linspace(m - d, m, SUPPORT_SAMPLES))) > 0 for d in deltas)
    return IrreducibilityReport(corner, c1_ok, c2_ok)
