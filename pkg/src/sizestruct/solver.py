"""Finite-volume time stepping for the two-phase transport system.

Each phase is advected by a first-order donor-cell (upwind) scheme in
conservative form, with zero influx at ``s = 0`` and free outflow at
``s = m``. The reaction terms and the nonlocal birth integral are advanced
by explicit Euler. One time step is the Lie composition
"reaction/birth first, then transport".
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .coeffs import ModelParams
from .errors import ConfigError, NumericalError, StepError

# default CFL safety factor
SAFETY = 0.9
# default snapshot count when no output times are given
DEFAULT_OUTPUT_COUNT = 50
_STEP_SLACK = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on ``[0, m]``."""

    m: float
    n_cells: int

    def __post_init__(self):
        if not (np.isfinite(self.m) and self.m > 0):
            raise ConfigError("grid size m must be positive")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ConfigError("grid needs n_cells >= 2")
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def cell_width(self) -> float:
        return self.m / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.cell_width

    @property
    def faces(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.cell_width


def build_grid(m: float, n_cells: int) -> Grid:
    return Grid(m, n_cells)


@dataclass(frozen=True, eq=False)
class PopulationState:
    """Cell-averaged densities of the active (``u1``) and resting (``u2``) phases."""

    t: float
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        u1 = np.array(self.u1, dtype=float)
        u2 = np.array(self.u2, dtype=float)
        if u1.shape != u2.shape or u1.ndim != 1:
            raise ConfigError("u1 and u2 must be 1-D arrays of equal length")
        u1.setflags(write=False)
        u2.setflags(write=False)
        object.__setattr__(self, "u1", u1)
        object.__setattr__(self, "u2", u2)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_functions(cls, grid: Grid, f1, f2=None, t: float = 0.0) -> PopulationState:
        """Sample callables (or coefficient functions) at the cell centres."""
        s = grid.centers
        u1 = np.broadcast_to(np.asarray(f1(s), dtype=float), s.shape)
        u2 = np.zeros_like(s) if f2 is None else np.broadcast_to(
            np.asarray(f2(s), dtype=float), s.shape)
        return cls(t, u1, u2)

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> PopulationState:
        return cls(t, np.zeros(grid.n_cells), np.zeros(grid.n_cells))

    def masses(self, grid: Grid) -> tuple[float, float]:
        h = grid.cell_width
        return h * float(np.sum(self.u1)), h * float(np.sum(self.u2))

    def total_mass(self, grid: Grid) -> float:
        return sum(self.masses(grid))

    def l1_norm(self, grid: Grid) -> float:
        return grid.cell_width * float(np.sum(np.abs(self.u1)) + np.sum(np.abs(self.u2)))

    def min_density(self) -> float:
        return float(min(self.u1.min(), self.u2.min()))

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.u1, self.u2])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots at the requested output times plus per-step observables.

    ``observables`` has columns ``t, mass1, mass2, total``; ``outflow`` is the
    cumulative mass that has left through ``s = m`` at each observable time.
    """

    grid: Grid
    states: list
    observables: np.ndarray
    outflow: np.ndarray = field(default=None)

    @property
    def times(self) -> np.ndarray:
        return np.array([st.t for st in self.states])

    @property
    def final(self) -> PopulationState:
        return self.states[-1]


@dataclass(frozen=True, eq=False)
class Discretization:
    """Grid-sampled coefficients shared by the step functions and the generator."""

    gamma1_faces: np.ndarray
    gamma2_faces: np.ndarray
    loss1: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    birth: np.ndarray
    max_speed: float
    max_loss1: float
    max_loss2: float


@functools.lru_cache(maxsize=32)
def discretize(params: ModelParams, grid: Grid) -> Discretization:
    if abs(params.m - grid.m) > 1e-12 * max(grid.m, 1.0):
        raise ConfigError(f"grid m={grid.m} differs from model m={params.m}")
    s, faces, h = grid.centers, grid.faces, grid.cell_width
    birth = h * np.asarray(params.beta(s[:, None], s[None, :]), dtype=float)
    arrays = dict(
        gamma1_faces=params.gamma1(faces),
        gamma2_faces=params.gamma2(faces),
        loss1=params.mu(s) + params.c1(s),
        c1=params.c1(s),
        c2=params.c2(s),
        birth=birth,
    )
    for a in arrays.values():
        a.setflags(write=False)
    return Discretization(
        **arrays,
        max_speed=max(params.gamma1.sup_norm(), params.gamma2.sup_norm()),
        max_loss1=params.mu.sup_norm() + params.c1.sup_norm(),
        max_loss2=params.c2.sup_norm(),
    )


def cfl_dt(params: ModelParams, grid: Grid, safety: float = SAFETY) -> float:
    if not 0 < safety <= 1:
        raise ConfigError("CFL safety factor must lie in (0, 1]")
    speed = max(params.gamma1.sup_norm(), params.gamma2.sup_norm())
    return safety * grid.cell_width / speed


def positivity_dt(params: ModelParams, safety: float = SAFETY) -> float:
    """Largest explicit-Euler step (times ``safety``) that keeps densities non-negative."""
    d = max(params.mu.sup_norm() + params.c1.sup_norm(), params.c2.sup_norm())
    return np.inf if d == 0 else safety / d


def _upwind(u, speeds, dt, h):
    flux = np.empty(u.size + 1)
    flux[0] = 0.0
    flux[1:] = speeds[1:] * u
    return u - (dt / h) * np.diff(flux), dt * flux[-1]


def transport_step(state: PopulationState, params: ModelParams, grid: Grid, dt: float,
                   return_outflow: bool = False):
    """Advance both phases by pure transport.

    With ``return_outflow=True`` also returns the mass that left through
    ``s = m`` during the step.
    """
    d = discretize(params, grid)
    if dt < 0 or dt * d.max_speed > grid.cell_width * (1 + _STEP_SLACK):
        raise StepError(f"dt={dt} violates the CFL bound {grid.cell_width / d.max_speed}")
    h = grid.cell_width
    u1, out1 = _upwind(state.u1, d.gamma1_faces, dt, h)
    u2, out2 = _upwind(state.u2, d.gamma2_faces, dt, h)
    new = PopulationState(state.t + dt, u1, u2)
    return (new, out1 + out2) if return_outflow else new


def reaction_birth_step(state: PopulationState, params: ModelParams, grid: Grid,
                        dt: float) -> PopulationState:
    d = discretize(params, grid)
    if dt <= 0:
        raise StepError("dt must be positive")
    if dt * d.max_loss1 >= 1 or dt * d.max_loss2 >= 1:
        raise StepError(f"dt={dt} too large for a positivity-preserving reaction step")
    u1, u2 = state.u1, state.u2
    du1 = -d.loss1 * u1 + d.birth @ u1 + d.c2 * u2
    du2 = d.c1 * u1 - d.c2 * u2
    return PopulationState(state.t, u1 + dt * du1, u2 + dt * du2)


def lie_step(state: PopulationState, params: ModelParams, grid: Grid, dt: float,
             return_outflow: bool = False):
    half = reaction_birth_step(state, params, grid, dt)
    out = transport_step(half, params, grid, dt, return_outflow=return_outflow)
    if return_outflow:
        return out
    return PopulationState(state.t + dt, out.u1, out.u2)


def swapped_lie_step(state: PopulationState, params: ModelParams, grid: Grid,
                     dt: float) -> PopulationState:
    """Transport first, then reaction/birth (used for splitting-order checks)."""
    half = transport_step(state, params, grid, dt)
    out = reaction_birth_step(half, params, grid, dt)
    return PopulationState(state.t, out.u1, out.u2)


def default_output_times(t_end: float, count: int = DEFAULT_OUTPUT_COUNT) -> np.ndarray:
    return np.linspace(0.0, t_end, count + 1)[1:]


def simulate(params: ModelParams, grid: Grid, initial: PopulationState, t_end: float,
             output_times=None, safety: float = SAFETY) -> Trajectory:
    """Integrate from ``initial.t`` up to ``t_end`` with fixed-size Lie steps.

    The step size is the smaller of the CFL and positivity limits, shortened
    only to land exactly on the requested output times.
    """
    if initial.u1.size != grid.n_cells:
        raise ConfigError("initial state does not match the grid")
    if initial.min_density() < 0:
        raise ConfigError("initial state must be non-negative")
    if not (np.isfinite(t_end) and t_end >= 0):
        raise ConfigError("t_end must be finite and non-negative")
    t0 = initial.t
    if output_times is None:
        output_times = t0 + default_output_times(t_end - t0) if t_end > t0 else []
    targets = sorted({float(t) for t in output_times if t > t0})
    if targets and targets[-1] > t_end * (1 + 1e-12):
        raise ConfigError("output times must not exceed t_end")
    if t_end > t0 and (not targets or targets[-1] < t_end):
        targets.append(float(t_end))
    dt_max = min(cfl_dt(params, grid, safety), positivity_dt(params, safety))

    state = initial
    states = [initial]
    m1, m2 = initial.masses(grid)
    obs = [(t0, m1, m2, m1 + m2)]
    outflow = [0.0]
    cumulative = 0.0
    for target in targets:
        while state.t < target:
            gap = target - state.t
            dt = dt_max if gap > dt_max * (1 + 1e-9) else gap
            state, out = lie_step(state, params, grid, dt, return_outflow=True)
            if gap == dt:
                state = PopulationState(target, state.u1, state.u2)
            if not (np.all(np.isfinite(state.u1)) and np.all(np.isfinite(state.u2))):
                raise NumericalError(f"non-finite densities at t={state.t}")
            cumulative += out
            m1, m2 = state.masses(grid)
            obs.append((state.t, m1, m2, m1 + m2))
            outflow.append(cumulative)
        states.append(state)
    return Trajectory(grid, states, np.array(obs), np.array(outflow))
