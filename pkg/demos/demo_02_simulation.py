"""
Time stepping the two-phase system
==================================

Upwind transport plus an explicit reaction/birth step, composed by Lie
splitting. Observables are recorded at every step.
"""

import numpy as np

from sizestruct import Grid, ModelParams, PopulationState, constant, gaussian_bump, simulate
from sizestruct.asymptotics import tau

grid = Grid(1.0, 200)

# %%
# Pure transport: a bump moves with speed one and exits at s = m.
transport_only = ModelParams.constant(beta=0.0)
init = PopulationState.from_functions(grid, gaussian_bump(0.25, 0.05, 1.0))
traj = simulate(transport_only, grid, init, 0.5, [0.25, 0.5])
peak = grid.centers[np.argmax(traj.final.u1)]
print(f"peak moved from 0.25 to {peak:.3f}")

# %%
# Transfers between the phases conserve mass; only the outflow at s = m removes it.
swap = ModelParams.constant(c1=1.0, c2=0.5, beta=0.0)
traj = simulate(swap, grid, init, 1.5)
balance = traj.observables[:, 3] + traj.outflow
print("mass + outflow stays at", balance.min(), "to", balance.max())

# %%
# Without births everything has left by tau(m), the slowest crossing time.
t_exit = 1.2 * tau(swap, 1.0)
traj = simulate(swap, Grid(1.0, 400), PopulationState.from_functions(
    Grid(1.0, 400), constant(1.0), constant(1.0)), t_exit)
print(f"mass left at t={t_exit:.2f}: {traj.final.total_mass(traj.grid):.2e}")

# %%
# With births, the total mass settles into exponential growth or decay.
growing = ModelParams.constant(mu=0.5, beta=(4.0, 1.0))
traj = simulate(growing, grid, init, 10.0)
t, total = traj.observables[:, 0], traj.observables[:, 3]
print("log-mass slope over the last half:",
      np.polyfit(t[t > 5], np.log(total[t > 5]), 1)[0])
