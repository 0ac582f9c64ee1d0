"""
Long-time behaviour and qualitative checks
==========================================

Fitted growth rates and the profile convergence they come with, followed by
the sufficient conditions for extinction and for irreducibility.
"""

from sizestruct import (Grid, ModelParams, PopulationState, aeg_check, constant,
                        extinction_sufficient, growth_rate, irreducibility_conditions,
                        simulate, table)

grid = Grid(1.0, 200)
p = ModelParams.constant(gamma1=1.0, gamma2=1.0, mu=0.2, c1=1.0, c2=1.0, beta=1.0)

# %%
# Two initial states with disjoint supports, one per phase.
a = PopulationState.from_functions(grid, table([0, 0.1, 0.3, 1], [0, 1, 0], interpolation="step"))
b = PopulationState.from_functions(grid, constant(0.0),
                                   table([0, 0.6, 0.9, 1], [0, 1, 0], interpolation="step"))
rep = aeg_check(p, grid, a, b, 60.0)
print(f"rates {rep.rate_a:.5f} / {rep.rate_b:.5f}; profile distance "
      f"{rep.profile_distance:.1e}; verdict {rep.verdict}")

# %%
# The irreducibility conditions explain why the profiles forget the start.
print(irreducibility_conditions(p, 0.25))

# %%
# A fitted growth rate from a single run.
est = growth_rate(simulate(p, grid, a, 30.0))
print(f"growth rate {est.rate:.5f} (r^2 = {est.r_squared:.6f}) on window {est.window}")

# %%
# The sufficient extinction condition mB + C < min(inf(mu + c1), inf c2) is
# conservative: with constant c2 it can never hold.
for beta, c1, c2, mu in [(0.1, 0.2, 0.2, 0.3), (0.05, 0.1, 0.5, 0.4), (0.0, 0.0, 0.5, 0.6)]:
    chk = extinction_sufficient(ModelParams.constant(mu=mu, c1=c1, c2=c2, beta=beta))
    print(f"lhs {chk.lhs:.3f}  rhs {chk.rhs:.3f}  holds {chk.holds}")
