"""
Eigenvalue of the discretized generator
=======================================

The semi-discrete right-hand side is a Metzler matrix. Its dominant
eigenvalue, found by shifted power iteration, estimates the growth rate of
the full system including transfers between phases.
"""

import numpy as np

from sizestruct import Grid, ModelParams, dominant_eigenpair, generator_matrix, solve_lambda_star

# %%
# With no transfers the active phase decouples and the generator eigenvalue
# converges to lambda* at first order in the cell width.
p = ModelParams.constant(gamma1=1.0, mu=0.5, beta=(2.0, 1.0))
lam_star = solve_lambda_star(p).lambda_star
for n in (50, 100, 200, 400):
    lam, vec = dominant_eigenpair(generator_matrix(p, Grid(1.0, n)))
    print(f"n={n:3d}: eigenvalue {lam:+.6f}, error {lam - lam_star:+.2e}")

# %%
# Transfers change the spectrum; the Perron vector stays non-negative.
q = ModelParams.constant(gamma1=1.0, mu=0.5, c1=1.0, c2=1.0, beta=(2.0, 1.0))
lam, vec = dominant_eigenpair(generator_matrix(q, Grid(1.0, 200)))
print(f"with transfers: {lam:+.6f}, min eigenvector entry {vec.min():.2e}")
print("active share of the stable profile:", np.sum(vec[:200]) / np.sum(vec))
