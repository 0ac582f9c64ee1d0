"""
Model coefficients and birth kernels
====================================

Every rate in the model is a function of size on [0, m]. Four forms are
available, and the birth kernel is either a sum of products or a table.
"""

import numpy as np

from sizestruct import (GeneralKernel, ModelParams, SeparableKernel, constant,
                        gaussian_bump, linear, separable_envelope, table)

# growth speed that increases with size, evaluated on a few points
gamma1 = linear(1.0, 0.5)
s = np.linspace(0, 1, 5)
print("gamma1(s)      =", gamma1(s))
print("gamma1'(s)     =", gamma1.derivative(s))

# bounds used by the step-size and extinction checks are exact for each form
bump = gaussian_bump(0.3, 0.1, 2.0)
print("sup/inf bump   =", bump.sup_norm(), bump.inf_value())

# piecewise tables: linear interpolation or right-continuous steps
ramp = table([0, 0.5, 1], [0.0, 1.0, 1.0])
steps = table([0, 0.5, 1], [0.2, 0.8], interpolation="step")
print("ramp(0.25)     =", ramp(0.25), " steps(0.5) =", steps(0.5))

# %%
# A rank-one kernel beta(s, y) = b1(s) * b2(y): offspring of size s, parent of size y
beta = SeparableKernel.rank_one(gaussian_bump(0.1, 0.1, 5.0), linear(0.0, 1.0))
params = ModelParams(gamma1, constant(0.8), constant(0.3), constant(0.5), constant(0.5), beta)
print("B =", params.birth_bound(), " C =", params.transfer_bound())

# %%
# A general kernel is bilinear on a tensor grid. Step-function envelopes of
# rank n bound it from below and above and tighten as n grows.
product = GeneralKernel.from_function(lambda s, y: s * y, 1.0, 11)
grid = (np.arange(200) + 0.5) / 200
S, Y = grid[:, None], grid[None, :]
for n in (1, 2, 4, 8):
    lo = separable_envelope(product, n, "lower")(S, Y)
    hi = separable_envelope(product, n, "upper")(S, Y)
    print(f"n={n}: mean envelope gap {np.mean(hi - lo):.4f}")

# invalid inputs are rejected when the parameters are built
try:
    ModelParams.constant(gamma1=0.0, beta=1.0)
except ValueError as exc:
    print("rejected:", exc)
