"""
The characteristic equation K(lambda) = 1
=========================================

For a rank-one kernel the dominant eigenvalue of the active phase solves
K(lambda) = 1. K is evaluated by composite Gauss-Legendre quadrature and
the root is found by bracketing and bisection.
"""

from sizestruct import (K_of_lambda, ModelParams, SeparableKernel, constant, gaussian_bump,
                        linear, solve_lambda_star, solve_rank_n_root)
from sizestruct.spectral import closed_form_K

# %%
# Constant coefficients have a closed form; the quadrature reproduces it.
p = ModelParams.constant(gamma1=1.0, mu=0.5, beta=(2.0, 1.0))
for lam in (-0.4, 0.0, 1.0, 10.0):
    print(f"K({lam:5.1f}) quadrature {K_of_lambda(p, lam):.12f}"
          f"  closed form {closed_form_K(p, lam):.12f}")

# %%
# The sign of lambda* follows the sign of K(0) - 1.
for b in (2.0, 4.0):
    r = solve_lambda_star(ModelParams.constant(gamma1=1.0, mu=0.5, beta=(b, 1.0)))
    print(f"b={b}: K(0)={r.k_at_zero:.6f}, lambda*={r.lambda_star:+.10f}, bracket={r.bracket}")

# %%
# Variable coefficients go through the same machinery.
var = ModelParams(linear(1.0, 1.0), constant(1.0), linear(0.1, 0.4), constant(0.2),
                  constant(0.3), SeparableKernel.rank_one(gaussian_bump(0.1, 0.2, 4.0),
                                                          linear(0.0, 2.0)))
print("variable coefficients: lambda* =", solve_lambda_star(var).lambda_star)

# %%
# Rank-n kernels: the root of det(I - M(lambda)). Splitting one factor into two
# equal halves leaves the kernel and therefore the root unchanged.
b1, b2 = gaussian_bump(0.1, 0.2, 4.0), linear(0.0, 2.0)
half = b1.scaled(0.5)
dup = ModelParams(var.gamma1, var.gamma2, var.mu, var.c1, var.c2,
                  SeparableKernel(((half, b2), (half, b2))))
print("rank-2 duplicate: lambda* =", solve_rank_n_root(dup).lambda_star)
