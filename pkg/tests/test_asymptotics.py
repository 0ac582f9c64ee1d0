import numpy as np
import pytest

from sizestruct.asymptotics import (aeg_check, birth_corner_integral, extinction_sufficient,
                                    growth_rate, irreducibility_conditions, profile_distances,
                                    tau)
from sizestruct.coeffs import ModelParams, SeparableKernel, constant, gaussian_bump, linear, table
from sizestruct.errors import ConfigError, DomainError, ExtinctError
from sizestruct.solver import Grid, PopulationState, Trajectory, simulate
from sizestruct.spectral import generator_eigenvalue

from conftest import product_kernel, with_kernel


def synthetic(mass_fn, n=40, t_end=10.0):
    grid = Grid(1.0, 4)
    t = np.linspace(0, t_end, n)
    total = mass_fn(t)
    obs = np.column_stack([t, total, np.zeros(n), total])
    final = PopulationState(t[-1], np.full(4, total[-1]), np.zeros(4))
    return Trajectory(grid, [final], obs, np.zeros(n))


def indicator(lo, hi):
    return table([0, lo, hi, 1], [0.0, 1.0, 0.0], interpolation="step")


# --- tau -----------------------------------------------------------------------

@pytest.mark.parametrize("g1, g2, expected", [
    (constant(1), constant(1), 1.0),
    (constant(2), constant(1), 1.0),
    (linear(1, 1), linear(1, 1), np.log(2)),
])
def test_tau(g1, g2, expected):
    p = ModelParams(g1, g2, constant(0), constant(0), constant(0),
                    SeparableKernel.rank_one(constant(1), constant(1)))
    assert tau(p, 1.0) == pytest.approx(expected, abs=1e-6)


def test_tau_monotone_and_zero():
    p = ModelParams(linear(1, 1), gaussian_bump(0.5, 0.3, 2.0), constant(0), constant(0),
                    constant(0), SeparableKernel.rank_one(constant(1), constant(1)))
    vals = [tau(p, s) for s in np.linspace(0, 1, 30)]
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) > 0)


def test_tau_domain():
    with pytest.raises(DomainError):
        tau(ModelParams.constant(beta=1.0), 1.5)


# --- growth rate -----------------------------------------------------------------

def test_growth_rate_exponential():
    est = growth_rate(synthetic(lambda t: np.exp(0.3 * t)))
    assert est.rate == pytest.approx(0.3, abs=1e-10)
    assert est.r_squared == pytest.approx(1.0, abs=1e-12)


def test_growth_rate_constant():
    est = growth_rate(synthetic(lambda t: 2.5 + 0 * t))
    assert abs(est.rate) <= 1e-12


def test_growth_rate_window():
    est = growth_rate(synthetic(lambda t: np.exp(-t)), window_fraction=0.25)
    assert est.window[0] >= 7.5 and est.window[1] == 10.0


def test_growth_rate_needs_ten_points():
    with pytest.raises(ConfigError):
        growth_rate(synthetic(lambda t: np.exp(t), n=9))


def test_growth_rate_extinct():
    with pytest.raises(ExtinctError) as info:
        growth_rate(synthetic(lambda t: np.where(t > 5, 0.0, 1.0)))
    assert info.value.rate == -np.inf


def test_growth_rate_profile_normalized():
    grid = Grid(1.0, 50)
    init = PopulationState.from_functions(grid, gaussian_bump(0.3, 0.1, 1.0))
    tr = simulate(ModelParams.constant(mu=0.5, beta=(2.0, 1.0)), grid, init, 5.0)
    est = growth_rate(tr)
    assert np.all(est.profile >= 0)
    assert grid.cell_width * est.profile.sum() == pytest.approx(1.0, abs=1e-9)


def test_decoupled_growth_rate_matches_lambda_star():
    grid = Grid(1.0, 200)
    init = PopulationState.from_functions(grid, gaussian_bump(0.3, 0.1, 1.0))
    tr = simulate(ModelParams.constant(mu=0.5, beta=(2.0, 1.0)), grid, init, 40.0)
    assert abs(growth_rate(tr).rate - (-0.5)) <= 2e-2


def test_extinction_scenario_rate_negative_and_mass_decreasing():
    p = ModelParams.constant(mu=1.0, c1=0.2, c2=0.3, beta=0.5)
    grid = Grid(1.0, 100)
    assert generator_eigenvalue(p, grid).lambda_star < 0
    init = PopulationState.from_functions(grid, constant(1.0), constant(1.0))
    tr = simulate(p, grid, init, 20.0)
    assert growth_rate(tr).rate < 0
    total = tr.observables[:, 3]
    tail = total[int(0.75 * len(total)):]
    assert np.all(np.diff(tail) < 0)


# --- AEG ---------------------------------------------------------------------------

def test_aeg_identical_initial_conditions(aeg_params):
    grid = Grid(1.0, 50)
    init = PopulationState.from_functions(grid, constant(1.0))
    rep = aeg_check(aeg_params, grid, init, init, 10.0)
    assert rep.profile_distance == 0.0
    assert rep.rate_a == rep.rate_b


def test_aeg_irreducible_scenario(aeg_params):
    grid = Grid(1.0, 200)
    a = PopulationState.from_functions(grid, indicator(0.1, 0.3))
    b = PopulationState.from_functions(grid, constant(0.0), indicator(0.6, 0.9))
    rep = aeg_check(aeg_params, grid, a, b, 60.0, tol=0.05)
    assert rep.verdict == "AEG-consistent"
    assert abs(rep.rate_a - rep.rate_b) < 5e-2
    assert rep.profile_distance < 5e-2


def test_aeg_reducible_scenario_is_only_recorded():
    # c2 = 0: resting individuals never return; no convergence guarantee
    p = ModelParams.constant(mu=0.2, c1=1.0, c2=0.0, beta=1.0)
    grid = Grid(1.0, 100)
    a = PopulationState.from_functions(grid, indicator(0.1, 0.3))
    b = PopulationState.from_functions(grid, indicator(0.6, 0.9), indicator(0.6, 0.9))
    rep = aeg_check(p, grid, a, b, 20.0)
    assert np.isfinite(rep.profile_distance)


def test_aeg_rejects_zero_initial(aeg_params):
    grid = Grid(1.0, 20)
    with pytest.raises(ConfigError):
        aeg_check(aeg_params, grid, PopulationState.zeros(grid),
                  PopulationState.from_functions(grid, constant(1)), 5.0)


def test_rescaled_profile_converges(aeg_params):
    grid = Grid(1.0, 100)
    init = PopulationState.from_functions(grid, indicator(0.1, 0.3))
    tr = simulate(aeg_params, grid, init, 30.0, np.linspace(0, 30, 31)[1:])
    d = profile_distances(tr)
    last = d[-4:-1]
    assert np.all(np.diff(last) <= 1e-3)


# --- extinction condition -------------------------------------------------------------

@pytest.mark.parametrize("beta, c1, c2, mu, lhs, rhs", [
    (0.1, 0.2, 0.2, 0.3, 0.3, 0.2),
    (0.05, 0.1, 0.5, 0.4, 0.55, 0.5),
    (0.05, 0.05, 0.5, 0.6, 0.55, 0.5),
    (0.01, 0.01, 0.6, 0.6, 0.61, 0.6),
    (0.01, 0.01, 0.9, 0.9, 0.91, 0.9),
    (0.001, 0.001, 0.9, 0.9, 0.901, 0.9),
    (0.0, 0.0, 0.5, 0.4, 0.5, 0.4),
    (0.0, 0.0, 0.5, 0.6, 0.5, 0.5),
    (0.0, 0.0, 0.6, 0.7, 0.6, 0.6),
    (0.1, 0.0, 0.0, 0.2, 0.1, 0.0),
])
def test_extinction_verdicts(beta, c1, c2, mu, lhs, rhs):
    p = ModelParams.constant(mu=mu, c1=c1, c2=c2, beta=beta)
    chk = extinction_sufficient(p)
    assert chk.lhs == pytest.approx(lhs, abs=1e-14)
    assert chk.rhs == pytest.approx(rhs, abs=1e-14)
    assert chk.holds is False


def test_extinction_unsatisfiable_with_constant_c2():
    # with constant c2, lhs >= C >= sup c2 = inf c2 >= rhs, so holds is always false
    for b in (0.0, 0.01, 0.5):
        for c1 in (0.0, 0.3, 1.0):
            for c2 in (0.1, 0.5, 2.0):
                for mu in (0.0, 1.0, 5.0):
                    p = ModelParams.constant(mu=mu, c1=c1, c2=c2, beta=b)
                    chk = extinction_sufficient(p)
                    assert chk.lhs >= chk.rhs and not chk.holds


def test_extinction_uses_pointwise_infimum():
    p = ModelParams(constant(1), constant(1), linear(1, -1), linear(0, 1), constant(2),
                    SeparableKernel.rank_one(constant(0), constant(1)))
    # mu + c1 = 1 everywhere; C = max(1, 2) = 2
    chk = extinction_sufficient(p)
    assert chk.rhs == pytest.approx(1.0) and chk.lhs == pytest.approx(2.0)


# --- irreducibility ---------------------------------------------------------------------

def test_irreducibility_all_positive(aeg_params):
    rep = irreducibility_conditions(aeg_params, 0.25)
    assert rep.birth_corner_ok and rep.c1_at_zero_ok and rep.c2_at_m_ok and rep.all_ok


def test_irreducibility_c2_decreasing_still_ok():
    p = ModelParams(constant(1), constant(1), constant(0), constant(1), table([0, 1], [1, 0]),
                    SeparableKernel.rank_one(constant(1), constant(1)))
    assert irreducibility_conditions(p, 0.2).c2_at_m_ok


def test_irreducibility_c2_vanishing_near_m():
    c2 = table([0, 0.5, 1], [1.0, 0.0], interpolation="step")
    p = ModelParams(constant(1), constant(1), constant(0), constant(1), c2,
                    SeparableKernel.rank_one(constant(1), constant(1)))
    rep = irreducibility_conditions(p, 0.25)
    assert not rep.c2_at_m_ok and not rep.all_ok
    assert rep.c1_at_zero_ok and rep.birth_corner_ok


def test_irreducibility_c1_support_away_from_zero():
    c1 = table([0, 0.3, 1], [0.0, 1.0], interpolation="step")
    p = ModelParams(constant(1), constant(1), constant(0), c1, constant(1),
                    SeparableKernel.rank_one(constant(1), constant(1)))
    assert not irreducibility_conditions(p, 0.4).c1_at_zero_ok


@pytest.mark.parametrize("eps", [0.1, 0.25, 0.5])
def test_birth_corner_integral_product_kernel(eps):
    p = with_kernel(product_kernel())
    exact = (eps**2 / 2) * ((1 - (1 - eps) ** 2) / 2)
    assert birth_corner_integral(p, eps) == pytest.approx(exact, rel=1e-4)
    assert irreducibility_conditions(p, eps).birth_corner_ok


def test_irreducibility_epsilon_range(aeg_params):
    with pytest.raises(ConfigError):
        irreducibility_conditions(aeg_params, 0.6)
