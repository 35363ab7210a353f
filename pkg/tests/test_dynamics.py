import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paratcl import cumulants as cm
from paratcl import dynamics as dy
from paratcl.errors import TruncationError
from paratcl.model import ModelParams
from paratcl.qcore import FockConfig

from conftest import random_density

FOCK = FockConfig(17)


@pytest.fixture(scope="module")
def default_runs():
    p = ModelParams()
    grid = dy.TimeGrid(3 / p.gamma, 151)
    rho = dy.initial_state("plus")
    exact = dy.propagate_exact(p, FOCK, rho, grid)
    tcl = {n: dy.propagate_tcl(p, rho, grid, n) for n in (1, 2, 3, 4)}
    return p, grid, rho, exact, tcl


def test_time_grid():
    g = dy.TimeGrid(2.0, 5)
    assert np.allclose(g.points, [0, 0.5, 1, 1.5, 2])
    assert dy.TimeGrid.from_points(g.points) == g
    for bad in (dict(t_max=0.0), dict(t_max=1.0, n_points=1), dict(t_max=float("inf"))):
        with pytest.raises(ValueError):
            dy.TimeGrid(**bad)
    with pytest.raises(ValueError):
        dy.TimeGrid.from_points([0.0, 0.1, 0.5])
    with pytest.raises(ValueError):
        dy.TimeGrid.from_points([0.5, 1.0])


def test_initial_states():
    assert np.allclose(dy.initial_state("plus"), 0.5 * np.ones((2, 2)))
    assert dy.initial_state("excited")[1, 1] == 1
    assert dy.initial_state("ground")[0, 0] == 1
    with pytest.raises(ValueError):
        dy.initial_state("explicit")
    with pytest.raises(ValueError):
        dy.initial_state("bogus")
    for bad in (np.eye(2), np.array([[1, 1], [0, 0]]), np.diag([1.5, -0.5]), np.eye(3) / 3):
        with pytest.raises(ValueError):
            dy.initial_state("explicit", bad)


def test_exact_diagnostics(default_runs):
    _, _, _, exact, _ = default_runs
    assert exact.method == "exact"
    assert exact.trace_deviation().max() < 1e-10
    assert exact.min_eigenvalues().min() > -1e-9
    assert exact.diagnostics["top_fock_pop"].max() < FOCK.occupancy_guard
    assert exact.diagnostics["expm_check"][0] < 1e-8


def test_exact_free_rotation_without_coupling():
    p = ModelParams(lam=0.0)
    grid = dy.TimeGrid(4.0, 41)
    traj = dy.propagate_exact(p, FOCK, dy.initial_state("plus"), grid, spot_checks=0)
    assert np.allclose(traj.rho11, 0.5, atol=1e-10)
    assert np.allclose(traj.states[:, 1, 0], 0.5 * np.exp(-1j * p.omega_a * grid.points), atol=1e-8)


def test_vacuum_rabi_oscillation():
    lam, g = 0.1, 0.3
    p = ModelParams(omega_a=1.0, omega_c=1.0, gamma=0.0, g=g, z=0.0, lam=lam)
    grid = dy.TimeGrid(100.0, 101)
    traj = dy.propagate_exact(p, FockConfig(3), dy.initial_state("excited"), grid)
    assert np.max(np.abs(traj.rho11 - np.cos(lam * g * grid.points) ** 2)) < 1e-8


def test_truncation_guard():
    # cutoff 12 keeps the coherent-state tail below the guard but not the top level
    with pytest.raises(TruncationError):
        dy.propagate_exact(ModelParams(), FockConfig(12), dy.initial_state("plus"), dy.TimeGrid(1.0, 3))


def test_tcl_trace_and_hermiticity(default_runs):
    *_, tcl = default_runs
    for traj in tcl.values():
        assert traj.trace_deviation().max() < 1e-10
        assert traj.hermiticity_error() < 1e-10


def test_tcl_k4_tag(default_runs):
    *_, tcl = default_runs
    assert "K4inf" in tcl[4].method
    assert tcl[2].method == "tcl(2,analytic)"


def test_error_hierarchy(default_runs):
    *_, exact, tcl = default_runs
    errs = {n: dy.compare(exact, tcl[n]).max for n in (1, 2, 3)}
    assert errs[2] < 0.05
    assert errs[1] > errs[2] > errs[3]


def test_first_order_freezes_populations():
    p = ModelParams()
    grid = dy.TimeGrid(40 / p.gamma, 401)
    traj = dy.propagate_tcl(p, dy.initial_state("excited"), grid, 1)
    late = traj.rho11[grid.points >= 30 / p.gamma]
    assert np.ptp(late) < 1e-6


def test_numeric_source_matches_analytic():
    p = ModelParams()
    grid = dy.TimeGrid(3 / p.gamma, 41)
    rho = dy.initial_state("plus")
    for n in (2, 3):
        a = dy.propagate_tcl(p, rho, grid, n, "analytic")
        b = dy.propagate_tcl(p, rho, grid, n, "numeric", FockConfig(16))
        assert dy.compare(a, b).max < 1e-5


def test_numeric_fourth_order_improves_on_third():
    p = ModelParams(lam=0.1)
    grid = dy.TimeGrid(3 / p.gamma, 61)
    rho = dy.initial_state("excited")
    exact = dy.propagate_exact(p, FOCK, rho, grid, spot_checks=0)
    e3 = dy.compare(exact, dy.propagate_tcl(p, rho, grid, 3, "numeric", FOCK)).max
    e4 = dy.compare(exact, dy.propagate_tcl(p, rho, grid, 4, "numeric", FOCK)).max
    assert e4 < e3


def test_tcl_argument_checks(params):
    grid = dy.TimeGrid(1.0, 3)
    with pytest.raises(ValueError):
        dy.propagate_tcl(params, dy.initial_state("plus"), grid, 5)
    with pytest.raises(ValueError):
        dy.propagate_tcl(params, dy.initial_state("plus"), grid, 2, "magic")


def test_matched_solution_without_coupling_is_constant(params):
    rho = dy.initial_state("plus")
    out = dy.matched_markov_solution(params.replace(lam=0.0), rho, np.array([0.0, 5.0, 50.0]))
    assert np.allclose(out, rho[None])


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 200.0))
@settings(max_examples=25, deadline=None)
def test_matched_solution_is_unit_trace_hermitian(seed, t):
    rho = random_density(np.random.default_rng(seed))
    out = dy.matched_markov_solution(ModelParams(), rho, t)
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.allclose(out, out.conj().T, atol=1e-12)


def test_matched_solution_reproduces_closed_form(params):
    rho = np.array([[0.0, 0.25], [0.25, 1.0]], dtype=complex)
    ts = np.linspace(0, 300, 13)
    matched = dy.matched_markov_solution(params, rho, ts)[:, 1, 1].real
    assert np.max(np.abs(matched - cm.rho11_closed_form(params, rho, params.lam**2 * ts))) < 1e-10


def test_polishing_jump(params):
    rho = dy.initial_state("plus")
    jump = dy.matched_markov_solution(params, rho, 0.0)[1, 1].real - 0.5
    expected = params.lam * 2 * params.delta_omega / params.gamma_abs2 * np.real(params.g * params.z * rho[1, 0])
    assert abs(jump - expected) < 1e-10


def test_polishing_improves_long_time_agreement(default_runs):
    p, grid, rho, exact, _ = default_runs
    with_r = dy.matched_trajectory(p, rho, grid, True)
    without = dy.matched_trajectory(p, rho, grid, False)
    assert abs(exact.rho11[-1] - with_r.rho11[-1]) < abs(exact.rho11[-1] - without.rho11[-1])


def test_matching_consistency_scales_as_lambda_squared():
    ratios = []
    for lam in (0.05, 0.025):
        p = ModelParams(lam=lam)
        grid = dy.TimeGrid(40 / p.gamma, 201)
        rho = dy.initial_state("excited")
        tcl = dy.propagate_tcl(p, rho, grid, 2)
        matched = dy.matched_trajectory(p, rho, grid)
        window = grid.points >= 5 / p.gamma
        ratios.append(np.max(np.abs(tcl.rho11 - matched.rho11)[window]) / lam**2)
    assert 0.8 < ratios[0] / ratios[1] < 1.25


def test_interaction_frame_keeps_populations(default_runs):
    p, *_, exact, _ = default_runs
    frame = exact.interaction_frame(p)
    assert np.allclose(frame.rho11, exact.rho11)
    free = dy.propagate_exact(p.replace(lam=0.0), FOCK, dy.initial_state("plus"), dy.TimeGrid(2.0, 5), spot_checks=0)
    assert np.allclose(free.interaction_frame(p).states[:, 1, 0], 0.5, atol=1e-8)


def test_compare_basics():
    g = dy.TimeGrid(1.0, 3)
    a = dy.Trajectory(g, np.stack([np.diag([1.0, 0.0])] * 3).astype(complex), "a")
    b = dy.Trajectory(g, np.stack([np.diag([0.0, 1.0])] * 3).astype(complex), "b")
    assert dy.compare(a, a).max == 0
    c = dy.compare(a, b)
    assert np.allclose(c.distance, 1.0) and c.terminal == 1.0 and c.time_of_max == 0.0
    with pytest.raises(ValueError):
        dy.compare(a, dy.Trajectory(dy.TimeGrid(2.0, 3), a.states, "x"))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_trace_distance_is_a_bounded_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density(rng) for _ in range(3))
    dab = dy.trace_distance(a, b)
    assert 0 <= dab <= 1 + 1e-12
    assert dab == pytest.approx(dy.trace_distance(b, a))
    assert dab <= dy.trace_distance(a, c) + dy.trace_distance(c, b) + 1e-12


def test_scaling_report_checks_lambdas(params):
    grid = dy.TimeGrid(1.0, 3)
    with pytest.raises(ValueError):
        dy.order_scaling_report(params, dy.initial_state("excited"), grid, (1,), (0.1,))
    with pytest.raises(ValueError):
        dy.order_scaling_report(params, dy.initial_state("excited"), grid, (1,), (0.1, 0.04))


def test_fit_slope():
    lams = np.array([0.1, 0.05, 0.025])
    assert dy.fit_slope(lams, 3 * lams**2.5) == pytest.approx(2.5)


def test_default_window(params):
    assert dy.default_window(params) == pytest.approx(7.5)
