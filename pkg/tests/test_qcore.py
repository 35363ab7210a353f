import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from paratcl import qcore
from paratcl.errors import ExpmOverflowError, StepSizeUnderflow, TruncationError
from paratcl.qcore import FockConfig

from conftest import complex_st

cplx = st.builds(complex, st.floats(-3, 3), st.floats(-3, 3))


def square(n):
    return arrays(np.complex128, (n, n), elements=cplx)


def test_fock_config_dims():
    f = FockConfig(5)
    assert f.dim == 6 and f.full_dim == 12
    with pytest.raises(ValueError):
        FockConfig(0)
    with pytest.raises(ValueError):
        FockConfig(2.5)


def test_auto_cutoff_default_amplitude():
    assert qcore.auto_cutoff(1.0) == 17
    assert FockConfig.auto(0).cutoff == 10


def test_ladder_operators():
    f = FockConfig(6)
    b = qcore.annihilation_op(f)
    assert np.allclose(qcore.creation_op(f) @ b, qcore.number_op(f))
    comm = b @ b.conj().T - b.conj().T @ b
    # canonical commutator holds except on the top level
    assert np.allclose(comm[:-1, :-1], np.eye(f.dim - 1))


def test_atom_ops_convention():
    sp, sm = qcore.atom_ops()
    ground, excited = np.array([1, 0]), np.array([0, 1])
    assert np.allclose(sm @ excited, ground)
    assert np.allclose(sp @ ground, excited)


@given(complex_st(1.5))
@settings(max_examples=30, deadline=None)
def test_coherent_state_is_eigenvector(z):
    f = FockConfig(qcore.auto_cutoff(z))
    psi = qcore.coherent_state(z, f)
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
    b = qcore.annihilation_op(f)
    # away from the truncation edge b|z> = z|z>
    assert np.max(np.abs((b @ psi - z * psi)[:-3])) < 1e-8


def test_coherent_state_guard():
    with pytest.raises(TruncationError):
        qcore.coherent_state(2.0, FockConfig(5))
    assert qcore.coherent_tail_weight(0, 1) == 0.0


def test_coherent_tail_matches_poisson_sum():
    z, n = 1.3, 6
    tail = 1 - sum(math.exp(-z * z) * z ** (2 * k) / math.factorial(k) for k in range(n + 1))
    assert math.isclose(qcore.coherent_tail_weight(z, n), tail, rel_tol=1e-10)


@given(square(3), square(3), square(3))
@settings(max_examples=40, deadline=None)
def test_vectorization_sandwich_identity(a, r, b):
    lhs = qcore.vectorize(a @ r @ b)
    assert np.allclose(lhs, qcore.sandwich(a, b) @ qcore.vectorize(r), atol=1e-9)
    assert np.allclose(qcore.spre(a) @ qcore.vectorize(r), qcore.vectorize(a @ r), atol=1e-9)
    assert np.allclose(qcore.spost(b) @ qcore.vectorize(r), qcore.vectorize(r @ b), atol=1e-9)


@given(square(4))
@settings(max_examples=30, deadline=None)
def test_vectorize_roundtrip(r):
    v = qcore.vectorize(r)
    assert v[1] == r[0, 1]
    assert np.array_equal(qcore.devectorize(v), r)


def test_vectorize_rejects_bad_shapes():
    with pytest.raises(ValueError):
        qcore.vectorize(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        qcore.devectorize(np.zeros(5))


@given(square(3), square(3))
@settings(max_examples=30, deadline=None)
def test_commutator_and_dissipator_preserve_trace(h, j):
    h = h + h.conj().T
    eye = np.eye(3).reshape(-1)
    assert np.max(np.abs(eye @ qcore.commutator_super(h))) < 1e-9
    assert np.max(np.abs(eye @ qcore.dissipator_super(j, 0.7))) < 1e-8


def test_dissipator_decay_of_two_level_system():
    _, sm = qcore.atom_ops()
    rho = np.diag([0.0, 1.0]).astype(complex)
    drho = (qcore.dissipator_super(sm, 2.0) @ rho.reshape(-1)).reshape(2, 2)
    assert np.allclose(drho, np.diag([2.0, -2.0]))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_partial_trace_of_product(seed):
    rng = np.random.default_rng(seed)
    f = FockConfig(3)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    out = qcore.partial_trace_B(np.kron(a, b), f)
    assert np.allclose(out, np.trace(b) * a)
    batch = qcore.partial_trace_B(np.stack([np.kron(a, b)] * 3), f)
    assert batch.shape == (3, 2, 2)


def test_partial_trace_shape_check():
    with pytest.raises(ValueError):
        qcore.partial_trace_B(np.zeros((5, 5)), FockConfig(3))


def test_top_fock_population():
    f = FockConfig(2)
    rho = np.diag([0.1, 0.2, 0.3, 0.1, 0.1, 0.2]).astype(complex)
    assert math.isclose(qcore.top_fock_population(rho, f), 0.5)


def test_expm_against_closed_form_and_guard():
    theta = 0.7
    m = np.array([[0, -theta], [theta, 0]])
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    assert np.allclose(qcore.expm(m), rot, atol=1e-14)
    with pytest.raises(ExpmOverflowError):
        qcore.expm(np.array([[400.0]]))
    with pytest.raises(ValueError):
        qcore.expm(np.zeros((2, 3)))


def test_integrate_ode_matches_exponential():
    m = np.array([[-0.3, 1.0], [-1.0, -0.3]], dtype=complex)
    grid = np.linspace(0, 5, 11)
    ys = qcore.integrate_ode(lambda t, y: m @ y, np.array([1.0, 0.0]), grid)
    ref = np.array([qcore.expm(m * t) @ np.array([1.0, 0.0]) for t in grid])
    assert ys.shape == (11, 2)
    assert np.max(np.abs(ys - ref)) < 1e-8


def test_integrate_ode_keeps_shape_and_validates_grid():
    y0 = np.eye(2, dtype=complex)
    ys = qcore.integrate_ode(lambda t, y: -y, y0, [0.0, 1.0])
    assert ys.shape == (2, 2, 2)
    assert np.allclose(ys[1], math.exp(-1) * np.eye(2), atol=1e-9)
    with pytest.raises(ValueError):
        qcore.integrate_ode(lambda t, y: y, y0, [1.0, 0.5])
    assert qcore.integrate_ode(lambda t, y: y, y0, [0.0]).shape == (1, 2, 2)


def test_integrate_ode_reports_failure():
    with pytest.raises(StepSizeUnderflow):
        qcore.integrate_ode(lambda t, y: y**2, np.array([1.0]), [0.0, 2.0])
