import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paratcl import cumulants as cm
from paratcl import moments as mo
from paratcl.model import ModelParams, build_L0_parts
from paratcl.qcore import FockConfig, expm


@pytest.mark.parametrize("n", range(7))
def test_composition_count_and_shape(n):
    comps = mo.enumerate_compositions(n)
    assert len(comps) == 2**n
    for c in comps:
        assert sum(c.parts) == n
        assert c.parts[0] >= 0 and all(k >= 1 for k in c.parts[1:])
        assert c.sign == (-1) ** c.q
    assert len(set(c.parts for c in comps)) == len(comps)


def test_composition_order():
    assert [c.parts for c in mo.enumerate_compositions(2)] == [(2,), (1, 1), (0, 2), (0, 1, 1)]


def test_composition_range():
    with pytest.raises(ValueError):
        mo.enumerate_compositions(7)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
@settings(max_examples=40, deadline=None)
def test_recursion_equals_composition_sum(seed, n):
    # pure algebra: any moments, any invertible O_0
    rng = np.random.default_rng(seed)
    shape = (n + 1, 4, 4)
    o = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    odot = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    o0inv = np.linalg.inv(o[0])
    fast = mo.cumulants_from_moments(o, odot, o0inv, n)
    for m in range(n + 1):
        ref = mo.composition_sum(m, o, odot, o0inv)
        assert np.allclose(fast[m], ref, rtol=1e-10, atol=1e-10)


def test_o0_helpers(params):
    t = 0.8
    l0a, _ = build_L0_parts(params, FockConfig(1))
    assert np.allclose(mo.o0_matrix(params, t), expm(l0a * t))
    assert np.allclose(mo.o0_inverse(params, t).matrix @ mo.o0_matrix(params, t), np.eye(4))
    assert np.allclose(mo.o0_inverse_stack(params, np.array([t]))[0], mo.o0_inverse(params, t).matrix)


@pytest.fixture(scope="module")
def family():
    p = ModelParams()
    return p, mo.compute_moments(p, FockConfig(14), np.array([0.0, 0.4, 1.5, 3.0]), 4, keep_images=True)


def test_zeroth_moment_is_free_atom(family):
    p, fam = family
    for i, t in enumerate(fam.grid):
        assert np.allclose(fam.O[i, 0], mo.o0_matrix(p, t), atol=1e-11)


def test_moments_vanish_at_zero(family):
    _, fam = family
    assert np.allclose(fam.O[0, 1:], 0)


def test_first_moment_is_integral_of_first_cumulant(family):
    # O_1(t) = int_0^t O_0(t - s) K1^lab(s) O_0(s) ds reduces, after removing O_0(t), to int K1^I
    from scipy.integrate import quad_vec

    p, fam = family
    i = 2
    t = fam.grid[i]
    integral, _ = quad_vec(lambda s: cm.k1_interaction(p, s).matrix, 0, t, epsabs=1e-13)
    assert np.allclose(mo.o0_inverse(p, t).matrix @ fam.O[i, 1], integral, atol=1e-9)


def test_moment_traces(family):
    _, fam = family
    trace_row = np.array([1, 0, 0, 1])
    # O_0 preserves trace, the higher moments annihilate it
    assert np.allclose(trace_row @ fam.O[:, 0], np.broadcast_to(trace_row, (4, 4)), atol=1e-12)
    assert np.max(np.abs(trace_row @ fam.O[:, 1:])) < 1e-11


def test_literal_and_recursive_cumulants_agree(family):
    p, fam = family
    fast = mo.cumulants_from_moments(fam.O, fam.Odot, mo.o0_inverse_stack(p, fam.grid), 4)
    for i in range(fam.grid.size):
        for n in range(5):
            assert np.allclose(fam.cumulant(n, i).matrix, fast[i, n], atol=1e-12)
    with pytest.raises(ValueError):
        mo.numeric_cumulant(5, fam, 0)


def test_project_moments_roundtrip(family):
    p, fam = family
    o, odot = mo.project_moments(fam.images, p, FockConfig(14), fam.grid)
    assert np.allclose(o, fam.O) and np.allclose(odot, fam.Odot)


def test_dyson_terms_interaction_picture():
    p = ModelParams()
    f = FockConfig(13)
    grid = np.array([0.0, 0.5, 1.0])
    F = mo.compute_F(p, f, grid, 1)
    # F_0 is P itself on its range; F_1 reduced equals O_0^{-1} O_1
    fam = mo.compute_moments(p, f, grid, 1)
    from paratcl.model import factorized_inputs, reduce_columns

    assert np.allclose(F[:, 0], factorized_inputs(p, f)[None], atol=1e-10)
    red = reduce_columns(F[:, 1], f)
    for i, t in enumerate(grid):
        assert np.allclose(red[i], mo.o0_inverse(p, t).matrix @ fam.O[i, 1], atol=1e-9)


def test_k4_asymptote_quick():
    p = ModelParams(gamma=1.0)
    t = 60.0 / p.gamma
    ks = mo.numeric_cumulants(p, FockConfig(14), np.array([0.0, t]), 4)
    assert np.max(np.abs(ks[-1, 4] - cm.k4_infinity(p).matrix)) < 1e-5


def test_composition_sign_values():
    assert mo.Composition((1,)).sign == 1
    assert mo.Composition((0, 1)).sign == -1
    assert mo.Composition((0, 1, 1)).q == 2
    assert math.isclose(len(mo.enumerate_compositions(0)), 1)
