import numpy as np
import pytest
from hypothesis import strategies as st

from paratcl.model import ModelParams

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str):
    """Store and print one pass/fail line for an acceptance criterion."""
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def params():
    return ModelParams()


def complex_st(max_abs):
    return st.builds(
        complex,
        st.floats(-max_abs, max_abs, allow_nan=False),
        st.floats(-max_abs, max_abs, allow_nan=False),
    )


def model_params_st(lam_max=0.2):
    return st.builds(
        ModelParams,
        omega_a=st.floats(0.5, 2.0),
        omega_c=st.floats(0.5, 2.0),
        gamma=st.floats(0.05, 2.0),
        g=complex_st(0.4),
        z=complex_st(1.0),
        lam=st.floats(0.0, lam_max),
    )


def random_density(rng, n=2):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)
