"""Dense linear-algebra substrate: truncated operators, vectorization, expm, ODEs.

Conventions used everywhere in the package:

* composite basis is atom (x) boson, atom index first, ground = 0, excited = 1,
  Fock levels ascending; composite index = atom * (cutoff + 1) + n;
* vectorization is row-major, ``v[i*d + j] = rho[i, j]``, so that
  ``vec(A @ rho @ B) == kron(A, B.T) @ vec(rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp
from scipy.special import gammainc

from .errors import ExpmOverflowError, StepSizeUnderflow, TruncationError

EXPM_GUARD = 1e150


@dataclass(frozen=True)
class FockConfig:
    """Boson-mode truncation: levels 0..cutoff are retained."""

    cutoff: int
    occupancy_guard: float = 1e-10

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise ValueError(f"cutoff must be an integer >= 1, got {self.cutoff!r}")

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    @property
    def full_dim(self) -> int:
        return 2 * self.dim

    @classmethod
    def auto(cls, z: complex, occupancy_guard: float = 1e-10) -> "FockConfig":
        return cls(auto_cutoff(z), occupancy_guard)


def auto_cutoff(z: complex) -> int:
    # Poisson mean plus six standard deviations, plus a safety margin
    a = abs(z)
    return int(math.ceil(a * a + 6 * a + 10))


def annihilation_op(fock: FockConfig) -> np.ndarray:
    n = np.arange(1, fock.dim)
    return np.diag(np.sqrt(n).astype(complex), k=1)


def creation_op(fock: FockConfig) -> np.ndarray:
    return annihilation_op(fock).conj().T


def number_op(fock: FockConfig) -> np.ndarray:
    return np.diag(np.arange(fock.dim).astype(complex))


def atom_ops() -> tuple[np.ndarray, np.ndarray]:
    """Return ``(sigma_plus, sigma_minus)`` with sigma_minus |1> = |0>."""
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    return sm.conj().T.copy(), sm


def coherent_tail_weight(z: complex, cutoff: int) -> float:
    """Poisson weight of the Fock levels above ``cutoff`` for amplitude ``z``."""
    if z == 0:
        return 0.0
    return float(gammainc(cutoff + 1, abs(z) ** 2))


def coherent_state(z: complex, fock: FockConfig, renormalize: bool = True) -> np.ndarray:
    """Truncated coherent state |z>, renormalized after truncation by default.

    Raises TruncationError if the discarded tail weight exceeds the guard.
    """
    tail = coherent_tail_weight(z, fock.cutoff)
    if tail > fock.occupancy_guard:
        raise TruncationError(
            f"coherent state |z|={abs(z):.4g} loses weight {tail:.3e} above cutoff {fock.cutoff}"
        )
    n = np.arange(fock.dim)
    # log-space amplitudes keep large cutoffs finite
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    if z == 0:
        psi = np.zeros(fock.dim, dtype=complex)
        psi[0] = 1.0
        return psi
    mag = np.exp(-0.5 * abs(z) ** 2 + n * math.log(abs(z)) - 0.5 * log_fact)
    psi = mag * np.exp(1j * n * np.angle(z))
    if renormalize:
        psi = psi / np.linalg.norm(psi)
    return psi


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def vectorize(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"vectorize expects a square matrix, got shape {rho.shape}")
    return rho.reshape(-1).copy()


def devectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    d = math.isqrt(v.shape[-1])
    if d * d != v.shape[-1]:
        raise ValueError(f"length {v.shape[-1]} is not a perfect square")
    return v.reshape(v.shape[:-1] + (d, d)).copy()


def spre(a: np.ndarray) -> np.ndarray:
    """Superoperator of left multiplication, rho -> a @ rho."""
    return np.kron(a, np.eye(a.shape[0]))


def spost(b: np.ndarray) -> np.ndarray:
    """Superoperator of right multiplication, rho -> rho @ b."""
    return np.kron(np.eye(b.shape[0]), b.T)


def sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> a @ rho @ b."""
    return np.kron(a, b.T)


def commutator_super(h: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> -i[h, rho]."""
    return -1j * (spre(h) - spost(h))


def dissipator_super(jump: np.ndarray, rate: float = 1.0) -> np.ndarray:
    """Superoperator of rate * (J rho J^+ - 1/2 {J^+ J, rho})."""
    jd = jump.conj().T
    jdj = jd @ jump
    return rate * (sandwich(jump, jd) - 0.5 * spre(jdj) - 0.5 * spost(jdj))


def partial_trace_B(rho_full: np.ndarray, fock: FockConfig) -> np.ndarray:
    """Trace out the boson factor; leading batch axes are preserved."""
    rho_full = np.asarray(rho_full)
    nb = fock.dim
    if rho_full.shape[-2:] != (2 * nb, 2 * nb):
        raise ValueError(
            f"expected trailing shape {(2 * nb, 2 * nb)}, got {rho_full.shape[-2:]}"
        )
    t = rho_full.reshape(rho_full.shape[:-2] + (2, nb, 2, nb))
    return np.einsum("...injn->...ij", t)


def top_fock_population(rho_full: np.ndarray, fock: FockConfig) -> float:
    nb = fock.dim
    d = np.real(np.diagonal(rho_full, axis1=-2, axis2=-1))
    return float(d[..., nb - 1] + d[..., 2 * nb - 1])


def expm(m: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling and squaring, Pade) with an overflow guard."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expm expects a square matrix, got shape {m.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = scipy.linalg.expm(m)
    peak = np.max(np.abs(out)) if out.size else 0.0
    if not np.isfinite(peak) or peak > EXPM_GUARD:
        raise ExpmOverflowError(f"expm entries reached {peak:.3e} (guard {EXPM_GUARD:.0e})")
    return out


def integrate_ode(f, y0, grid, rtol: float = 1e-10, atol: float = 1e-12, method: str = "RK45"):
    """Integrate ``dy/dt = f(t, y)`` and sample the solution at ``grid``.

    ``y0`` may have any shape; ``f`` receives and returns arrays of that shape.
    Returns an array of shape ``(len(grid),) + y0.shape``. The default is the
    Dormand-Prince 5(4) pair with dense output.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must be a non-empty 1-d array")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    y0 = np.asarray(y0, dtype=complex)
    shape = y0.shape
    if grid.size == 1 or grid[-1] == grid[0]:
        return np.broadcast_to(y0, (grid.size,) + shape).copy()

    def rhs(t, y):
        return np.asarray(f(t, y.reshape(shape)), dtype=complex).reshape(-1)

    t_max = max(abs(grid[0]), abs(grid[-1]))
    sol = solve_ivp(
        rhs,
        (grid[0], grid[-1]),
        y0.reshape(-1),
        method=method,
        t_eval=grid,
        rtol=rtol,
        atol=atol,
        first_step=None,
    )
    if sol.status != 0:
        raise StepSizeUnderflow(
            f"integration stopped at t={sol.t[-1] if sol.t.size else grid[0]:.6g} "
            f"(floor {1e-14 * t_max:.1e}): {sol.message}"
        )
    return sol.y.T.reshape((grid.size,) + shape)
