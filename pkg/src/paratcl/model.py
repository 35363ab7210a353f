"""Generators of the dissipative Jaynes-Cummings model and related superoperators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .errors import ConditioningError, DegenerateGamma, RankDeficiency
from .qcore import FockConfig

CONDITIONING_BOUND = 8.0


@dataclass(frozen=True)
class ModelParams:
    """Physical constants. ``lam`` is the dimensionless perturbation parameter."""

    omega_a: float = 1.3
    omega_c: float = 1.0
    gamma: float = 0.4
    g: complex = 0.2
    z: complex = 1.0
    lam: float = 0.05

    def __post_init__(self):
        for name in ("omega_a", "omega_c", "gamma", "lam"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        for name in ("g", "z"):
            v = complex(getattr(self, name))
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not 0 <= self.lam < 1:
            raise ValueError(f"lam must lie in [0, 1), got {self.lam}")

    @property
    def delta_omega(self) -> float:
        return self.omega_a - self.omega_c

    @property
    def Gamma(self) -> complex:
        return complex(self.gamma / 2, -self.delta_omega)

    @property
    def gamma_abs2(self) -> float:
        return self.delta_omega**2 + self.gamma**2 / 4

    def require_gamma(self, tol: float = 1e-12):
        if abs(self.Gamma) < tol:
            raise DegenerateGamma(f"|Gamma| = {abs(self.Gamma):.3e} is below {tol:.0e}")

    def replace(self, **changes) -> "ModelParams":
        d = dict(
            omega_a=self.omega_a, omega_c=self.omega_c, gamma=self.gamma,
            g=self.g, z=self.z, lam=self.lam,
        )
        d.update(changes)
        return ModelParams(**d)


@dataclass
class SuperOperator:
    """Linear map on D x D matrices acting on row-major vectorized states."""

    matrix: np.ndarray
    dim: int
    label: str = ""

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return qcore.devectorize(self.matrix @ qcore.vectorize(rho))

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        return SuperOperator(self.matrix @ other.matrix, self.dim, f"({self.label})({other.label})")


@dataclass
class ReducedMap:
    """4 x 4 map on vectorized two-level density matrices."""

    matrix: np.ndarray
    time: float = 0.0
    order: int | None = None
    gksl: object | None = field(default=None, repr=False)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ np.asarray(rho).reshape(4)).reshape(2, 2)


class Operators:
    """Full-space (atom x boson) operators for one truncation."""

    def __init__(self, fock: FockConfig):
        self.fock = fock
        nb = fock.dim
        sp, sm = qcore.atom_ops()
        ib, ia = np.eye(nb), np.eye(2)
        b = qcore.annihilation_op(fock)
        self.b = np.kron(ia, b)
        self.bd = self.b.conj().T
        self.n = np.kron(ia, qcore.number_op(fock))
        self.sp = np.kron(sp, ib)
        self.sm = np.kron(sm, ib)
        self.p1 = self.sp @ self.sm
        self.eye = np.eye(2 * nb)
        self.dim = 2 * nb


def free_hamiltonian(params: ModelParams, ops: Operators) -> np.ndarray:
    return params.omega_a * ops.p1 + params.omega_c * ops.n


def interaction_hamiltonian(params: ModelParams, ops: Operators) -> np.ndarray:
    g = complex(params.g)
    return g * ops.sp @ ops.b + g.conjugate() * ops.sm @ ops.bd


def build_L0_parts(params: ModelParams, fock: FockConfig) -> tuple[np.ndarray, np.ndarray]:
    """Return the factor generators ``(L0_A, L0_B)`` as dense matrices."""
    sp, sm = qcore.atom_ops()
    l0a = qcore.commutator_super(params.omega_a * sp @ sm)
    b = qcore.annihilation_op(fock)
    l0b = qcore.commutator_super(params.omega_c * qcore.number_op(fock))
    l0b = l0b + qcore.dissipator_super(b, params.gamma)
    return l0a, l0b


def build_L0(params: ModelParams, fock: FockConfig) -> SuperOperator:
    ops = Operators(fock)
    m = qcore.commutator_super(free_hamiltonian(params, ops))
    m = m + qcore.dissipator_super(ops.b, params.gamma)
    return SuperOperator(m, ops.dim, "L0")


def factorized_L0(l0a: np.ndarray, l0b: np.ndarray, fock: FockConfig) -> np.ndarray:
    """Assemble L0_A (x) 1 + 1 (x) L0_B on the interleaved doubled index."""
    nb = fock.dim
    ea = np.eye(4).reshape(2, 2, 2, 2)
    eb = np.eye(nb * nb).reshape(nb, nb, nb, nb)
    ta = l0a.reshape(2, 2, 2, 2)
    tb = l0b.reshape(nb, nb, nb, nb)
    # index order (a, n, a', n') for rows and columns of the full superoperator
    m = np.einsum("ipjq,kmln->ikpmjlqn", ta, eb) + np.einsum("ipjq,kmln->ikpmjlqn", ea, tb)
    d2 = (2 * nb) ** 2
    return m.reshape(d2, d2)


def build_L_int(params: ModelParams, fock: FockConfig) -> SuperOperator:
    ops = Operators(fock)
    return SuperOperator(qcore.commutator_super(interaction_hamiltonian(params, ops)), ops.dim, "L")


def _check_conditioning(params: ModelParams, t: float, bound: float):
    if params.gamma * t > bound:
        raise ConditioningError(
            f"t*gamma = {params.gamma * t:.3g} exceeds the conjugation bound {bound}"
        )


def interaction_L_t(
    params: ModelParams,
    fock: FockConfig,
    t: float,
    method: str = "conjugation",
    bound: float = CONDITIONING_BOUND,
) -> SuperOperator:
    """Interaction-picture generator exp(-L0 t) L exp(L0 t).

    ``method="conjugation"`` uses two matrix exponentials; ``method="heisenberg"``
    assembles the same operator from the closed-form doubled-space solutions of
    the boson Heisenberg equations.
    """
    if method == "conjugation":
        _check_conditioning(params, t, bound)
        l0 = build_L0(params, fock).matrix
        lint = build_L_int(params, fock).matrix
        m = qcore.expm(-l0 * t) @ lint @ qcore.expm(l0 * t)
        return SuperOperator(m, 2 * fock.dim, f"L({t})")
    if method != "heisenberg":
        raise ValueError(f"unknown method {method!r}")

    ops = Operators(fock)
    eye = ops.eye
    g = complex(params.g)
    gc = g.conjugate()
    half, dw = params.gamma / 2, params.delta_omega
    grow = 1.0 - math.exp(params.gamma * t)
    # B_l(t), B_r(t) and the two pieces of B_l^+(t), B_r^+(t)
    e_l = np.exp(-(half - 1j * dw) * t)
    e_r = np.exp(-(half + 1j * dw) * t)
    e_ld = np.exp((half - 1j * dw) * t)
    e_rd = np.exp((half + 1j * dw) * t)

    m = -1j * g * e_l * np.kron(ops.sp @ ops.b, eye)
    m += -1j * gc * (e_ld * np.kron(ops.sm @ ops.bd, eye) + e_r * grow * np.kron(ops.sm, ops.b))
    m += 1j * gc * e_r * np.kron(eye, ops.sp @ ops.b)
    m += 1j * g * (e_rd * np.kron(eye, ops.sm @ ops.bd) + e_l * grow * np.kron(ops.b, ops.sm))
    return SuperOperator(m, ops.dim, f"L({t})")


def projector_super(params: ModelParams, fock: FockConfig) -> SuperOperator:
    """rho -> tr_B(rho) (x) |z><z| as a full-space superoperator."""
    psi = qcore.coherent_state(params.z, fock)
    zz = np.outer(psi, psi.conj())
    nb = fock.dim
    # row (a, n, b, q), column (c, m, d, l)
    m = np.einsum("ac,bd,ml,nq->anbqcmdl", np.eye(2), np.eye(2), np.eye(nb), zz)
    d2 = (2 * nb) ** 2
    return SuperOperator(m.reshape(d2, d2), 2 * nb, "P")


def factorized_inputs(params: ModelParams, fock: FockConfig) -> np.ndarray:
    """Stack of |i><j| (x) |z><z| for (i, j) in row-major order, shape (4, D, D)."""
    psi = qcore.coherent_state(params.z, fock)
    zz = np.outer(psi, psi.conj())
    out = np.empty((4, 2 * fock.dim, 2 * fock.dim), dtype=complex)
    for k in range(4):
        e = np.zeros((2, 2))
        e[divmod(k, 2)] = 1.0
        out[k] = np.kron(e, zz)
    return out


def reduce_columns(full: np.ndarray, fock: FockConfig) -> np.ndarray:
    """Turn a stack (..., 4, D, D) of images of the atom basis into 4 x 4 maps."""
    red = qcore.partial_trace_B(full, fock)
    red = red.reshape(red.shape[:-2] + (4,))
    return np.swapaxes(red, -1, -2)


def projector_apply(op: SuperOperator, params: ModelParams, fock: FockConfig) -> ReducedMap:
    d = 2 * fock.dim
    if op.matrix.shape != (d * d, d * d):
        raise ValueError(f"superoperator shape {op.matrix.shape} does not match cutoff {fock.cutoff}")
    inputs = factorized_inputs(params, fock).reshape(4, d * d)
    images = (op.matrix @ inputs.T).T.reshape(4, d, d)
    return ReducedMap(reduce_columns(images, fock))


def x1_coefficients(params: ModelParams) -> dict[str, complex]:
    """Coefficients of the six sandwich terms of the commutator pseudoinverse of L.

    Keys name the term: ``"sp_b."`` and ``".sp_b"`` are left and right
    multiplication by sigma+ b, ``"sm.bd"`` is rho -> sigma- rho b^+,
    ``"b.sp"`` is rho -> b rho sigma+, and so on.
    """
    gam = params.Gamma
    gamc = gam.conjugate()
    g = complex(params.g)
    gc = g.conjugate()
    second = (-1j * gc) / (-gam)
    third = (1j * g) / (-gamc)
    return {
        "sp_b.": (-1j * g) / gam,
        "sm_bd.": second,
        "sm.bd": -second * params.gamma / gamc,
        ".sp_b": third,
        "b.sp": -third * params.gamma / gam,
        ".sm_bd": (1j * gc) / gamc,
    }


def build_X1(params: ModelParams, fock: FockConfig) -> SuperOperator:
    """Closed-form solution of [L0, X] = L (exact away from the truncation edge)."""
    params.require_gamma()
    c = x1_coefficients(params)
    ops = Operators(fock)
    spb = ops.sp @ ops.b
    smbd = ops.sm @ ops.bd
    m = (
        c["sp_b."] * qcore.spre(spb)
        + c["sm_bd."] * qcore.spre(smbd)
        + c["sm.bd"] * qcore.sandwich(ops.sm, ops.bd)
        + c[".sp_b"] * qcore.spost(spb)
        + c["b.sp"] * qcore.sandwich(ops.b, ops.sp)
        + c[".sm_bd"] * qcore.spost(smbd)
    )
    return SuperOperator(m, ops.dim, "X1")


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def safe_superop_indices(fock: FockConfig, margin: int = 2) -> np.ndarray:
    """Indices of the doubled space whose Fock labels both stay below cutoff+1-margin."""
    nb = fock.dim
    n = np.tile(np.arange(nb), 2)
    ok = n <= fock.cutoff - margin
    return np.flatnonzero(np.outer(ok, ok).reshape(-1))


def restrict(m: np.ndarray, fock: FockConfig, margin: int = 2) -> np.ndarray:
    idx = safe_superop_indices(fock, margin)
    return m[np.ix_(idx, idx)]


def solve_commutator(l0: SuperOperator, rhs: SuperOperator, rtol: float = 1e-6) -> SuperOperator:
    """Minimum-norm least-squares solution X of [L0, X] = rhs.

    Builds the full Kronecker system, so it is meant for small truncations
    (superoperator dimension up to ~70).
    """
    a = l0.matrix
    n = a.shape[0]
    if n * n > 5000:
        raise ValueError(f"commutator system of size {n * n} is too large for a dense solve")
    eye = np.eye(n)
    # row-major: vec(A X - X A) = (A (x) I - I (x) A^T) vec(X)
    system = np.kron(a, eye) - np.kron(eye, a.T)
    b = rhs.matrix.reshape(-1)
    x, *_ = np.linalg.lstsq(system, b, rcond=1e-12)
    resid = np.linalg.norm(system @ x - b)
    scale = max(np.linalg.norm(b), 1e-300)
    if resid / scale > rtol and np.linalg.norm(b) > 0:
        raise RankDeficiency(f"relative residual {resid / scale:.3e} exceeds {rtol:.0e}", resid)
    return SuperOperator(x.reshape(n, n), l0.dim, f"[L0,.]^+({rhs.label})")


class FastModel:
    """Applies L0 and L to (batches of) full-space matrices without building superoperators.

    With ``rotating=True`` the free Hamiltonian is taken in the frame co-rotating
    with omega_c * (sigma+ sigma- + b^+ b). That frame commutes with L and with
    the dissipator, so reduced states are recovered exactly by
    :meth:`unrotate_reduced`.
    """

    def __init__(self, params: ModelParams, fock: FockConfig, rotating: bool = True):
        self.params = params
        self.fock = fock
        self.rotating = rotating
        ops = Operators(fock)
        self.ops = ops
        if rotating:
            self.h0 = params.delta_omega * ops.p1
        else:
            self.h0 = free_hamiltonian(params, ops)
        self.hi = interaction_hamiltonian(params, ops)
        self.gamma = params.gamma

    def l0(self, rho: np.ndarray) -> np.ndarray:
        o = self.ops
        out = -1j * (self.h0 @ rho - rho @ self.h0)
        if self.gamma:
            out = out + self.gamma * (o.b @ rho @ o.bd - 0.5 * (o.n @ rho + rho @ o.n))
        return out

    def l(self, rho: np.ndarray) -> np.ndarray:
        return -1j * (self.hi @ rho - rho @ self.hi)

    def unrotate_reduced(self, rho_a: np.ndarray, t) -> np.ndarray:
        """Map reduced atom states (..., 2, 2) at times t from the rotating to the lab frame."""
        if not self.rotating:
            return rho_a
        ph = np.exp(-1j * self.params.omega_c * np.asarray(t, dtype=float))
        out = np.array(rho_a, dtype=complex, copy=True)
        out[..., 1, 0] *= ph
        out[..., 0, 1] *= np.conj(ph)
        return out

    def unrotate_maps(self, maps: np.ndarray, t) -> np.ndarray:
        """Left-compose 4 x 4 reduced maps with the frame rotation at times t."""
        if not self.rotating:
            return maps
        ph = np.exp(-1j * self.params.omega_c * np.asarray(t, dtype=float))
        diag = np.stack(
            [np.ones_like(ph), np.conj(ph), ph, np.ones_like(ph)], axis=-1
        )
        return diag[..., :, None] * maps
