"""Projected moments O_k(t) and numerically assembled cumulants K_n(t).

The k-fold time-ordered integrals are not evaluated as integrals. Writing
``G_k(t) = exp(L0 t) F_k(t) P`` for the Schroedinger-picture image of the
k-th Dyson term, the nested integral is equivalent to

    dG_k/dt = L0 G_k + L G_{k-1},   G_k(0) = 0 (k >= 1),   G_0(0) = P,

which is well conditioned for all t (no exp(-L0 t) factors) and is integrated
for all orders at once. Only the four columns of P (the images of
|i><j| (x) |z><z|) are ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import qcore
from .model import (
    FastModel,
    ModelParams,
    ReducedMap,
    factorized_inputs,
    reduce_columns,
)
from .qcore import FockConfig


@dataclass(frozen=True)
class Composition:
    parts: tuple[int, ...]

    @property
    def q(self) -> int:
        return len(self.parts) - 1

    @property
    def sign(self) -> int:
        return -1 if self.q % 2 else 1


@lru_cache(maxsize=None)
def _positive_compositions(m: int) -> tuple[tuple[int, ...], ...]:
    if m == 0:
        return ((),)
    out = []
    for first in range(1, m + 1):
        out.extend((first,) + rest for rest in _positive_compositions(m - first))
    return tuple(out)


def enumerate_compositions(n: int) -> list[Composition]:
    """All (k0, k1, ..., kq) with k0 >= 0, kj >= 1 for j >= 1, summing to n."""
    if not 0 <= n <= 6:
        raise ValueError(f"composition order must lie in 0..6, got {n}")
    out = []
    for q in range(n + 1):
        for k0 in range(n, -1, -1):
            for rest in _positive_compositions(n - k0):
                if len(rest) == q:
                    out.append(Composition((k0,) + rest))
    return out


def o0_matrix(params: ModelParams, t: float) -> np.ndarray:
    """exp(L0_A t); diagonal because the free atom only rotates coherences."""
    ph = np.exp(-1j * params.omega_a * t)
    return np.diag([1.0, np.conj(ph), ph, 1.0]).astype(complex)


def o0_inverse(params: ModelParams, t: float) -> ReducedMap:
    return ReducedMap(o0_matrix(params, -t), time=t)


def _l0a(params: ModelParams) -> np.ndarray:
    return np.diag([0.0, 1j * params.omega_a, -1j * params.omega_a, 0.0])


@dataclass
class MomentFamily:
    """O_k(t) and their time derivatives on a grid, k = 0..order_max."""

    order_max: int
    grid: np.ndarray
    O: np.ndarray  # (T, N+1, 4, 4)
    Odot: np.ndarray  # (T, N+1, 4, 4)
    images: np.ndarray | None = None  # (T, N+1, 4, D, D), rotating frame

    def cumulant(self, n: int, i: int) -> ReducedMap:
        return numeric_cumulant(n, self, i)


class MomentSystem:
    """Right-hand side of the stacked moment recursion and its projections."""

    def __init__(self, params: ModelParams, fock: FockConfig, order_max: int):
        if order_max < 0:
            raise ValueError("order_max must be >= 0")
        self.params = params
        self.fock = fock
        self.order_max = order_max
        self.fast = FastModel(params, fock, rotating=True)
        self.l0a = _l0a(params)

    def initial(self) -> np.ndarray:
        d = self.fast.ops.dim
        y = np.zeros((self.order_max + 1, 4, d, d), dtype=complex)
        y[0] = factorized_inputs(self.params, self.fock)
        return y

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        out = self.fast.l0(y)
        out[1:] += self.fast.l(y[:-1])
        return out

    def project(self, t, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (O_k, Odot_k) in the lab frame for a state (or stack of states) y."""
        t = np.asarray(t, dtype=float)
        o_rot = reduce_columns(y, self.fock)
        drive = np.zeros_like(o_rot)
        drive[..., 1:, :, :] = reduce_columns(self.fast.l(y[..., :-1, :, :, :]), self.fock)
        tt = t[..., None] if t.ndim else t
        o = self.fast.unrotate_maps(o_rot, tt)
        drive = self.fast.unrotate_maps(drive, tt)
        # tr_B annihilates the boson part of L0, so only L0_A survives
        odot = self.l0a @ o + drive
        return o, odot


def compute_moments(
    params: ModelParams,
    fock: FockConfig,
    grid,
    order_max: int,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    keep_images: bool = False,
    method: str = "DOP853",
) -> MomentFamily:
    grid = np.asarray(grid, dtype=float)
    system = MomentSystem(params, fock, order_max)
    ys = qcore.integrate_ode(system.rhs, system.initial(), grid, rtol=rtol, atol=atol, method=method)
    o, odot = system.project(grid, ys)
    return MomentFamily(order_max, grid, o, odot, ys if keep_images else None)


def project_moments(images: np.ndarray, params: ModelParams, fock: FockConfig, grid) -> tuple[np.ndarray, np.ndarray]:
    """Project rotating-frame images (T, N+1, 4, D, D) onto (O_k, Odot_k)."""
    system = MomentSystem(params, fock, images.shape[-4] - 1)
    return system.project(np.asarray(grid, dtype=float), images)


def compute_F(
    params: ModelParams,
    fock: FockConfig,
    grid,
    order_max: int,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> np.ndarray:
    """Interaction-picture Dyson terms F_k(t) applied to the range of P.

    Returns an array (T, N+1, 4, D, D) whose [i, k, c] entry is
    F_k(t_i) (|a><b| (x) |z><z|) for the c-th atom basis element. Obtained by
    pulling the Schroedinger-picture images back with exp(-L0 t), so the
    t * gamma conditioning bound applies.
    """
    from .model import CONDITIONING_BOUND, _check_conditioning, build_L0

    grid = np.asarray(grid, dtype=float)
    _check_conditioning(params, float(grid[-1]), CONDITIONING_BOUND)
    fam = compute_moments(params, fock, grid, order_max, rtol, atol, keep_images=True)
    fast = FastModel(params, fock, rotating=True)
    l0 = build_L0(params.replace(omega_a=params.delta_omega, omega_c=0.0), fock).matrix
    d = fast.ops.dim
    out = np.empty_like(fam.images)
    for i, t in enumerate(grid):
        # images are in the rotating frame; F_k = exp(-L0_lab t) G_lab = exp(-L0_rot t) G_rot
        back = qcore.expm(-l0 * t)
        flat = fam.images[i].reshape(-1, d * d)
        out[i] = (flat @ back.T).reshape(fam.images[i].shape)
    return out


def _series_products(o: np.ndarray, odot: np.ndarray, o0inv: np.ndarray, n: int) -> np.ndarray:
    a = o @ o0inv
    d = odot @ o0inv
    # s[m] = sum over compositions of m into positive parts of (-1)^q A_k1 ... A_kq
    s = [np.broadcast_to(np.eye(4, dtype=complex), a.shape[:-3] + (4, 4))]
    for m in range(1, n + 1):
        acc = np.zeros(a.shape[:-3] + (4, 4), dtype=complex)
        for j in range(1, m + 1):
            acc = acc - a[..., j, :, :] @ s[m - j]
        s.append(acc)
    k = np.zeros(a.shape[:-3] + (4, 4), dtype=complex)
    for k0 in range(n + 1):
        k = k + d[..., k0, :, :] @ s[n - k0]
    return k


def o0_inverse_stack(params: ModelParams, t) -> np.ndarray:
    """exp(-L0_A t) for an array of times, shape t.shape + (4, 4)."""
    t = np.asarray(t, dtype=float)
    ph = np.exp(1j * params.omega_a * t)
    out = np.zeros(t.shape + (4, 4), dtype=complex)
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = np.conj(ph)
    out[..., 2, 2] = ph
    out[..., 3, 3] = 1.0
    return out


def cumulants_from_moments(o: np.ndarray, odot: np.ndarray, o0inv: np.ndarray, n_max: int | None = None) -> np.ndarray:
    """All cumulants K_0..K_n_max from moments (..., N+1, 4, 4) and O_0^{-1} (..., 4, 4).

    Uses S_0 = 1, S_m = -sum_j A_j S_{m-j} with A_k = O_k O_0^{-1}, which
    regroups the signed composition sum exactly: K_n = sum_k0 Odot_k0 O_0^{-1} S_{n-k0}.
    """
    if n_max is None:
        n_max = o.shape[-3] - 1
    inv = o0inv[..., None, :, :]
    return np.stack([_series_products(o, odot, inv, n) for n in range(n_max + 1)], axis=-3)


def composition_sum(n: int, o: np.ndarray, odot: np.ndarray, o0inv: np.ndarray) -> np.ndarray:
    """Literal signed sum over compositions of one time point's moments (N+1, 4, 4)."""
    total = np.zeros((4, 4), dtype=complex)
    for comp in enumerate_compositions(n):
        k0, *rest = comp.parts
        term = odot[k0] @ o0inv
        for k in rest:
            term = term @ o[k] @ o0inv
        total += comp.sign * term
    return total


def numeric_cumulant(n: int, family: MomentFamily, i: int) -> ReducedMap:
    """K_n at grid index i by the literal signed sum over compositions."""
    if n > family.order_max:
        raise ValueError(f"moment family only reaches order {family.order_max}")
    t = family.grid[i]
    o0inv = np.linalg.inv(family.O[i, 0])
    m = composition_sum(n, family.O[i], family.Odot[i], o0inv)
    return ReducedMap(m, time=float(t), order=n)


def numeric_cumulants(params: ModelParams, fock: FockConfig, grid, n_max: int, **kw) -> np.ndarray:
    """K_0..K_n_max on a grid, shape (T, n_max+1, 4, 4)."""
    fam = compute_moments(params, fock, grid, n_max, **kw)
    return cumulants_from_moments(fam.O, fam.Odot, o0_inverse_stack(params, fam.grid), n_max)
