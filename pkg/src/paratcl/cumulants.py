"""Closed-form cumulants K_n(t) of the reduced two-level dynamics.

All maps are 4 x 4 matrices on row-major vectorized 2 x 2 density matrices.
Dissipative parts are stored as signed (rate, jump) pairs; a negative rate is
data, not an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from .model import ModelParams, ReducedMap
from .qcore import atom_ops, expm, commutator_super, dissipator_super, sandwich

SP, SM = atom_ops()
P1 = SP @ SM
INF = math.inf


@dataclass
class GkslLikeForm:
    hamiltonian: np.ndarray
    dissipator_terms: list[tuple[float, np.ndarray]] = field(default_factory=list)

    def generator(self) -> np.ndarray:
        m = commutator_super(self.hamiltonian)
        for rate, jump in self.dissipator_terms:
            m = m + dissipator_super(jump, rate)
        return m


def _map(matrix, t, order, form=None) -> ReducedMap:
    return ReducedMap(np.asarray(matrix, dtype=complex), time=t, order=order, gksl=form)


def k0(params: ModelParams) -> ReducedMap:
    form = GkslLikeForm(params.omega_a * P1)
    return _map(form.generator(), 0.0, 0, form)


def k1(params: ModelParams, t: float) -> ReducedMap:
    """Parametric drive with pump depletion."""
    g, z = complex(params.g), complex(params.z)
    amp = g * z * np.exp(-params.gamma * t / 2 - 1j * params.omega_c * t)
    h = amp * SP + np.conj(amp) * SM
    form = GkslLikeForm(h)
    return _map(form.generator(), t, 1, form)


def k1_interaction(params: ModelParams, t: float) -> ReducedMap:
    """First cumulant with the free atomic rotation removed."""
    g, z = complex(params.g), complex(params.z)
    amp = g * z * np.exp(-params.Gamma * t)
    h = amp * SP + np.conj(amp) * SM
    return _map(commutator_super(h), t, 1)


def f2_phi2(params: ModelParams, t: float) -> tuple[float, float]:
    if t == INF:
        return 0.0, 0.0
    env = math.exp(-params.gamma * t / 2)
    dw, gam = params.delta_omega, params.gamma
    s, c = math.sin(dw * t), math.cos(dw * t)
    return env * (2 * dw * s - gam * c), env * (-2 * dw * c - gam * s)


def k2_coefficients(params: ModelParams, t: float) -> tuple[float, float]:
    """Return (Lamb-shift frequency, dissipation rate) of K2(t)."""
    params.require_gamma()
    f2, phi2 = f2_phi2(params, t)
    w = abs(params.g) ** 2 / params.gamma_abs2
    return 0.5 * w * (2 * params.delta_omega + phi2), w * (params.gamma + f2)


def k2(params: ModelParams, t: float) -> ReducedMap:
    shift, rate = k2_coefficients(params, t)
    form = GkslLikeForm(shift * P1, [(rate, SM.copy())])
    return _map(form.generator(), t, 2, form)


def k2_rate(params: ModelParams, t) -> np.ndarray:
    """Dissipation rate gamma + f2(t) (without the |g|^2/|Gamma|^2 prefactor), vectorized in t."""
    t = np.asarray(t, dtype=float)
    dw, gam = params.delta_omega, params.gamma
    env = np.exp(-gam * t / 2)
    return gam + env * (2 * dw * np.sin(dw * t) - gam * np.cos(dw * t))


def a3_value(params: ModelParams, t: float, bare: bool = False) -> complex:
    """Complex third-order coefficient.

    The default carries an extra factor i relative to the bare expression
    g|g|^2 z e^{-i w_A t} e^{-Gamma t}(1 - Gamma t - e^{-Gamma t}) / Gamma^2;
    that phase is what the numerically assembled third cumulant requires
    (agreement ~1e-12 across complex g, z and several detunings). ``bare=True``
    returns the expression without the factor i.
    """
    params.require_gamma()
    if t == INF:
        return 0j
    gam = params.Gamma
    g, z = complex(params.g), complex(params.z)
    e = np.exp(-gam * t)
    val = g * abs(g) ** 2 * z * np.exp(-1j * params.omega_a * t) * e * (1 - gam * t - e) / gam**2
    return complex(val if bare else 1j * val)


def a3(params: ModelParams, t: float, bare: bool = False) -> tuple[float, float]:
    """Modulus and phase of the third-order coefficient; phase is 0 when it vanishes."""
    val = a3_value(params, t, bare)
    mod = abs(val)
    if mod < 1e-300:
        return 0.0, 0.0
    return float(mod), float(np.angle(val))


def k3_direct(params: ModelParams, t: float, bare: bool = False) -> np.ndarray:
    """K3(t) from its commutator-plus-sandwich form."""
    mod, psi = a3(params, t, bare)
    e = np.exp(1j * psi)
    h = mod * (1j * e * SP - 1j * np.conj(e) * SM)
    m = commutator_super(h)
    m = m + 2 * mod * (e * sandwich(P1, SP) + np.conj(e) * sandwich(SM, P1))
    return m


def k3_form(params: ModelParams, t: float, conjugate_second: bool = False) -> GkslLikeForm:
    """GKSL-like decomposition of K3(t) with rates -1 and +1.

    Both jump operators carry the phase e^{+i psi} on sigma+ sigma-; with
    e^{-i psi} on the second one the two forms would differ by
    2 |a| sin(psi) rho_11 (sigma+ - sigma-) whenever psi is not a multiple of pi.
    ``conjugate_second=True`` builds that variant.
    """
    mod, psi = a3(params, t)
    e = np.exp(1j * psi)
    h = mod * (1j * e * SP - 1j * np.conj(e) * SM)
    r = math.sqrt(mod)
    l1 = r * (SM - e * P1)
    l2 = r * (SM + (np.conj(e) if conjugate_second else e) * P1)
    return GkslLikeForm(h, [(-1.0, l1), (1.0, l2)])


def k3(params: ModelParams, t: float) -> ReducedMap:
    return _map(k3_direct(params, t), t, 3, k3_form(params, t))


def k4_infinity(params: ModelParams) -> ReducedMap:
    """Non-vanishing long-time part of the fourth cumulant."""
    params.require_gamma()
    g4 = abs(params.g) ** 4
    G2 = params.gamma_abs2
    dw, gam = params.delta_omega, params.gamma
    shift = g4 * dw * (gam**2 - G2) / G2**3
    rate = g4 * gam * (G2 - 4 * dw**2) / G2**3
    form = GkslLikeForm(shift * P1, [(rate, SM.copy())])
    return _map(form.generator(), INF, 4, form)


def k2_infinity(params: ModelParams) -> ReducedMap:
    return k2(params, INF)


def analytic_cumulant(n: int, params: ModelParams, t: float) -> ReducedMap:
    """K_n(t) for n <= 3; n = 4 is only available as the t -> infinity asymptote."""
    if n == 0:
        return k0(params)
    if n == 1:
        return k1(params, t)
    if n == 2:
        return k2(params, t)
    if n == 3:
        return k3(params, t)
    if n == 4:
        return k4_infinity(params)
    raise ValueError(f"no closed form for order {n}")


def renormalizer_coefficient(params: ModelParams) -> complex:
    """Amplitude c of the correction R - 1 = -i lam [c sigma+ + conj(c) sigma-, .]."""
    params.require_gamma()
    return complex(params.g) * complex(params.z) / params.Gamma


def renormalizer(params: ModelParams, variant: str = "integral") -> ReducedMap:
    """Initial-condition renormalizer R = 1 + lam * int_0^inf K1^I(t) dt.

    ``variant="integral"`` evaluates the integral: -i lam [g z / Gamma sigma+ + h.c., .].
    ``variant="gamma_numerator"`` is the form +i lam |Gamma|^-2 [g z Gamma sigma+ + h.c., .],
    which equals the integral only for gamma = 0 but gives the same
    excited-state correction whenever g z rho_01 is real.
    """
    params.require_gamma()
    if variant == "gamma_numerator":
        gzg = complex(params.g) * complex(params.z) * params.Gamma
        a = (params.lam / params.gamma_abs2) * (gzg * SP + np.conj(gzg) * SM)
        # +i[a, .] is the negative of commutator_super(a) = -i[a, .]
        corr = -commutator_super(a)
    elif variant == "integral":
        c = renormalizer_coefficient(params)
        corr = params.lam * commutator_super(c * SP + np.conj(c) * SM)
    else:
        raise ValueError(f"unknown renormalizer variant {variant!r}")
    return _map(np.eye(4) + corr, 0.0, None)


def polishing_shift(params: ModelParams, rho0: np.ndarray) -> float:
    """Excited-population jump lam * (2 dw / |Gamma|^2) * Re(g z rho_10(0))."""
    rho0 = np.asarray(rho0)
    return params.lam * 2 * params.delta_omega / params.gamma_abs2 * float(
        np.real(complex(params.g) * complex(params.z) * rho0[1, 0])
    )


def rho11_closed_form(params: ModelParams, rho_tilde_0: np.ndarray, t) -> np.ndarray:
    """Excited population of the matched Markov solution for rho_11(0) = 1.

    ``t`` is the slow (rescaled) time on which K2(inf) acts without a lam^2
    prefactor. Evaluated as written: the coherence-dependent factor is kept even
    though a physical state with rho_11 = 1 has no coherence.
    """
    params.require_gamma()
    rate = abs(params.g) ** 2 * params.gamma / params.gamma_abs2
    t = np.asarray(t, dtype=float)
    return np.exp(-rate * t) * (1 + polishing_shift(params, rho_tilde_0))


def propagate_map(m: np.ndarray, rho: np.ndarray, t: float) -> np.ndarray:
    return (expm(m * t) @ np.asarray(rho).reshape(4)).reshape(2, 2)
