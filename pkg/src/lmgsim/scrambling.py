"""Fidelity out-of-time-order correlators from echo dynamics.

The echo unitary U(t, dphi) = e^{+iHt} e^{-i S_a dphi} e^{-iHt} probes how a
small rotation applied mid-protocol fails to undo itself; the curvature of the
return fidelity in dphi is the scrambling measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dicke import DensityMatrix, PureState, SpinAxis, State, as_density, build_spin_operators, spin_component
from .dynamics import propagator_for

DEFAULT_DELTA_PHI_GRID = (-0.01, -0.005, -0.002, 0.0, 0.002, 0.005, 0.01)


def heisenberg_operator(hamiltonian: np.ndarray, op: np.ndarray, t: float) -> np.ndarray:
    """A(t) = e^{+iHt} A e^{-iHt}."""
    u = propagator_for(hamiltonian).unitary(t)
    return u.conj().T @ op @ u


@dataclass(frozen=True)
class FotocSample:
    delta_phi: float
    fidelity: float


def _echo_fidelity(state: State, u_echo: np.ndarray) -> float:
    # Tr(U rho U^dag rho); collapses to |<psi|U|psi>|^2 on pure states
    if isinstance(state, PureState):
        amp = state.amplitudes.conj() @ (u_echo @ state.amplitudes)
        return float(np.abs(amp) ** 2)
    rho = state.matrix
    return float(np.real(np.trace(u_echo @ rho @ u_echo.conj().T @ rho)))


def fotoc(
    hamiltonian: np.ndarray,
    state: State,
    axis: SpinAxis,
    t: float,
    delta_phis=DEFAULT_DELTA_PHI_GRID,
) -> list[FotocSample]:
    """Return fidelity F(dphi) = Tr(U rho U^dag rho) for each probe rotation."""
    params = state.params
    prop = propagator_for(hamiltonian)
    u_fwd = prop.unitary(t)
    u_bwd = u_fwd.conj().T
    gen = spin_component(build_spin_operators(params), axis)
    w, v = np.linalg.eigh(gen)
    samples = []
    for dphi in delta_phis:
        u_rot = (v * np.exp(-1j * w * dphi)) @ v.conj().T
        u_echo = u_bwd @ u_rot @ u_fwd
        samples.append(FotocSample(delta_phi=float(dphi), fidelity=_echo_fidelity(state, u_echo)))
    return samples


@dataclass(frozen=True)
class OtocResult:
    """Quadratic-fit curvature of the return fidelity.

    F(dphi) ~ offset - value * (dphi - center)^2; value is the scrambling
    measure -1/2 d^2F/ddphi^2 at the fitted peak.
    """

    value: float
    offset: float
    center: float


def otoc_from_fotoc(samples: list[FotocSample]) -> OtocResult:
    """Least-squares parabola through the (dphi, F) samples.

    Needs at least 5 samples covering both probe signs so the peak offset is
    determined by data rather than extrapolation.
    """
    if len(samples) < 5:
        raise ValueError(f"need at least 5 fidelity samples for the quadratic fit, got {len(samples)}")
    x = np.array([s.delta_phi for s in samples])
    y = np.array([s.fidelity for s in samples])
    if np.all(x >= 0.0) or np.all(x <= 0.0):
        raise ValueError("fidelity samples must span both signs of delta_phi")
    if np.unique(x).size < 3:
        raise ValueError("quadratic fit is singular: fewer than 3 distinct delta_phi values")
    p2, p1, p0 = np.polyfit(x, y, 2)
    value = -p2
    if value == 0.0:
        return OtocResult(value=0.0, offset=float(p0), center=0.0)
    center = p1 / (2.0 * value)
    offset = float(p0 + value * center**2)
    return OtocResult(value=float(value), offset=offset, center=float(center))


def otoc_trace_form(hamiltonian: np.ndarray, state: State, axis: SpinAxis, t: float) -> float:
    """Diagnostic: literal Tr(S_a(t) rho S_a(t) rho).

    For pure states this equals <S_a(t)>^2, not the fidelity curvature
    var(S_a(t)); the two deliberately coexist and are not reconciled.
    """
    rho = as_density(state).matrix
    gen = spin_component(build_spin_operators(state.params), axis)
    a_t = heisenberg_operator(hamiltonian, gen, t)
    return float(np.real(np.trace(a_t @ rho @ a_t @ rho)))
