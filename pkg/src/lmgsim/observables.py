"""State characterization: spin moments, antisqueezing, Binder cumulant,
quantum Fisher information, and the spherical Wigner function."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import assoc_legendre_p_all

from . import tolerances
from .dicke import (
    DensityMatrix,
    PureState,
    SpinAxis,
    SpinOperators,
    State,
    as_density,
    build_spin_operators,
    spin_component,
)


@dataclass(frozen=True)
class SpinMoments:
    """Central moments of n.S up to fourth order."""

    mean: float
    var: float
    third: float
    fourth: float


def _raw_moments(state: State, op: np.ndarray, orders: int = 4) -> list[float]:
    if isinstance(state, PureState):
        vec = state.amplitudes
        out, cur = [], vec
        for _ in range(orders):
            cur = op @ cur
            out.append(float(np.real(vec.conj() @ cur)))
        return out
    out, cur = [], state.matrix
    for _ in range(orders):
        cur = cur @ op
        out.append(float(np.trace(cur).real))
    return out


def spin_moments(state: State, axis: SpinAxis) -> SpinMoments:
    """Mean and central moments (up to 4th) of the spin component n.S."""
    ops = build_spin_operators(state.params)
    a = spin_component(ops, axis)
    m1, m2, m3, m4 = _raw_moments(state, a, 4)
    var = m2 - m1**2
    third = m3 - 3.0 * m1 * m2 + 2.0 * m1**3
    fourth = m4 - 4.0 * m1 * m3 + 6.0 * m1**2 * m2 - 3.0 * m1**4
    return SpinMoments(mean=m1, var=var, third=third, fourth=fourth)


def _yz_quadratic_form(state: State, ops: SpinOperators):
    """Coefficients of var(S_alpha) = vy cos^2 a + vz sin^2 a + 2 cov sin a cos a."""
    if isinstance(state, PureState):
        vec = state.amplitudes
        yv, zv = ops.sy @ vec, ops.sz @ vec
        ey, ez = float(np.real(vec.conj() @ yv)), float(np.real(vec.conj() @ zv))
        eyy, ezz = float(np.real(yv.conj() @ yv)), float(np.real(zv.conj() @ zv))
        cross = float(np.real(yv.conj() @ zv))  # Re<Sy Sz> = symmetrized product
    else:
        rho = state.matrix
        ey = float(np.trace(rho @ ops.sy).real)
        ez = float(np.trace(rho @ ops.sz).real)
        eyy = float(np.trace(rho @ ops.sy @ ops.sy).real)
        ezz = float(np.trace(rho @ ops.sz @ ops.sz).real)
        cross = float(np.trace(rho @ (ops.sy @ ops.sz + ops.sz @ ops.sy)).real) / 2.0
    return eyy - ey**2, ezz - ez**2, cross - ey * ez


@dataclass(frozen=True)
class Antisqueezing:
    xi_plus_sq: float
    alpha_max: float


def _golden_section_max(f, lo: float, hi: float, tol: float):
    """Golden-section search for the maximum of a unimodal f on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    x = 0.5 * (a + b)
    return x, f(x)


def antisqueezing(state: State, n_grid: int = 64, tol: float = 1e-6) -> Antisqueezing:
    """Maximal transverse variance ratio max_a var(S_a) / (S/2), a in [0, pi).

    S_a = Sy cos a + Sz sin a spans the plane orthogonal to the +x mean-spin
    direction. Coarse grid then golden-section refinement of the bracketing
    interval down to tol radians.
    """
    params = state.params
    vy, vz, cov = _yz_quadratic_form(state, build_spin_operators(params))

    def var(alpha: float) -> float:
        c, s = math.cos(alpha), math.sin(alpha)
        return vy * c * c + vz * s * s + 2.0 * cov * s * c

    alphas = np.arange(n_grid) * math.pi / n_grid
    values = [var(a) for a in alphas]
    i = int(np.argmax(values))
    # refine inside the neighboring-grid-point bracket; var has period pi
    lo, hi = alphas[i] - math.pi / n_grid, alphas[i] + math.pi / n_grid
    alpha_max, vmax = _golden_section_max(var, lo, hi, tol)
    alpha_max = alpha_max % math.pi
    return Antisqueezing(xi_plus_sq=vmax / (params.spin / 2.0), alpha_max=alpha_max)


def binder_from_central_moments(mu2: float, mu4: float) -> float:
    """B = 1 - mu4 / (3 mu2^2); shared by the quantum and sampled estimators."""
    if mu2 <= 0.0:
        raise ValueError(f"Binder cumulant undefined for non-positive variance {mu2:.3e}")
    return 1.0 - mu4 / (3.0 * mu2 * mu2)


def binder_cumulant(state: State, axis: SpinAxis) -> float:
    """Binder cumulant of the n.S distribution; 0 for Gaussian statistics."""
    mom = spin_moments(state, axis)
    return binder_from_central_moments(mom.var, mom.fourth)


@dataclass(frozen=True)
class QfiResult:
    """Fisher information for the given axis plus the 3x3 generator matrix."""

    f_q: float
    gamma_q: np.ndarray

    @property
    def optimal_direction(self) -> np.ndarray:
        """Rotation axis maximizing F_Q: top eigenvector of gamma_q."""
        w, v = np.linalg.eigh(self.gamma_q)
        return v[:, -1]

    @property
    def f_q_max(self) -> float:
        return float(np.linalg.eigvalsh(self.gamma_q)[-1])


def qfi(state: State, axis: SpinAxis, eig_cutoff: float = tolerances.EIG_CUTOFF) -> QfiResult:
    """Spectral QFI: F_Q = 2 sum_{q_k + q_k' > cutoff} (q_k - q_k')^2 / (q_k + q_k')
    |<k'|n.S|k>|^2, assembled together with the full 3x3 matrix over x, y, z."""
    rho = as_density(state)
    ops = build_spin_operators(rho.params)
    q, v = np.linalg.eigh(rho.matrix)
    q = np.clip(q, 0.0, None)
    ssum = q[:, None] + q[None, :]
    diff = q[:, None] - q[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(ssum > eig_cutoff, 2.0 * diff**2 / ssum, 0.0)
    comps = [v.conj().T @ s @ v for s in (ops.sx, ops.sy, ops.sz)]
    gamma = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            gamma[i, j] = gamma[j, i] = float(np.real(np.sum(weight * comps[i] * comps[j].conj())))
    n = axis.unit_vector
    return QfiResult(f_q=float(n @ gamma @ n), gamma_q=gamma)


def multipole_components(state: State) -> np.ndarray:
    """Spherical-tensor components r[k, q + K], K = N, k = 0..N, |q| <= k.

    The tensor operators T_kq are built by lowering from T_kk proportional to
    (-1)^k (S+)^k, unit Hilbert-Schmidt norm; they satisfy T_k,-q =
    (-1)^q T_kq^dagger, so for the Hermitian input r[k, -q] = (-1)^q conj(r[k, q]).
    """
    rho = as_density(state).matrix
    d = rho.shape[0]
    S = (d - 1) / 2.0
    K = d - 1
    m = S - np.arange(d)

    # ladder amplitudes, clipped where the index leaves the spin range
    def g_minus(marr):  # <m-1|S-|m>
        return np.sqrt(np.clip(S * (S + 1) - marr * (marr - 1), 0.0, None))

    lf = np.zeros(d)  # log <m_j + 1|S+|m_j> for j >= 1
    lf[1:] = 0.5 * np.log(S * (S + 1) - m[1:] * (m[1:] + 1))
    cum = np.concatenate(([0.0], np.cumsum(lf[1:])))  # cum[j] = sum_{i<=j} lf[i]

    out = np.zeros((K + 1, 2 * K + 1), dtype=complex)
    cols = np.arange(d)
    diag_cache = {qq: np.diagonal(rho, offset=qq) for qq in range(-K, K + 1)}

    for k in range(K + 1):
        # T_kk band over columns j = k..d-1, normalized, sign (-1)^k
        band = np.zeros(d)
        if k == 0:
            band[:] = 1.0
        else:
            logb = cum[cols[k:]] - cum[cols[k:] - k]
            logb -= logb.max()
            band[k:] = np.exp(logb)
        band = band / np.linalg.norm(band) * (-1.0) ** k

        q = k
        while True:
            # r_kq = sum_j band[j] * rho[j - q, j]
            if q >= 0:
                out[k, q + K] = np.sum(band[q:] * diag_cache[q])
            else:
                out[k, q + K] = np.sum(band[: d + q] * diag_cache[q])
            if q <= 0:
                break
            # lower: T_{k,q-1} = [S-, T_kq] / sqrt(k(k+1) - q(q-1))
            denom = math.sqrt(k * (k + 1.0) - q * (q - 1.0))
            ga = g_minus(S - cols + q)
            gb = g_minus(S - cols)
            shifted = np.zeros(d)
            shifted[:-1] = band[1:]
            band = (ga * band - gb * shifted) / denom
            q -= 1

    # negative q by the hermiticity symmetry of the tensor basis
    for k in range(K + 1):
        qs = np.arange(1, k + 1)
        out[k, K - qs] = (-1.0) ** qs * np.conj(out[k, K + qs])
    return out


def _theta_profiles(rkq: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """C[q, i] = sum_k r_kq Ybar_kq(theta_i), q >= 0, where Y = Ybar e^{iq phi}."""
    K = rkq.shape[0] - 1
    x = np.cos(np.asarray(thetas, dtype=float))
    # orthonormal-on-[-1,1] associated Legendre, all degrees/orders at once
    p = assoc_legendre_p_all(K, K, x, norm=True)[0]  # (K+1, 2K+1, n_theta)
    c = np.zeros((K + 1, x.size), dtype=complex)
    for q in range(K + 1):
        ks = np.arange(q, K + 1)
        c[q] = (rkq[ks, q + K] @ p[ks, q]) / math.sqrt(2.0 * math.pi)
    return c


def wigner(state: State, thetas, phis) -> np.ndarray:
    """Spherical Wigner function on the product grid, shape (len(thetas), len(phis)).

    W = sum_kq r_kq Y_kq; real by construction for Hermitian input. A faithful
    (alias-free) rendering needs at least 2S+1 samples per direction.
    """
    rkq = multipole_components(state)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    c = _theta_profiles(rkq, thetas)
    K = rkq.shape[0] - 1
    qs = np.arange(K + 1)
    phase = np.exp(1j * np.outer(qs, phis))  # (K+1, n_phi)
    weights = np.where(qs == 0, 1.0, 2.0)[:, None]
    return np.real(c.T @ (weights * phase))


def wigner_points(state: State, thetas, phis) -> np.ndarray:
    """Wigner function at paired points (theta_i, phi_i), shape (n_points,)."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    if thetas.shape != phis.shape:
        raise ValueError("thetas and phis must have matching shapes")
    rkq = multipole_components(state)
    c = _theta_profiles(rkq, thetas)  # (K+1, n_points)
    K = rkq.shape[0] - 1
    qs = np.arange(K + 1)
    phase = np.exp(1j * qs[:, None] * phis[None, :])
    weights = np.where(qs == 0, 1.0, 2.0)[:, None]
    return np.real(np.sum(c * weights * phase, axis=0))
