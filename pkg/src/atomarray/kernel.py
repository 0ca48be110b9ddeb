"""Dipole radiation kernel and the pairwise couplings it induces.

Units: k = 1 (lengths in 1/k), gamma = 1 (single-atom HWHM linewidth).
Every hbar/eps0/dipole-moment factor collapses into XI = 6*pi*gamma/k^3,
the only combination that enters the couplings.

The position-space kernel G is the curly-bracket part of the classical
dipole field (the contact delta term is dropped: distinct atoms never
coincide).  For a unit dipole e at the origin and rho = k*r,

    G(r) e = (k^3/4pi) e^{i rho} [ (1 - rr)/rho + (3rr - 1)(1/rho^3 - i/rho^2) ] e.

Pairwise couplings: Omega + i*gamma_pair = XI * e_nu^* . G(r_j - r_l) . e_mu.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NearFieldRequestError, OnLightConeError, SingularSeparationError

K = 1.0
GAMMA = 1.0
XI = 6.0 * np.pi * GAMMA / K**3

# below this separation the 1/r^3 terms are considered unusable
SINGULAR_SEPARATION = 1e-9

# default far-field radiation-zone threshold (k*r > this)
FAR_FIELD_KR = 100.0

# guard width around the light circle for momentum kernels
LIGHT_CONE_EPS = 1e-9


def circular_basis(quantization_axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Columns (e_-1, e_0, e_+1) of the circular polarization basis for the
    given quantization axis: e_pm = mp(x' pm i y')/sqrt(2), e_0 = z'."""
    z = np.asarray(quantization_axis, dtype=float)
    z = z / np.linalg.norm(z)
    # any unit vector not parallel to z seeds the transverse pair
    seed = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = seed - z * (seed @ z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    em = (x - 1j * y) / np.sqrt(2.0)
    ep = -(x + 1j * y) / np.sqrt(2.0)
    return np.column_stack([em, z.astype(complex), ep])


@dataclass(frozen=True)
class PairCoupling:
    """Coherent shift Omega and dissipative rate gamma_pair of one dipole
    pair, both in units of gamma."""
    omega: float
    gamma_pair: float

    @property
    def complex_coupling(self) -> complex:
        return self.omega + 1j * self.gamma_pair


def green_tensor(rvec) -> np.ndarray:
    """Position-space kernel as a complex symmetric 3x3 matrix; G(r)=G(-r).

    Broadcasts over leading axes: rvec may be (..., 3).
    """
    rvec = np.asarray(rvec, dtype=float)
    r = np.sqrt(np.sum(rvec * rvec, axis=-1))
    if np.any(r < SINGULAR_SEPARATION):
        raise SingularSeparationError("kernel requested at |r| below 1e-9/k")
    rho = K * r
    rhat = rvec / r[..., None]
    rr = rhat[..., :, None] * rhat[..., None, :]
    eye = np.eye(3)
    phase = np.exp(1j * rho)[..., None, None]
    rho = rho[..., None, None]
    return (K**3 / (4 * np.pi)) * phase * (
        (eye - rr) / rho + (3 * rr - eye) * (1 / rho**3 - 1j / rho**2))


def pair_coupling(r_j, r_l, e_nu, e_mu) -> PairCoupling:
    """Omega + i*gamma_pair = XI * e_nu^* . G(r_j - r_l) . e_mu."""
    g = XI * kernel_matrix_element(np.asarray(r_j) - np.asarray(r_l), e_nu, e_mu)
    return PairCoupling(float(g.real), float(g.imag))


def kernel_matrix_element(rvec, e_nu, e_mu) -> complex:
    """e_nu^* . G(r) . e_mu for (possibly complex) unit vectors."""
    G = green_tensor(rvec)
    return complex(np.conj(np.asarray(e_nu)) @ G @ np.asarray(e_mu))


def far_field_kernel(rhat, r, r_j, dipole, threshold=FAR_FIELD_KR) -> np.ndarray:
    """Radiation-zone field of a unit-amplitude dipole at r_j observed at
    distance r along direction rhat:

        (k^2 / 4 pi r) e^{i(kr - k rhat.r_j)} (rhat x d) x rhat
    """
    if K * r <= threshold:
        raise NearFieldRequestError(
            f"far-field kernel needs k*r > {threshold}; got {K * r}")
    rhat = np.asarray(rhat, dtype=float)
    rhat = rhat / np.linalg.norm(rhat)
    d = np.asarray(dipole, dtype=complex)
    transverse = d - rhat * (rhat @ d)
    phase = np.exp(1j * (K * r - K * rhat @ np.asarray(r_j)))
    return (K**2 / (4 * np.pi * r)) * phase * transverse


def green_1d(x) -> complex:
    """1D kernel (i k / 2) e^{i k |x|}; |value| independent of x."""
    return 0.5j * K * np.exp(1j * K * np.abs(x))


def momentum_kernel_3d(p, eta: float = 0.0) -> np.ndarray:
    """3D momentum representation (k^2 I - p p^T) / (p^2 - k^2), the Fourier
    transform of the full position kernel (contact term included), times the
    Gaussian regulator exp(-p^2 eta^2 / 4).

    Only defined off the resonant shell |p| = k.
    """
    p = np.asarray(p, dtype=float)
    p2 = p @ p
    if abs(p2 - K**2) < LIGHT_CONE_EPS * K**2:
        raise OnLightConeError("3D momentum kernel evaluated on |p| = k")
    if eta < 0:
        raise ValueError("regulator width must be >= 0")
    reg = np.exp(-p2 * eta**2 / 4.0)
    return reg * (K**2 * np.eye(3) - np.outer(p, p)) / (p2 - K**2)


def momentum_kernel_2d(q_par, x: float = 0.0, eta: float = 0.0) -> np.ndarray:
    """2D (in-plane) Fourier transform of the kernel at out-of-plane offset x:

        (i/2) (k^2 delta - q_nu q_mu) / k_perp * e^{i k_perp |x|},
        q = (sgn(x) k_perp, q_par),  k_perp = sqrt(k^2 - |q_par|^2),

    times exp(-|q_par|^2 eta^2 / 4).  Outside the light circle k_perp is
    +i sqrt(|q_par|^2 - k^2) so the field decays away from the plane.
    Components ordered (x, y, z) with q_par = (q_y, q_z).
    """
    qy, qz = np.asarray(q_par, dtype=float)
    q2 = qy**2 + qz**2
    if abs(q2 - K**2) < (LIGHT_CONE_EPS * K) ** 2:
        raise OnLightConeError("2D momentum kernel on the light circle |q| = k")
    if q2 < K**2:
        k_perp = np.sqrt(K**2 - q2)
    else:
        k_perp = 1j * np.sqrt(q2 - K**2)
    sgn = 1.0 if x >= 0 else -1.0
    q = np.array([sgn * k_perp, qy, qz], dtype=complex)
    mat = (K**2 * np.eye(3) - np.outer(q, q)).astype(complex)
    reg = np.exp(-q2 * eta**2 / 4.0)
    return 0.5j * reg * mat / k_perp * np.exp(1j * k_perp * abs(x))


def dissipation_matrix(positions, orientations) -> np.ndarray:
    """N x N real symmetric matrix of dissipative rates: diagonal gamma,
    off-diagonal gamma_pair(j, l) for the given real dipole orientation(s).
    Positive semidefinite for any distinct positions."""
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    ors = np.asarray(orientations, dtype=float)
    if ors.ndim == 1:
        ors = np.tile(ors, (n, 1))
    B = GAMMA * np.eye(n)
    for j in range(n):
        for l in range(j + 1, n):
            g = XI * kernel_matrix_element(pos[j] - pos[l], ors[j], ors[l])
            B[j, l] = B[l, j] = g.imag
    return B
