"""Scattered-light observables: fields, intensity decomposition, photon
rates, transmission/reflection, energy balance, and disorder ensembles.

Fields are expressed in Rabi units (XI G maps a dipole amplitude to the
field it contributes at another atom), so field / incident-amplitude
ratios are dimensionless.

Amplitude and correlation tables use the "component basis" of the
transition: a single amplitude per atom for two-level atoms (dipole along
the fixed orientation), or the three Cartesian components for the
J=0 -> J'=1 transition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularSeparationError
from .geometry import Geometry, sample_positions
from .kernel import GAMMA, K, XI, green_tensor
from .lli import TransitionSpec

# default product quadrature on a hemisphere (Gauss-Legendre x uniform phi)
N_THETA = 48
N_PHI = 96


def component_basis(transition: TransitionSpec) -> np.ndarray:
    """(3, m) matrix whose columns span the dipole components in use."""
    if transition.components == 1:
        return transition.unit_orientation()[:, None].astype(complex)
    return np.eye(3, dtype=complex)


def dipole_table(system_or_transition, b) -> np.ndarray:
    """(N, 3) Cartesian dipole vectors from a component-amplitude vector."""
    tr = getattr(system_or_transition, "transition", system_or_transition)
    basis = component_basis(tr)
    m = basis.shape[1]
    return np.asarray(b, dtype=complex).reshape(-1, m) @ basis.T


def coherent_field(dipoles, geometry: Geometry, point) -> np.ndarray:
    """Coherent scattered field (Rabi units) at one point:
    XI * sum_j G(r - r_j) p_j."""
    pos = geometry.positions
    point = np.asarray(point, dtype=float)
    sep = np.linalg.norm(point - pos, axis=1)
    if np.any(sep < 1e-9):
        raise SingularSeparationError("field point coincides with an atom")
    G = green_tensor(point - pos)
    return XI * np.einsum("jab,jb->a", G, np.asarray(dipoles, dtype=complex))


def hemisphere_grid(n_theta=N_THETA, n_phi=N_PHI, forward=True):
    """Product quadrature directions/weights covering the x>0 (forward) or
    x<0 (backward) hemisphere."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    ct = 0.5 * (x + 1.0)              # cos(angle to the +-x axis) in (0, 1)
    wct = 0.5 * w
    phi = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    wphi = 2 * np.pi / n_phi
    CT, PH = np.meshgrid(ct, phi, indexing="ij")
    W = np.outer(wct, np.full(n_phi, wphi)).ravel()
    st = np.sqrt(1.0 - CT**2)
    sgn = 1.0 if forward else -1.0
    nhat = np.column_stack([sgn * CT.ravel(),
                            (st * np.cos(PH)).ravel(),
                            (st * np.sin(PH)).ravel()])
    return nhat, W


def sphere_grid(n_theta=N_THETA, n_phi=N_PHI):
    """Full-sphere product quadrature."""
    nf, wf = hemisphere_grid(n_theta, n_phi, forward=True)
    nb, wb = hemisphere_grid(n_theta, n_phi, forward=False)
    return np.vstack([nf, nb]), np.concatenate([wf, wb])


def farfield_amplitude(dipoles, geometry: Geometry, nhat) -> np.ndarray:
    """(M, 3) far-zone amplitude F with E_s(r n) ~ (e^{ikr}/r) F(n):
    F = XI (k^2/4pi) sum_j e^{-i k n.r_j} (n x p_j) x n."""
    nhat = np.atleast_2d(nhat)
    p = np.asarray(dipoles, dtype=complex)
    phase = np.exp(-1j * K * nhat @ geometry.positions.T)       # (M, N)
    vec = phase @ p                                             # (M, 3)
    vec = vec - nhat * np.einsum("mi,mi->m", nhat, vec)[:, None]
    return XI * K**2 / (4 * np.pi) * vec


def transmission_reflection(dipoles, geometry: Geometry, beam,
                            n_theta=N_THETA, n_phi=N_PHI,
                            collection_half_angle=np.pi / 2):
    """Amplitude transmission and reflection of a beam through the array.

    Projects the scattered far field on the incident (forward) and the
    mirrored (backward) beam modes over the collection cone:

        t = 1 + <f_in | f_s>_fwd / <f_in | f_in>,
        r =     <f_mirror | f_s>_bwd / <f_in | f_in>,

    with the beam's own far-zone amplitude (-i k w0^2 / 2 r) e^{ikr} f_in.
    The overlap normalization always covers the full forward hemisphere,
    so a finite collection cone reports only the collected fraction.
    """
    nf, wf = hemisphere_grid(n_theta, n_phi, forward=True)
    nb, wb = hemisphere_grid(n_theta, n_phi, forward=False)
    norm = np.sum(wf * np.einsum("mi,mi->m", beam.farfield_mode(nf).conj(),
                                 beam.farfield_mode(nf))).real
    if collection_half_angle < np.pi / 2:
        keepf = nf[:, 0] >= np.cos(collection_half_angle)
        keepb = nb[:, 0] <= -np.cos(collection_half_angle)
        nf, wf = nf[keepf], wf[keepf]
        nb, wb = nb[keepb], wb[keepb]
    fin_f = beam.farfield_mode(nf)
    fin_b = beam.farfield_mode(nb)
    # Fraunhofer far-zone amplitude of the beam: (-i k w0^2 / 2 r) e^{ikr} f_in
    a_in = -1j * K * beam.waist**2 / 2.0 * beam.amplitude
    Fs_f = farfield_amplitude(dipoles, geometry, nf)
    Fs_b = farfield_amplitude(dipoles, geometry, nb)
    denom = a_in * norm
    t = 1.0 + np.sum(wf * np.einsum("mi,mi->m", fin_f.conj(), Fs_f)) / denom
    r = np.sum(wb * np.einsum("mi,mi->m", fin_b.conj(), Fs_b)) / denom
    return complex(t), complex(r)


def uniform_mode_rt(rho_ge, rabi, collective_linewidth):
    """Single-mode path: r = i (gamma+gamma~) rho_ge / R, t = 1 + r."""
    r = 1j * collective_linewidth * rho_ge / rabi
    return 1.0 + r, r


def coupling_imag_matrix(geometry: Geometry, transition: TransitionSpec):
    """M x M real symmetric dissipative-coupling matrix: diagonal gamma,
    off-diagonal Im[XI e.G(r_j - r_l).e'] between dipole components."""
    pos = geometry.positions
    n = len(pos)
    basis = component_basis(transition)
    m = basis.shape[1]
    B = GAMMA * np.eye(n * m)
    if n > 1:
        iu, il = np.triu_indices(n, 1)
        G = XI * green_tensor(pos[iu] - pos[il])
        blocks = np.einsum("in,pij,jm->pnm", basis.conj(), G, basis).imag
        for p, (j, l) in enumerate(zip(iu, il)):
            B[m * j:m * j + m, m * l:m * l + m] = blocks[p]
            B[m * l:m * l + m, m * j:m * j + m] = blocks[p].T
    return B


def total_scattering_rate(corr, geometry, transition) -> float:
    """Rate formula n_s = 2 gamma sum_{j,c} C_{(jc),(jc)} +
    2 sum_{j != l} gamma^{(jl)}_{cc'} C_{(jc),(lc')} for a Hermitian table
    C = <s+ s->."""
    B = coupling_imag_matrix(geometry, transition)
    C = np.asarray(corr, dtype=complex)
    return float(2.0 * np.real(np.sum(B * C)))


def coherent_scattering_rate(means, geometry, transition) -> float:
    """Rate formula with factorized inputs <s+><s->."""
    v = np.asarray(means, dtype=complex)
    return total_scattering_rate(np.outer(np.conj(v), v), geometry, transition)


def saq_incoherent_rate(populations, means) -> float:
    """Single-atom-quantum incoherent rate
    2 gamma sum_j (<sigma_ee>_j - |<sigma^+>_j|^2)."""
    pops = np.asarray(populations, dtype=float)
    m = np.asarray(means)
    return float(2.0 * GAMMA * np.sum(pops - np.abs(m) ** 2))


def scattering_rates(corr, means, geometry, transition) -> dict:
    """All three rates from a correlation table and the one-body means."""
    pops = np.real(np.diag(np.asarray(corr)))
    basis = component_basis(transition)
    m = basis.shape[1]
    per_atom_pop = pops.reshape(-1, m).sum(axis=1)
    per_atom_mean = np.abs(np.asarray(means).reshape(-1, m)) ** 2
    n_inc = 2.0 * GAMMA * float(np.sum(per_atom_pop - per_atom_mean.sum(axis=1)))
    return {
        "n_s": total_scattering_rate(corr, geometry, transition),
        "n_c": coherent_scattering_rate(means, geometry, transition),
        "n_inc_saq": n_inc,
    }


def farfield_rate_quadrature(corr, geometry: Geometry, transition: TransitionSpec,
                             n_theta=N_THETA, n_phi=N_PHI) -> float:
    """Independent oracle for the total rate: sphere quadrature of the
    far-field intensity per photon energy,

      dn/dOmega = (3 gamma/4 pi) sum [e_c^*.P(n).e_c'] e^{i k n.(r_l - r_j)}
                  C_{(jc),(lc')},   P(n) = 1 - n n^T.
    """
    nhat, w = sphere_grid(n_theta, n_phi)
    pos = geometry.positions
    basis = component_basis(transition)
    m = basis.shape[1]
    n = len(pos)
    C = np.asarray(corr, dtype=complex).reshape(n, m, n, m)
    phase = np.exp(1j * K * nhat @ pos.T)               # (M, N)
    ne = nhat.astype(complex) @ basis                   # (M, m)
    pol = (basis.conj().T @ basis)[None, :, :] - ne[:, :, None].conj() * ne[:, None, :]
    val = np.einsum("Mj,Ml,Mnm,jnlm->M", phase.conj(), phase, pol, C,
                    optimize=True)
    return float(3.0 * GAMMA / (4.0 * np.pi) * np.sum(w * val.real))


def intensity_decomposition(point, geometry, drive, amplitudes, transition,
                            corr=None):
    """Intensity split at a point, in |incident Rabi|^2 units: incident,
    incident/coherent interference, coherent, and incoherent.

    `amplitudes` is the component-basis one-body table <sigma^->; the
    incoherent term needs the two-body table `corr` (quantum solutions) and
    is identically zero without it (semiclassical atoms at fixed positions).
    """
    point = np.asarray(point, dtype=float)
    dip = dipole_table(transition, amplitudes)
    Ein = drive.field(point[None, :])[0]
    Ecoh = coherent_field(dip, geometry, point)
    incident = float(np.sum(np.abs(Ein) ** 2))
    interference = float(2.0 * np.real(Ein.conj() @ Ecoh))
    coherent = float(np.sum(np.abs(Ecoh) ** 2))
    incoherent = 0.0
    if corr is not None:
        pos = geometry.positions
        basis = component_basis(transition)
        m = basis.shape[1]
        n = len(pos)
        b = np.asarray(amplitudes, dtype=complex).reshape(n * m)
        C = np.asarray(corr, dtype=complex)
        # A[(jc), a] = field component a at the point from unit amplitude (jc)
        A = np.zeros((n * m, 3), dtype=complex)
        for j in range(n):
            A[j * m:(j + 1) * m] = (XI * green_tensor(point - pos[j]) @ basis).T
        dC = C - np.outer(np.conj(b), b)
        incoherent = float(np.real(np.einsum("ia,ja,ij->", A.conj(), A, dC)))
    return {"incident": incident, "interference": interference,
            "coherent": coherent, "incoherent": incoherent,
            "total": incident + interference + coherent + incoherent}


def ensemble_incoherent_intensity(field_samples) -> np.ndarray:
    """Disorder estimator <|E|^2> - |<E>|^2 from per-realization coherent
    fields, shape (n_realizations, n_points, 3)."""
    F = np.asarray(field_samples)
    if len(F) < 2:
        raise ValueError("need at least 2 realizations")
    mean_sq = np.mean(np.sum(np.abs(F) ** 2, axis=-1), axis=0)
    sq_mean = np.sum(np.abs(np.mean(F, axis=0)) ** 2, axis=-1)
    return mean_sq - sq_mean


@dataclass
class FluxReport:
    reflectance: float
    transmittance: float
    incoherent_flux: float

    @property
    def residual(self) -> float:
        return 1.0 - self.reflectance - self.transmittance - self.incoherent_flux


def rt_beyond_lli(delta, omega_t, gamma_t, rabi) -> list:
    """FluxReports (one per steady branch) of the uniform-mode model beyond
    the low-intensity limit:

        R = (gamma+gamma~)^2 |rho_ge/R|^2,  T = |1 + i(gamma+gamma~) rho_ge/R|^2,
        F_inc = 2 gamma (gamma+gamma~) (rho_ee/|R|^2 - |rho_ge/R|^2);

    energy closure R + T + F_inc = 1 holds on every exact branch.
    """
    from .semiclassical import uniform_steady_state
    sols = uniform_steady_state(delta, rabi, omega_t, gamma_t)
    g1 = GAMMA + gamma_t
    out = []
    for s in sols:
        w = s.rho_ge / rabi
        r = 1j * g1 * w
        R = abs(r) ** 2
        T = abs(1.0 + r) ** 2
        F = 2.0 * GAMMA * g1 * (s.rho_ee / abs(rabi) ** 2 - abs(w) ** 2)
        out.append(FluxReport(float(R), float(T), float(F)))
    return out


def many_body_signature(qme_corr, qme_means, sc_populations, sc_means,
                        geometry, transition) -> dict:
    """Quantum many-body diagnostic: incoherent photon rate from the full
    quantum correlations versus the semiclassical dynamics amended by the
    single-atom-quantum term.  Their difference signals light-induced
    many-body quantum correlations (it vanishes when only one atom
    scatters or when two-body correlations factorize)."""
    n_inc_quantum = (total_scattering_rate(qme_corr, geometry, transition)
                     - coherent_scattering_rate(qme_means, geometry,
                                                transition))
    n_inc_saq = saq_incoherent_rate(sc_populations, sc_means)
    return {
        "n_inc_quantum": n_inc_quantum,
        "n_inc_semiclassical_saq": n_inc_saq,
        "many_body_signature": n_inc_quantum - n_inc_saq,
    }


@dataclass
class EnsembleObservables:
    n_realizations: int
    mean_t: complex
    mean_r: complex
    stderr_t: float
    stderr_r: float
    mean_field: np.ndarray = None
    mean_intensity: np.ndarray = None
    incoherent_intensity: np.ndarray = None
    failures: int = 0


def disorder_average(geometry: Geometry, transition: TransitionSpec, beam,
                     n_realizations: int, rng_streams, delta=0.0,
                     field_points=None, max_failure_fraction=0.01):
    """LLI disorder ensemble: sample positions, solve the coupled dipoles,
    accumulate mean r/t and (optionally) mean fields; the incoherent
    intensity is the ensemble variance at each field point.  Realization i
    draws from rng_streams[i], so results are independent of scheduling."""
    from . import lli
    if n_realizations < 2:
        raise ValueError("need n >= 2 realizations")
    t_acc, r_acc, f_acc = [], [], []
    failures = 0
    for i in range(n_realizations):
        rng = np.random.default_rng(rng_streams[i])
        try:
            geo = sample_positions(geometry, rng)
            sys_i = lli.assemble(geo, transition, beam)
            b = lli.steady_state(sys_i, delta)
        except Exception:
            failures += 1
            if failures > max(1, max_failure_fraction * n_realizations):
                raise
            continue
        dip = dipole_table(sys_i, b)
        t, r = transmission_reflection(dip, geo, beam)
        t_acc.append(t)
        r_acc.append(r)
        if field_points is not None:
            f_acc.append(np.array([coherent_field(dip, geo, pt)
                                   for pt in field_points]))
    t_arr, r_arr = np.array(t_acc), np.array(r_acc)
    n = len(t_arr)
    rep = EnsembleObservables(
        n, complex(t_arr.mean()), complex(r_arr.mean()),
        float(np.std(t_arr) / np.sqrt(n)), float(np.std(r_arr) / np.sqrt(n)),
        failures=failures)
    if field_points is not None:
        F = np.array(f_acc)
        rep.mean_field = F.mean(axis=0)
        rep.mean_intensity = np.mean(np.sum(np.abs(F) ** 2, axis=-1), axis=0)
        rep.incoherent_intensity = ensemble_incoherent_intensity(F)
    return rep


def lorentzian_fit(deltas, values):
    """Least-squares fit values ~ A w^2/((d-d0)^2 + w^2) + c; returns
    (A, d0, w, c) with w the fitted HWHM."""
    from scipy.optimize import curve_fit
    deltas = np.asarray(deltas, dtype=float)
    values = np.asarray(values, dtype=float)

    def model(d, A, d0, w, c):
        return A * w**2 / ((d - d0) ** 2 + w**2) + c

    i0 = int(np.argmax(values))
    p0 = [values.max() - values.min(), deltas[i0],
          0.25 * (deltas[-1] - deltas[0]), values.min()]
    popt, _ = curve_fit(model, deltas, values, p0=p0, maxfev=20000)
    popt[2] = abs(popt[2])
    return popt
