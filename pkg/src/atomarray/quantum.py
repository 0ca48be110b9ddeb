"""Exact quantum dynamics for small atom numbers: master equation with
light-mediated couplings, quantum-trajectory unraveling (source-mode and
directional jump operators), and photon-statistics estimators.

The master equation (gamma units, hbar = 1) is

  drho/dt = -i [H_drive - sum_{j!=l} Omega^{jl}_{cc'} s+_{jc} s-_{lc'}, rho]
            + sum B_{(jc),(lc')} (2 s-_{lc'} rho s+_{jc}
                                  - s+_{jc} s-_{lc'} rho - rho s+_{jc} s-_{lc'})

with B the real symmetric dissipative matrix (diagonal gamma, off-diagonal
Im[XI e_c.G.e_c']) and Omega its real counterpart.  For the J=0 -> J'=1
transition the three excited sublevels are kept in the CARTESIAN dipole
basis |e_x>, |e_y>, |e_z> (the circular sublevels rotated by the unitary
that also diagonalizes nothing here but keeps both Omega and B real
symmetric); Zeeman splittings become Hermitian 3x3 blocks exactly as in
the coupled-dipole module.

Jump operators: diagonalizing B = sum_m beta_m w_m w_m^T gives collective
decay channels J_m = sqrt(beta_m) w_m . Sigma with real orthonormal w_m,
which reproduce the dissipator exactly (when the coherent and dissipative
coupling matrices commute, the w_m coincide with coupled-dipole eigenmodes
and beta_m with the collective linewidths).  Directional operators
J(theta, phi; pol) carry solid-angle weights, double as photon detections,
and their click rate 2<J^dag J> equals the far-field photon flux into the
cell; their completeness sum converges to the dissipator as the angular
grid refines.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionCapError, NonConvergenceError, UndefinedG2Error
from .geometry import Geometry
from .integrate import integrate_complex
from .kernel import GAMMA, K, XI, green_tensor
from .lli import TransitionSpec, zeeman_block
from .observables import component_basis, sphere_grid

QME_DIM_CAP = 4096          # density-matrix evolution
TRAJ_DIM_CAP = 65536        # pure-state trajectories
TRAJ_CHUNK = 4096           # trajectories per RNG stream


@dataclass(frozen=True)
class HilbertSpec:
    natoms: int
    levels: int = 2

    def __post_init__(self):
        if self.levels not in (2, 4):
            raise ValueError("levels per atom must be 2 or 4")

    @property
    def dim(self) -> int:
        return self.levels ** self.natoms

    @property
    def ncomp(self) -> int:
        return self.levels - 1


def _check_cap(dim, cap, what):
    if dim > cap:
        raise DimensionCapError(f"{what} dimension {dim} exceeds cap {cap}")


class AtomOperators:
    """Matrix-free lowering/raising on the product space.

    Per-atom basis: index 0 = ground, then the excited components (one for
    two-level, the Cartesian x, y, z sublevels for J=0 -> J'=1).
    """

    def __init__(self, spec: HilbertSpec):
        self.spec = spec

    def _shift(self, psi, j, src_level, dst_level):
        L = self.spec.levels
        n = self.spec.natoms
        shape = psi.shape[:-1] + (L,) * n
        t = psi.reshape(shape)
        out = np.zeros_like(t)
        src = [slice(None)] * t.ndim
        dst = [slice(None)] * t.ndim
        axis = t.ndim - n + j
        src[axis] = src_level
        dst[axis] = dst_level
        out[tuple(dst)] = t[tuple(src)]
        return out.reshape(psi.shape)

    def apply_lower(self, psi, j, c):
        """sigma^-_{jc} |psi> (excited component c -> ground)."""
        return self._shift(psi, j, c + 1, 0)

    def apply_raise(self, psi, j, c):
        return self._shift(psi, j, 0, c + 1)

    def lower_matrix(self, j, c) -> np.ndarray:
        D = self.spec.dim
        cols = self.apply_lower(np.eye(D, dtype=complex), j, c)
        return cols.T.copy()

    def ground_state(self) -> np.ndarray:
        psi = np.zeros(self.spec.dim, dtype=complex)
        psi[0] = 1.0
        return psi

    def single_excitation(self, amplitudes) -> np.ndarray:
        """Normalized state sum_{jc} b_{jc} s+_{jc} |G> from a component
        amplitude vector."""
        b = np.asarray(amplitudes, dtype=complex).reshape(
            self.spec.natoms, self.spec.ncomp)
        psi = np.zeros(self.spec.dim, dtype=complex)
        g = self.ground_state()
        for j in range(self.spec.natoms):
            for c in range(self.spec.ncomp):
                psi += b[j, c] * self.apply_raise(g, j, c)
        return psi / np.linalg.norm(psi)


@dataclass
class QuantumSystem:
    """Dense operator tables for one geometry + transition + drive."""
    spec: HilbertSpec
    geometry: Geometry
    transition: TransitionSpec
    ops: AtomOperators
    lower: list                  # dense sigma^-_{jc}, flattened (j, c)
    hamiltonian: np.ndarray      # drive + detuning/Zeeman + coherent couplings
    bmatrix: np.ndarray          # dissipative matrix, M x M real symmetric
    channel_rates: np.ndarray    # eigenvalues of bmatrix (>= 0)
    channel_modes: np.ndarray    # orthonormal eigenvector columns

    @property
    def dim(self) -> int:
        return self.spec.dim

    def source_jump_ops(self) -> list:
        """J_m = sqrt(beta_m) w_m . Sigma over the decay channels."""
        out = []
        M = len(self.lower)
        for m in range(M):
            beta = max(float(self.channel_rates[m]), 0.0)
            J = np.zeros((self.dim, self.dim), dtype=complex)
            for i in range(M):
                J += self.channel_modes[i, m] * self.lower[i]
            out.append(np.sqrt(beta) * J)
        return out

    def dissipator_operator(self) -> np.ndarray:
        """sum B_{il} s+_i s-_l (equals sum_m J_m^dag J_m)."""
        M = len(self.lower)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(M):
            for l in range(M):
                if self.bmatrix[i, l] != 0.0:
                    out += self.bmatrix[i, l] * (
                        self.lower[i].conj().T @ self.lower[l])
        return out

    def population_operator(self) -> np.ndarray:
        return sum(s.conj().T @ s for s in self.lower)


def build_quantum_system(geometry: Geometry, transition: TransitionSpec,
                         drive=None, dim_cap=QME_DIM_CAP) -> QuantumSystem:
    n = geometry.natoms
    spec = HilbertSpec(n, transition.levels)
    _check_cap(spec.dim, dim_cap, "Hilbert space")
    ops = AtomOperators(spec)
    ncomp = spec.ncomp
    basis = component_basis(transition)           # (3, ncomp)

    lower = [ops.lower_matrix(j, c) for j in range(n) for c in range(ncomp)]

    # detuning / Zeeman block per atom (Hermitian ncomp x ncomp)
    if ncomp == 1:
        det_block = np.array([[transition.detuning]], dtype=complex)
    else:
        det_block = (transition.detuning * np.eye(3)
                     - zeeman_block(transition.zeeman))

    # drive Rabi components R_{jc} = e_c . E(r_j)
    if drive is None:
        R = np.zeros((n, ncomp), dtype=complex)
    else:
        E = drive.field(geometry.positions)
        R = np.einsum("in,ji->jn", basis.conj(), E)

    D = spec.dim
    H = np.zeros((D, D), dtype=complex)
    for j in range(n):
        for a in range(ncomp):
            sa = lower[j * ncomp + a]
            H += -(R[j, a] * sa.conj().T + np.conj(R[j, a]) * sa)
            for b in range(ncomp):
                if det_block[a, b] != 0.0:
                    H += -det_block[a, b] * (
                        lower[j * ncomp + a].conj().T @ lower[j * ncomp + b])

    pos = geometry.positions
    M = n * ncomp
    B = GAMMA * np.eye(M)
    if n > 1:
        for j in range(n):
            for l in range(j + 1, n):
                g = XI * np.einsum("in,ij,jm->nm", basis.conj(),
                                   green_tensor(pos[j] - pos[l]), basis)
                # real symmetric in the Cartesian component basis
                for a in range(ncomp):
                    for b in range(ncomp):
                        H += -g[a, b].real * (
                            lower[j * ncomp + a].conj().T @ lower[l * ncomp + b]
                            + lower[l * ncomp + b].conj().T @ lower[j * ncomp + a])
                        B[j * ncomp + a, l * ncomp + b] = g[a, b].imag
                        B[l * ncomp + b, j * ncomp + a] = g[a, b].imag
    B = 0.5 * (B + B.T)
    rates, modes = np.linalg.eigh(B)
    return QuantumSystem(spec, geometry, transition, ops, lower, H, B,
                         rates, modes)


def qme_rhs(rho, system: QuantumSystem) -> np.ndarray:
    """drho/dt of the master equation (only D x D objects ever appear)."""
    H = system.hamiltonian
    out = -1j * (H @ rho - rho @ H)
    # dissipator via the channel decomposition, exactly equivalent to the
    # pairwise double sum but with M instead of M^2 terms
    M = len(system.lower)
    for m in range(M):
        beta = float(system.channel_rates[m])
        if abs(beta) < 1e-15:
            continue
        Jm = np.zeros_like(H)
        for i in range(M):
            Jm += system.channel_modes[i, m] * system.lower[i]
        JdJ = Jm.conj().T @ Jm
        out += beta * (2.0 * Jm @ rho @ Jm.conj().T - JdJ @ rho - rho @ JdJ)
    return out


def evolve_qme(rho0, system: QuantumSystem, t_grid, rtol=1e-9, atol=1e-11):
    """Integrate the master equation; returns (nt, D, D)."""
    D = system.dim
    _check_cap(D, QME_DIM_CAP, "QME")
    jops = system.source_jump_ops()
    Hnh = system.hamiltonian - 1j * system.dissipator_operator()
    Jd = [J.conj().T for J in jops]

    def rhs(t, y):
        rho = y.reshape(D, D)
        out = -1j * (Hnh @ rho - rho @ Hnh.conj().T)
        for J, Jdm in zip(jops, Jd):
            out += 2.0 * (J @ rho @ Jdm)
        return out.ravel()

    out = integrate_complex(rhs, np.asarray(rho0, dtype=complex).ravel(),
                            t_grid, rtol=rtol, atol=atol)
    return out.reshape(len(t_grid), D, D)


def steady_state_qme(system: QuantumSystem, horizon=60.0, residual_tol=1e-9,
                     rho0=None, max_rounds=8):
    """Long-time evolution until ||drho/dt||_1 < residual_tol."""
    if rho0 is None:
        psi = system.ops.ground_state()
        rho = np.outer(psi, psi.conj())
    else:
        rho = np.asarray(rho0, dtype=complex)
    t_elapsed = 0.0
    resid = np.inf
    for _ in range(max_rounds):
        rho = evolve_qme(rho, system, np.linspace(0, horizon, 6),
                         rtol=1e-11, atol=1e-13)[-1]
        t_elapsed += horizon
        resid = float(np.abs(qme_rhs(rho, system)).sum())
        if resid < residual_tol:
            rho = 0.5 * (rho + rho.conj().T)
            return rho / np.trace(rho).real
    raise NonConvergenceError(
        f"QME steady state residual {resid:.2e} after t={t_elapsed}/gamma",
        residual=resid)


def correlation_table(rho, system: QuantumSystem) -> np.ndarray:
    """C[(jc),(lc')] = <s+_{jc} s-_{lc'}> in the component basis."""
    M = len(system.lower)
    C = np.zeros((M, M), dtype=complex)
    for i in range(M):
        si = system.lower[i].conj().T
        for l in range(M):
            C[i, l] = np.trace(si @ system.lower[l] @ rho)
    return C


def mean_lowering(rho, system: QuantumSystem) -> np.ndarray:
    """<sigma^-_{jc}> table (component basis)."""
    return np.array([np.trace(s @ rho) for s in system.lower])


def single_excitation_block(rho, system: QuantumSystem) -> np.ndarray:
    """rho-bar[(jc),(lc')] = <G| s-_{jc} rho s+_{lc'} |G>."""
    M = len(system.lower)
    g = system.ops.ground_state()
    out = np.zeros((M, M), dtype=complex)
    for i in range(M):
        for l in range(M):
            vec = system.lower[i] @ rho @ system.lower[l].conj().T @ g
            out[i, l] = g.conj() @ vec
    return out


# ---------------------------------------------------------------------------
# jump bases

@dataclass
class JumpBasis:
    """A set of jump operators; directional bases carry (theta, phi) and
    solid-angle weights so clicks double as photon detection records."""
    operators: list
    directions: np.ndarray = None
    weights: np.ndarray = None

    @property
    def n_channels(self) -> int:
        return len(self.operators)


def source_mode_basis(system: QuantumSystem) -> JumpBasis:
    """Collective decay channels; never interpreted as photon detections."""
    return JumpBasis(system.source_jump_ops())


def directional_basis(system: QuantumSystem, n_theta=12, n_phi=24) -> JumpBasis:
    """Photon-detection jump operators on a product solid-angle grid, one
    channel per transverse polarization:

        J(n, pol) = sqrt((3 gamma/8 pi) dOmega) *
                    sum_{jc} (pol . e_c) e^{-i k n.r_j} sigma^-_{jc}.

    The grid sum of J^dag J converges to the pairwise dissipator as the
    grid refines, and 2<J^dag J> is the photon flux into the cell.
    """
    nhat, w = sphere_grid(n_theta, n_phi)
    basis = component_basis(system.transition)
    ncomp = basis.shape[1]
    n = system.spec.natoms
    pos = system.geometry.positions
    ops, dirs, wts = [], [], []
    amp0 = 3.0 * GAMMA / (8.0 * np.pi)
    for i, nh in enumerate(nhat):
        seed = (np.array([0.0, 1.0, 0.0]) if abs(nh[0]) > 0.5
                else np.array([1.0, 0.0, 0.0]))
        e1 = seed - nh * (seed @ nh)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(nh, e1)
        phases = np.exp(-1j * K * pos @ nh)
        theta = float(np.arccos(np.clip(nh[0], -1.0, 1.0)))
        phi = float(np.arctan2(nh[2], nh[1]))
        for pol in (e1, e2):
            coef = pol.astype(complex) @ basis          # (ncomp,)
            if np.max(np.abs(coef)) < 1e-14:
                continue
            J = np.zeros((system.dim, system.dim), dtype=complex)
            for j in range(n):
                for c in range(ncomp):
                    if coef[c] != 0.0:
                        J += coef[c] * phases[j] * system.lower[j * ncomp + c]
            ops.append(np.sqrt(amp0 * w[i]) * J)
            dirs.append((theta, phi))
            wts.append(w[i])
    return JumpBasis(ops, np.asarray(dirs), np.asarray(wts))


def dissipator_completeness(system: QuantumSystem, basis: JumpBasis) -> float:
    """Operator-norm deviation of sum_m J_m^dag J_m from the pairwise
    dissipator (zero for source modes, grid-limited for directional)."""
    JdJ = sum(J.conj().T @ J for J in basis.operators)
    return float(np.linalg.norm(JdJ - system.dissipator_operator(), 2))


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class TrajectoryResult:
    t_grid: np.ndarray
    rho: np.ndarray              # ensemble density matrices (nt, D, D)
    clicks: list                 # (trajectory index, time, channel) triples
    n_traj: int
    populations: np.ndarray      # ensemble mean total excited population
    clicks_are_detections: bool = False   # only directional jumps qualify


def run_trajectories(psi0, system: QuantumSystem, jump_basis: JumpBasis,
                     t_grid, n_traj, seed, dt=2e-3,
                     record_clicks=None) -> TrajectoryResult:
    """Monte Carlo wave-function unraveling, vectorized over trajectories.

    Fixed-step scheme: exact non-Hermitian propagation over dt (dense
    propagator), jump decision per step from the exact norm loss, channel
    drawn from the instantaneous rates <J^dag J>.  The step size is reduced
    automatically if the per-step jump probability would exceed 0.1.
    Trajectories are processed in chunks of TRAJ_CHUNK with one child RNG
    stream per chunk, so any (seed, trajectory index) pair reproduces
    independently of n_traj and scheduling.

    Clicks are recorded only for bases with detection directions (source
    modes are not photon detections) unless `record_clicks` overrides.
    """
    D = system.dim
    _check_cap(D, TRAJ_DIM_CAP, "trajectory state")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0.0:
        raise ValueError("trajectory t_grid must start at 0")
    if record_clicks is None:
        record_clicks = jump_basis.directions is not None

    Jarr = np.array(jump_basis.operators)
    JdJ_each = np.einsum("mji,mjk->mik", Jarr.conj(), Jarr)
    JdJ_tot = np.sum(JdJ_each, axis=0)
    # cap the worst-case per-step jump probability at 0.1
    max_rate = float(np.linalg.norm(JdJ_tot, 2))
    while 2.0 * max_rate * dt > 0.1:
        dt /= 2.0

    Hnh = system.hamiltonian - 1j * JdJ_tot
    U = scipy.linalg.expm(-1j * Hnh * dt)
    Ut = U.T.copy()

    n_steps = int(np.round(t_grid[-1] / dt))
    if abs(n_steps * dt - t_grid[-1]) > 1e-9:
        n_steps = int(np.ceil(t_grid[-1] / dt))
        dt = t_grid[-1] / n_steps
        U = scipy.linalg.expm(-1j * Hnh * dt)
        Ut = U.T.copy()
    out_idx = np.rint(t_grid / dt).astype(int)
    if np.any(np.abs(out_idx * dt - t_grid) > 1e-8 * max(1.0, t_grid[-1])):
        raise ValueError("t_grid points must be commensurate with dt")

    psi0 = np.asarray(psi0, dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)

    rho_acc = np.zeros((len(t_grid), D, D), dtype=complex)
    pop_acc = np.zeros(len(t_grid))
    clicks = []
    pop_op = system.population_operator()

    streams = np.random.SeedSequence(seed).spawn(
        (n_traj + TRAJ_CHUNK - 1) // TRAJ_CHUNK)
    done = 0
    for ss in streams:
        bsz = min(TRAJ_CHUNK, n_traj - done)
        rng = np.random.default_rng(ss)
        psi = np.tile(psi0, (bsz, 1))
        ptr = 0
        if out_idx[0] == 0:
            rho_acc[0] += np.einsum("bi,bj->ij", psi, psi.conj())
            pop_acc[0] += np.einsum("bi,ij,bj->", psi.conj(), pop_op, psi).real
            ptr = 1
        for step in range(1, n_steps + 1):
            psi = psi @ Ut
            nrm2 = np.einsum("bi,bi->b", psi.conj(), psi).real
            # full-width draws keep trajectory i's random stream a fixed
            # function of (seed, chunk, step), independent of n_traj
            u_jump = rng.random(TRAJ_CHUNK)[:bsz]
            u_pick = rng.random(TRAJ_CHUNK)[:bsz]
            jumpers = u_jump < (1.0 - nrm2)
            if np.any(jumpers):
                pj = psi[jumpers]
                rates = np.einsum("bi,mij,bj->bm", pj.conj(), JdJ_each,
                                  pj).real
                rates = np.clip(rates, 0.0, None)
                cum = np.cumsum(rates, axis=1)
                u2 = u_pick[jumpers][:, None] * cum[:, -1:]
                pick = np.minimum((u2 > cum).sum(axis=1), len(Jarr) - 1)
                newpsi = np.einsum("mij,bj->bmi", Jarr, pj)
                chosen = newpsi[np.arange(len(pj)), pick]
                chosen /= np.linalg.norm(chosen, axis=1, keepdims=True)
                psi[jumpers] = chosen
                if record_clicks:
                    tj = step * dt
                    for b, ch in zip(np.nonzero(jumpers)[0], pick):
                        clicks.append((done + int(b), tj, int(ch)))
            keep = ~jumpers
            psi[keep] = psi[keep] / np.sqrt(nrm2[keep, None])
            if ptr < len(out_idx) and step == out_idx[ptr]:
                rho_acc[ptr] += np.einsum("bi,bj->ij", psi, psi.conj())
                pop_acc[ptr] += np.einsum("bi,ij,bj->",
                                          psi.conj(), pop_op, psi).real
                ptr += 1
        done += bsz
    rho_acc /= n_traj
    pop_acc /= n_traj
    detections = bool(record_clicks) and jump_basis.directions is not None
    return TrajectoryResult(t_grid, rho_acc, clicks, n_traj, pop_acc,
                            clicks_are_detections=detections)


def trace_distance(rho_a, rho_b) -> float:
    dev = np.asarray(rho_a) - np.asarray(rho_b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(dev))))


# ---------------------------------------------------------------------------
# photon statistics

def detection_operator(system: QuantumSystem, theta, phi,
                       polarization=None) -> np.ndarray:
    """Far-field detection operator along (theta, phi), normalization-free
    (the scale cancels in g2): phased sum of lowering operators weighted by
    the detected polarization's overlap with each dipole component.  For
    multi-component transitions the default polarization is the transverse
    projection of the dominant component."""
    nh = np.array([np.cos(theta), np.sin(theta) * np.cos(phi),
                   np.sin(theta) * np.sin(phi)])
    basis = component_basis(system.transition)
    ncomp = basis.shape[1]
    if polarization is None:
        proj = basis - np.outer(nh, nh.astype(complex) @ basis)
        norms = np.real(np.einsum("ic,ic->c", proj.conj(), proj))
        pol = proj[:, int(np.argmax(norms))]
        pol = pol / np.linalg.norm(pol)
    else:
        pol = np.asarray(polarization, dtype=complex)
        pol = pol - nh * (nh.astype(complex) @ pol)
        pol = pol / np.linalg.norm(pol)
    coef = pol.conj() @ basis
    pos = system.geometry.positions
    phases = np.exp(-1j * K * pos @ nh)
    E = np.zeros((system.dim, system.dim), dtype=complex)
    for j in range(system.spec.natoms):
        for c in range(ncomp):
            if coef[c] != 0.0:
                E += coef[c] * phases[j] * system.lower[j * ncomp + c]
    return E


def g2_regression(system: QuantumSystem, tau_grid, theta=0.0, phi=0.0,
                  rho_ss=None, rtol=1e-11, atol=1e-13):
    """g2(tau) by quantum regression: evolve the conditional state
    E rho_ss E^dag under the QME generator and read out <E^dag E>."""
    if rho_ss is None:
        rho_ss = steady_state_qme(system)
    E = detection_operator(system, theta, phi)
    EdE = E.conj().T @ E
    rate_ss = float(np.real(np.trace(EdE @ rho_ss)))
    if rate_ss < 1e-14:
        raise UndefinedG2Error("mean detection rate vanishes in steady state")
    cond = E @ rho_ss @ E.conj().T
    tau_grid = np.asarray(tau_grid, dtype=float)
    grid = tau_grid if tau_grid[0] == 0 else np.concatenate([[0.0], tau_grid])
    traj = evolve_qme(cond, system, grid, rtol=rtol, atol=atol)
    if tau_grid[0] != 0:
        traj = traj[1:]
    vals = np.einsum("tij,ji->t", traj, EdE).real
    return vals / rate_ss**2


def g2_analytic(tau, intensity_ratio, linewidth=GAMMA):
    """Closed-form driven two-level g2, with the collective-mode
    substitution gamma -> ups for arrays locked to one collective mode:

        g2(tau) = 1 - e^{-3 ups tau/2} [cosh(kappa ups tau)
                   + (3/2) sinh(kappa ups tau)/kappa],
        kappa = (1/2) sqrt(1 - 8 I/I_s),

    continued analytically (kappa imaginary) for I > I_s/8.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be >= 0")
    ups = linewidth
    kappa = 0.5 * np.sqrt(complex(1.0 - 8.0 * intensity_ratio))
    x = ups * tau
    if abs(kappa) < 1e-12:
        body = 1.0 + 1.5 * x
    else:
        body = np.cosh(kappa * x) + 1.5 * np.sinh(kappa * x) / kappa
    return np.real(1.0 - np.exp(-1.5 * x) * body)


def g2_from_clicks(result: TrajectoryResult, tau_edges, t_min=0.0):
    """Coincidence estimator of g2 from directional click records.

    Histograms pairwise click delays inside each trajectory over the bins
    `tau_edges` and normalizes by the uncorrelated rate^2 expectation.
    Returns (bin centers, g2 estimates, standard errors).
    """
    if not result.clicks_are_detections:
        raise UndefinedG2Error(
            "click records from a non-directional jump basis are not photon "
            "detections; rerun with a directional basis")
    tau_edges = np.asarray(tau_edges, dtype=float)
    width = np.diff(tau_edges)
    T = result.t_grid[-1]
    window = T - t_min
    by_traj = {}
    n_clicks = 0
    for b, t, _ in result.clicks:
        if t >= t_min:
            by_traj.setdefault(b, []).append(t)
            n_clicks += 1
    if n_clicks == 0:
        raise UndefinedG2Error("no clicks recorded")
    rate = n_clicks / (result.n_traj * window)
    counts = np.zeros(len(width))
    for times in by_traj.values():
        times = np.sort(np.asarray(times))
        for i, ti in enumerate(times):
            idx = np.searchsorted(tau_edges, times[i + 1:] - ti,
                                  side="right") - 1
            good = (idx >= 0) & (idx < len(counts))
            np.add.at(counts, idx[good], 1.0)
    # pairs expected from an uncorrelated stream at the same mean rate,
    # reduced by the finite observation window
    centers = 0.5 * (tau_edges[1:] + tau_edges[:-1])
    eff_window = np.maximum(window - centers, 1e-12)
    expected = result.n_traj * rate**2 * eff_window * width
    g2 = counts / expected
    err = np.sqrt(np.maximum(counts, 1.0)) / expected
    return centers, g2, err
