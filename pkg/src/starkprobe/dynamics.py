"""Exact unitary dynamics from full spectral decompositions.

One eigendecomposition per Hamiltonian is reused for every evolution time.
The field derivative of the evolved state is exact (no finite differences):
in the eigenbasis of H = H1 + h*H2,

    <m|dU/dh|n> = G_mn * (e^{-i E_n t} - e^{-i E_m t}) / (E_n - E_m),

with G = V^T H2 V, falling back to -i t G_mn e^{-i E_m t} on (near-)
degenerate pairs, which is the limit of the divided difference.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .basis import Configuration, SectorBasis
from .errors import DomainError, NumericError
from .hamiltonian import GradientGenerator, HamiltonianMatrix

DEGENERACY_TOL = 1e-9  # relative scale below which a level pair counts as degenerate

_DERIVATIVE_BLOCK = 2_000_000  # complex workspace entries per row block


@dataclass
class SpectralDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric H."""

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.energies)

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.energies) @ self.vectors.T


@dataclass
class QuantumState:
    """Complex amplitudes over a site or configuration basis.

    time and h tag where the state came from; they do not affect algebra.
    """

    amplitudes: np.ndarray
    time: float = 0.0
    h: float | None = None

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def from_configuration(
        cls, config: Configuration, basis: SectorBasis | None = None, h: float | None = None
    ) -> "QuantumState":
        """Basis state for a configuration: site basis if basis is None
        (single particle), otherwise the sector basis position."""
        if basis is None:
            if config.n != 1:
                raise DomainError(
                    f"site-basis state needs exactly one excitation, got {config.n}"
                )
            amps = np.zeros(config.L, dtype=complex)
            amps[config.sites[0] - 1] = 1.0
        else:
            amps = np.zeros(len(basis), dtype=complex)
            amps[basis.state_index(config)] = 1.0
        return cls(amps, 0.0, h)


def _amplitudes(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, QuantumState) else np.asarray(psi, dtype=complex)


def diagonalize(H) -> SpectralDecomposition:
    """Full symmetric eigendecomposition, energies ascending."""
    m = H.matrix if isinstance(H, HamiltonianMatrix) else np.asarray(H, dtype=float)
    try:
        energies, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"eigensolver failed to converge for dim={m.shape[0]} "
            f"(|H|_max={np.abs(m).max():.3e}): {exc}"
        ) from exc
    return SpectralDecomposition(energies, vectors)


def evolve(d: SpectralDecomposition, psi0, t: float) -> QuantumState:
    """psi(t) = V e^{-iEt} V^T psi0."""
    amps = _amplitudes(psi0)
    c = d.vectors.T @ amps
    h = psi0.h if isinstance(psi0, QuantumState) else None
    return QuantumState(d.vectors @ (np.exp(-1j * d.energies * t) * c), float(t), h)


def _divided_phase_block(energies, phases, t, lo, hi, tol_abs):
    """Rows lo:hi of (e^{-iE_n t} - e^{-iE_m t})/(E_n - E_m), degenerate-safe."""
    dE = energies[np.newaxis, :] - energies[lo:hi, np.newaxis]
    num = phases[np.newaxis, :] - phases[lo:hi, np.newaxis]
    degenerate = np.abs(dE) < tol_abs
    W = num / np.where(degenerate, 1.0, dE)
    if degenerate.any():
        limit = np.broadcast_to((-1j * t) * phases[lo:hi, np.newaxis], W.shape)
        W[degenerate] = limit[degenerate]
    return W


class EvolutionWorkspace:
    """Eigenbasis data reused across many evaluation times.

    Precomputes c = V^T psi0 and G = V^T H2 V once (O(dim^3)); each state,
    derivative or Fisher evaluation afterwards costs O(dim^2). Immutable,
    shareable between threads.
    """

    def __init__(
        self,
        d: SpectralDecomposition,
        generator: GradientGenerator | np.ndarray,
        psi0,
        degeneracy_tol: float = DEGENERACY_TOL,
    ):
        gdiag = generator.diag if isinstance(generator, GradientGenerator) else np.asarray(generator, dtype=float)
        self.energies = d.energies
        self.vectors = d.vectors
        self.c = d.vectors.T @ _amplitudes(psi0)
        self.G = (d.vectors.T * gdiag) @ d.vectors
        self.tol_abs = degeneracy_tol * max(1.0, float(np.abs(d.energies).max()))

    @property
    def dim(self) -> int:
        return len(self.energies)

    def eig_state(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.energies * t) * self.c

    def eig_derivative(self, t: float) -> np.ndarray:
        phases = np.exp(-1j * self.energies * t)
        dim = self.dim
        block = max(1, _DERIVATIVE_BLOCK // dim)
        out = np.empty(dim, dtype=complex)
        for lo in range(0, dim, block):
            hi = min(lo + block, dim)
            W = _divided_phase_block(self.energies, phases, t, lo, hi, self.tol_abs)
            out[lo:hi] = (W * self.G[lo:hi]) @ self.c
        return out

    def state(self, t: float) -> np.ndarray:
        return self.vectors @ self.eig_state(t)

    def derivative(self, t: float) -> np.ndarray:
        return self.vectors @ self.eig_derivative(t)

    def qfi(self, t: float) -> float:
        """4 [ <dpsi|dpsi> - |<dpsi|psi>|^2 ], evaluated in the eigenbasis."""
        u = self.eig_state(t)
        du = self.eig_derivative(t)
        value = 4.0 * (np.vdot(du, du).real - abs(np.vdot(du, u)) ** 2)
        return 0.0 if -1e-12 < value < 0.0 else value


def evolve_derivative(
    d: SpectralDecomposition,
    H2: GradientGenerator | np.ndarray,
    psi0,
    t: float,
    degeneracy_tol: float = DEGENERACY_TOL,
) -> np.ndarray:
    """Exact d(psi(t))/dh at the field where d was computed."""
    return EvolutionWorkspace(d, H2, psi0, degeneracy_tol).derivative(t)


def evolve_derivative_fd(build, psi0, t: float, h: float, dh: float = 1e-6, richardson: bool = False) -> np.ndarray:
    """Central finite-difference d(psi(t))/dh; build maps h to a Hamiltonian.

    With richardson=True, combines steps dh and dh/2 for one extra order.
    Independent of the exact divided-difference route, so it serves as its
    cross-check.
    """

    def central(step):
        up = evolve(diagonalize(build(h + step)), psi0, t).amplitudes
        dn = evolve(diagonalize(build(h - step)), psi0, t).amplitudes
        return (up - dn) / (2.0 * step)

    if not richardson:
        return central(dh)
    return (4.0 * central(dh / 2.0) - central(dh)) / 3.0


def site_occupations(psi, basis: SectorBasis | None = None) -> np.ndarray:
    """P_l = sum over configurations occupying site l of |amplitude|^2."""
    weights = np.abs(_amplitudes(psi)) ** 2
    if basis is None:
        return weights
    return weights @ basis.occupation_matrix()


@dataclass
class OccupationProfile:
    """Site-occupation probabilities on a time grid; row k is P_l(times[k])."""

    times: np.ndarray
    P: np.ndarray

    @property
    def L(self) -> int:
        return self.P.shape[1]


def occupation_profile(
    d: SpectralDecomposition, psi0, times, basis: SectorBasis | None = None
) -> OccupationProfile:
    times = np.asarray(times, dtype=float)
    amps = _amplitudes(psi0)
    c = d.vectors.T @ amps
    rows = []
    for t in times:
        psi_t = d.vectors @ (np.exp(-1j * d.energies * t) * c)
        rows.append(site_occupations(psi_t, basis))
    return OccupationProfile(times, np.array(rows))


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind at integer order."""
    if abs(n) > 10_000:
        raise DomainError(f"order |n|={abs(n)} too large")
    if not np.isfinite(x):
        raise DomainError(f"argument must be finite, got {x}")
    return float(jv(n, x))


def wannier_stark_analytic(L: int, J: float, h: float, m: int) -> QuantumState:
    """Gradient-ladder eigenstate centered at site m: amplitudes J_{l-m}(2J/h).

    Exact on the infinite chain; renormalized here because the finite chain
    truncates the Bessel tails.
    """
    if h <= 0:
        raise DomainError(f"analytic ladder states need h > 0, got h={h}")
    if not 1 <= m <= L:
        raise DomainError(f"center site m={m} outside 1..{L}")
    orders = np.arange(1, L + 1) - m
    amps = jv(orders, 2.0 * J / h).astype(complex)
    nrm = np.linalg.norm(amps)
    if nrm == 0.0:
        raise NumericError(f"analytic state at m={m} underflowed on L={L} sites")
    return QuantumState(amps / nrm, 0.0, h)


def is_edge_state(L: int, J: float, h: float, m: int) -> bool:
    """True when site m sits within one localization width 4J/h of an end."""
    width = 4.0 * J / h
    return (m - 1) < width or (L - m) < width


def propagator(d: SpectralDecomposition, t: float) -> np.ndarray:
    """K(t) = V e^{-iEt} V^T; unitary for any t."""
    return (d.vectors * np.exp(-1j * d.energies * t)) @ d.vectors.T


def bloch_period(h: float) -> float:
    """Oscillation period 2*pi/h of a gradient h."""
    if h <= 0:
        raise DomainError(f"Bloch period needs h > 0, got h={h}")
    return 2.0 * np.pi / h
