"""Classical and quantum Fisher information of the evolved probe.

The long-time protocol samples the normalized information F_Q/t^2 at whole
multiples of the Bloch period 2*pi/h (defaults to periods 6..10, past the
initial transient) and reports the window mean together with its spread as
a saturation diagnostic.
"""

from dataclasses import dataclass

import numpy as np

from ._parallel import run_jobs
from .basis import Configuration, LatticeSpec, SectorBasis, default_initial, enumerate_sector
from .dynamics import EvolutionWorkspace, QuantumState, bloch_period, diagonalize, _amplitudes
from .errors import DomainError, NumericError
from .hamiltonian import (
    DEFAULT_MEMORY_BUDGET,
    build_single_particle,
    build_xxz_sector,
    gradient_generator,
    seminorm,
)

DEFAULT_WINDOW = tuple(range(6, 11))  # Bloch periods sampled for the long-time mean
PROBABILITY_CUTOFF = 1e-12
SATURATION_SPREAD = 0.2


@dataclass
class ProbabilityVector:
    """Outcome probabilities of the configuration measurement, with the
    optional field derivative dp/dh needed for classical Fisher information."""

    p: np.ndarray
    dp: np.ndarray | None = None


@dataclass
class FisherPoint:
    """Fisher information at one (h, t) of a probe, plus its context."""

    h: float
    t: float
    qfi: float
    cfi: float | None
    L: int
    N: int | None
    Delta: float

    @property
    def qfi_over_t2(self) -> float:
        return self.qfi / self.t**2 if self.t else 0.0

    @property
    def cfi_over_t2(self) -> float | None:
        if self.cfi is None:
            return None
        return self.cfi / self.t**2 if self.t else 0.0


def qfi_pure(psi, dpsi) -> float:
    """Fisher information 4[<dpsi|dpsi> - |<dpsi|psi>|^2] of a pure state."""
    amps = _amplitudes(psi)
    damps = _amplitudes(dpsi)
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > 1e-8:
        raise DomainError(f"state must be normalized, got |psi| = {norm}")
    grad2 = np.vdot(damps, damps).real
    value = 4.0 * (grad2 - abs(np.vdot(damps, amps)) ** 2)
    if value < 0.0:
        if value < -1e-12 * max(1.0, 4.0 * grad2):
            raise NumericError(f"QFI came out negative ({value:.3e}); derivative looks broken")
        value = 0.0
    return value


def cfi(pv: ProbabilityVector) -> float:
    """Classical Fisher information sum dp^2/p over outcomes with p above cutoff."""
    if pv.dp is None:
        raise DomainError("probability vector carries no derivative dp/dh")
    keep = pv.p > PROBABILITY_CUTOFF
    return float(np.sum(pv.dp[keep] ** 2 / pv.p[keep]))


def configuration_probs(psi, dpsi=None) -> ProbabilityVector:
    """Born probabilities |amp|^2 of the configuration measurement.

    When the state derivative is supplied, dp = 2 Re(conj(amp) * damp).
    """
    amps = _amplitudes(psi)
    p = np.abs(amps) ** 2
    dp = None
    if dpsi is not None:
        dp = 2.0 * (np.conj(amps) * _amplitudes(dpsi)).real
    return ProbabilityVector(p, dp)


def qfi_mixed(rho: np.ndarray, drho: np.ndarray, eps: float = 1e-10) -> float:
    """Mixed-state Fisher information from the spectral decomposition of rho:
    2 sum_{ij} |<i|drho|j>|^2 / (lam_i + lam_j) over pairs with lam_i+lam_j > eps."""
    rho = np.asarray(rho)
    trace = np.trace(rho).real
    if abs(trace - 1.0) > 1e-8:
        raise DomainError(f"density matrix trace {trace} is not 1")
    lam, U = np.linalg.eigh(rho)
    A = U.conj().T @ np.asarray(drho) @ U
    denom = lam[:, np.newaxis] + lam[np.newaxis, :]
    keep = denom > eps
    value = 2.0 * float(np.sum(np.abs(A[keep]) ** 2 / denom[keep]))
    return max(value, 0.0)


@dataclass
class LongTimeQFI:
    """Window mean of F_Q/t^2 (and optionally F_C/t^2) at one grid point."""

    value: float
    std: float
    saturated: bool
    points: list
    seminorm: float
    cfi_value: float | None = None

    @property
    def bound_ratio(self) -> float:
        """Largest observed F_Q / (t^2 * seminorm^2) over the window."""
        cap = self.seminorm**2
        return max((pt.qfi_over_t2 / cap) for pt in self.points) if cap else np.inf


def _probe_pieces(spec, N, initial, basis, memory_budget):
    """Hamiltonian, gradient diagonal and initial state for one grid point."""
    if N is None:
        H = build_single_particle(spec)
        gen = gradient_generator(spec.L)
        config = initial if initial is not None else default_initial(spec.L)
        psi0 = QuantumState.from_configuration(config, None, spec.h)
    else:
        if basis is None:
            basis = enumerate_sector(spec.L, N)
        H = build_xxz_sector(spec, N, basis=basis, memory_budget=memory_budget)
        gen = gradient_generator(spec.L, N, basis=basis)
        config = initial if initial is not None else default_initial(spec.L, N)
        if config.n != N:
            raise DomainError(f"initial state has {config.n} excitations, sector has {N}")
        psi0 = QuantumState.from_configuration(config, basis, spec.h)
    return H, gen, psi0, basis


def long_time_normalized_qfi(
    spec: LatticeSpec,
    N: int | None = None,
    initial: Configuration | None = None,
    window=DEFAULT_WINDOW,
    compute_cfi: bool = False,
    basis: SectorBasis | None = None,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> LongTimeQFI:
    """Saturated value of F_Q/t^2 at gradient spec.h.

    Samples t = k * (2*pi/h) for k in the window and averages F_Q/t^2; the
    sample standard deviation flags windows that have not saturated yet
    (std/mean above 0.2 reports saturated=False, the value is still
    returned).
    """
    if spec.h <= 0:
        raise DomainError(f"long-time protocol needs h > 0, got h={spec.h}")
    window = list(window)
    if not window:
        raise DomainError("empty sampling window")
    H, gen, psi0, basis = _probe_pieces(spec, N, initial, basis, memory_budget)
    ws = EvolutionWorkspace(diagonalize(H), gen, psi0)
    T = bloch_period(spec.h)

    points = []
    for k in window:
        t = k * T
        q = ws.qfi(t)
        fc = None
        if compute_cfi:
            amps = ws.vectors @ ws.eig_state(t)
            damps = ws.vectors @ ws.eig_derivative(t)
            fc = cfi(configuration_probs(amps, damps))
        points.append(FisherPoint(spec.h, t, q, fc, spec.L, N, spec.Delta))

    normalized = np.array([pt.qfi_over_t2 for pt in points])
    value = float(normalized.mean())
    std = float(normalized.std(ddof=1)) if len(normalized) > 1 else 0.0
    saturated = std <= SATURATION_SPREAD * value if value > 0 else std == 0.0
    cfi_value = None
    if compute_cfi:
        cfi_value = float(np.mean([pt.cfi_over_t2 for pt in points]))
    return LongTimeQFI(value, std, saturated, points, seminorm(gen), cfi_value)


def sweep_long_time(
    spec: LatticeSpec,
    h_values,
    N: int | None = None,
    initial: Configuration | None = None,
    window=DEFAULT_WINDOW,
    compute_cfi: bool = False,
    threads: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> list[LongTimeQFI]:
    """long_time_normalized_qfi over an h grid, sharing one sector basis."""
    shared = enumerate_sector(spec.L, N) if N is not None else None

    def at_field(h):
        return long_time_normalized_qfi(
            spec.with_h(h),
            N=N,
            initial=initial,
            window=window,
            compute_cfi=compute_cfi,
            basis=shared,
            memory_budget=memory_budget,
        )

    return run_jobs(at_field, h_values, threads)
