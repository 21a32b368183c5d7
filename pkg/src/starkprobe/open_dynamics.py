"""Dephasing dynamics of the probe via a fixed-step Lindblad integrator.

The jump operators are diagonal in the configuration basis (site-resolved
sigma^z, or equivalently I - 2|l><l| for a single particle), so the
dissipator reduces to element-wise damping of coherences:

    (D rho)_{zz'} = -(gamma/2) * sum_l (d^l_z - d^l_{z'})^2 * rho_{zz'}
                  = -2 gamma * hamming(z, z') * rho_{zz'},

leaving populations untouched. The classical 4th-order stepper integrates
rho and, for Fisher trajectories, the two field-shifted replicas needed
for the central-difference derivative of rho.
"""

from dataclasses import dataclass

import numpy as np

from .basis import Configuration, LatticeSpec, SectorBasis, default_initial, enumerate_sector
from .dynamics import EvolutionWorkspace, QuantumState, diagonalize
from .errors import DomainError, NumericError
from .fisher import FisherPoint, qfi_mixed
from .hamiltonian import (
    DEFAULT_MEMORY_BUDGET,
    build_single_particle,
    build_xxz_sector,
    gradient_generator,
)

TRACE_RENORM = 1e-8   # drift below this is silently renormalized
TRACE_ERROR = 1e-6    # drift beyond this aborts with a step-size hint
NEGATIVITY_ERROR = -1e-6


@dataclass(frozen=True)
class DephasingSpec:
    """Dephasing rate and the form of the site jump operators."""

    gamma: float
    operator_form: str = "sigma_z"  # "sigma_z" or "projector" (single particle only)

    def __post_init__(self):
        if self.gamma < 0:
            raise DomainError(f"dephasing rate must be >= 0, got {self.gamma}")
        if self.operator_form not in ("sigma_z", "projector"):
            raise DomainError(f"unknown jump-operator form {self.operator_form!r}")


@dataclass
class DensityMatrix:
    """Hermitian unit-trace state of the open probe at one time."""

    matrix: np.ndarray
    time: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_state(cls, psi, time: float = 0.0) -> "DensityMatrix":
        amps = psi.amplitudes if isinstance(psi, QuantumState) else np.asarray(psi, dtype=complex)
        return cls(np.outer(amps, amps.conj()), time)

    def trace_error(self) -> float:
        return abs(np.trace(self.matrix).real - 1.0)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def purity(self) -> float:
        return float(np.vdot(self.matrix, self.matrix).real)

    def validate(self):
        herm = np.abs(self.matrix - self.matrix.conj().T).max()
        if herm > 1e-10:
            raise NumericError(f"density matrix lost hermiticity ({herm:.2e}) at t={self.time}")
        if self.trace_error() > 1e-8:
            raise NumericError(f"density matrix trace off by {self.trace_error():.2e} at t={self.time}")
        low = self.min_eigenvalue()
        if low < -1e-8:
            raise NumericError(f"density matrix eigenvalue {low:.2e} below zero at t={self.time}")


def jump_site_diagonals(L: int, basis: SectorBasis | None = None, form: str = "sigma_z") -> np.ndarray:
    """(L, dim) array of the diagonal of the site-l jump operator.

    Within the single-particle sector both forms differ only by an overall
    sign, which cancels inside the dissipator.
    """
    if basis is None:
        delta = np.eye(L)
        if form == "projector":
            return 1.0 - 2.0 * delta
        return 2.0 * delta - 1.0
    if form == "projector":
        raise DomainError("projector jump operators are single-particle only")
    return (2.0 * basis.occupation_matrix().astype(float) - 1.0).T


def damping_rates(diagonals: np.ndarray) -> np.ndarray:
    """Unit-rate coherence damping matrix 0.5*sum_l (d^l_z - d^l_{z'})^2."""
    diff = diagonals[:, :, np.newaxis] - diagonals[:, np.newaxis, :]
    return 0.5 * np.sum(diff**2, axis=0)


def dissipator_direct(rho: np.ndarray, diagonals: np.ndarray, gamma: float) -> np.ndarray:
    """Literal sum_l (L rho L - 0.5 {L^2, rho}) with L = diag(d^l); kept as
    the slow validation route for the element-wise fast path."""
    out = np.zeros_like(rho, dtype=complex)
    for d in diagonals:
        Lop = np.diag(d)
        L2 = np.diag(d * d)
        out += Lop @ rho @ Lop - 0.5 * (L2 @ rho + rho @ L2)
    return gamma * out


def lindblad_rhs(
    rho: np.ndarray,
    H: np.ndarray,
    deph: DephasingSpec,
    basis: SectorBasis | None = None,
    rates: np.ndarray | None = None,
) -> np.ndarray:
    """-i[H, rho] + gamma * (element-wise dissipator)."""
    Hm = H.matrix if hasattr(H, "matrix") else np.asarray(H)
    out = -1j * (Hm @ rho - rho @ Hm)
    if deph.gamma > 0:
        if rates is None:
            rates = damping_rates(jump_site_diagonals(Hm.shape[0] if basis is None else basis.L, basis, deph.operator_form))
        out -= deph.gamma * rates * rho
    return out


def _rk4(rhos, Hs, gamma_rates, t0, t1, dt_max):
    """Advance stacked density matrices from t0 to t1 in fixed substeps."""
    span = t1 - t0
    if span == 0:
        return rhos
    steps = max(1, int(np.ceil(span / dt_max)))
    dt = span / steps

    def rhs(y):
        out = -1j * (Hs @ y - y @ Hs)
        if gamma_rates is not None:
            out -= gamma_rates * y
        return out

    for _ in range(steps):
        k1 = rhs(rhos)
        k2 = rhs(rhos + 0.5 * dt * k1)
        k3 = rhs(rhos + 0.5 * dt * k2)
        k4 = rhs(rhos + dt * k3)
        rhos = rhos + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    return rhos


def default_step(J: float, gamma: float) -> float:
    dt = 0.01 / J
    if gamma > 0:
        dt = min(dt, 0.1 / gamma)
    return dt


def _checked_snapshot(rho, t) -> DensityMatrix:
    trace = np.trace(rho).real
    drift = abs(trace - 1.0)
    if drift > TRACE_ERROR:
        raise NumericError(
            f"trace drifted by {drift:.2e} at t={t}; use a smaller integrator step"
        )
    if drift < TRACE_RENORM and drift != 0.0:
        rho = rho / trace
    snap = DensityMatrix(rho, t)
    low = snap.min_eigenvalue()
    if low < NEGATIVITY_ERROR:
        raise NumericError(
            f"density matrix went negative ({low:.2e}) at t={t}; use a smaller integrator step"
        )
    return snap


def integrate_master(
    H,
    deph: DephasingSpec,
    rho0: DensityMatrix | np.ndarray,
    times,
    dt: float | None = None,
    basis: SectorBasis | None = None,
) -> list[DensityMatrix]:
    """Dephasing trajectory at the requested (ascending, >= 0) times."""
    times = np.asarray(times, dtype=float)
    if len(times) == 0 or times[0] < 0 or (np.diff(times) <= 0).any():
        raise DomainError("times must be ascending and start at or after 0")
    Hm = H.matrix if hasattr(H, "matrix") else np.asarray(H)
    rho = (rho0.matrix if isinstance(rho0, DensityMatrix) else np.asarray(rho0)).astype(complex)
    DensityMatrix(rho, 0.0).validate()
    J = H.spec.J if hasattr(H, "spec") else 1.0
    if dt is None:
        dt = default_step(J, deph.gamma)
    rates = None
    if deph.gamma > 0:
        dim = Hm.shape[0]
        L = basis.L if basis is not None else dim
        rates = deph.gamma * damping_rates(jump_site_diagonals(L, basis, deph.operator_form))

    out = []
    t_prev = 0.0
    stack = rho[np.newaxis]
    for t in times:
        stack = _rk4(stack, Hm[np.newaxis], rates, t_prev, t, dt)
        t_prev = t
        out.append(_checked_snapshot(stack[0], t))
    return out


@dataclass
class DephasingTrajectoryPoint:
    """One output time of a dephasing Fisher trajectory."""

    point: FisherPoint
    gamma: float
    trace_err: float
    min_eig: float


def dephasing_qfi_trajectory(
    spec: LatticeSpec,
    N: int | None,
    gamma: float,
    times,
    dh: float = 1e-6,
    initial: Configuration | None = None,
    dt: float | None = None,
    operator_form: str = "sigma_z",
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> list[DephasingTrajectoryPoint]:
    """Mixed-state Fisher information under dephasing at rate gamma.

    The field derivative of rho comes from two extra integrations at
    h -+ dh (central difference); the three replicas advance together in
    one stacked stepper. gamma = 0 is solved exactly through the spectral
    route instead of the stepper: a pure state's zero eigenvalues sit on
    the positivity boundary, where integrator noise has nothing to damp it.
    """
    DephasingSpec(gamma, operator_form)
    times = np.asarray(times, dtype=float)
    if len(times) == 0 or times[0] < 0 or (np.diff(times) <= 0).any():
        raise DomainError("times must be ascending and start at or after 0")

    shared = enumerate_sector(spec.L, N) if N is not None else None

    def hamiltonian(h):
        s = spec.with_h(h)
        if N is None:
            return build_single_particle(s)
        return build_xxz_sector(s, N, basis=shared, memory_budget=memory_budget)

    config = initial if initial is not None else default_initial(spec.L, N)
    psi0 = QuantumState.from_configuration(config, shared, spec.h)
    rho0 = DensityMatrix.from_state(psi0).matrix

    if gamma == 0.0:
        from .dynamics import EvolutionWorkspace, diagonalize
        from .hamiltonian import gradient_generator

        H = hamiltonian(spec.h)
        gen = gradient_generator(spec.L, N, basis=shared)
        ws = EvolutionWorkspace(diagonalize(H), gen, psi0)
        out = []
        for t in times:
            fp = FisherPoint(spec.h, float(t), ws.qfi(t), None, spec.L, N, spec.Delta)
            out.append(DephasingTrajectoryPoint(fp, 0.0, 0.0, 0.0))
        return out

    fields = (spec.h - dh, spec.h, spec.h + dh)
    Hs = np.stack([hamiltonian(h).matrix for h in fields])
    if dt is None:
        dt = default_step(spec.J, gamma)
    rates = None
    if gamma > 0:
        dim = Hs.shape[1]
        L = shared.L if shared is not None else dim
        rates = gamma * damping_rates(jump_site_diagonals(L, shared, operator_form))

    stack = np.broadcast_to(rho0, Hs.shape).astype(complex)
    out = []
    t_prev = 0.0
    for t in times:
        stack = _rk4(stack, Hs, rates, t_prev, t, dt)
        t_prev = t
        snap = _checked_snapshot(stack[1], t)
        drho = (stack[2] - stack[0]) / (2.0 * dh)
        q = qfi_mixed(snap.matrix, drho)
        fp = FisherPoint(spec.h, float(t), q, None, spec.L, N, spec.Delta)
        out.append(DephasingTrajectoryPoint(fp, gamma, snap.trace_error(), snap.min_eigenvalue()))
    return out
