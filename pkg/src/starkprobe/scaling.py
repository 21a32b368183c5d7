"""Power-law fits and the exponent-extraction protocols of the probe.

Size exponents are local: beta(x) at abscissa x = h*L/J is the log-log
slope of the long-time F_Q/t^2 between neighboring sizes evaluated at a
common field h = x*J/L_mid. Fixed-field fits in the localized phase then
read beta ~ 0 (size-independent information), while fits pinned to each
size's own transition read the critical exponent.
"""

from dataclasses import dataclass

import numpy as np

from ._parallel import run_jobs
from .basis import Configuration, LatticeSpec, centered_initial, default_initial
from .errors import DomainError
from .fisher import DEFAULT_WINDOW, long_time_normalized_qfi
from .hamiltonian import DEFAULT_MEMORY_BUDGET

TRANSITION_REFERENCE = 8.0  # predicted h_c * L / J of the single-particle probe
R_SQUARED_FLAG = 0.98
PLATEAU_INCREMENT = 0.05


@dataclass
class ScalingFit:
    """Least-squares power law y = exp(log_prefactor) * x^exponent."""

    exponent: float
    log_prefactor: float
    r_squared: float
    x: np.ndarray
    y: np.ndarray
    flagged: bool = False

    @property
    def n_points(self) -> int:
        return len(self.x)

    def predict(self, x) -> np.ndarray:
        return np.exp(self.log_prefactor) * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(x, y) -> ScalingFit:
    """Ordinary least squares on (ln x, ln y); the exponent is the slope.

    Fits with r^2 below 0.98 are flagged, not rejected.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3 or len(x) != len(y):
        raise DomainError(f"need at least 3 matched points, got {len(x)} x / {len(y)} y")
    if (x <= 0).any() or (y <= 0).any():
        raise DomainError("power-law fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = ly - (slope * lx + intercept)
    total = ly - ly.mean()
    ss_tot = float(total @ total)
    ss_res = float(residual @ residual)
    r2 = 1.0 if ss_tot == 0.0 and ss_res < 1e-20 else 1.0 - ss_res / ss_tot if ss_tot else 0.0
    return ScalingFit(float(slope), float(intercept), r2, x, y, flagged=r2 < R_SQUARED_FLAG)


@dataclass
class TransitionEstimate:
    """Field at the maximum of the long-time normalized Fisher information."""

    h_c: float
    L: int
    reference: float  # 8 J / L
    h_grid: np.ndarray
    values: np.ndarray
    at_boundary: bool = False


def transition_grid(L: int, J: float = 1.0, lo: float = 0.4, hi: float = 2.0, step: float = 0.05) -> np.ndarray:
    """Default scan grid: multiples lo..hi of the predicted 8J/L in steps of 0.05."""
    factors = np.arange(lo, hi + step / 2, step)
    return TRANSITION_REFERENCE * J / L * factors


def _sector_initial(L: int, N: int | None, initial: Configuration | None) -> Configuration | None:
    if initial is not None or N is None:
        return initial
    return default_initial(L, N)


def find_transition(
    L: int,
    h_grid=None,
    N: int | None = None,
    Delta: float = 0.0,
    J: float = 1.0,
    initial: Configuration | None = None,
    window=DEFAULT_WINDOW,
    threads: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> TransitionEstimate:
    """Locate h_c by grid argmax of the long-time F_Q/t^2 (ties -> smaller h)."""
    if h_grid is None:
        h_grid = transition_grid(L, J)
    h_grid = np.asarray(h_grid, dtype=float)
    initial = _sector_initial(L, N, initial)

    def value(h):
        return long_time_normalized_qfi(
            LatticeSpec(L, J, h, Delta), N=N, initial=initial, window=window,
            memory_budget=memory_budget,
        ).value

    values = np.array(run_jobs(value, h_grid, threads))
    best = int(np.argmax(values))
    return TransitionEstimate(
        float(h_grid[best]),
        L,
        TRANSITION_REFERENCE * J / L,
        h_grid,
        values,
        at_boundary=best in (0, len(h_grid) - 1),
    )


@dataclass
class BetaScanPoint:
    """Local size exponent at one abscissa x = h*L/J."""

    x: float
    beta: float
    pair_betas: np.ndarray
    pair_fields: np.ndarray    # common h used by each size pair
    pair_values: np.ndarray    # (n_pairs, 2) long-time F_Q/t^2 at (L1, h), (L2, h)


def beta_scan(
    L_list,
    x_grid,
    J: float = 1.0,
    window=DEFAULT_WINDOW,
    threads: int = 1,
) -> list[BetaScanPoint]:
    """Single-particle size exponent versus the scale variable x = h*L/J.

    For each abscissa x, every adjacent size pair (L1, L2) is evaluated at
    the common field h = x*J/sqrt(L1*L2); the pair's log-log slope
    estimates beta locally and the pairs are averaged. Deep in the
    localized regime (x >> 8) the curve drops to zero because the
    information is size-independent at fixed field.
    """
    L_list = sorted(int(L) for L in L_list)
    if len(L_list) < 2:
        raise DomainError("beta_scan needs at least two sizes")
    pairs = list(zip(L_list[:-1], L_list[1:]))

    def value(job):
        L, h = job
        return long_time_normalized_qfi(LatticeSpec(L, J, h), window=window).value

    points = []
    for x in x_grid:
        fields = np.array([x * J / np.sqrt(L1 * L2) for L1, L2 in pairs])
        jobs = []
        for (L1, L2), h in zip(pairs, fields):
            jobs.extend([(L1, h), (L2, h)])
        vals = np.array(run_jobs(value, jobs, threads)).reshape(-1, 2)
        betas = np.array(
            [
                (np.log(v2) - np.log(v1)) / (np.log(L2) - np.log(L1))
                for (L1, L2), (v1, v2) in zip(pairs, vals)
            ]
        )
        points.append(BetaScanPoint(float(x), float(betas.mean()), betas, fields, vals))
    return points


def alpha_fit(
    L: int,
    N_list,
    h: float,
    Delta: float = 0.0,
    J: float = 1.0,
    window=DEFAULT_WINDOW,
    threads: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> ScalingFit:
    """Excitation-number exponent: long-time F_Q/t^2 versus N at fixed (L, h).

    Initial states are the centered every-other-site patterns, so L must be
    odd and every N at most (L+1)/2.
    """
    N_list = [int(N) for N in N_list]

    def value(N):
        return long_time_normalized_qfi(
            LatticeSpec(L, J, h, Delta),
            N=N,
            initial=centered_initial(L, N),
            window=window,
            memory_budget=memory_budget,
        ).value

    ys = run_jobs(value, N_list, threads)
    return fit_power_law(N_list, ys)


@dataclass
class CriticalScaling:
    """Fit of the long-time F_Q(h_c)/t^2 against size, each size at its own h_c."""

    fit: ScalingFit
    transitions: list[TransitionEstimate]


def alpha_at_transition(
    L: int,
    N_list,
    Delta: float = 0.0,
    J: float = 1.0,
    window=DEFAULT_WINDOW,
    threads: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> CriticalScaling:
    """Excitation exponent with every N evaluated at its own peak field.

    Each excitation number has a slightly different transition; fitting the
    per-N peak values against N is the fixed-size companion of alpha_fit.
    """
    N_list = [int(N) for N in N_list]
    transitions = []
    peaks = []
    for N in N_list:
        est = find_transition(
            L, N=N, Delta=Delta, J=J, initial=centered_initial(L, N),
            window=window, threads=threads, memory_budget=memory_budget,
        )
        transitions.append(est)
        peaks.append(est.values.max())
    return CriticalScaling(fit_power_law(N_list, peaks), transitions)


def critical_scaling(
    L_list,
    N_of=None,
    Delta: float = 0.0,
    J: float = 1.0,
    initial_of=None,
    window=DEFAULT_WINDOW,
    threads: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> CriticalScaling:
    """Locate h_c per size, then fit the peak values versus L.

    N_of maps L to the excitation count (None for single-particle, an int
    for a fixed sector, or a callable like half filling); initial_of, when
    given, maps L to the initial configuration.
    """
    L_list = [int(L) for L in L_list]

    def resolve_n(L):
        if N_of is None or isinstance(N_of, int):
            return N_of
        return int(N_of(L))

    transitions = []
    peaks = []
    for L in L_list:
        N = resolve_n(L)
        initial = initial_of(L) if initial_of is not None else _sector_initial(L, N, None)
        est = find_transition(
            L, N=N, Delta=Delta, J=J, initial=initial, window=window,
            threads=threads, memory_budget=memory_budget,
        )
        transitions.append(est)
        peaks.append(est.values.max())
    return CriticalScaling(fit_power_law(L_list, peaks), transitions)


def fixed_n_beta(
    L_list,
    Delta: float = 0.0,
    N: int = 3,
    J: float = 1.0,
    window=DEFAULT_WINDOW,
    threads: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> CriticalScaling:
    """Size exponent at fixed excitation number (centered initial states),
    each size evaluated at its own transition field."""
    return critical_scaling(
        L_list,
        N_of=N,
        Delta=Delta,
        J=J,
        initial_of=lambda L: centered_initial(L, N),
        window=window,
        threads=threads,
        memory_budget=memory_budget,
    )


@dataclass
class PlateauScan:
    """Long-time F_Q/t^2 versus size at fixed field, with the plateau onset."""

    h: float
    L_values: np.ndarray
    values: np.ndarray
    onset: int | None  # smallest L beyond which relative increments stay < 5%
    flagged: bool      # True when no plateau was found in range


def plateau_scan(
    h: float,
    L_list,
    J: float = 1.0,
    window=DEFAULT_WINDOW,
    threshold: float = PLATEAU_INCREMENT,
    threads: int = 1,
) -> PlateauScan:
    """Single-particle information versus size at fixed h; the growth stalls
    once the chain exceeds the Bloch-oscillation extent around 8J/h."""
    L_list = sorted(int(L) for L in L_list)

    def value(L):
        return long_time_normalized_qfi(LatticeSpec(L, J, h), window=window).value

    values = np.array(run_jobs(value, L_list, threads))
    increments = np.abs(np.diff(values)) / values[:-1]
    onset = None
    for i in range(len(increments)):
        if (increments[i:] < threshold).all():
            onset = L_list[i]
            break
    return PlateauScan(h, np.array(L_list), values, onset, flagged=onset is None)
