"""Maximum-likelihood estimation of the gradient field from configuration
counts, with the Cramer-Rao benchmark 1/sqrt(M * F_C).

Sampling uses numpy's PCG64 generator; repetition seeds are spawned from
the master seed through SeedSequence, so every record, estimate and
summary statistic is reproducible bit for bit.
"""

from dataclasses import dataclass, field

import numpy as np

from .basis import Configuration, LatticeSpec, SectorBasis, default_initial, enumerate_sector
from .dynamics import QuantumState, diagonalize, evolve
from .errors import DomainError, EstimationError
from .fisher import ProbabilityVector, cfi, configuration_probs
from .hamiltonian import DEFAULT_MEMORY_BUDGET, build_single_particle, build_xxz_sector

RNG_ALGORITHM = "numpy-pcg64"


@dataclass
class MeasurementRecord:
    """Multinomial counts of configuration outcomes from M shots."""

    counts: np.ndarray
    M: int
    context: dict = field(default_factory=dict)


@dataclass
class LikelihoodGrid:
    """Log-likelihood over an ascending field grid."""

    h_values: np.ndarray
    loglik: np.ndarray
    argmax_index: int

    @property
    def h_best(self) -> float:
        return float(self.h_values[self.argmax_index])


@dataclass
class EstimateResult:
    """Mean and spread of repeated maximum-likelihood estimates of h."""

    h_true: float
    h_es_mean: float
    delta_h: float  # population standard deviation across repetitions
    repetitions: int
    crb: float      # 1/sqrt(M * F_C) of the same measurement model at h_true
    M: int
    seed: int
    degenerate: bool = False


def sample_configurations(pv: ProbabilityVector, M: int, seed, context: dict | None = None) -> MeasurementRecord:
    """One multinomial draw of M shots from the outcome distribution."""
    if M < 1:
        raise DomainError(f"sample count must be >= 1, got M={M}")
    p = np.asarray(pv.p, dtype=float)
    if (p < -1e-12).any():
        raise DomainError("probabilities must be nonnegative")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > 1e-8:
        raise DomainError(f"probabilities sum to {total}, not 1")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(M, p / total)
    ctx = dict(context or {})
    ctx.setdefault("seed", seed)
    return MeasurementRecord(counts.astype(np.int64), M, ctx)


def log_likelihood(rec: MeasurementRecord, model, h: float) -> float:
    """sum_z n_z * log p_z(h), dropping the count-independent multinomial
    coefficient; an observed outcome with zero model probability gives -inf."""
    p = np.asarray(model(h).p, dtype=float)
    counts = rec.counts
    if len(p) != len(counts):
        raise DomainError(f"model has {len(p)} outcomes, record has {len(counts)}")
    observed = counts > 0
    if (p[observed] <= 0.0).any():
        return -np.inf
    return float(np.sum(counts[observed] * np.log(p[observed])))


def likelihood_grid(rec: MeasurementRecord, model, h_grid) -> LikelihoodGrid:
    """Evaluate the log-likelihood across the grid; ties resolve to the
    smallest field (argmax returns the first maximum of an ascending grid)."""
    h_grid = np.asarray(h_grid, dtype=float)
    if len(h_grid) == 0:
        raise DomainError("empty field grid")
    if (np.diff(h_grid) <= 0).any():
        raise DomainError("field grid must be strictly ascending")
    loglik = np.array([log_likelihood(rec, model, h) for h in h_grid])
    if not np.isfinite(loglik).any():
        raise EstimationError("likelihood is zero on the whole grid; model cannot produce the data")
    return LikelihoodGrid(h_grid, loglik, int(np.argmax(loglik)))


def mle(rec: MeasurementRecord, model, h_grid, refine: bool = False) -> float:
    """Grid argmax of the log-likelihood, optionally sharpened by one
    three-point quadratic interpolation around the best grid point."""
    grid = likelihood_grid(rec, model, h_grid)
    i = grid.argmax_index
    if not refine or i == 0 or i == len(grid.h_values) - 1:
        return grid.h_best
    y0, y1, y2 = grid.loglik[i - 1 : i + 2]
    if not (np.isfinite(y0) and np.isfinite(y2)):
        return grid.h_best
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:
        return grid.h_best
    x0, x1, x2 = grid.h_values[i - 1 : i + 2]
    shift = 0.5 * (y0 - y2) / denom
    return float(x1 + shift * (x2 - x0) / 2.0)


class CachedModel:
    """Memoizes a field -> ProbabilityVector model; one evaluation per h no
    matter how many repetitions reuse the grid."""

    def __init__(self, model):
        self._model = model
        self._cache = {}

    def __call__(self, h: float) -> ProbabilityVector:
        key = float(h)
        if key not in self._cache:
            self._cache[key] = self._model(key)
        return self._cache[key]


def configuration_model(
    spec: LatticeSpec,
    t: float,
    N: int | None = None,
    initial: Configuration | None = None,
    basis: SectorBasis | None = None,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> CachedModel:
    """Measurement model of the probe: evolve the initial configuration for
    time t at field h and read configuration probabilities."""
    if N is not None and basis is None:
        basis = enumerate_sector(spec.L, N)
    config = initial if initial is not None else default_initial(spec.L, N)
    psi0 = QuantumState.from_configuration(config, basis)

    def probabilities(h: float) -> ProbabilityVector:
        s = spec.with_h(h)
        H = build_single_particle(s) if N is None else build_xxz_sector(s, N, basis=basis, memory_budget=memory_budget)
        return configuration_probs(evolve(diagonalize(H), psi0, t))

    return CachedModel(probabilities)


def model_cfi(model, h: float, dh: float = 1e-6) -> float:
    """Classical Fisher information of the model at h, with dp/dh from a
    central difference of the outcome probabilities."""
    up = np.asarray(model(h + dh).p, dtype=float)
    dn = np.asarray(model(h - dh).p, dtype=float)
    dp = (up - dn) / (2.0 * dh)
    return cfi(ProbabilityVector(np.asarray(model(h).p, dtype=float), dp))


def repetition_seeds(seed: int, repetitions: int) -> list:
    """Deterministic per-repetition seeds spawned from the master seed."""
    return np.random.SeedSequence(seed).spawn(repetitions)


def estimator_statistics(
    h_true: float,
    model,
    h_grid,
    M: int,
    repetitions: int,
    seed: int,
    dh_crb: float = 1e-6,
    refine: bool = False,
) -> EstimateResult:
    """Repeat sample -> MLE and summarize against the Cramer-Rao bound.

    delta_h is the population standard deviation of the estimates. A model
    whose distribution carries no field information (F_C = 0) is flagged
    degenerate and reports an infinite bound.
    """
    if repetitions < 2:
        raise DomainError(f"need at least 2 repetitions, got {repetitions}")
    model = model if isinstance(model, CachedModel) else CachedModel(model)
    truth = model(h_true)
    estimates = np.empty(repetitions)
    for r, sub in enumerate(repetition_seeds(seed, repetitions)):
        rec = sample_configurations(truth, M, sub, context={"h_true": h_true, "rep": r})
        estimates[r] = mle(rec, model, h_grid, refine=refine)

    fisher = model_cfi(model, h_true, dh_crb)
    degenerate = fisher <= 0.0
    crb = np.inf if degenerate else 1.0 / np.sqrt(M * fisher)
    return EstimateResult(
        h_true=float(h_true),
        h_es_mean=float(estimates.mean()),
        delta_h=float(estimates.std(ddof=0)),
        repetitions=repetitions,
        crb=float(crb),
        M=M,
        seed=seed,
        degenerate=degenerate,
    )
