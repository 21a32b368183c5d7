"""Dense real-symmetric Hamiltonians of the gradient-field probe.

Two builders: the single-particle tight-binding ladder

    H = -J sum_l (|l><l+1| + h.c.) + h sum_l l |l><l|

and the XXZ chain restricted to a fixed-excitation sector,

    H = -(J/2) sum_l (sx sx + sy sy + Delta sz sz) + h sum_l l n_l,

assembled directly in the configuration basis: hopping -J between words
related by one adjacent 01<->10 swap, and a diagonal
-(J*Delta/2) * sum_l s_l s_{l+1} + h * sum_l l n_l with s_l = 2 n_l - 1.
Both carry the gradient through the diagonal generator sum_l l n_l.
"""

from dataclasses import dataclass

import numpy as np

from .basis import LatticeSpec, SectorBasis, enumerate_sector
from .errors import ResourceError

DEFAULT_MEMORY_BUDGET = 8 * 2**30  # bytes allowed for one dense dim x dim matrix


@dataclass(frozen=True)
class HamiltonianMatrix:
    """A dense symmetric Hamiltonian tied to its lattice parameters.

    sector is the excitation count N, or None for the single-particle
    (site-basis) model.
    """

    matrix: np.ndarray
    spec: LatticeSpec
    sector: int | None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class GradientGenerator:
    """Diagonal of sum_l l n_l in basis order; the field enters as H = H1 + h*H2."""

    diag: np.ndarray
    L: int
    sector: int | None


def check_memory_budget(dim: int, budget: int = DEFAULT_MEMORY_BUDGET, what: str = "dense matrix"):
    """Refuse dim x dim float64 allocations beyond the configured budget."""
    required = dim * dim * 8
    if required > budget:
        raise ResourceError(
            f"{what} of dimension {dim} needs {required} bytes "
            f"(budget {budget}); raise the budget or shrink the sector"
        )


def build_single_particle(spec: LatticeSpec) -> HamiltonianMatrix:
    """Tridiagonal Stark ladder: diagonal h*l, off-diagonal -J, open ends."""
    L = spec.L
    m = np.zeros((L, L))
    sites = np.arange(1, L + 1, dtype=float)
    m[np.arange(L), np.arange(L)] = spec.h * sites
    off = np.arange(L - 1)
    m[off, off + 1] = -spec.J
    m[off + 1, off] = -spec.J
    m.flags.writeable = False
    return HamiltonianMatrix(m, spec, None)


def build_xxz_sector(
    spec: LatticeSpec,
    N: int,
    basis: SectorBasis | None = None,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> HamiltonianMatrix:
    """XXZ + gradient Hamiltonian in the (L, N) configuration sector.

    The hopping never changes the excitation number, so the sector block is
    exact. Entries are written symmetrically (each bond from both sides),
    never symmetrized after the fact.
    """
    if basis is None:
        basis = enumerate_sector(spec.L, N)
    elif basis.L != spec.L or basis.N != N:
        raise ValueError(f"basis {basis} does not match L={spec.L}, N={N}")
    dim = len(basis)
    check_memory_budget(dim, memory_budget, what=f"(L={spec.L}, N={N}) sector Hamiltonian")

    occ = basis.occupation_matrix().astype(np.int64)
    site_sums = occ @ np.arange(1, spec.L + 1)
    s = 2 * occ - 1
    ising = (s[:, :-1] * s[:, 1:]).sum(axis=1)

    m = np.zeros((dim, dim))
    np.fill_diagonal(m, -(spec.J * spec.Delta / 2.0) * ising + spec.h * site_sums)

    words = basis.configs
    rows = np.arange(dim)
    for b in range(spec.L - 1):
        pair = (words >> b) & 3
        movable = (pair == 1) | (pair == 2)
        if not movable.any():
            continue
        partners = words[movable] ^ (3 << b)
        cols = np.searchsorted(words, partners)
        m[rows[movable], cols] = -spec.J
    m.flags.writeable = False
    return HamiltonianMatrix(m, spec, N)


def gradient_generator(
    L: int, N: int | None = None, basis: SectorBasis | None = None
) -> GradientGenerator:
    """Diagonal of the gradient term sum_l l n_l for the chosen sector."""
    if N is None:
        diag = np.arange(1, L + 1, dtype=float)
    else:
        if basis is None:
            basis = enumerate_sector(L, N)
        diag = basis.site_sums().astype(float)
    diag.flags.writeable = False
    return GradientGenerator(diag, L, N)


def seminorm(g: GradientGenerator) -> float:
    """Spectral spread lambda_max - lambda_min of the gradient generator.

    Equals L-1 for a single particle and N(L-N) for the N-excitation
    sector; it caps the Fisher information as F_Q <= t^2 * seminorm^2.
    """
    return float(g.diag.max() - g.diag.min())


def dump_matrix(hm: HamiltonianMatrix, path):
    """Plain-text dump: first line the dimension, then rows of values."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{hm.dim}\n")
        for row in hm.matrix:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_matrix(path) -> np.ndarray:
    """Read a matrix written by dump_matrix."""
    with open(path, encoding="utf-8") as f:
        dim = int(f.readline())
        values = np.array(f.read().split(), dtype=float)
    return values.reshape(dim, dim)
