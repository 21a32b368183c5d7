"""Configuration basis of an open chain with a fixed number of excitations.

Configurations are stored as integer bit-words: bit i (counting from the
least significant bit) set means site i+1 is occupied. Site indices are
1-based in every public interface. Sector enumeration packs words into
int64, which caps multi-particle chains at 63 sites; the single-particle
model has no such cap.
"""

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DomainError

MAX_SECTOR_SITES = 63  # sector words live in int64; single-particle chains have no cap


@dataclass(frozen=True)
class LatticeSpec:
    """Physical parameters of the probe chain.

    L sites with hopping J > 0, gradient field h (energy per site) and
    interaction anisotropy Delta. Energies are measured in units of J and
    times in 1/J throughout; h may be negative (estimation grids scan
    through zero), while sweep protocols that need a Bloch period require
    h > 0 and check it themselves.
    """

    L: int
    J: float = 1.0
    h: float = 0.0
    Delta: float = 0.0

    def __post_init__(self):
        if self.L < 2:
            raise DomainError(f"chain needs at least 2 sites, got L={self.L}")
        if not self.J > 0:
            raise DomainError(f"hopping J must be positive, got J={self.J}")

    def with_h(self, h: float) -> "LatticeSpec":
        """Copy of this spec at a different gradient field."""
        return LatticeSpec(self.L, self.J, float(h), self.Delta)


@dataclass(frozen=True)
class Configuration:
    """A single occupation pattern on a chain of L sites."""

    word: int
    L: int

    def __post_init__(self):
        if self.L < 2:
            raise DomainError(f"invalid site count L={self.L}")
        if self.word < 0 or self.word >> self.L:
            raise DomainError(
                f"word {self.word:#x} has occupied bits outside sites 1..{self.L}"
            )

    @property
    def n(self) -> int:
        """Number of excitations."""
        return self.word.bit_count()

    @property
    def sites(self) -> tuple[int, ...]:
        """Occupied sites, 1-based, ascending."""
        return tuple(l for l in range(1, self.L + 1) if (self.word >> (l - 1)) & 1)

    def occupations(self) -> np.ndarray:
        """0/1 array of length L, site 1 first."""
        return np.array([(self.word >> b) & 1 for b in range(self.L)], dtype=np.uint8)

    def site_sum(self) -> int:
        """Sum of occupied site indices (gradient-generator eigenvalue)."""
        return sum(self.sites)

    def reflected(self) -> "Configuration":
        """Image under the site reflection l -> L+1-l."""
        word = 0
        for l in self.sites:
            word |= 1 << (self.L - l)
        return Configuration(word, self.L)

    def __str__(self) -> str:
        # textual rendering used in CSV output and logs: "1,0,1,0,..."
        return ",".join(str((self.word >> b) & 1) for b in range(self.L))


class SectorBasis:
    """Ordered N-excitation configuration basis of an L-site chain.

    Words are sorted ascending as integers, so matrix layouts are
    reproducible across runs. Immutable after construction; safe to share
    between sweep workers.
    """

    def __init__(self, L: int, N: int, words: np.ndarray):
        self.L = L
        self.N = N
        self.configs = words
        self.configs.flags.writeable = False
        self.index = {int(w): k for k, w in enumerate(words)}
        self._occupations = None

    def __len__(self) -> int:
        return len(self.configs)

    @property
    def size(self) -> int:
        return len(self.configs)

    def state_index(self, config) -> int:
        """Ordinal of a configuration (word or Configuration) in this sector."""
        word = config.word if isinstance(config, Configuration) else int(config)
        try:
            return self.index[word]
        except KeyError:
            raise DomainError(
                f"word {word:#x} is not an (L={self.L}, N={self.N}) configuration"
            ) from None

    def configuration(self, k: int) -> Configuration:
        return Configuration(int(self.configs[k]), self.L)

    def occupation_matrix(self) -> np.ndarray:
        """(size, L) 0/1 array; column l-1 is the occupation of site l."""
        if self._occupations is None:
            occ = np.zeros((len(self.configs), self.L), dtype=np.int8)
            for b in range(self.L):
                occ[:, b] = (self.configs >> b) & 1
            occ.flags.writeable = False
            self._occupations = occ
        return self._occupations

    def site_sums(self) -> np.ndarray:
        """Sum of occupied site indices per configuration, in basis order."""
        return self.occupation_matrix() @ np.arange(1, self.L + 1)

    def __repr__(self) -> str:
        return f"SectorBasis(L={self.L}, N={self.N}, size={len(self)})"


def enumerate_sector(L: int, N: int) -> SectorBasis:
    """All configurations of N excitations on L sites, ascending by word."""
    if L < 2:
        raise DomainError(f"invalid site count L={L}")
    if L > MAX_SECTOR_SITES:
        raise DomainError(f"L={L} exceeds the {MAX_SECTOR_SITES}-site sector word limit")
    if not 0 <= N <= L:
        raise DomainError(f"excitation count N={N} outside 0..{L}")
    words = np.fromiter(
        (sum(1 << i for i in occ) for occ in itertools.combinations(range(L), N)),
        dtype=np.int64,
        count=comb(L, N),
    )
    words.sort()
    return SectorBasis(L, N, words)


def neel_initial(L: int) -> Configuration:
    """Alternating-occupation state: odd sites 1, 3, 5, ... occupied.

    Even L gives the half-filled |1,0,...,1,0>; odd L occupies both ends.
    """
    word = sum(1 << (l - 1) for l in range(1, L + 1, 2))
    return Configuration(word, L)


def centered_initial(L: int, N: int) -> Configuration:
    """N excitations on every other site, symmetric about the chain center.

    Requires odd L; occupied sites are c-(N-1), c-(N-3), ..., c+(N-1) with
    c = (L+1)/2.
    """
    if L % 2 == 0:
        raise DomainError(f"centered pattern needs odd L, got L={L}")
    if N < 1:
        raise DomainError(f"need at least one excitation, got N={N}")
    c = (L + 1) // 2
    sites = [c - (N - 1) + 2 * k for k in range(N)]
    if sites[0] < 1 or sites[-1] > L:
        raise DomainError(f"centered pattern with N={N} exceeds chain of L={L}")
    return Configuration(sum(1 << (l - 1) for l in sites), L)


def single_site_initial(L: int, l: int) -> Configuration:
    """Single excitation at site l."""
    if not 1 <= l <= L:
        raise DomainError(f"site l={l} outside 1..{L}")
    return Configuration(1 << (l - 1), L)


def default_initial(L: int, N: int | None = None) -> Configuration:
    """Conventional initial state for a probe: central site for a single
    particle, the Neel state at (half-)filling, otherwise the centered
    pattern on an odd chain."""
    if N is None or N == 1:
        return single_site_initial(L, (L + 1) // 2)
    if neel_initial(L).n == N:
        return neel_initial(L)
    if L % 2 == 1 and N <= (L + 1) // 2:
        return centered_initial(L, N)
    raise DomainError(
        f"no conventional initial state for L={L}, N={N}; pass one explicitly"
    )
