"""State surrogates shared by the spectral, dynamics and entanglement layers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import StructuralError
from .model import Subinterval

__all__ = ["OccupationPattern", "DensityProfile", "CorrelationMatrix", "pattern_battery"]


@dataclass(frozen=True)
class OccupationPattern:
    """Bit string selecting the fermionic eigenstate with modes ``j`` occupied where ``alpha_j = 1``."""

    alpha: tuple

    def __post_init__(self):
        alpha = tuple(int(x) for x in self.alpha)
        if any(x not in (0, 1) for x in alpha):
            raise StructuralError(f"occupation pattern entries must be 0 or 1, got {alpha}")
        object.__setattr__(self, "alpha", alpha)

    def __len__(self):
        return len(self.alpha)

    @classmethod
    def zeros(cls, n: int) -> "OccupationPattern":
        return cls((0,) * n)

    @classmethod
    def ones(cls, n: int) -> "OccupationPattern":
        return cls((1,) * n)

    @classmethod
    def alternating(cls, n: int) -> "OccupationPattern":
        return cls(tuple(j % 2 for j in range(n)))

    @classmethod
    def from_index(cls, index: int, n: int) -> "OccupationPattern":
        """Pattern whose bits are the binary digits of ``index`` (mode 1 most significant)."""
        return cls(tuple((index >> (n - 1 - j)) & 1 for j in range(n)))

    def complement(self) -> "OccupationPattern":
        return OccupationPattern(tuple(1 - x for x in self.alpha))

    def split(self, sizes) -> list:
        """Cut a global pattern into per-block patterns of the given sizes."""
        if sum(sizes) != len(self):
            raise StructuralError(f"pattern of length {len(self)} cannot be split into {list(sizes)}")
        out, pos = [], 0
        for s in sizes:
            out.append(OccupationPattern(self.alpha[pos:pos + s]))
            pos += s
        return out

    def energy(self, lambdas: np.ndarray) -> float:
        """Many-body energy ``2 sum_{alpha_j=1} lambda_j - sum_j lambda_j``."""
        lambdas = np.asarray(lambdas)
        occ = np.asarray(self.alpha, dtype=bool)
        return float(2.0 * lambdas[occ].sum() - lambdas.sum())


def pattern_battery(n: int, random_count: int = 16, seed: int = 0, exhaustive_max_n: int = 12) -> list:
    """Patterns over which the sup in the area law is probed.

    Every pattern when ``n <= exhaustive_max_n``; otherwise all-zeros,
    all-ones, alternating and ``random_count`` seeded uniform patterns.
    """
    if n <= exhaustive_max_n:
        return [OccupationPattern.from_index(i, n) for i in range(2**n)]
    battery = [OccupationPattern.zeros(n), OccupationPattern.ones(n), OccupationPattern.alternating(n)]
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5EED]))
    for bits in rng.integers(0, 2, size=(random_count, n)):
        battery.append(OccupationPattern(tuple(bits.tolist())))
    return battery


@dataclass(frozen=True)
class DensityProfile:
    """Site occupations ``eta_j`` of a product initial state ``diag(eta_j, 1 - eta_j)``."""

    eta: np.ndarray

    def __post_init__(self):
        eta = np.array(self.eta, dtype=float).ravel()
        if eta.size == 0 or np.any(eta < 0) or np.any(eta > 1) or not np.all(np.isfinite(eta)):
            raise StructuralError("density profile entries must lie in [0, 1]")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @property
    def n(self) -> int:
        return self.eta.size

    @classmethod
    def domain_wall(cls, n: int, wall: Subinterval) -> "DensityProfile":
        """Up spins on ``wall``, down spins elsewhere."""
        wall.check_within(n)
        eta = np.zeros(n)
        eta[wall.a - 1:wall.b] = 1.0
        return cls(eta)

    @classmethod
    def from_pattern(cls, pattern: OccupationPattern) -> "DensityProfile":
        """Up-down configuration ``e_alpha`` (``alpha_j = 1`` is an up spin)."""
        return cls(np.asarray(pattern.alpha, dtype=float))

    def wall_interval(self):
        """The interval if ``eta`` is the indicator of one contiguous interval, else ``None``."""
        if not np.all((self.eta == 0) | (self.eta == 1)):
            return None
        ones = np.flatnonzero(self.eta == 1)
        if ones.size == 0 or ones[-1] - ones[0] + 1 != ones.size:
            return None
        return Subinterval(int(ones[0]) + 1, int(ones[-1]) + 1)


@dataclass(frozen=True)
class CorrelationMatrix:
    """``Gamma = <C C^*>`` on the ordering ``(c_1, c_1^*, ..., c_n, c_n^*)``."""

    entries: np.ndarray
    provenance: Literal["projection", "density_profile", "evolved", "restricted", "oracle"] = "projection"
    pure: bool = False

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] % 2:
            raise StructuralError(f"correlation matrix must be square of even size, got {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0] // 2

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def site_block(self, j: int, k: int) -> np.ndarray:
        """The 2x2 block ``Gamma_{jk}`` for 1-based sites."""
        return self.entries[2 * j - 2:2 * j, 2 * k - 2:2 * k]

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def idempotence_defect(self) -> float:
        return float(np.max(np.abs(self.entries @ self.entries - self.entries)))

    def occupations(self) -> np.ndarray:
        """``<c_j^* c_j>`` for every site."""
        return np.real(np.diag(self.entries)[1::2]).copy()
