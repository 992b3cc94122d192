"""Chain parameters, disorder sampling, lattice geometry and one-particle matrices.

Sites are 1-based in every public signature; arrays are 0-based internally.
The anisotropic matrix ``M`` acts on the Jordan-Wigner vector
``(c_1, c_1^*, c_2, c_2^*, ...)`` so site ``j`` owns rows ``2j-2, 2j-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import ConfigurationError, StructuralError

__all__ = [
    "ChainParameters",
    "Distribution",
    "DisorderSpec",
    "Partition",
    "Subinterval",
    "BlockMatrix",
    "s_block",
    "sample_parameters",
    "build_isotropic",
    "build_anisotropic",
    "restrict",
    "realization_seed",
]

# fixed labelled offsets so each sequence owns an independent sub-stream
_STREAM_LABELS = {"mu": 0, "gamma": 1, "nu": 2}


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChainParameters:
    """Couplings ``mu``, anisotropies ``gamma`` (length n-1) and fields ``nu`` (length n)."""

    n: int
    mu: np.ndarray
    gamma: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ConfigurationError(f"chain length must be positive, got {self.n}")
        object.__setattr__(self, "n", n)
        for name, length in (("mu", n - 1), ("gamma", n - 1), ("nu", n)):
            arr = _frozen(np.atleast_1d(np.asarray(getattr(self, name), dtype=float)).ravel())
            if arr.size != length:
                raise ConfigurationError(f"{name} must have length {length}, got {arr.size}")
            if not np.all(np.isfinite(arr)):
                raise ConfigurationError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)

    @classmethod
    def uniform(cls, n: int, mu: float = 1.0, gamma: float = 0.0, nu: float = 0.0) -> "ChainParameters":
        """Translation-invariant chain with constant parameters."""
        return cls(n, np.full(n - 1, mu), np.full(n - 1, gamma), np.full(n, nu))

    @property
    def is_isotropic(self) -> bool:
        return bool(np.all(self.gamma == 0.0))

    @property
    def field_energy(self) -> float:
        """The offset ``E_0 = sum_j nu_j`` of the isotropic quadratic form."""
        return float(np.sum(self.nu))

    def with_isotropy(self) -> "ChainParameters":
        """Same chain with every anisotropy set to zero."""
        return ChainParameters(self.n, self.mu, np.zeros_like(self.gamma), self.nu)

    def restricted(self, block: "Subinterval") -> "ChainParameters":
        """Parameters of the subchain on ``block``; couplings across its edges are dropped."""
        block.check_within(self.n)
        lo, hi = block.a - 1, block.b
        return ChainParameters(block.length, self.mu[lo:hi - 1], self.gamma[lo:hi - 1], self.nu[lo:hi])


@dataclass(frozen=True)
class Distribution:
    """One of ``constant(value)``, ``uniform(low, high)`` or ``two_point(v1, v2, p)``.

    For ``two_point`` the value ``v1`` is drawn with probability ``p``.
    """

    kind: Literal["constant", "uniform", "two_point"]
    params: tuple

    def __post_init__(self):
        params = tuple(float(x) for x in self.params)
        object.__setattr__(self, "params", params)
        expected = {"constant": 1, "uniform": 2, "two_point": 3}
        if self.kind not in expected:
            raise ConfigurationError(f"unknown distribution kind {self.kind!r}")
        if len(params) != expected[self.kind]:
            raise ConfigurationError(f"{self.kind} takes {expected[self.kind]} parameters, got {len(params)}")
        if not all(np.isfinite(params)):
            raise ConfigurationError(f"{self.kind} parameters must be finite")
        if self.kind == "uniform" and params[0] > params[1]:
            raise ConfigurationError(f"uniform requires low <= high, got {params}")
        if self.kind == "two_point" and not 0.0 <= params[2] <= 1.0:
            raise ConfigurationError(f"two_point probability must lie in [0, 1], got {params[2]}")

    @classmethod
    def constant(cls, value: float) -> "Distribution":
        return cls("constant", (value,))

    @classmethod
    def uniform(cls, low: float, high: float) -> "Distribution":
        return cls("uniform", (low, high))

    @classmethod
    def two_point(cls, v1: float, v2: float, p: float) -> "Distribution":
        return cls("two_point", (v1, v2, p))

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or (self.kind == "uniform" and self.params[0] == self.params[1])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.params[0])
        if self.kind == "uniform":
            return rng.uniform(self.params[0], self.params[1], size)
        v1, v2, p = self.params
        return np.where(rng.random(size) < p, v1, v2)

    def to_dict(self) -> dict:
        names = {"constant": ("value",), "uniform": ("low", "high"), "two_point": ("v1", "v2", "p")}
        return {"kind": self.kind, **dict(zip(names[self.kind], self.params))}

    @classmethod
    def from_dict(cls, doc: dict) -> "Distribution":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ConfigurationError(f"distribution must be an object with a 'kind' field, got {doc!r}")
        names = {"constant": ("value",), "uniform": ("low", "high"), "two_point": ("v1", "v2", "p")}
        kind = doc["kind"]
        if kind not in names:
            raise ConfigurationError(f"unknown distribution kind {kind!r}")
        extra = set(doc) - {"kind", *names[kind]}
        missing = [k for k in names[kind] if k not in doc]
        if extra or missing:
            raise ConfigurationError(
                f"{kind} distribution: unknown fields {sorted(extra)}, missing fields {missing}"
            )
        try:
            return cls(kind, tuple(float(doc[k]) for k in names[kind]))
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"{kind} distribution: {exc}") from exc


@dataclass(frozen=True)
class DisorderSpec:
    """Independent distributions for the three parameter sequences plus a master seed."""

    mu: Distribution = field(default_factory=lambda: Distribution.constant(1.0))
    gamma: Distribution = field(default_factory=lambda: Distribution.constant(0.0))
    nu: Distribution = field(default_factory=lambda: Distribution.constant(0.0))
    seed: int = 0

    def __post_init__(self):
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        object.__setattr__(self, "seed", seed)

    @property
    def is_deterministic(self) -> bool:
        return self.mu.is_constant and self.gamma.is_constant and self.nu.is_constant

    def with_seed(self, seed: int) -> "DisorderSpec":
        return DisorderSpec(self.mu, self.gamma, self.nu, seed)

    def to_dict(self) -> dict:
        return {"mu": self.mu.to_dict(), "gamma": self.gamma.to_dict(), "nu": self.nu.to_dict()}


def realization_seed(master_seed: int, realization: int, *keys: int) -> int:
    """Counter-based sub-seed for realization ``realization`` of an ensemble.

    Extra integer ``keys`` (e.g. the chain length of a size sweep) select
    further independent streams.
    """
    seq = np.random.SeedSequence([int(master_seed), int(realization), *(int(k) for k in keys)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def sample_parameters(spec: DisorderSpec, n: int) -> ChainParameters:
    """Draw one chain from ``spec``; identical ``(spec.seed, n)`` give identical chains."""
    if int(n) < 1:
        raise ConfigurationError(f"chain length must be positive, got {n}")
    n = int(n)
    draws = {}
    for name, size in (("mu", n - 1), ("gamma", n - 1), ("nu", n)):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, _STREAM_LABELS[name]]))
        draws[name] = getattr(spec, name).sample(rng, size)
    return ChainParameters(n, draws["mu"], draws["gamma"], draws["nu"])


@dataclass(frozen=True)
class Subinterval:
    """Closed integer interval ``[a, b]`` of sites, 1-based."""

    a: int
    b: int

    def __post_init__(self):
        a, b = int(self.a), int(self.b)
        if a < 1 or b < a:
            raise StructuralError(f"invalid interval [{self.a}, {self.b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> int:
        return self.b - self.a + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.a, self.b + 1)

    def check_within(self, n: int) -> None:
        if self.b > n:
            raise IndexError(f"interval [{self.a}, {self.b}] exceeds chain [1, {n}]")

    def complement(self, n: int) -> np.ndarray:
        self.check_within(n)
        all_sites = np.arange(1, n + 1)
        return all_sites[(all_sites < self.a) | (all_sites > self.b)]

    def __contains__(self, site) -> bool:
        return self.a <= site <= self.b


def as_sites(S, n: int) -> np.ndarray:
    """Normalize a ``Subinterval`` or an iterable of 1-based sites to a sorted unique array."""
    if isinstance(S, Subinterval):
        S.check_within(n)
        return S.sites
    sites = np.unique(np.atleast_1d(np.asarray(list(S) if not np.isscalar(S) else [S], dtype=int)))
    if sites.size and (sites[0] < 1 or sites[-1] > n):
        raise IndexError(f"site set {sites.tolist()} exceeds chain [1, {n}]")
    return sites


@dataclass(frozen=True)
class Partition:
    """Decomposition of ``[1, n]`` into consecutive blocks.

    ``starts`` are the first sites of the blocks (``starts[0] == 1``); the
    last block runs to ``n``.  ``cut_points`` appends ``n`` to ``starts``.
    """

    n: int
    starts: tuple

    def __post_init__(self):
        starts = tuple(int(s) for s in self.starts)
        n = int(self.n)
        if not starts or starts[0] != 1:
            raise StructuralError("partition must start at site 1")
        if any(b <= a for a, b in zip(starts, starts[1:])) or starts[-1] > n:
            raise StructuralError(f"block starts {starts} must be strictly increasing within [1, {n}]")
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "Partition":
        sizes = [int(s) for s in sizes]
        if any(s < 1 for s in sizes):
            raise StructuralError(f"block sizes must be positive, got {sizes}")
        return cls(sum(sizes), tuple(np.cumsum([1] + sizes[:-1]).tolist()))

    @classmethod
    def whole(cls, n: int) -> "Partition":
        return cls(n, (1,))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(n, tuple(range(1, n + 1)))

    @property
    def m(self) -> int:
        return len(self.starts)

    @property
    def cut_points(self) -> tuple:
        return self.starts + (self.n,)

    @property
    def blocks(self) -> list:
        ends = [s - 1 for s in self.starts[1:]] + [self.n]
        return [Subinterval(a, b) for a, b in zip(self.starts, ends)]

    @property
    def sizes(self) -> list:
        return [blk.length for blk in self.blocks]

    def is_aligned_with(self, block: Subinterval) -> bool:
        """True when ``block`` is a union of whole blocks of the partition."""
        edges = set(self.starts) | {self.n + 1}
        return block.a in edges and (block.b + 1) in edges


@dataclass(frozen=True)
class BlockMatrix:
    """Effective one-particle matrix: ``A`` (n x n) or ``M`` (2n x 2n)."""

    n: int
    entries: np.ndarray
    flavor: Literal["A", "M"]

    def __post_init__(self):
        if self.flavor not in ("A", "M"):
            raise StructuralError(f"unknown flavor {self.flavor!r}")
        dim = self.n if self.flavor == "A" else 2 * self.n
        if self.entries.shape != (dim, dim):
            raise StructuralError(f"flavor {self.flavor} with n={self.n} needs shape {(dim, dim)}")
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def block_size(self) -> int:
        return 1 if self.flavor == "A" else 2

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def site_indices(self, sites: Iterable[int]) -> np.ndarray:
        """0-based row indices owned by 1-based ``sites``."""
        sites = np.asarray(list(sites), dtype=int) - 1
        if self.flavor == "A":
            return sites
        return np.stack([2 * sites, 2 * sites + 1], axis=1).ravel()


def s_block(gamma: float) -> np.ndarray:
    """Coupling block ``[[1, gamma], [-gamma, -1]]``."""
    return np.array([[1.0, gamma], [-gamma, -1.0]])


def build_isotropic(params: ChainParameters) -> BlockMatrix:
    """Jacobi matrix with diagonal ``-nu`` and off-diagonal ``mu`` (anisotropy ignored)."""
    A = np.diag(-params.nu) + np.diag(params.mu, 1) + np.diag(params.mu, -1)
    return BlockMatrix(params.n, A, "A")


def build_anisotropic(params: ChainParameters) -> BlockMatrix:
    """Block-tridiagonal ``M`` with blocks ``-nu_j sigma^z`` and ``mu_j S(gamma_j)``."""
    n = params.n
    M = np.zeros((2 * n, 2 * n))
    for j in range(n):
        M[2 * j, 2 * j] = -params.nu[j]
        M[2 * j + 1, 2 * j + 1] = params.nu[j]
    for j in range(n - 1):
        blk = params.mu[j] * s_block(params.gamma[j])
        M[2 * j:2 * j + 2, 2 * j + 2:2 * j + 4] = blk
        M[2 * j + 2:2 * j + 4, 2 * j:2 * j + 2] = blk.T
    return BlockMatrix(n, M, "M")


def particle_hole(n: int) -> np.ndarray:
    """``J = sigma^x`` on every site; ``J M J = -M`` for every effective ``M``."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [1.0, 0.0]]))


def restrict(matrix: BlockMatrix, block: Subinterval) -> BlockMatrix:
    """Principal submatrix of ``matrix`` on the sites of ``block``."""
    block.check_within(matrix.n)
    idx = matrix.site_indices(block.sites)
    return BlockMatrix(block.length, matrix.entries[np.ix_(idx, idx)].copy(), matrix.flavor)
