"""Correlation matrices of product initial states and their bipartite entanglement.

The reduced state on an interval is read off from the principal submatrix of
``Gamma`` on the rows ``2j-1, 2j`` of its sites; the entropy is
``-tr Gamma_1 log Gamma_1`` in nats.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import StateCorruptionError, StructuralError
from .model import ChainParameters, Partition, Subinterval, build_anisotropic, restrict
from .spectral import diagonalize, projection_vectors
from .states import CorrelationMatrix, DensityProfile, OccupationPattern
from .dynamics import TimeGrid

__all__ = [
    "EntropySpectrum",
    "EntropySweep",
    "gamma_density_profile",
    "gamma_eigenstate_product",
    "block_eigensystems",
    "product_projection_vectors",
    "restrict_gamma",
    "entanglement_entropy",
    "entropy_from_eigenvalues",
    "entropy_upper_diagnostic",
    "evolved_entropy_sweep",
    "write_entropy_csv",
]

CLAMP_TOL = 1e-10
CORRUPTION_TOL = 1e-8
LOG2 = np.log(2.0)


@dataclass
class EntropySpectrum:
    entropy: float
    eigenvalues: np.ndarray
    xi: np.ndarray | None = None

    @property
    def qubits(self) -> float:
        return self.entropy / LOG2


def gamma_density_profile(profile: DensityProfile) -> CorrelationMatrix:
    """Block-diagonal ``Gamma`` with site blocks ``diag(1 - eta_j, eta_j)``."""
    diag = np.empty(2 * profile.n)
    diag[0::2] = 1.0 - profile.eta
    diag[1::2] = profile.eta
    pure = bool(np.all((profile.eta == 0) | (profile.eta == 1)))
    return CorrelationMatrix(np.diag(diag), "density_profile", pure=pure)


def block_eigensystems(params: ChainParameters, partition: Partition) -> list:
    """Eigensystems of the restricted matrices ``M_k`` (couplings across block edges dropped)."""
    if partition.n != params.n:
        raise StructuralError(f"partition covers {partition.n} sites, chain has {params.n}")
    M = build_anisotropic(params)
    return [diagonalize(restrict(M, block)) for block in partition.blocks]


def product_projection_vectors(params: ChainParameters, partition: Partition, patterns,
                               block_eigs=None) -> np.ndarray:
    """Columns ``P`` with ``P P^T = (+)_k chi_{Delta_k}(M_k)``, shape ``2n x n``."""
    if partition.n != params.n:
        raise StructuralError(f"partition covers {partition.n} sites, chain has {params.n}")
    if isinstance(patterns, OccupationPattern):
        patterns = patterns.split(partition.sizes)
    patterns = list(patterns)
    if len(patterns) != partition.m:
        raise StructuralError(f"{len(patterns)} patterns for {partition.m} blocks")
    if block_eigs is None:
        block_eigs = block_eigensystems(params, partition)
    P = np.zeros((2 * params.n, params.n))
    for block, pattern, eig in zip(partition.blocks, patterns, block_eigs):
        if len(pattern) != block.length:
            raise StructuralError(f"pattern length {len(pattern)} does not match block [{block.a}, {block.b}]")
        lo = block.a - 1
        P[2 * lo:2 * (lo + block.length), lo:lo + block.length] = projection_vectors(eig, pattern)
    return P


def gamma_eigenstate_product(params: ChainParameters, partition: Partition, patterns) -> CorrelationMatrix:
    """Direct sum of the blocks' spectral projections: ``Gamma`` of a product of block eigenstates.

    ``patterns`` is one pattern per block, or a single global pattern that is
    split along the partition.
    """
    P = product_projection_vectors(params, partition, patterns)
    G = P @ P.T
    return CorrelationMatrix(0.5 * (G + G.T), "projection", pure=True)


def _rows(block: Subinterval) -> np.ndarray:
    sites = block.sites - 1
    return np.stack([2 * sites, 2 * sites + 1], axis=1).ravel()


def restrict_gamma(gamma: CorrelationMatrix, block: Subinterval) -> CorrelationMatrix:
    """Principal submatrix on the rows of the sites in ``block``."""
    block.check_within(gamma.n)
    idx = _rows(block)
    return CorrelationMatrix(gamma.entries[np.ix_(idx, idx)], "restricted")


def entropy_from_eigenvalues(eps: np.ndarray) -> np.ndarray:
    """``-sum eps log eps`` along the last axis after the physical-range check and clamp."""
    eps = np.asarray(eps, dtype=float)
    if eps.size and (eps.min() < -CORRUPTION_TOL or eps.max() > 1.0 + CORRUPTION_TOL):
        raise StateCorruptionError(
            f"correlation eigenvalues [{eps.min():.3e}, {eps.max():.3e}] outside [0, 1]"
        )
    eps = np.clip(eps, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(eps > 0.0, -eps * np.log(eps), 0.0)
    return terms.sum(axis=-1)


def entanglement_entropy(gamma1: CorrelationMatrix) -> EntropySpectrum:
    """Von Neumann entropy of the quasi-free reduced state with correlation matrix ``gamma1``."""
    eps = np.linalg.eigvalsh(gamma1.entries)
    entropy = float(entropy_from_eigenvalues(eps))
    xi = None
    paired = np.abs(eps + eps[::-1] - 1.0)
    if eps.size and paired.max() <= CORRUPTION_TOL:
        xi = np.clip(eps[: eps.size // 2], 0.0, 0.5)
    return EntropySpectrum(entropy, eps, xi)


def _cross_block_norms(G: np.ndarray, inside: np.ndarray, outside: np.ndarray) -> float:
    """``sum ||Gamma_{l l'}||_2`` over sites ``l`` inside and ``l'`` outside (0-based)."""
    if inside.size == 0 or outside.size == 0:
        return 0.0
    n = G.shape[-1] // 2
    blocks = G.reshape(n, 2, n, 2)[np.ix_(inside, [0, 1], outside, [0, 1])]
    blocks = blocks.transpose(0, 2, 1, 3)
    sv = np.linalg.svd(blocks, compute_uv=False)
    return float(sv[..., 0].sum())


def entropy_upper_diagnostic(gamma: CorrelationMatrix, block: Subinterval) -> float:
    """``2 log 2 sum_{l in block, l' outside} ||Gamma_{l l'}||``; bounds the entropy when ``Gamma`` is a projection."""
    block.check_within(gamma.n)
    inside = block.sites - 1
    outside = block.complement(gamma.n) - 1
    return 2.0 * LOG2 * _cross_block_norms(gamma.entries, inside, outside)


@dataclass
class EntropySweep:
    """Entropy per pattern and grid time for one disorder realization."""

    times: np.ndarray
    entropies: np.ndarray  # shape (patterns, times)
    patterns: list
    block: Subinterval
    diagnostics: np.ndarray | None = None
    max_entropy: float = field(init=False)
    argmax: tuple = field(init=False)

    def __post_init__(self):
        p, t = np.unravel_index(int(np.argmax(self.entropies)), self.entropies.shape)
        self.max_entropy = float(self.entropies[p, t])
        self.argmax = (int(p), float(self.times[t]))

    def per_pattern_max(self) -> np.ndarray:
        return self.entropies.max(axis=1)


def evolved_entropy_sweep(
    params: ChainParameters,
    partition: Partition,
    patterns,
    block: Subinterval,
    grid: TimeGrid,
    with_diagnostic: bool = False,
    eig=None,
) -> EntropySweep:
    """Entanglement of ``block`` for evolved products of block eigenstates.

    ``patterns`` is a list of global occupation patterns; each is split along
    ``partition``.  Only the rows of ``block`` of the evolved ``Gamma`` are
    formed: ``Gamma_1(t) = X X^*`` with ``X = U_t[rows] P_alpha``.
    """
    block.check_within(params.n)
    if eig is None:
        eig = diagonalize(build_anisotropic(params))
    patterns = [p if isinstance(p, OccupationPattern) else OccupationPattern(p) for p in patterns]
    times = np.asarray(grid.times if isinstance(grid, TimeGrid) else grid, dtype=float)
    V = eig.eigenvectors
    rows = _rows(block)
    all_rows = np.arange(2 * params.n) if with_diagnostic else rows
    phases = np.exp(-2j * np.outer(times, eig.eigenvalues))
    Vr = V[all_rows]
    in_pos = np.searchsorted(all_rows, rows)
    entropies = np.empty((len(patterns), times.size))
    diagnostics = np.empty_like(entropies) if with_diagnostic else None
    inside = block.sites - 1
    outside = block.complement(params.n) - 1
    block_eigs = block_eigensystems(params, partition)
    for p, pattern in enumerate(patterns):
        P = product_projection_vectors(params, partition, pattern, block_eigs)
        B = V.T @ P
        # X[t] = Vr diag(phase_t) B
        X = np.matmul(Vr[None, :, :] * phases[:, None, :], B[None, :, :])
        Xin = X[:, in_pos, :]
        G1 = Xin @ np.conj(np.swapaxes(Xin, 1, 2))
        eps = np.linalg.eigvalsh(G1)
        entropies[p] = entropy_from_eigenvalues(eps)
        if with_diagnostic:
            for ti in range(times.size):
                G = X[ti] @ X[ti].conj().T
                diagnostics[p, ti] = 2.0 * LOG2 * _cross_block_norms(G, inside, outside)
    return EntropySweep(times, entropies, patterns, block, diagnostics)


def write_entropy_csv(path, rows) -> None:
    """Rows of ``(realization_id, pattern_id, t, entropy_nats, diagnostic_bound)``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["realization_id", "pattern_id", "t", "entropy_nats", "entropy_qubits", "diagnostic_bound"])
        for rid, pid, t, s, d in rows:
            writer.writerow([rid, pid, f"{t:.17g}", f"{s:.17g}", f"{s / LOG2:.17g}",
                             "" if d is None else f"{d:.17g}"])
