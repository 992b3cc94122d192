"""Eigendecomposition of the one-particle matrices and functions of them.

For the anisotropic flavor the positive half of the spectrum ``lambda_j`` and
its eigenvectors ``v_j`` fix a Bogoliubov matrix ``W`` whose rows alternate
``v_j`` and ``J v_j`` (``J`` swaps ``c_j`` and ``c_j^*``), so that
``W M W^T = diag(lambda_1, -lambda_1, ..., lambda_n, -lambda_n)``.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
import scipy.linalg

from .errors import DegeneracyError, NumericError, StructuralError, UnderflowError
from .model import BlockMatrix, particle_hole
from .states import CorrelationMatrix, OccupationPattern

__all__ = [
    "EigenSystem",
    "CorrelatorProfile",
    "DecayFit",
    "diagonalize",
    "spectral_projection",
    "projection_vectors",
    "matrix_function",
    "indicator",
    "eigencorrelator",
    "correlator_profile",
    "fit_decay",
]

PAIRING_TOL = 1e-8
DEGENERACY_TOL = 1e-10


def _fingerprint(a: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(a).tobytes()).hexdigest()[:12]


@dataclass(frozen=True)
class EigenSystem:
    """Full eigendecomposition ``matrix = V diag(eigenvalues) V^T`` with ascending eigenvalues.

    For flavor ``M`` also carries ``lambdas`` (the n nonnegative values in
    ascending order) and the Bogoliubov matrix ``bogoliubov``.
    """

    flavor: Literal["A", "M"]
    n: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    matrix: np.ndarray
    lambdas: np.ndarray | None = None
    bogoliubov: np.ndarray | None = None
    plus_index: np.ndarray | None = None
    minus_index: np.ndarray | None = None

    @property
    def min_gap(self) -> float:
        if self.eigenvalues.size < 2:
            return np.inf
        return float(np.min(np.diff(self.eigenvalues)))

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.eigenvalues))))

    @property
    def is_simple(self) -> bool:
        return self.min_gap > DEGENERACY_TOL * self.scale

    @property
    def E0(self) -> float:
        """Constant ``sum_j nu_j`` of the isotropic form (``-tr A``)."""
        if self.flavor != "A":
            raise StructuralError("E0 is defined for the isotropic flavor")
        return float(-np.trace(self.matrix))

    @property
    def E1(self) -> float:
        """``sum_j lambda_j``; the ground energy is ``-E1``."""
        if self.flavor != "M":
            raise StructuralError("E1 is defined for the anisotropic flavor")
        return float(np.sum(self.lambdas))

    def mode_energies(self) -> np.ndarray:
        """All many-body energies ``E_alpha`` sorted ascending (2^n values)."""
        if self.flavor != "M":
            raise StructuralError("mode energies need the anisotropic flavor")
        energies = np.array([-self.E1])
        for lam in self.lambdas:
            energies = np.concatenate([energies, energies + 2.0 * lam])
        return np.sort(energies)


def diagonalize(matrix: BlockMatrix) -> EigenSystem:
    """Real symmetric eigendecomposition; pairs ``+-lambda`` for flavor ``M``."""
    entries = np.asarray(matrix.entries, dtype=float)
    try:
        if matrix.flavor == "A":
            if matrix.n == 1:
                evals, evecs = entries.diagonal().copy(), np.ones((1, 1))
            else:
                evals, evecs = scipy.linalg.eigh_tridiagonal(
                    entries.diagonal().copy(), entries.diagonal(1).copy()
                )
        else:
            evals, evecs = scipy.linalg.eigh(entries)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigensolver failed for matrix {_fingerprint(entries)}: {exc}") from exc
    if not np.all(np.isfinite(evals)):
        raise NumericError(f"non-finite eigenvalues for matrix {_fingerprint(entries)}")
    if matrix.flavor == "A":
        return EigenSystem("A", matrix.n, evals, evecs, entries)

    n = matrix.n
    scale = max(1.0, float(np.max(np.abs(evals))))
    mismatch = float(np.max(np.abs(evals + evals[::-1])))
    if mismatch > PAIRING_TOL * scale:
        raise StructuralError(
            f"spectrum of matrix {_fingerprint(entries)} not symmetric under negation (defect {mismatch:.3e})"
        )
    lambdas = np.abs(evals[n:])
    vplus = evecs[:, n:]
    J = particle_hole(n)
    W = np.empty((2 * n, 2 * n))
    W[0::2] = vplus.T
    W[1::2] = (J @ vplus).T
    # eigenvalues[k] ascending: -lambda_n..-lambda_1, +lambda_1..+lambda_n
    plus_index = np.arange(n, 2 * n)
    minus_index = np.arange(n - 1, -1, -1)
    return EigenSystem(
        "M", n, evals, evecs, entries,
        lambdas=lambdas, bogoliubov=W, plus_index=plus_index, minus_index=minus_index,
    )


def projection_vectors(eig: EigenSystem, pattern: OccupationPattern) -> np.ndarray:
    """Orthonormal columns spanning the eigenvectors with eigenvalue in ``Delta_alpha``.

    ``Delta_alpha`` holds ``+lambda_j`` where ``alpha_j = 0`` and ``-lambda_j``
    where ``alpha_j = 1``.  Returns a real ``2n x n`` array.
    """
    if eig.flavor != "M":
        raise StructuralError("spectral projections need the anisotropic flavor")
    if len(pattern) != eig.n:
        raise StructuralError(f"pattern length {len(pattern)} does not match n={eig.n}")
    if not eig.is_simple:
        raise DegeneracyError(
            f"spectrum gap {eig.min_gap:.3e} below {DEGENERACY_TOL:g} relative tolerance"
        )
    rows = 2 * np.arange(eig.n) + np.asarray(pattern.alpha)
    return eig.bogoliubov[rows].T.copy()


def spectral_projection(eig: EigenSystem, pattern: OccupationPattern) -> CorrelationMatrix:
    """Projection ``chi_{Delta_alpha}(M)``: the correlation matrix of the eigenstate ``psi_alpha``."""
    P = projection_vectors(eig, pattern)
    G = P @ P.T
    G = 0.5 * (G + G.T)
    return CorrelationMatrix(G, "projection", pure=True)


def matrix_function(eig: EigenSystem, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``V diag(g(lambda)) V^T`` for a scalar function ``g`` applied elementwise."""
    values = np.asarray(g(eig.eigenvalues))
    if values.shape != eig.eigenvalues.shape:
        values = np.array([g(x) for x in eig.eigenvalues])
    V = eig.eigenvectors
    return (V * values) @ V.T


def indicator(points, tol: float = 1e-9) -> Callable[[np.ndarray], np.ndarray]:
    """Indicator function of a finite point set, matching within ``tol``."""
    pts = np.asarray(points, dtype=float).ravel()

    def g(x):
        x = np.asarray(x, dtype=float)
        return np.any(np.abs(x[..., None] - pts) <= tol, axis=-1).astype(float)

    return g


def delta_set(eig: EigenSystem, pattern: OccupationPattern) -> np.ndarray:
    """The eigenvalue set ``Delta_alpha``."""
    alpha = np.asarray(pattern.alpha)
    return np.where(alpha == 0, eig.lambdas, -eig.lambdas)


def _block_norms(eig: EigenSystem) -> np.ndarray:
    """``N[j, E]``: Euclidean norm of the site-``j`` part of eigenvector ``E``."""
    V = eig.eigenvectors
    if eig.flavor == "A":
        return np.abs(V)
    return np.sqrt(V[0::2] ** 2 + V[1::2] ** 2)


def eigencorrelator(eig: EigenSystem) -> np.ndarray:
    """``Q_jk = sum_E ||(P_E)_jk||``, an upper bound on ``sup_{|g|<=1} ||g(M)_jk||``.

    Each eigenprojection is rank one, so its 2x2 block ``(j, k)`` has spectral
    norm ``|v_E(j)| |v_E(k)|`` and ``Q = N N^T``.
    """
    N = _block_norms(eig)
    return N @ N.T


@dataclass
class DecayFit:
    model: Literal["exponential", "power"]
    C: float
    rate: float
    residual: float
    window: tuple
    points: int

    @property
    def xi(self) -> float:
        """Localization length of the exponential model."""
        return 1.0 / self.rate if self.model == "exponential" and self.rate != 0 else np.inf

    @property
    def beta(self) -> float:
        return self.rate

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.model == "exponential":
            return self.C * np.exp(-self.rate * r)
        return self.C / (1.0 + r) ** self.rate

    def to_dict(self) -> dict:
        out = {"model": self.model, "C": self.C, "residual": self.residual,
               "window": list(self.window), "points": self.points}
        out["xi" if self.model == "exponential" else "beta"] = self.xi if self.model == "exponential" else self.beta
        return out


@dataclass
class CorrelatorProfile:
    """Disorder-averaged eigencorrelator against distance ``r = 0..n-1``."""

    q_max: np.ndarray
    q_mean: np.ndarray
    samples: int
    fits: dict = field(default_factory=dict)

    def __post_init__(self):
        self.q_max = np.asarray(self.q_max, dtype=float)
        self.q_mean = np.asarray(self.q_mean, dtype=float)
        if np.any(self.q_max < 0) or np.any(self.q_mean < 0):
            raise StructuralError("eigencorrelator values must be nonnegative")

    @property
    def distances(self) -> np.ndarray:
        return np.arange(self.q_max.size)

    def F(self, r) -> np.ndarray:
        """Empirical decay function; zero beyond the measured range."""
        r = np.abs(np.asarray(r, dtype=int))
        out = np.zeros(r.shape)
        inside = r < self.q_max.size
        out[inside] = self.q_max[r[inside]]
        return out

    @classmethod
    def synthetic(cls, values, samples: int = 1) -> "CorrelatorProfile":
        values = np.asarray(values, dtype=float)
        return cls(values, values.copy(), samples)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "Q_max", "Q_mean", "samples"])
            for r, (qm, qa) in enumerate(zip(self.q_max, self.q_mean)):
                writer.writerow([r, f"{qm:.17g}", f"{qa:.17g}", self.samples])

    @classmethod
    def from_csv(cls, path) -> "CorrelatorProfile":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            np.array([float(r["Q_max"]) for r in rows]),
            np.array([float(r["Q_mean"]) for r in rows]),
            int(rows[0]["samples"]) if rows else 0,
        )


def correlator_profile(mean_q: np.ndarray, samples: int) -> CorrelatorProfile:
    """Reduce a disorder-averaged ``Q_jk`` matrix to ``Q(r)`` (max and mean over ``|j-k| = r``)."""
    mean_q = np.asarray(mean_q, dtype=float)
    n = mean_q.shape[0]
    q_max = np.empty(n)
    q_mean = np.empty(n)
    for r in range(n):
        diag = np.concatenate([np.diagonal(mean_q, r), np.diagonal(mean_q, -r)])
        q_max[r] = diag.max()
        q_mean[r] = diag.mean()
    return CorrelatorProfile(q_max, q_mean, samples)


UNDERFLOW = 1e-15


def fit_decay(profile: CorrelatorProfile, model: str = "exponential", window=None) -> DecayFit:
    """Least-squares fit of ``log Q(r)`` to ``log C - r/xi`` or ``log C - beta log(1+r)``.

    ``window = (r_min, r_max)`` is inclusive; the default is every distance.
    The residual is the RMS deviation on the log scale.
    """
    if model not in ("exponential", "power"):
        raise ValueError(f"unknown decay model {model!r}")
    r_all = profile.distances
    lo, hi = (0, r_all[-1]) if window is None else (int(window[0]), int(window[1]))
    sel = (r_all >= lo) & (r_all <= hi)
    r = r_all[sel]
    q = profile.q_max[sel]
    if r.size and np.all(q < UNDERFLOW):
        raise UnderflowError(f"all Q(r) below {UNDERFLOW:g} in window [{lo}, {hi}]")
    keep = q >= UNDERFLOW
    r, q = r[keep], q[keep]
    if np.unique(r).size < 4:
        raise ValueError(f"need at least 4 distances with Q(r) > 0 in window [{lo}, {hi}], got {r.size}")
    x = r.astype(float) if model == "exponential" else np.log1p(r.astype(float))
    y = np.log(q)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    return DecayFit(model, float(np.exp(intercept)), float(-slope), rms, (lo, hi), int(r.size))
