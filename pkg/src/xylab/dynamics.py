"""One-particle propagators, correlation-matrix evolution and particle transport.

Time is dimensionless with the factor two of the quadratic form kept:
``C(t) = exp(-2itM) C`` for the anisotropic flavor and ``exp(2itA)`` is the
propagator whose squared moduli carry occupations in the isotropic case.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import StructuralError
from .model import as_sites
from .spectral import CorrelatorProfile, EigenSystem
from .states import CorrelationMatrix, DensityProfile

__all__ = [
    "Propagator",
    "TimeGrid",
    "propagator",
    "propagator_stack",
    "evolve_correlation",
    "transport_expectation",
    "transport_series",
    "hole_expectation",
    "density_snapshots",
    "TransportBound",
    "transport_bound_rhs",
    "transport_difference_bound",
    "transport_envelope_bound",
    "boundary_pairs",
    "pair_sum",
    "running_max",
    "write_series_csv",
]


def _sign(eig: EigenSystem) -> float:
    return -2.0 if eig.flavor == "M" else 2.0


@dataclass(frozen=True)
class Propagator:
    t: float
    matrix: np.ndarray
    flavor: str

    def unitarity_defect(self) -> float:
        U = self.matrix
        return float(np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0]))))


def propagator(eig: EigenSystem, t: float) -> Propagator:
    """``exp(-2itM)`` for flavor ``M``, ``exp(2itA)`` for flavor ``A``."""
    V = eig.eigenvectors
    phases = np.exp(1j * _sign(eig) * float(t) * eig.eigenvalues)
    return Propagator(float(t), (V * phases) @ V.T, eig.flavor)


def propagator_stack(eig: EigenSystem, times, rows=None) -> np.ndarray:
    """Propagators at every time as a ``(T, len(rows), dim)`` array.

    ``rows`` selects 0-based matrix rows; all rows by default.
    """
    V = eig.eigenvectors
    Vr = V if rows is None else V[rows]
    phases = np.exp(1j * _sign(eig) * np.outer(np.asarray(times, dtype=float), eig.eigenvalues))
    return np.einsum("re,te,ce->trc", Vr, phases, V, optimize=True)


@dataclass(frozen=True)
class TimeGrid:
    """Sorted nonnegative times approximating ``sup_t`` by a running maximum."""

    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        if t.size == 0 or not np.all(np.isfinite(t)) or np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise StructuralError("time grid must be finite, nonnegative and strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def geometric(cls, t_min: float = 0.05, t_max: float = 500.0, count: int = 200,
                  include_zero: bool = True) -> "TimeGrid":
        t = np.geomspace(t_min, t_max, int(count))
        return cls(np.concatenate([[0.0], t]) if include_zero else t)

    @classmethod
    def default(cls) -> "TimeGrid":
        return cls.geometric()

    def __len__(self):
        return self.times.size

    def to_dict(self) -> dict:
        return {"times": [float(x) for x in self.times]}


def evolve_correlation(gamma0: CorrelationMatrix, prop: Propagator) -> CorrelationMatrix:
    """``U Gamma U^*`` with ``U = exp(-2itM)``."""
    U = prop.matrix
    if U.shape != gamma0.entries.shape:
        raise StructuralError(f"propagator shape {U.shape} does not match correlation matrix {gamma0.entries.shape}")
    G = U @ gamma0.entries @ U.conj().T
    return CorrelationMatrix(0.5 * (G + G.conj().T), "evolved", pure=gamma0.pure)


def _require_isotropic(eig: EigenSystem):
    if eig.flavor != "A":
        raise StructuralError("transport observables need the isotropic flavor")


def transport_series(eig: EigenSystem, profile: DensityProfile, S, times) -> np.ndarray:
    """``<N_S>_t = sum_{j in S} sum_k eta_k |(exp(2itA))_jk|^2`` at every time."""
    _require_isotropic(eig)
    if profile.n != eig.n:
        raise StructuralError(f"profile length {profile.n} does not match n={eig.n}")
    sites = as_sites(S, eig.n)
    if sites.size == 0:
        return np.zeros(np.size(times))
    U = propagator_stack(eig, np.atleast_1d(times), rows=sites - 1)
    return np.einsum("tsk,k->t", np.abs(U) ** 2, profile.eta)


def transport_expectation(eig: EigenSystem, profile: DensityProfile, S, t: float) -> float:
    """Expected number of up spins in ``S`` at time ``t``."""
    return float(transport_series(eig, profile, S, [t])[0])


def hole_expectation(eig: EigenSystem, profile: DensityProfile, S, t: float) -> float:
    """Expected number of down spins in ``S``: ``|S| - <N_S>_t``."""
    sites = as_sites(S, eig.n)
    return float(sites.size - transport_expectation(eig, profile, sites, t))


def density_snapshots(eig: EigenSystem, profile: DensityProfile, times) -> np.ndarray:
    """``<a_j^* a_j>_t`` for every site and time, shape ``(T, n)``."""
    _require_isotropic(eig)
    U = propagator_stack(eig, np.atleast_1d(times))
    return np.einsum("tjk,k->tj", np.abs(U) ** 2, profile.eta)


def boundary_pairs(S, K, n: int) -> list:
    """All pairs ``(j, k)`` with ``j`` in ``S`` and ``k`` outside ``K``."""
    S_sites = as_sites(S, n)
    K_sites = set(as_sites(K, n).tolist())
    outside = [k for k in range(1, n + 1) if k not in K_sites]
    return [(int(j), k) for j in S_sites for k in outside]


def pair_sum(pairs, F) -> float:
    """``sum_{(j,k)} F(|j-k|)`` for a profile or a callable/array ``F``."""
    if not pairs:
        return 0.0
    d = np.abs(np.array([j - k for j, k in pairs]))
    return float(np.sum(_as_decay(F)(d)))


def _as_decay(F):
    if isinstance(F, CorrelatorProfile):
        return F.F
    if callable(F):
        return lambda r: np.asarray(F(np.asarray(r)), dtype=float)
    values = np.asarray(F, dtype=float)

    def table(r):
        r = np.abs(np.asarray(r, dtype=int))
        out = np.zeros(r.shape)
        inside = r < values.size
        out[inside] = values[r[inside]]
        return out

    return table


@dataclass
class TransportBound:
    rhs: float
    distance: int | None = None
    domain_wall_rhs: float | None = None
    domain_wall_double_sum: float | None = None


def transport_bound_rhs(profile: DensityProfile, S, correlator) -> TransportBound:
    """``sum_{j in S} sum_k eta_k F(|j-k|)`` with the empirical ``F``.

    For a domain-wall profile and ``S`` outside the wall, also returns the
    corollary form ``2 sum_{r >= d} r F(r)`` truncated at ``r = n - 1``.
    """
    n = profile.n
    sites = as_sites(S, n)
    F = _as_decay(correlator)
    k = np.arange(1, n + 1)
    dist = np.abs(sites[:, None] - k[None, :])
    rhs = float(np.sum(F(dist) * profile.eta[None, :]))
    out = TransportBound(rhs)
    wall = profile.wall_interval()
    if wall is not None and sites.size and not any(s in wall for s in sites):
        d = int(np.min(np.abs(sites[:, None] - wall.sites[None, :])))
        r = np.arange(d, n)
        out.distance = d
        out.domain_wall_double_sum = float(np.sum(F(np.abs(sites[:, None] - wall.sites[None, :]))))
        out.domain_wall_rhs = float(2.0 * np.sum(r * F(r)))
    return out


def transport_difference_bound(eig: EigenSystem, profile: DensityProfile, S, t):
    """``|<N_S>_t - <N_S>_0|`` and the boundary pairs ``S x S^c`` for the right-hand side.

    The right-hand side is ``2 * pair_sum(pairs, F)``.
    """
    sites = as_sites(S, eig.n)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    series = transport_series(eig, profile, sites, times)
    n0 = float(np.sum(profile.eta[sites - 1]))
    lhs = np.abs(series - n0)
    pairs = boundary_pairs(sites, sites, eig.n)
    return (float(lhs[0]) if np.ndim(t) == 0 else lhs), pairs


def transport_envelope_bound(eig: EigenSystem, profile: DensityProfile, S, K, t):
    """``<N_S>_t`` with context for ``<N_K>_0 + sum_{j in S, k notin K} F(|j-k|)``."""
    S_sites = as_sites(S, eig.n)
    K_sites = as_sites(K, eig.n)
    if not set(S_sites.tolist()) <= set(K_sites.tolist()):
        raise StructuralError(f"S={S_sites.tolist()} is not contained in K={K_sites.tolist()}")
    times = np.atleast_1d(np.asarray(t, dtype=float))
    lhs = transport_series(eig, profile, S_sites, times)
    context = {
        "n_K0": float(np.sum(profile.eta[K_sites - 1])),
        "pairs": boundary_pairs(S_sites, K_sites, eig.n),
    }
    return (float(lhs[0]) if np.ndim(t) == 0 else lhs), context


def running_max(values, times):
    """Maximum over the grid and the time attaining it."""
    values = np.asarray(values)
    idx = int(np.argmax(values))
    return float(values[idx]), float(np.asarray(times)[idx])


def write_series_csv(path, times, series: dict, observable: str = "observable") -> None:
    """Per-realization time series with columns ``t, observable, realization_id``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", observable, "realization_id"])
        for rid in sorted(series):
            for t, v in zip(times, series[rid]):
                writer.writerow([f"{t:.17g}", f"{v:.17g}", rid])
