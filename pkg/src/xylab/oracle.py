"""Brute-force reference in the full ``2^n``-dimensional Hilbert space.

Basis convention: site 1 is the leftmost tensor factor and ``e_1 = |up> = (1, 0)``,
``e_0 = |down> = (0, 1)``; the lowering operator ``a`` maps up to down.
Eigenstates are compared as density matrices only, so their phases never matter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DegeneracyError, SizeGuardError, StructuralError
from .model import ChainParameters, Partition, Subinterval, build_anisotropic, build_isotropic
from .spectral import diagonalize
from .states import CorrelationMatrix, DensityProfile, OccupationPattern

__all__ = [
    "DenseOperator",
    "DenseState",
    "CheckResult",
    "VerificationReport",
    "MAX_SITES",
    "site_operator",
    "build_hamiltonian",
    "build_jordan_wigner",
    "number_operator",
    "fermion_vector",
    "verify_car",
    "verify_quadratic_form",
    "exact_evolution",
    "exact_entropy",
    "exact_correlation_matrix",
    "exact_transport",
    "eigenstate",
    "product_eigenstate",
    "density_profile_state",
    "pfaffian",
    "pfaffian_bruteforce",
    "wick_operator",
    "verify_wick",
    "verify_product_quasifree",
]

MAX_SITES = 12

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
LOWER = np.array([[0, 0], [1, 0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


def _guard(n: int, limit: int = MAX_SITES) -> None:
    if n > limit:
        raise SizeGuardError(f"dense many-body objects limited to n <= {limit}, got n={n}")


@dataclass
class DenseOperator:
    """A ``2^n x 2^n`` matrix on the chain; caches its Hermitian eigendecomposition."""

    n: int
    matrix: np.ndarray

    def __post_init__(self):
        _guard(self.n)
        if self.matrix.shape != (2**self.n, 2**self.n):
            raise StructuralError(f"operator on {self.n} sites must be {2**self.n}-dimensional")

    @cached_property
    def eigh(self):
        evals, evecs = np.linalg.eigh(self.matrix)
        return evals, evecs

    @property
    def H(self) -> "DenseOperator":
        return DenseOperator(self.n, self.matrix.conj().T)

    def __matmul__(self, other):
        if isinstance(other, DenseOperator):
            return DenseOperator(self.n, self.matrix @ other.matrix)
        return self.matrix @ other


@dataclass
class DenseState:
    """A normalized vector or a density matrix on ``n`` sites."""

    n: int
    vector: np.ndarray | None = None
    density: np.ndarray | None = None

    def __post_init__(self):
        _guard(self.n)
        if (self.vector is None) == (self.density is None):
            raise StructuralError("a dense state is either a vector or a density matrix")

    @property
    def is_pure_vector(self) -> bool:
        return self.vector is not None

    def density_matrix(self) -> np.ndarray:
        if self.density is not None:
            return self.density
        return np.outer(self.vector, self.vector.conj())

    def norm_defect(self) -> float:
        if self.vector is not None:
            return abs(np.linalg.norm(self.vector) - 1.0)
        return abs(np.trace(self.density).real - 1.0)

    def expectation(self, op: np.ndarray) -> complex:
        if self.vector is not None:
            return complex(np.vdot(self.vector, op @ self.vector))
        return complex(np.trace(self.density @ op))


def site_operator(op: np.ndarray, j: int, n: int, string: np.ndarray | None = None) -> np.ndarray:
    """``op`` on site ``j`` (1-based), ``string`` on sites ``1..j-1``, identity elsewhere."""
    _guard(n)
    left = np.eye(1, dtype=complex)
    for _ in range(j - 1):
        left = np.kron(left, ID2 if string is None else string)
    return np.kron(np.kron(left, op), np.eye(2 ** (n - j), dtype=complex))


def build_hamiltonian(params: ChainParameters) -> DenseOperator:
    """``H = -sum mu_j [(1+g_j) X_j X_{j+1} + (1-g_j) Y_j Y_{j+1}] - sum nu_j Z_j``."""
    n = params.n
    _guard(n)
    X = [site_operator(SX, j, n) for j in range(1, n + 1)]
    Y = [site_operator(SY, j, n) for j in range(1, n + 1)]
    H = np.zeros((2**n, 2**n), dtype=complex)
    for j in range(n - 1):
        mu, g = params.mu[j], params.gamma[j]
        H -= mu * ((1 + g) * X[j] @ X[j + 1] + (1 - g) * Y[j] @ Y[j + 1])
    for j in range(n):
        H -= params.nu[j] * site_operator(SZ, j + 1, n)
    return DenseOperator(n, H)


def build_jordan_wigner(n: int) -> list:
    """``c_j = sigma^z_1 ... sigma^z_{j-1} a_j`` for ``j = 1..n``."""
    _guard(n)
    return [DenseOperator(n, site_operator(LOWER, j, n, string=SZ)) for j in range(1, n + 1)]


def number_operator(n: int, S=None) -> np.ndarray:
    """``N_S = sum_{j in S} a_j^* a_j`` (all sites by default)."""
    _guard(n)
    sites = range(1, n + 1) if S is None else S
    up = LOWER.conj().T @ LOWER
    return sum(site_operator(up, j, n) for j in sites)


def fermion_vector(n: int) -> list:
    """Dense operators ``(c_1, c_1^*, ..., c_n, c_n^*)``."""
    out = []
    for c in build_jordan_wigner(n):
        out.extend([c.matrix, c.matrix.conj().T])
    return out


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {"name": self.name, "residual": self.residual, "tolerance": self.tolerance,
                "passed": self.passed, "detail": self.detail}


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    def add(self, name: str, residual: float, tolerance: float, detail: str = "") -> CheckResult:
        result = CheckResult(name, float(residual), float(tolerance), detail)
        self.checks.append(result)
        return result

    def extend(self, other: "VerificationReport") -> None:
        self.checks.extend(other.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _maxabs(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def verify_car(n: int) -> VerificationReport:
    """Canonical anticommutation relations and ``c_j^* c_j = a_j^* a_j``."""
    cs = [c.matrix for c in build_jordan_wigner(n)]
    eye = np.eye(2**n)
    worst_cc, worst_ccs = 0.0, 0.0
    for j, cj in enumerate(cs):
        for k, ck in enumerate(cs):
            worst_cc = max(worst_cc, _maxabs(cj @ ck + ck @ cj))
            acomm = cj @ ck.conj().T + ck.conj().T @ cj
            worst_ccs = max(worst_ccs, _maxabs(acomm - (j == k) * eye))
    up = LOWER.conj().T @ LOWER
    worst_num = max(_maxabs(c.conj().T @ c - site_operator(up, j + 1, n)) for j, c in enumerate(cs))
    report = VerificationReport()
    report.add(f"car_cc_n{n}", worst_cc, 1e-12, "{c_j, c_k} = 0")
    report.add(f"car_ccdag_n{n}", worst_ccs, 1e-12, "{c_j, c_k^*} = delta_jk")
    report.add(f"jw_number_n{n}", worst_num, 1e-12, "c_j^* c_j = a_j^* a_j")
    return report


def verify_quadratic_form(params: ChainParameters, tol: float = 1e-10) -> VerificationReport:
    """Compare the spin Hamiltonian with ``C^* M C`` and, for zero anisotropy, ``2 c^* A c + E_0``."""
    _guard(params.n, 10)
    n = params.n
    H = build_hamiltonian(params).matrix
    C = fermion_vector(n)
    M = build_anisotropic(params).entries
    Q = np.zeros_like(H)
    for i in range(2 * n):
        Cdag_i = C[i].conj().T
        for j in range(2 * n):
            if M[i, j] != 0.0:
                Q += M[i, j] * Cdag_i @ C[j]
    report = VerificationReport()
    report.add(f"quadratic_form_M_n{n}", _maxabs(H - Q), tol, "H = C^* M C")

    iso = params.with_isotropy()
    H_iso = build_hamiltonian(iso).matrix
    A = build_isotropic(iso).entries
    cs = C[0::2]
    Q_iso = iso.field_energy * np.eye(2**n, dtype=complex)
    for j in range(n):
        for k in range(n):
            if A[j, k] != 0.0:
                Q_iso += 2.0 * A[j, k] * cs[j].conj().T @ cs[k]
    report.add(f"quadratic_form_A_n{n}", _maxabs(H_iso - Q_iso), tol, "H_iso = 2 c^* A c + E_0")
    return report


def exact_evolution(H: DenseOperator, state: DenseState, t: float) -> DenseState:
    """Schroedinger evolution ``exp(-itH)`` through the eigendecomposition of ``H``."""
    evals, V = H.eigh
    phases = np.exp(-1j * float(t) * evals)
    U = (V * phases) @ V.conj().T
    if state.vector is not None:
        return DenseState(state.n, vector=U @ state.vector)
    rho = U @ state.density @ U.conj().T
    return DenseState(state.n, density=0.5 * (rho + rho.conj().T))


def _reduced_density(state: DenseState, block: Subinterval) -> np.ndarray:
    n = state.n
    block.check_within(n)
    L, Mdim, R = 2 ** (block.a - 1), 2**block.length, 2 ** (n - block.b)
    if state.vector is not None:
        psi = state.vector.reshape(L, Mdim, R)
        return np.einsum("lmr,lkr->mk", psi, psi.conj())
    rho = state.density.reshape(L, Mdim, R, L, Mdim, R)
    return np.einsum("lmrlkr->mk", rho)


def exact_entropy(state: DenseState, block: Subinterval) -> float:
    """``-Tr rho_1 log rho_1`` of the reduced state on ``block``."""
    rho1 = _reduced_density(state, block)
    p = np.linalg.eigvalsh(0.5 * (rho1 + rho1.conj().T))
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))


def exact_correlation_matrix(state: DenseState) -> CorrelationMatrix:
    """``Gamma_ij = <C_i C_j^*>`` by dense traces."""
    n = state.n
    C = fermion_vector(n)
    if state.vector is not None:
        phi = np.array([Ci.conj().T @ state.vector for Ci in C])
        G = phi.conj() @ phi.T
    else:
        rho = state.density
        left = np.array([rho @ Ci for Ci in C])
        G = np.einsum("iab,jab->ij", left, np.array([Cj.conj() for Cj in C]))
    return CorrelationMatrix(G, "oracle")


def exact_transport(state: DenseState, S) -> float:
    """``<N_S>`` in a dense state."""
    return float(state.expectation(number_operator(state.n, S)).real)


def eigenstate(params: ChainParameters, pattern: OccupationPattern, gap_tol: float = 1e-8) -> DenseState:
    """Dense eigenvector of ``H`` with free-fermion label ``pattern``.

    The vector is selected by matching ``E_alpha`` against the dense spectrum;
    the match must be isolated by at least ``gap_tol``.
    """
    eig = diagonalize(build_anisotropic(params))
    target = pattern.energy(eig.lambdas)
    H = build_hamiltonian(params)
    evals, V = H.eigh
    dist = np.abs(evals - target)
    idx = int(np.argmin(dist))
    others = np.delete(dist, idx)
    if dist[idx] > 1e-8 * max(1.0, abs(target)) or (others.size and others.min() < gap_tol):
        raise DegeneracyError(
            f"energy {target:.12g} of pattern {pattern.alpha} not an isolated eigenvalue"
        )
    return DenseState(params.n, vector=V[:, idx].copy())


def product_eigenstate(params: ChainParameters, partition: Partition, patterns) -> DenseState:
    """Tensor product of block eigenstates, site 1 leftmost."""
    if isinstance(patterns, OccupationPattern):
        patterns = patterns.split(partition.sizes)
    psi = np.ones(1, dtype=complex)
    for block, pattern in zip(partition.blocks, patterns):
        psi = np.kron(psi, eigenstate(params.restricted(block), pattern).vector)
    return DenseState(params.n, vector=psi)


def density_profile_state(profile: DensityProfile) -> DenseState:
    """``(x)_j diag(eta_j, 1 - eta_j)``; a basis vector when every ``eta_j`` is 0 or 1."""
    n = profile.n
    _guard(n)
    if np.all((profile.eta == 0) | (profile.eta == 1)):
        psi = np.ones(1, dtype=complex)
        for eta in profile.eta:
            psi = np.kron(psi, np.array([eta, 1.0 - eta], dtype=complex))
        return DenseState(n, vector=psi)
    diag = np.ones(1)
    for eta in profile.eta:
        diag = np.kron(diag, np.array([eta, 1.0 - eta]))
    return DenseState(n, density=np.diag(diag).astype(complex))


def pfaffian(skew: np.ndarray, check: bool = True) -> complex:
    """Pfaffian by Parlett-Reid elimination with partial pivoting, ``O(m^3)``.

    Odd dimension gives zero.
    """
    A = np.array(skew, dtype=complex)
    m = A.shape[0]
    if A.ndim != 2 or A.shape[1] != m:
        raise StructuralError(f"pfaffian needs a square matrix, got {A.shape}")
    if check and _maxabs(A + A.T) > 1e-14 * max(1.0, _maxabs(A)):
        raise StructuralError("pfaffian input is not antisymmetric")
    if m % 2:
        return 0j
    result = 1.0 + 0j
    for k in range(0, m - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            result = -result
        if A[k + 1, k] == 0.0:
            return 0j
        result *= A[k, k + 1]
        if k + 2 < m:
            tau = A[k, k + 2:] / A[k, k + 1]
            col = A[k + 2:, k + 1].copy()
            A[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return complex(result)


def pfaffian_bruteforce(skew: np.ndarray) -> complex:
    """Recursive expansion along the first row; exponential cost, for cross-checks only."""
    A = np.asarray(skew, dtype=complex)
    m = A.shape[0]
    if m == 0:
        return 1.0 + 0j
    if m % 2:
        return 0j
    total = 0j
    rest = np.arange(1, m)
    for pos, j in enumerate(rest):
        keep = np.delete(rest, pos)
        total += (-1) ** pos * A[0, j] * pfaffian_bruteforce(A[np.ix_(keep, keep)])
    return total


def wick_operator(f: np.ndarray, g: np.ndarray, n: int) -> np.ndarray:
    """``C(f, g) = sum_j conj(f_j) c_j + g_j c_j^*``."""
    cs = [c.matrix for c in build_jordan_wigner(n)]
    return sum(np.conj(f[j]) * cs[j] + g[j] * cs[j].conj().T for j in range(n))


def _wick_residual(state: DenseState, ops: Sequence[np.ndarray]):
    m = len(ops)
    prod = np.eye(2**state.n, dtype=complex)
    for op in ops:
        prod = prod @ op
    direct = state.expectation(prod)
    skew = np.zeros((m, m), dtype=complex)
    for j in range(m):
        for k in range(j + 1, m):
            skew[j, k] = state.expectation(ops[j] @ ops[k])
            skew[k, j] = -skew[j, k]
    pf = pfaffian(skew)
    return direct, pf


def verify_wick(state: DenseState, operators, name: str = "wick", tol_even: float = 1e-9,
                tol_odd: float = 1e-12) -> VerificationReport:
    """Dense ``<C_1 ... C_m>`` against ``pf[<C_j C_k>]``; odd ``m`` must vanish."""
    if len(operators) > 8:
        raise StructuralError("Wick checks limited to m <= 8 operators")
    ops = [wick_operator(np.asarray(f), np.asarray(g), state.n) for f, g in operators]
    direct, pf = _wick_residual(state, ops)
    report = VerificationReport()
    m = len(ops)
    if m % 2:
        report.add(f"{name}_odd_m{m}", abs(direct), tol_odd, "odd moment vanishes")
    else:
        scale = max(1.0, abs(direct))
        report.add(f"{name}_m{m}", abs(direct - pf) / scale, tol_even, f"direct={direct:.6g} pf={pf:.6g}")
    return report


def random_wick_operators(rng: np.random.Generator, n: int, m: int) -> list:
    """``m`` random coefficient pairs ``(f, g)`` with unit-scale complex entries."""
    def vec():
        return (rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(2 * n)
    return [(vec(), vec()) for _ in range(m)]


def verify_product_quasifree(params: ChainParameters, partition: Partition, patterns,
                             seed: int = 0) -> VerificationReport:
    """Correlation matrix, Wick rule and cross-term vanishing for a product of block eigenstates."""
    _guard(params.n, 8)
    if isinstance(patterns, OccupationPattern):
        patterns = patterns.split(partition.sizes)
    state = product_eigenstate(params, partition, patterns)
    G = exact_correlation_matrix(state).entries
    blocks = partition.blocks
    direct_sum = np.zeros_like(G)
    for block, pattern in zip(blocks, patterns):
        local = exact_correlation_matrix(eigenstate(params.restricted(block), pattern)).entries
        lo, hi = 2 * (block.a - 1), 2 * block.b
        direct_sum[lo:hi, lo:hi] = local
    owner = np.repeat(np.arange(len(blocks)), [2 * b.length for b in blocks])
    cross = owner[:, None] != owner[None, :]
    report = VerificationReport()
    tag = f"n{params.n}_m{partition.m}"
    report.add(f"product_direct_sum_{tag}", _maxabs(G - direct_sum), 1e-10, "Gamma = (+)_k Gamma_k")
    report.add(f"product_cross_terms_{tag}", _maxabs(G[cross]), 1e-12, "cross-block pairs vanish")
    rng = np.random.default_rng(seed)
    for m in (4, 6, 3, 5):
        sub = verify_wick(state, random_wick_operators(rng, params.n, m), name=f"product_wick_{tag}")
        report.extend(sub)
    return report
