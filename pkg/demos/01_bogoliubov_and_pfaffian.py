"""
Diagonalizing a disordered XY chain
===================================

A random chain is reduced to free fermions: its 2n x 2n coefficient matrix
M is built, diagonalized, and the eigenvalues come in pairs +-lambda_j.
The Bogoliubov matrix W rotates M into that paired form.  At the end a
Pfaffian, the workhorse behind Wick's rule, is checked against its square
root relation with the determinant.
"""

import numpy as np

from xylab.model import DisorderSpec, Distribution, build_anisotropic, particle_hole, sample_parameters
from xylab.oracle import pfaffian, pfaffian_bruteforce
from xylab.spectral import diagonalize

# a chain of 8 sites with random couplings, anisotropies and fields
spec = DisorderSpec(
    mu=Distribution.uniform(0.5, 1.5),
    gamma=Distribution.uniform(-0.5, 0.5),
    nu=Distribution.uniform(0.0, 4.0),
    seed=3,
)
params = sample_parameters(spec, 8)
print("couplings mu:", np.round(params.mu, 3))
print("fields    nu:", np.round(params.nu, 3))

M = build_anisotropic(params)
print("M has shape", M.entries.shape)

# M anticommutes with the particle-hole map J, hence the +- pairing
J = particle_hole(params.n)
print("max |JMJ + M| =", np.abs(J @ M.entries @ J + M.entries).max())

eig = diagonalize(M)
print("single-particle energies lambda_j:", np.round(eig.lambdas, 4))
print("pairing defect:", np.abs(eig.eigenvalues + eig.eigenvalues[::-1]).max())

# W M W^T is block diagonal with blocks diag(lambda_j, -lambda_j)
W = eig.bogoliubov
D = W @ M.entries @ W.T
target = np.kron(np.diag(eig.lambdas), np.diag([1.0, -1.0]))
print("max |W M W^T - diag(+-lambda)| =", np.abs(D - target).max())

# Pfaffians: Parlett-Reid against brute-force expansion
rng = np.random.default_rng(0)
X = rng.normal(size=(8, 8))
A = X - X.T
pf = pfaffian(A)
print("pf(A)            =", pf.real)
print("brute force      =", pfaffian_bruteforce(A).real)
print("pf(A)^2 - det(A) =", (pf**2 - np.linalg.det(A)).real)
