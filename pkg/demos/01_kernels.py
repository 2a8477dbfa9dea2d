"""The numerical building blocks, one at a time.

Run: python3 demos/01_kernels.py
"""

import numpy as np

from aenmf.graph import build_graph_prior
from aenmf.linalg import pinv, solve_sylvester, sym_eig

rng = np.random.default_rng(0)

# A Sylvester equation A X + X B = C with symmetric positive definite A and B.
# The H_m step of the solver is exactly one of these.
A = rng.standard_normal((5, 5))
A = A @ A.T + np.eye(5)
B = rng.standard_normal((4, 4))
B = B @ B.T
C = rng.standard_normal((5, 4))
X = solve_sylvester(A, B, C)
print("Sylvester residual:", np.linalg.norm(A @ X + X @ B - C))

# The graph prior: k-NN heat-kernel affinity, Laplacian L and a square factor
# A with A A^T = L.  Smoothness tr(H L H^T) then equals ||H A||_F^2.
points = rng.uniform(size=(3, 40))
prior = build_graph_prior(points, k_nn=5)
H = rng.uniform(size=(4, 40))
print("tr(H L H^T)  =", np.trace(H @ prior.laplacian @ H.T))
print("||H A||_F^2  =", np.sum((H @ prior.factor) ** 2))

# Laplacian spectrum: one zero eigenvalue per connected component.
eig = sym_eig(prior.laplacian)
print("smallest Laplacian eigenvalues:", np.round(eig.eigenvalues[-3:], 6))

# The pseudo-inverse used by the G and H* updates tolerates rank deficiency.
M = rng.standard_normal((4, 2)) @ rng.standard_normal((2, 3))
print("||M M+ M - M|| =", np.linalg.norm(M @ pinv(M) @ M - M))
