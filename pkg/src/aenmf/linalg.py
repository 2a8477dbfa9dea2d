"""Dense linear-algebra kernels shared by the solvers.

All matrices are plain ``numpy.ndarray`` objects of dtype float64.  Functions
never modify their inputs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, SolverError

# Relative singular-value cutoff for the pseudo-inverse.
PINV_RCOND = 1e-12
# Symmetry tolerance accepted by ``sym_eig`` before symmetrizing.
SYM_TOL = 1e-10
# Smallest admissible eigenvalue sum of a Sylvester pencil.
PENCIL_TOL = 1e-12


def as_dense(M, name="matrix"):
    """Return ``M`` as a finite 2-D float array (copying only when needed)."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ContractError(f"{name} contains NaN or Inf entries")
    return A


def pos_neg_split(M):
    """Split ``M`` into its positive and negative parts.

    Returns ``(P, N)`` with ``P = (|M| + M) / 2`` and ``N = (|M| - M) / 2`` so
    that both are nonnegative, ``P - N == M`` and ``P * N == 0``.
    """
    M = as_dense(M)
    P = np.maximum(M, 0.0)
    N = np.maximum(-M, 0.0)
    return P, N


def l21_norm(M):
    """Sum of the Euclidean norms of the rows of ``M``."""
    M = as_dense(M)
    return float(np.sum(np.sqrt(np.sum(M * M, axis=1))))


def pinv(M, rcond=PINV_RCOND):
    """Moore-Penrose pseudo-inverse via the SVD.

    Singular values ``s <= max(rows, cols) * s_max * rcond`` are treated as
    zero, so an all-zero input maps to the all-zero transpose.
    """
    M = as_dense(M)
    rows, cols = M.shape
    if M.size == 0:
        return np.zeros((cols, rows))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((cols, rows))
    cutoff = max(rows, cols) * s[0] * rcond
    keep = s > cutoff
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition ``S = Q diag(eigenvalues) Q^T``, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def sym_eig(S, sym_tol=SYM_TOL):
    S = as_dense(S)
    if S.shape[0] != S.shape[1]:
        raise ContractError(f"sym_eig needs a square matrix, got {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if S.size and np.max(np.abs(S - S.T)) > sym_tol * scale:
        raise ContractError("sym_eig input is not symmetric")
    w, Q = np.linalg.eigh(0.5 * (S + S.T))
    return SymEig(eigenvalues=w[::-1].copy(), eigenvectors=Q[:, ::-1].copy())


def solve_sylvester(A, B, C, a_eig=None, b_eig=None, pencil_tol=PENCIL_TOL):
    """Solve ``A X + X B = C`` for symmetric ``A`` (p x p) and ``B`` (q x q).

    Both coefficients are diagonalized, ``A = U diag(a) U^T`` and
    ``B = V diag(b) V^T``; in that basis the equation decouples into
    ``(a_i + b_j) Y_ij = (U^T C V)_ij`` and ``X = U Y V^T``.

    Parameters
    ----------
    A, B, C : ndarray
        Coefficients and right-hand side.  ``A`` and ``B`` must be symmetric.
    a_eig, b_eig : SymEig, optional
        Precomputed decompositions, useful when one coefficient is reused
        across many solves (the graph term in the fusion solver).
    pencil_tol : float
        Relative threshold below which ``a_i + b_j`` counts as singular.

    Raises
    ------
    SolverError
        If some ``a_i + b_j`` vanishes.
    """
    C = as_dense(C, "C")
    p, q = C.shape
    if a_eig is None:
        a_eig = sym_eig(A)
    if b_eig is None:
        b_eig = sym_eig(B)
    a, U = a_eig.eigenvalues, a_eig.eigenvectors
    b, V = b_eig.eigenvalues, b_eig.eigenvectors
    if U.shape[0] != p or V.shape[0] != q:
        raise ContractError(
            f"Sylvester shapes disagree: A is {U.shape[0]}x{U.shape[0]}, "
            f"B is {V.shape[0]}x{V.shape[0]}, C is {p}x{q}"
        )
    denom = a[:, None] + b[None, :]
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    bad = np.abs(denom) <= pencil_tol * scale
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise SolverError(
            f"singular Sylvester pencil: eigenvalue pair a[{i}]={a[i]:.3e}, "
            f"b[{j}]={b[j]:.3e} sums to {denom[i, j]:.3e}"
        )
    Y = (U.T @ C @ V) / denom
    return U @ Y @ V.T
