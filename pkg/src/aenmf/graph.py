"""k-nearest-neighbour graph priors.

A modality with samples in the columns of ``X`` gets an affinity ``W``, the
unnormalized Laplacian ``L = D - W`` and a square factor ``A`` with
``A A^T = L``.  The factor turns the smoothness penalty into a norm of a
product, ``tr(H L H^T) = ||H A||_F^2``, which is what the row-sparse graph
regularizer of the fusion model acts on.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ContractError, ParameterError
from .linalg import as_dense, sym_eig

DEFAULT_K_NN = 5


@dataclass(frozen=True)
class GraphPrior:
    affinity: np.ndarray
    laplacian: np.ndarray
    factor: np.ndarray


def _knn_indices(D, k_nn):
    """Indices of the ``k_nn`` nearest other points per row of distance matrix D.

    Ties are broken by index (stable sort) so the result is deterministic.
    """
    D = D.copy()
    np.fill_diagonal(D, np.inf)
    order = np.argsort(D, axis=1, kind="stable")
    return order[:, :k_nn]


def knn_affinity(X, k_nn=DEFAULT_K_NN, weighting="heat", sigma="auto"):
    """Symmetric k-NN affinity between the columns of ``X``.

    Each sample is linked to its ``k_nn`` nearest Euclidean neighbours; the
    directed graph ``W0`` is symmetrized as ``(W0 + W0^T) / 2``.  With heat
    weighting an edge carries ``exp(-||x_i - x_j||^2 / sigma^2)``; ``sigma``
    defaults to the median length of the directed k-NN edges.
    """
    X = as_dense(X, "X")
    n = X.shape[1]
    if not 1 <= k_nn < n:
        raise ParameterError(f"k_nn must satisfy 1 <= k_nn < n={n}, got {k_nn}")
    if weighting not in ("binary", "heat"):
        raise ParameterError(f"unknown weighting {weighting!r}")
    D = cdist(X.T, X.T)
    nbr = _knn_indices(D, k_nn)
    rows = np.repeat(np.arange(n), k_nn)
    cols = nbr.ravel()
    W0 = np.zeros((n, n))
    if weighting == "binary":
        W0[rows, cols] = 1.0
    else:
        dist = D[rows, cols]
        if sigma == "auto":
            sigma = float(np.median(dist))
            if sigma <= 0.0:
                # every neighbour is a duplicate; fall back to the mean spread
                positive = D[D > 0]
                sigma = float(np.median(positive)) if positive.size else 1.0
        sigma = float(sigma)
        if sigma <= 0.0:
            raise ParameterError(f"sigma must be positive, got {sigma}")
        W0[rows, cols] = np.exp(-(dist**2) / sigma**2)
    return 0.5 * (W0 + W0.T)


def laplacian(W, sym_tol=1e-10):
    """Unnormalized graph Laplacian ``D - W``."""
    W = as_dense(W, "W")
    if W.shape[0] != W.shape[1]:
        raise ContractError(f"affinity must be square, got {W.shape}")
    if W.size and np.max(np.abs(W - W.T)) > sym_tol * max(1.0, float(np.max(np.abs(W)))):
        raise ContractError("affinity matrix is not symmetric")
    if np.any(W < 0):
        raise ContractError("affinity matrix has negative entries")
    if np.any(np.diag(W) != 0):
        raise ContractError("affinity matrix must have a zero diagonal")
    return np.diag(W.sum(axis=1)) - W


def laplacian_factor(L, clip_tol=1e-6):
    """Return ``A = Q P^{1/2}`` (n x n) from the eigendecomposition ``L = Q P Q^T``.

    Slightly negative eigenvalues from round-off are clipped to zero; the
    matching columns of ``A`` are then zero, which keeps ``A`` square.
    """
    eig = sym_eig(L)
    w = eig.eigenvalues
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    if w.size and w[-1] < -clip_tol * scale:
        raise ContractError(f"matrix is not positive semidefinite (eigenvalue {w[-1]:.3e})")
    return eig.eigenvectors * np.sqrt(np.clip(w, 0.0, None))


def build_graph_prior(X, k_nn=DEFAULT_K_NN, weighting="heat", sigma="auto"):
    W = knn_affinity(X, k_nn=k_nn, weighting=weighting, sigma=sigma)
    L = laplacian(W)
    return GraphPrior(affinity=W, laplacian=L, factor=laplacian_factor(L))
