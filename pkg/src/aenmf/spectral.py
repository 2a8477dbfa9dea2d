"""Spectral clustering of sample columns, with its own k-means."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ContractError, ParameterError
from .linalg import as_dense

DEFAULT_RESTARTS = 10
DEFAULT_KMEANS_ITERS = 300
DEFAULT_SPECTRAL_K_NN = 10


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    k: int
    inertia: float


def _kmeans_pp(points, k, rng):
    """Distance-weighted (k-means++) seeding."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(points, centers, max_iters, history=None):
    prev = np.inf
    for _ in range(max_iters):
        d2 = cdist(points, centers, "sqeuclidean")
        labels = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(len(points)), labels].sum())
        if history is not None:
            history.append(inertia)
        new_centers = centers.copy()
        for j in range(len(centers)):
            members = labels == j
            if members.any():
                new_centers[j] = points[members].mean(axis=0)
        if inertia >= prev or np.array_equal(new_centers, centers):
            break
        prev = inertia
        centers = new_centers
    d2 = cdist(points, centers, "sqeuclidean")
    labels = np.argmin(d2, axis=1)
    return labels, float(d2[np.arange(len(points)), labels].sum())


def kmeans(points, k, restarts=DEFAULT_RESTARTS, max_iters=DEFAULT_KMEANS_ITERS, seed=0, history=None):
    """Lloyd's algorithm from ``restarts`` k-means++ seedings; the best run is kept.

    ``points`` holds one sample per row.  Restart ``r`` draws from a generator
    spawned off ``seed``, so results do not depend on execution order.
    """
    points = as_dense(points, "points")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    best = None
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    for r, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        hist = [] if history is not None else None
        labels, inertia = _lloyd(points, _kmeans_pp(points, k, rng), max_iters, hist)
        if history is not None:
            history.append(hist)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return ClusterAssignment(labels=best[0], k=k, inertia=best[1])


def cosine_affinity(H, k_nn=DEFAULT_SPECTRAL_K_NN):
    """Sparse heat kernel on cosine dissimilarity between columns of ``H``.

    ``W_ij = exp(-(1 - cos(h_i, h_j)) / sigma)`` kept on each point's ``k_nn``
    nearest neighbours and symmetrized by averaging; ``sigma`` is the mean
    dissimilarity over those neighbour pairs.  Invariant to scaling ``H``.
    """
    norms = np.linalg.norm(H, axis=0)
    U = H / np.where(norms > 0, norms, 1.0)
    D = np.clip(1.0 - U.T @ U, 0.0, 2.0)
    return _sparse_heat(D, k_nn, lambda d, s: np.exp(-d / s))


def gaussian_affinity(H, k_nn=DEFAULT_SPECTRAL_K_NN):
    """Sparse Gaussian kernel on Euclidean distances, sigma = mean k-NN distance."""
    D = cdist(H.T, H.T)
    return _sparse_heat(D, k_nn, lambda d, s: np.exp(-(d**2) / s**2))


def _sparse_heat(D, k_nn, kernel):
    n = D.shape[0]
    k_nn = min(k_nn, n - 1)
    if k_nn < 1:
        return np.zeros((n, n))
    Dm = D.copy()
    np.fill_diagonal(Dm, np.inf)
    nbr = np.argsort(Dm, axis=1, kind="stable")[:, :k_nn]
    rows = np.repeat(np.arange(n), k_nn)
    cols = nbr.ravel()
    dist = D[rows, cols]
    sigma = float(dist.mean())
    sigma = sigma if sigma > 1e-12 else 1e-12
    W0 = np.zeros((n, n))
    W0[rows, cols] = kernel(dist, sigma)
    return 0.5 * (W0 + W0.T)


def spectral_embedding(W, k):
    """Rows of the ``k`` bottom eigenvectors of ``I - D^-1/2 W D^-1/2``, unit-normalized.

    Returns ``(embedding, zero_rows)``; rows that cannot be normalized (zero
    norm) are left at zero and flagged in ``zero_rows``.
    """
    deg = W.sum(axis=1)
    dinv = np.zeros_like(deg)
    dinv[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    Lsym = np.eye(len(W)) - dinv[:, None] * W * dinv[None, :]
    w, Q = np.linalg.eigh(0.5 * (Lsym + Lsym.T))
    order = np.argsort(w, kind="stable")[:k]
    E = Q[:, order]
    norms = np.linalg.norm(E, axis=1)
    zero_rows = norms <= 1e-12
    E = np.where(zero_rows[:, None], 0.0, E / np.where(zero_rows, 1.0, norms)[:, None])
    return E, zero_rows


def spectral_cluster(H, k, seed=0, affinity="cosine", k_nn=DEFAULT_SPECTRAL_K_NN,
                     restarts=DEFAULT_RESTARTS, max_iters=DEFAULT_KMEANS_ITERS):
    """Cluster the columns of ``H`` into ``k`` groups.

    Parameters
    ----------
    H : ndarray, shape (p, n)
        Representation with samples as columns.
    k : int
        Number of clusters.
    affinity : {"cosine", "gaussian"}
        Graph kernel; the cosine kernel ignores the scale of ``H``.
    """
    H = as_dense(H, "H")
    n = H.shape[1]
    if not 1 <= k <= n:
        raise ParameterError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    if not np.any(H):
        raise ContractError("cannot cluster an all-zero representation")
    if affinity == "cosine":
        W = cosine_affinity(H, k_nn)
    elif affinity == "gaussian":
        W = gaussian_affinity(H, k_nn)
    else:
        raise ParameterError(f"unknown affinity {affinity!r}")
    E, _ = spectral_embedding(W, k)
    return kmeans(E, k, restarts=restarts, max_iters=max_iters, seed=seed)
