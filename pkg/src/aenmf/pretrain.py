"""Greedy layer-wise pre-training of the deep auto-encoder-like NMF stack."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .linalg import as_dense
from .multiplicative import EPS, basis_ratio, layer_objective, representation_ratio

log = logging.getLogger(__name__)

DEFAULT_LAYER_ITERS = 200
DEFAULT_LAYER_TOL = 1e-5
# relative slack before a step counts as an objective increase
MONOTONE_SLACK = 1e-9
MAX_DAMPING = 8


@dataclass
class LayerStack:
    """Per-modality factors ``X ~ Z_1 Z_2 ... Z_m H_m`` with all ``H_i`` kept."""

    layer_sizes: tuple
    Z: list = field(default_factory=list)
    H: list = field(default_factory=list)

    @property
    def depth(self):
        return len(self.layer_sizes)

    def basis(self, upto=None):
        """Product ``Z_1 ... Z_upto`` (all layers by default)."""
        upto = self.depth if upto is None else upto
        out = self.Z[0]
        for Zi in self.Z[1:upto]:
            out = out @ Zi
        return out

    def copy(self):
        return LayerStack(tuple(self.layer_sizes), [z.copy() for z in self.Z], [h.copy() for h in self.H])


def make_nonnegative(X):
    """Shift features with negative entries so their minimum is zero."""
    X = as_dense(X, "X")
    mins = X.min(axis=1)
    if np.any(mins < 0):
        log.warning("input has negative entries; shifting %d feature(s) to min 0", int(np.sum(mins < 0)))
        X = X - np.minimum(mins, 0.0)[:, None]
    return X


def _damped_step(current, ratio, objective, value):
    """Apply ``current * ratio``; back off geometrically if ``objective`` rises."""
    power = 1.0
    for _ in range(MAX_DAMPING):
        cand = current * ratio**power
        new_value = objective(cand)
        if new_value <= value + MONOTONE_SLACK * max(abs(value), 1e-300):
            return cand, new_value
        power *= 0.5
    return current, value


def pretrain_layer(X, p, max_iters=DEFAULT_LAYER_ITERS, tol=DEFAULT_LAYER_TOL, seed=0,
                   encoder=1.0, eps=EPS, history=None):
    """Fit one layer ``X ~ Z H`` with ``H ~ Z^T X`` by multiplicative updates.

    Parameters
    ----------
    X : ndarray, shape (d, n)
        Nonnegative input (negative features are shifted, with a warning).
    p : int
        Layer width, at most ``min(d, n)``.
    max_iters, tol : int, float
        Stop after ``max_iters`` sweeps or when the relative objective change
        drops below ``tol``.
    seed : int
        Seed of the uniform basis initialization.
    encoder : float
        Weight of the ``||H - Z^T X||^2`` term (0 disables it).
    history : list, optional
        If given, the objective after initialization and after every sweep is
        appended to it.

    Returns
    -------
    Z : ndarray, shape (d, p)
    H : ndarray, shape (p, n)
    """
    X = make_nonnegative(X)
    d, n = X.shape
    if not 1 <= p <= min(d, n):
        raise ParameterError(f"layer width p={p} must lie in [1, min(d, n)={min(d, n)}]")
    rng = np.random.default_rng(seed)
    scale = np.sqrt(max(X.mean(), 0.0) / p) or 1.0
    Z = rng.uniform(0.0, 1.0, size=(d, p)) * scale
    # H starts from the encoder image of X rather than from random draws, so a
    # permutation of the samples permutes the whole fit identically.
    H = Z.T @ X
    ZH = Z @ H
    denom = float(np.sum(ZH * ZH))
    H = H * (float(np.sum(X * ZH)) / denom if denom > 0 else 0.0) + eps

    value = layer_objective(X, None, Z, H, encoder)
    if history is not None:
        history.append(value)
    for _ in range(max_iters):
        previous = value
        H, value = _damped_step(
            H, representation_ratio(X, Z, H, encoder, eps),
            lambda h: layer_objective(X, None, Z, h, encoder), value)
        Z, value = _damped_step(
            Z, basis_ratio(X, None, Z, H, encoder, eps),
            lambda z: layer_objective(X, None, z, H, encoder), value)
        if history is not None:
            history.append(value)
        if abs(previous - value) <= tol * max(previous, 1e-300):
            break
    return Z, H


def pretrain_stack(X, layer_sizes, per_layer_iters=DEFAULT_LAYER_ITERS, tol=DEFAULT_LAYER_TOL,
                   seed=0, encoder=1.0, eps=EPS):
    """Pre-train every layer on the previous layer's representation.

    Layer ``i`` is fitted to ``H_{i-1}`` (``H_0 = X``) with seed ``seed + i``.
    """
    X = make_nonnegative(X)
    sizes = tuple(int(s) for s in layer_sizes)
    if not sizes:
        raise ParameterError("layer_sizes must not be empty")
    if any(b >= a for a, b in zip(sizes, sizes[1:])):
        raise ParameterError(f"layer sizes must be strictly decreasing, got {list(sizes)}")
    if sizes[0] >= X.shape[0]:
        raise ParameterError(f"first layer size {sizes[0]} must be below the feature dimension {X.shape[0]}")
    stack = LayerStack(sizes)
    prev = X
    for i, p in enumerate(sizes):
        Z, H = pretrain_layer(prev, p, max_iters=per_layer_iters, tol=tol, seed=seed + i,
                              encoder=encoder, eps=eps)
        stack.Z.append(Z)
        stack.H.append(H)
        prev = H
    return stack
