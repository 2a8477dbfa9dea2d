"""Multiplicative update rules for the auto-encoder-like NMF layers.

For one layer the fitted objective is

    J(Z, H) = ||X - Phi Z H||_F^2 + w ||H - Z^T Phi^T X||_F^2

where ``Phi`` is the product of the layers above (identity for the first
layer) and ``w`` weights the encoder term (1 for the full model, 0 when the
encoder is ablated).  Both rules keep nonnegative factors nonnegative.
"""

import numpy as np

from .linalg import pos_neg_split

EPS = 1e-10


def layer_objective(X, Phi, Z, H, encoder=1.0):
    """Decoder plus weighted encoder error of one layer (``Phi=None`` means I)."""
    PZ = Z if Phi is None else Phi @ Z
    dec = X - PZ @ H
    val = float(np.sum(dec * dec))
    if encoder:
        enc = H - PZ.T @ X
        val += encoder * float(np.sum(enc * enc))
    return val


def basis_ratio(X, Phi, Z, H, encoder=1.0, eps=EPS):
    """Elementwise factor of the basis update.

    ``(1 + w) [Phi^T X H^T]_+ / (w Phi^T X X^T Phi Z + Phi^T Phi Z H H^T)``;
    with ``w = 1`` the numerator is ``2 Phi^T X H^T``.
    """
    Y = X if Phi is None else Phi.T @ X
    PtP_Z = Z if Phi is None else (Phi.T @ Phi) @ Z
    num = (1.0 + encoder) * np.maximum(Y @ H.T, 0.0)
    den = PtP_Z @ (H @ H.T)
    if encoder:
        den = den + encoder * (Y @ (Y.T @ Z))
    return (num + eps) / (den + eps)


def representation_ratio(X, Phi, H, encoder=1.0, eps=EPS):
    """Elementwise factor of the representation update (square-root rule).

    Here ``Phi`` is the full basis of the layer, ``Z_1 ... Z_i``.  The gradient
    of ``J`` in ``H`` is ``2 (Phi^T Phi H + w H - (1 + w) Phi^T X)``; its
    negative parts go to the numerator and its positive parts to the
    denominator.
    """
    target_p, target_n = pos_neg_split((1.0 + encoder) * (Phi.T @ X))
    gram_p, gram_n = pos_neg_split((Phi.T @ Phi) @ H)
    num = target_p + gram_n
    den = target_n + gram_p
    if encoder:
        h_p, h_n = pos_neg_split(H)
        num = num + encoder * h_n
        den = den + encoder * h_p
    return np.sqrt((num + eps) / (den + eps))
