"""Fine-tuning of the multi-modal deep auto-encoder-like NMF model.

Each modality ``v`` owns a layer stack ``X^v ~ Z_1 ... Z_m H_m`` and the
model minimizes, summed over modalities,

    ||X - Phi H_m||^2 + ||H_m - Phi^T X||^2
        + beta ||H_m A||_{2,1} + lam ||H_m - G H*||_{2,1}

with ``Phi = Z_1 ... Z_m``, ``A A^T`` the k-NN graph Laplacian and ``H*`` a
representation shared by all modalities.  The inner layers use multiplicative
updates; the top representation is handled by ADMM on the splitting
``M1 = H_m A``, ``M2 = H_m - G H*``, ``s = H_m`` (``s >= 0``).

All ``update_*`` functions are pure: they read an ``AdmmState`` and return the
new value without writing it back.  ``sweep`` applies them in order.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ContractError, ParameterError
from .graph import DEFAULT_K_NN
from .linalg import SymEig, l21_norm, pinv, solve_sylvester, sym_eig
from .multiplicative import EPS, basis_ratio, representation_ratio
from .pretrain import DEFAULT_LAYER_ITERS, DEFAULT_LAYER_TOL, LayerStack, make_nonnegative, pretrain_stack

log = logging.getLogger(__name__)

DEFAULT_LAYER_SIZES = (500, 50)
# negative entries of the final H_m above this are treated as round-off
HM_CLIP = 1e-6


@dataclass
class AdmmConfig:
    beta: float = 0.01
    lam: float = 0.01
    mu1: float = 1.0
    mu2: float = 1.0
    mu3: float = 1.0
    max_iters: int = 150
    tol: float = 1e-4
    eps_guard: float = 1e-10
    use_encoder: bool = True

    def validate(self):
        if self.beta < 0 or self.lam < 0:
            raise ParameterError("beta and lam must be nonnegative")
        if min(self.mu1, self.mu2, self.mu3) <= 0:
            raise ParameterError("penalties mu1, mu2, mu3 must be strictly positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be at least 1")
        if self.tol < 0 or self.eps_guard <= 0:
            raise ParameterError("tol must be >= 0 and eps_guard > 0")
        return self

    @property
    def encoder(self):
        return 1.0 if self.use_encoder else 0.0


@dataclass
class ModalityState:
    X: np.ndarray
    A: np.ndarray
    stack: LayerStack
    G: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    L3: np.ndarray
    s: np.ndarray
    laplacian_eig: SymEig = field(default=None, repr=False)

    @property
    def Hm(self):
        return self.stack.H[-1]

    @Hm.setter
    def Hm(self, value):
        self.stack.H[-1] = value


@dataclass
class AdmmState:
    modalities: list
    Hstar: np.ndarray
    config: AdmmConfig


@dataclass
class IterTrace:
    iter: int
    objective: float
    residual_m1: float
    residual_m2: float
    residual_s: float
    max_update_delta: float
    hm_min: float

    def as_dict(self):
        return asdict(self)


def _graph_eig(mod):
    """Eigendecomposition of ``A A^T`` (cached: it never changes)."""
    if mod.laplacian_eig is None:
        mod.laplacian_eig = sym_eig(mod.A @ mod.A.T)
    return mod.laplacian_eig


def _row_weights(M, eps):
    """Diagonal of the reweighting matrix, ``1 / max(||row_i||, eps)``."""
    return 1.0 / np.maximum(np.sqrt(np.sum(M * M, axis=1)), eps)


def _diag_pinv_apply(d, T):
    """``diag(d)^+ T`` for a diagonal with nonnegative entries."""
    inv = np.zeros_like(d)
    nz = d > 0
    inv[nz] = 1.0 / d[nz]
    return inv[:, None] * T


def _check_layer(state, v, i):
    if not 0 <= v < len(state.modalities):
        raise ContractError(f"modality index {v} out of range")
    depth = state.modalities[v].stack.depth
    if not 0 <= i < depth:
        raise ContractError(f"layer index {i} out of range for a {depth}-layer stack")
    return state.modalities[v]


def update_Z(state, v, i):
    """Multiplicative update of layer ``i`` basis (layers are 0-based here)."""
    mod = _check_layer(state, v, i)
    stack = mod.stack
    Phi = stack.basis(upto=i) if i > 0 else None
    H = stack.H[i]
    if i == stack.depth - 1:
        # H_m is only nonnegative in the limit; the basis rule needs H >= 0
        H = np.maximum(H, 0.0)
    Z = stack.Z[i]
    expected_rows = mod.X.shape[0] if Phi is None else Phi.shape[1]
    if Z.shape != (expected_rows, H.shape[0]):
        raise ContractError(f"Z_{i + 1} has shape {Z.shape}, expected {(expected_rows, H.shape[0])}")
    return Z * basis_ratio(mod.X, Phi, Z, H, state.config.encoder, state.config.eps_guard)


def update_H_mid(state, v, i):
    """Square-root multiplicative update of an inner representation ``H_i``."""
    mod = _check_layer(state, v, i)
    if i == mod.stack.depth - 1:
        raise ContractError("the top representation H_m has its own update (update_Hm)")
    Phi = mod.stack.basis(upto=i + 1)
    H = mod.stack.H[i]
    return H * representation_ratio(mod.X, Phi, H, state.config.encoder, state.config.eps_guard)


def hm_system(state, v):
    """Coefficients of the H_m stationarity equation ``K H + H (mu1 A A^T) = R``.

    Returns ``(K, R)``; the right coefficient is ``mu1 A A^T``.
    """
    cfg = state.config
    mod = state.modalities[v]
    w = cfg.encoder
    Phi = mod.stack.basis()
    p = Phi.shape[1]
    K = 2.0 * (Phi.T @ Phi) + (2.0 * w + cfg.mu2 + cfg.mu3) * np.eye(p)
    R = (2.0 + 2.0 * w) * (Phi.T @ mod.X)
    R += (mod.L1 + cfg.mu1 * mod.M1) @ mod.A.T
    R += mod.L2 + mod.L3
    R += cfg.mu2 * (mod.M2 + mod.G @ state.Hstar)
    R += cfg.mu3 * mod.s
    return K, R


def update_Hm(state, v):
    """Exact minimizer of the augmented Lagrangian in ``H_m`` (a Sylvester solve)."""
    mod = _check_layer(state, v, 0)
    K, R = hm_system(state, v)
    geig = _graph_eig(mod)
    b_eig = SymEig(state.config.mu1 * np.clip(geig.eigenvalues, 0.0, None), geig.eigenvectors)
    return solve_sylvester(K, None, R, b_eig=b_eig)


def update_G(state, v):
    """Least-squares alignment map ``G`` from ``H*`` to ``H_m - M2 - L2/mu2``."""
    mod = _check_layer(state, v, 0)
    Hs = state.Hstar
    target = mod.Hm - mod.M2 - mod.L2 / state.config.mu2
    return target @ Hs.T @ pinv(Hs @ Hs.T)


def update_Hstar(state):
    """Shared representation: one stationarity condition summed over modalities."""
    mu2 = state.config.mu2
    lhs = sum(mu2 * mod.G.T @ mod.G for mod in state.modalities)
    rhs = sum(mod.G.T @ (mu2 * (mod.Hm - mod.M2) - mod.L2) for mod in state.modalities)
    return pinv(lhs) @ rhs


def update_M1(state, v):
    """One reweighted least-squares step for the graph split ``M1 ~ H_m A``."""
    cfg = state.config
    mod = _check_layer(state, v, 0)
    T = cfg.mu1 * mod.Hm @ mod.A - mod.L1
    d = cfg.beta * _row_weights(mod.M1, cfg.eps_guard) + cfg.mu1
    return _diag_pinv_apply(d, T)


def update_M2(state, v):
    """One reweighted least-squares step for the consensus split ``M2 ~ H_m - G H*``."""
    cfg = state.config
    mod = _check_layer(state, v, 0)
    T = cfg.mu2 * (mod.Hm - mod.G @ state.Hstar) - mod.L2
    d = cfg.lam * _row_weights(mod.M2, cfg.eps_guard) + cfg.mu2
    return _diag_pinv_apply(d, T)


def update_duals(state, v):
    """Dual ascent on the three splittings, then the slack projection.

    Returns ``(L1, L2, L3, s)``.
    """
    cfg = state.config
    mod = _check_layer(state, v, 0)
    Hm = mod.Hm
    L1 = mod.L1 + cfg.mu1 * (mod.M1 - Hm @ mod.A)
    L2 = mod.L2 + cfg.mu2 * (mod.M2 + mod.G @ state.Hstar - Hm)
    L3 = mod.L3 + cfg.mu3 * (mod.s - Hm)
    s = np.maximum(Hm - L3 / cfg.mu3, 0.0)
    return L1, L2, L3, s


def modality_objective(state, v):
    cfg = state.config
    mod = state.modalities[v]
    Phi = mod.stack.basis()
    Hm = mod.Hm
    dec = mod.X - Phi @ Hm
    val = float(np.sum(dec * dec))
    if cfg.use_encoder:
        enc = Hm - Phi.T @ mod.X
        val += float(np.sum(enc * enc))
    if cfg.beta:
        val += cfg.beta * l21_norm(Hm @ mod.A)
    if cfg.lam:
        val += cfg.lam * l21_norm(Hm - mod.G @ state.Hstar)
    return val


def objective_value(state):
    """Model objective summed over modalities (encoder term dropped when ablated)."""
    return sum(modality_objective(state, v) for v in range(len(state.modalities)))


def residuals(state):
    """Frobenius norms of the three constraint violations, pooled over modalities."""
    r1 = r2 = r3 = 0.0
    for mod in state.modalities:
        Hm = mod.Hm
        r1 += float(np.sum((mod.M1 - Hm @ mod.A) ** 2))
        r2 += float(np.sum((mod.M2 + mod.G @ state.Hstar - Hm) ** 2))
        r3 += float(np.sum((mod.s - Hm) ** 2))
    return float(np.sqrt(r1)), float(np.sqrt(r2)), float(np.sqrt(r3))


def sweep(state):
    """One outer iteration in the order of the alternating scheme.

    For every modality and layer: update the representation (inner layers by
    the multiplicative rule, the top one by the ADMM block H_m, G, H*, M1, M2,
    duals), then the basis of that layer.
    """
    for v, mod in enumerate(state.modalities):
        m = mod.stack.depth
        for i in range(m):
            if i < m - 1:
                mod.stack.H[i] = update_H_mid(state, v, i)
            else:
                mod.Hm = update_Hm(state, v)
                mod.G = update_G(state, v)
                state.Hstar = update_Hstar(state)
                mod.M1 = update_M1(state, v)
                mod.M2 = update_M2(state, v)
                mod.L1, mod.L2, mod.L3, mod.s = update_duals(state, v)
            mod.stack.Z[i] = update_Z(state, v, i)


def resolve_layer_sizes(layer_sizes, dims, n_samples):
    """Shrink ``layer_sizes`` proportionally so the first layer fits every modality.

    The first width must stay below each feature dimension and at most the
    sample count; widths are kept strictly decreasing and at least 1.
    """
    sizes = [int(p) for p in layer_sizes]
    limit = min(min(dims) - 1, n_samples)
    if limit < 1:
        raise ParameterError(f"feature dimension {min(dims)} too small for any layer")
    if sizes[0] > limit:
        factor = limit / sizes[0]
        sizes = [max(1, int(round(p * factor))) for p in sizes]
        sizes[0] = min(sizes[0], limit)
    out = []
    for p in sizes:
        if out and p >= out[-1]:
            p = out[-1] - 1
        if p < 1:
            break
        out.append(p)
    if out != [int(p) for p in layer_sizes]:
        log.info("layer sizes %s resolved to %s", list(layer_sizes), out)
    return out


def init_state(modalities, stacks, priors, config):
    """Initial ADMM variables: zero multipliers, ``G = I``, ``H*`` the mean ``H_m``."""
    mods = []
    for md, stack, prior in zip(modalities, stacks, priors):
        Hm = stack.H[-1]
        p = Hm.shape[0]
        mods.append(ModalityState(
            X=md, A=prior.factor, stack=stack, G=np.eye(p),
            M1=np.zeros_like(Hm), M2=np.zeros_like(Hm),
            L1=np.zeros((p, prior.factor.shape[1])), L2=np.zeros_like(Hm), L3=np.zeros_like(Hm),
            s=np.maximum(Hm, 0.0)))
    Hstar = np.mean([m.Hm for m in mods], axis=0)
    state = AdmmState(modalities=mods, Hstar=Hstar, config=config)
    for mod in mods:
        mod.M1 = mod.Hm @ mod.A
        mod.M2 = mod.Hm - mod.G @ Hstar
    return state


def fit(modalities, layer_sizes=DEFAULT_LAYER_SIZES, config=None, seed=0, k_nn=DEFAULT_K_NN,
        weighting="heat", sigma="auto", pretrain_iters=DEFAULT_LAYER_ITERS,
        pretrain_tol=DEFAULT_LAYER_TOL, callback=None):
    """Pre-train, build graph priors and run the alternating solver.

    Parameters
    ----------
    modalities : sequence of ModalityData or ndarray
        Feature matrices (d_v x n), all with the same sample count.
    layer_sizes : sequence of int
        Layer widths, shrunk by :func:`resolve_layer_sizes` when too wide.
    config : AdmmConfig, optional
    seed : int
        Modality ``v`` is pre-trained with seeds starting at ``seed + 1000 v``.
    k_nn, weighting, sigma :
        Graph options forwarded to :func:`aenmf.graph.build_graph_prior`.
    callback : callable, optional
        Called as ``callback(state, trace)`` after every sweep.

    Returns
    -------
    Hstar : ndarray (p_m x n)
    traces : list of IterTrace
    state : AdmmState
    """
    from .data import ModalityData

    config = (config or AdmmConfig()).validate()
    mods = [m if isinstance(m, ModalityData) else ModalityData(m, name=f"view{v}")
            for v, m in enumerate(modalities)]
    if not mods:
        raise ContractError("fit needs at least one modality")
    n = mods[0].n_samples
    if any(m.n_samples != n for m in mods):
        raise ContractError(f"modalities disagree on sample count: {[m.n_samples for m in mods]}")
    sizes = resolve_layer_sizes(layer_sizes, [m.X.shape[0] for m in mods], n)

    Xs, stacks, priors = [], [], []
    for v, md in enumerate(mods):
        X = make_nonnegative(md.X)
        Xs.append(X)
        stacks.append(pretrain_stack(X, sizes, per_layer_iters=pretrain_iters, tol=pretrain_tol,
                                     seed=seed + 1000 * v, encoder=config.encoder,
                                     eps=config.eps_guard))
        priors.append(md.graph(k_nn=k_nn, weighting=weighting, sigma=sigma))
    state = init_state(Xs, stacks, priors, config)

    traces = []
    value = objective_value(state)
    for it in range(1, config.max_iters + 1):
        before = [state.Hstar.copy()] + [m.Hm.copy() for m in state.modalities]
        sweep(state)
        after = [state.Hstar] + [m.Hm for m in state.modalities]
        delta = max(float(np.max(np.abs(a - b))) for a, b in zip(after, before))
        previous, value = value, objective_value(state)
        r1, r2, r3 = residuals(state)
        trace = IterTrace(it, value, r1, r2, r3, delta,
                          min(float(m.Hm.min()) for m in state.modalities))
        traces.append(trace)
        if callback is not None:
            callback(state, trace)
        if abs(previous - value) < config.tol * max(abs(previous), 1e-300):
            break

    for mod in state.modalities:
        Hm = mod.Hm
        small = (Hm < 0) & (Hm > -HM_CLIP)
        mod.Hm = np.where(small, 0.0, Hm)
        if np.any(mod.Hm < 0):
            log.info("final H_m keeps negative entries down to %.3e", float(mod.Hm.min()))
    return state.Hstar, traces, state
