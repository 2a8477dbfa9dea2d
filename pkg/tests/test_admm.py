import numpy as np
import pytest

from aenmf.admm import (AdmmConfig, AdmmState, ModalityState, fit, hm_system, modality_objective,
                        objective_value, resolve_layer_sizes, update_duals, update_G, update_H_mid,
                        update_Hm, update_Hstar, update_M1, update_M2, update_Z)
from aenmf.errors import ContractError, ParameterError
from aenmf.graph import build_graph_prior
from aenmf.pretrain import LayerStack

from test_pretrain import disjoint_basis


def random_state(seed, V=2, d=(8, 7), sizes=(5, 3), n=12, beta=0.01, lam=0.01, mu=(1.0, 1.0, 1.0)):
    """Random feasible-shaped state with nonzero multipliers."""
    rng = np.random.default_rng(seed)
    cfg = AdmmConfig(beta=beta, lam=lam, mu1=mu[0], mu2=mu[1], mu3=mu[2])
    mods = []
    for v in range(V):
        X = rng.uniform(size=(d[v], n))
        Z = [rng.uniform(size=(d[v], sizes[0]))] + [rng.uniform(size=(a, b)) for a, b in zip(sizes, sizes[1:])]
        H = [rng.uniform(size=(p, n)) for p in sizes]
        A = build_graph_prior(X, k_nn=3).factor
        p = sizes[-1]
        mods.append(ModalityState(
            X=X, A=A, stack=LayerStack(tuple(sizes), Z, H), G=rng.standard_normal((p, p)),
            M1=rng.standard_normal((p, n)), M2=rng.standard_normal((p, n)),
            L1=rng.standard_normal((p, n)), L2=rng.standard_normal((p, n)), L3=rng.standard_normal((p, n)),
            s=rng.uniform(size=(p, n))))
    return AdmmState(mods, rng.uniform(size=(sizes[-1], n)), cfg)


def fd_grad(f, x, h=1e-3):
    g = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def inner(a, b):
    return float(np.sum(a * b))


def hm_lagrangian(state, v, H):
    cfg, mod = state.config, state.modalities[v]
    Phi = mod.stack.basis()
    r1 = mod.M1 - H @ mod.A
    r2 = mod.M2 + mod.G @ state.Hstar - H
    r3 = mod.s - H
    return (np.sum((mod.X - Phi @ H) ** 2) + cfg.encoder * np.sum((H - Phi.T @ mod.X) ** 2)
            + inner(mod.L1, r1) + cfg.mu1 / 2 * np.sum(r1**2)
            + inner(mod.L2, r2) + cfg.mu2 / 2 * np.sum(r2**2)
            + inner(mod.L3, r3) + cfg.mu3 / 2 * np.sum(r3**2))


def consensus_terms(state, v, G=None, Hstar=None):
    cfg, mod = state.config, state.modalities[v]
    G = mod.G if G is None else G
    Hstar = state.Hstar if Hstar is None else Hstar
    r2 = mod.M2 + G @ Hstar - mod.Hm
    return inner(mod.L2, r2) + cfg.mu2 / 2 * np.sum(r2**2)


def m1_objective(state, v, M):
    cfg, mod = state.config, state.modalities[v]
    r = M - mod.Hm @ mod.A
    return cfg.beta * np.sum(np.linalg.norm(M, axis=1)) + inner(mod.L1, r) + cfg.mu1 / 2 * np.sum(r**2)


def m2_objective(state, v, M):
    cfg, mod = state.config, state.modalities[v]
    r = M + mod.G @ state.Hstar - mod.Hm
    return cfg.lam * np.sum(np.linalg.norm(M, axis=1)) + inner(mod.L2, r) + cfg.mu2 / 2 * np.sum(r**2)


def subgradient_prox(T, weight, mu, iters=20000):
    """Minimize weight ||M||_21 + mu/2 ||M - T||^2 by subgradient descent."""
    M = T.copy()
    for k in range(iters):
        norms = np.linalg.norm(M, axis=1, keepdims=True)
        sub = np.where(norms > 0, M / np.where(norms > 0, norms, 1.0), 0.0)
        M = M - (weight * sub + mu * (M - T)) / (mu * (k + 2))
    return M


SEEDS = range(20)


class TestStationarity:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_hm(self, seed):
        state = random_state(seed)
        H = update_Hm(state, 1)
        g = fd_grad(lambda h: hm_lagrangian(state, 1, h), H)
        assert np.linalg.norm(g) <= 1e-6

    @pytest.mark.parametrize("seed", SEEDS)
    def test_g(self, seed):
        state = random_state(seed)
        G = update_G(state, 0)
        g = fd_grad(lambda x: consensus_terms(state, 0, G=x), G)
        assert np.linalg.norm(g) <= 1e-6

    @pytest.mark.parametrize("seed", SEEDS)
    def test_hstar(self, seed):
        state = random_state(seed, V=3, d=(8, 7, 9))
        Hs = update_Hstar(state)
        g = fd_grad(lambda x: sum(consensus_terms(state, v, Hstar=x) for v in range(3)), Hs)
        assert np.linalg.norm(g) <= 1e-6

    @pytest.mark.parametrize("seed", SEEDS)
    @pytest.mark.parametrize("which", ["M1", "M2"])
    def test_m_split(self, seed, which):
        update = update_M1 if which == "M1" else update_M2
        objective = m1_objective if which == "M1" else m2_objective
        state = random_state(seed)
        mod = state.modalities[0]
        for _ in range(60):
            setattr(mod, which, update(state, 0))
        M = getattr(mod, which)
        assert np.all(np.linalg.norm(M, axis=1) > 1e-3)
        g = fd_grad(lambda x: objective(state, 0, x), M, h=1e-5)
        assert np.linalg.norm(g) <= 1e-6


class TestHm:
    def test_no_graph_penalty_is_linear_solve(self):
        state = random_state(1)
        # mu1 = 0 is rejected by validate() but the update itself must degrade gracefully
        state.config.mu1 = 0.0
        K, R = hm_system(state, 0)
        np.testing.assert_allclose(update_Hm(state, 0), np.linalg.solve(K, R), atol=1e-8)

    def test_consistent_point_reproduced(self):
        rng = np.random.default_rng(0)
        Z1, Z2 = disjoint_basis(rng, 10, 5), disjoint_basis(rng, 5, 3)
        Hm = rng.uniform(0.5, 2.0, size=(3, 12))
        X = Z1 @ Z2 @ Hm
        state = random_state(0, V=1, d=(10,))
        mod = state.modalities[0]
        mod.X, mod.A = X, build_graph_prior(X, k_nn=3).factor
        mod.stack = LayerStack((5, 3), [Z1, Z2], [Z2 @ Hm, Hm])
        mod.G, state.Hstar = np.eye(3), Hm * 0.5
        mod.M1, mod.M2, mod.s = Hm @ mod.A, Hm - state.Hstar, Hm.copy()
        mod.L1 = mod.L2 = mod.L3 = np.zeros_like(Hm)
        np.testing.assert_allclose(update_Hm(state, 0), Hm, atol=1e-8)
        # the multiplicative rules are at a fixed point as well
        np.testing.assert_allclose(update_H_mid(state, 0, 0), Z2 @ Hm, rtol=1e-10)
        np.testing.assert_allclose(update_Z(state, 0, 0), Z1, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(update_Z(state, 0, 1), Z2, rtol=1e-12, atol=1e-15)
        L1, L2, L3, s = update_duals(state, 0)
        assert not L1.any() and not L2.any() and not L3.any()
        np.testing.assert_array_equal(s, Hm)


class TestConsensus:
    def test_identity_consensus(self):
        state = random_state(2)
        mod = state.modalities[0]
        mod.L2, mod.M2 = np.zeros_like(mod.L2), np.zeros_like(mod.M2)
        state.Hstar = np.eye(3, 12)
        G = update_G(state, 0)
        np.testing.assert_allclose(G, mod.Hm[:, :3], atol=1e-12)

    def test_exact_recovery(self, rng):
        state = random_state(3)
        mod = state.modalities[0]
        G0 = rng.standard_normal((3, 3))
        mod.Hm = G0 @ state.Hstar
        mod.L2, mod.M2 = np.zeros_like(mod.L2), np.zeros_like(mod.M2)
        np.testing.assert_allclose(update_G(state, 0), G0, atol=1e-8)

    def test_g_local_minimum(self, rng):
        state = random_state(4)
        G = update_G(state, 0)
        best = consensus_terms(state, 0, G=G)
        for _ in range(50):
            assert consensus_terms(state, 0, G=G + 1e-3 * rng.standard_normal(G.shape)) >= best - 1e-12

    def test_single_modality_identity(self):
        state = random_state(5, V=1, d=(8,))
        mod = state.modalities[0]
        mod.G, mod.M2, mod.L2 = np.eye(3), np.zeros_like(mod.M2), np.zeros_like(mod.L2)
        np.testing.assert_allclose(update_Hstar(state), mod.Hm, atol=1e-12)

    def test_two_modality_average(self):
        state = random_state(6)
        for mod in state.modalities:
            mod.G, mod.M2, mod.L2 = np.eye(3), np.zeros_like(mod.M2), np.zeros_like(mod.L2)
        expected = 0.5 * (state.modalities[0].Hm + state.modalities[1].Hm)
        np.testing.assert_allclose(update_Hstar(state), expected, atol=1e-12)


class TestSplits:
    def test_regularizer_off(self):
        state = random_state(7, beta=0.0, lam=0.0)
        mod, cfg = state.modalities[0], state.config
        np.testing.assert_allclose(update_M1(state, 0), mod.Hm @ mod.A - mod.L1 / cfg.mu1, atol=1e-12)
        np.testing.assert_allclose(update_M2(state, 0), mod.Hm - mod.G @ state.Hstar - mod.L2 / cfg.mu2,
                                   atol=1e-12)

    def test_zero_target(self):
        state = random_state(8)
        mod = state.modalities[0]
        mod.Hm = np.zeros_like(mod.Hm)
        mod.L1 = np.zeros_like(mod.L1)
        assert not update_M1(state, 0).any()
        mod.G, mod.L2 = np.zeros_like(mod.G), np.zeros_like(mod.L2)
        assert not update_M2(state, 0).any()

    @pytest.mark.parametrize("which", ["M1", "M2"])
    def test_prox_oracle(self, which):
        state = random_state(9, beta=0.5, lam=0.5)
        mod, cfg = state.modalities[0], state.config
        if which == "M1":
            T = mod.Hm @ mod.A - mod.L1 / cfg.mu1
            weight, mu, update = cfg.beta, cfg.mu1, update_M1
        else:
            T = mod.Hm - mod.G @ state.Hstar - mod.L2 / cfg.mu2
            weight, mu, update = cfg.lam, cfg.mu2, update_M2
        for _ in range(20):
            setattr(mod, which, update(state, 0))
        np.testing.assert_allclose(getattr(mod, which), subgradient_prox(T, weight, mu), atol=1e-4)


class TestDuals:
    def test_feasible_point_unchanged(self):
        state = random_state(10)
        mod = state.modalities[0]
        mod.Hm = np.abs(mod.Hm)
        mod.M1 = mod.Hm @ mod.A
        mod.M2 = mod.Hm - mod.G @ state.Hstar
        mod.s = mod.Hm.copy()
        mod.L3 = np.zeros_like(mod.L3)
        L1, L2, L3, s = update_duals(state, 0)
        np.testing.assert_allclose(L1, mod.L1, atol=1e-12)
        np.testing.assert_allclose(L2, mod.L2, atol=1e-12)
        np.testing.assert_array_equal(L3, mod.L3)
        np.testing.assert_array_equal(s, mod.Hm)

    def test_slack_nonnegative(self):
        state = random_state(11)
        state.modalities[0].Hm = state.modalities[0].Hm - 0.5
        assert update_duals(state, 0)[3].min() >= 0


class TestObjective:
    def test_zero_at_exact_point(self):
        rng = np.random.default_rng(0)
        Z1 = disjoint_basis(rng, 6, 2)
        Hm = rng.uniform(size=(2, 8))
        state = random_state(0, V=1, d=(6,), sizes=(2,), n=8)
        mod = state.modalities[0]
        mod.X = Z1 @ Hm
        mod.stack = LayerStack((2,), [Z1], [Hm])
        mod.A = np.zeros((8, 8))
        mod.G, state.Hstar = np.eye(2), Hm.copy()
        assert objective_value(state) < 1e-20

    def test_scalar_loop(self):
        state = random_state(12, beta=0.3, lam=0.7)
        total = 0.0
        for mod in state.modalities:
            Phi = mod.stack.basis()
            Hm = mod.Hm
            d, n = mod.X.shape
            p = Hm.shape[0]
            for a in range(d):
                for j in range(n):
                    total += (mod.X[a, j] - sum(Phi[a, r] * Hm[r, j] for r in range(p))) ** 2
            for r in range(p):
                for j in range(n):
                    total += (Hm[r, j] - sum(Phi[a, r] * mod.X[a, j] for a in range(d))) ** 2
            HA = Hm @ mod.A
            D = Hm - mod.G @ state.Hstar
            for r in range(p):
                total += 0.3 * sum(x * x for x in HA[r]) ** 0.5 + 0.7 * sum(x * x for x in D[r]) ** 0.5
        assert abs(objective_value(state) - total) <= 1e-9 * total

    def test_term_isolation(self):
        state = random_state(13, beta=0.0, lam=0.0)
        mod = state.modalities[0]
        Phi = mod.stack.basis()
        expected = np.sum((mod.X - Phi @ mod.Hm) ** 2) + np.sum((mod.Hm - Phi.T @ mod.X) ** 2)
        assert abs(modality_objective(state, 0) - expected) <= 1e-12 * expected


class TestContracts:
    def test_top_layer_rejected(self):
        with pytest.raises(ContractError):
            update_H_mid(random_state(0), 0, 1)

    def test_bad_indices(self):
        with pytest.raises(ContractError):
            update_Z(random_state(0), 2, 0)
        with pytest.raises(ContractError):
            update_Z(random_state(0), 0, 2)

    def test_shape_mismatch(self):
        state = random_state(0)
        state.modalities[0].stack.Z[1] = np.ones((4, 3))
        with pytest.raises(ContractError):
            update_Z(state, 0, 1)

    def test_config(self):
        with pytest.raises(ParameterError):
            AdmmConfig(mu2=0).validate()
        with pytest.raises(ParameterError):
            AdmmConfig(beta=-1).validate()

    def test_sample_count_mismatch(self, rng):
        with pytest.raises(ContractError):
            fit([rng.uniform(size=(5, 10)), rng.uniform(size=(5, 11))], [3])


def test_resolve_layer_sizes():
    assert resolve_layer_sizes([500, 50], [60, 40], 300) == [39, 4]
    assert resolve_layer_sizes([20, 8], [60, 40], 300) == [20, 8]
    assert resolve_layer_sizes([5, 5], [60], 300) == [5, 4]
    with pytest.raises(ParameterError):
        resolve_layer_sizes([3], [1], 10)


class TestFit:
    def test_nonnegativity_every_iteration(self, small_synth):
        mods, _ = small_synth
        violations = []

        def check(state, trace):
            for mod in state.modalities:
                bad = sum(int(np.sum(z < 0)) for z in mod.stack.Z)
                bad += sum(int(np.sum(h < 0)) for h in mod.stack.H[:-1])
                bad += int(np.sum(mod.s < 0))
                violations.append(bad)

        fit(mods, [8, 4], AdmmConfig(max_iters=40, tol=0), callback=check)
        assert len(violations) == 80 and sum(violations) == 0

    def test_objective_trend(self, small_synth):
        mods, _ = small_synth
        _, traces, _ = fit(mods, [8, 4], AdmmConfig(max_iters=60, tol=0))
        obj = [t.objective for t in traces]
        assert obj[-1] < obj[0]
        for a, b in zip(obj[20:], obj[21:]):
            assert b <= a * 1.01
        assert all(t.residual_m1 >= 0 and t.residual_m2 >= 0 and t.residual_s >= 0 for t in traces)

    def test_single_modality_no_regularizers(self, rng):
        X = rng.uniform(size=(12, 20))
        from aenmf.pretrain import pretrain_stack
        pre = pretrain_stack(X, [4], seed=0)
        before = np.sum((X - pre.basis() @ pre.H[-1]) ** 2)
        _, _, state = fit([X], [4], AdmmConfig(beta=0, lam=0, max_iters=30), seed=0)
        mod = state.modalities[0]
        after = np.sum((X - mod.stack.basis() @ mod.Hm) ** 2)
        assert after <= before

    def test_deterministic(self, small_synth):
        mods, _ = small_synth
        a = fit(mods, [8, 4], AdmmConfig(max_iters=10), seed=2)[0]
        b = fit(mods, [8, 4], AdmmConfig(max_iters=10), seed=2)[0]
        np.testing.assert_array_equal(a, b)

    def test_permutation_equivariance(self, small_synth):
        mods, _ = small_synth
        perm = np.random.default_rng(0).permutation(mods[0].n_samples)
        cfg = AdmmConfig(max_iters=15, tol=0)
        H = fit([m.X for m in mods], [8, 4], cfg, seed=1)[0]
        Hp = fit([m.X[:, perm] for m in mods], [8, 4], cfg, seed=1)[0]
        np.testing.assert_allclose(Hp, H[:, perm], rtol=1e-6, atol=1e-8 * np.abs(H).max())

    def test_three_modalities(self):
        from aenmf.synth import complementary_spec, generate
        mods, _ = generate(complementary_spec(3, samples_per_cluster=10, modality_dims=(10, 9, 8)))
        Hstar, traces, state = fit(mods, [6, 3], AdmmConfig(max_iters=5))
        assert Hstar.shape == (3, 30) and len(state.modalities) == 3
