import numpy as np
import pytest

from aenmf.errors import ConfigError
from aenmf.metrics import accuracy
from aenmf.spectral import spectral_cluster
from aenmf.synth import SynthSpec, complementary_spec, generate


def test_shapes_and_balance():
    spec = complementary_spec(3, samples_per_cluster=7)
    mods, truth = generate(spec)
    assert [m.X.shape for m in mods] == [(60, 21), (40, 21), (50, 21)]
    assert np.bincount(truth).tolist() == [7, 7, 7]
    assert all(np.all(m.X >= 0) for m in mods)


def test_deterministic():
    a, ta = generate(SynthSpec(seed=4, outlier_fraction=0.1))
    b, tb = generate(SynthSpec(seed=4, outlier_fraction=0.1))
    np.testing.assert_array_equal(ta, tb)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.X, y.X)


def test_noise_free_clusters_constant():
    mods, truth = generate(SynthSpec(noise_sigma=0.0, merge_map=[]))
    for m in mods:
        for c in range(3):
            cols = m.X[:, truth == c]
            assert np.all(cols == cols[:, :1])


def test_merged_clusters_share_center():
    mods, truth = generate(SynthSpec(noise_sigma=0.0))
    X0, X1 = mods[0].X, mods[1].X
    np.testing.assert_array_equal(X0[:, truth == 0][:, 0], X0[:, truth == 1][:, 0])
    np.testing.assert_array_equal(X1[:, truth == 1][:, 0], X1[:, truth == 2][:, 0])
    assert not np.array_equal(X0[:, truth == 0][:, 0], X0[:, truth == 2][:, 0])


def test_single_modality_sees_two_blobs():
    mods, truth = generate(SynthSpec(seed=1))
    for m in mods:
        acc = accuracy(truth, spectral_cluster(m.X, 3).labels)
        assert acc <= 2 / 3 + 0.05


def test_unmerged_easy():
    mods, truth = generate(SynthSpec(merge_map=[], noise_sigma=0.1, seed=2))
    for m in mods:
        assert accuracy(truth, spectral_cluster(m.X, 3).labels) >= 0.99


def test_outliers_within_range():
    mods, _ = generate(SynthSpec(outlier_fraction=0.2, seed=0))
    assert all(np.all(m.X >= 0) for m in mods)


def test_unknown_cluster():
    with pytest.raises(ConfigError):
        generate(SynthSpec(merge_map=[[[0, 5]], []]))


def test_inseparable_rejected():
    with pytest.raises(ConfigError):
        SynthSpec(merge_map=[[[0, 1]], [[0, 1]]]).validate()
