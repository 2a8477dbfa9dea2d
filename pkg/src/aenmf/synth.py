"""Synthetic multi-modal data with complementary cluster structure.

Each modality sees the true clusters through a *merge map*: clusters placed in
the same group share one center in that modality, so that modality cannot
tell them apart.  As long as no two clusters share a blob in every modality,
the full partition is recoverable by fusing the modalities.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .data import ModalityData
from .errors import ConfigError


@dataclass
class SynthSpec:
    n_clusters: int = 3
    samples_per_cluster: int = 100
    modality_dims: tuple = (60, 40)
    # per modality, groups of cluster ids sharing a center; unlisted ids stay alone
    merge_map: list = field(default_factory=lambda: [[[0, 1]], [[1, 2]]])
    noise_sigma: float = 1.0
    outlier_fraction: float = 0.0
    seed: int = 0
    separation: float = 10.0
    separable_by_fusion: bool = True

    def as_dict(self):
        d = asdict(self)
        d["modality_dims"] = list(self.modality_dims)
        return d

    def blob_groups(self):
        """Per modality, a list of blobs, each a sorted list of cluster ids."""
        k = self.n_clusters
        if len(self.merge_map) not in (0, len(self.modality_dims)):
            raise ConfigError(
                f"merge_map has {len(self.merge_map)} entries for {len(self.modality_dims)} modalities")
        out = []
        for v in range(len(self.modality_dims)):
            groups = self.merge_map[v] if self.merge_map else []
            seen = set()
            blobs = []
            for g in groups:
                g = sorted(int(c) for c in g)
                bad = [c for c in g if not 0 <= c < k]
                if bad:
                    raise ConfigError(f"merge_map[{v}] references unknown cluster(s) {bad}")
                if seen.intersection(g):
                    raise ConfigError(f"merge_map[{v}] lists a cluster in two groups")
                seen.update(g)
                blobs.append(g)
            blobs.extend([c] for c in range(k) if c not in seen)
            out.append(sorted(blobs))
        return out

    def validate(self):
        if self.n_clusters < 1 or self.samples_per_cluster < 1:
            raise ConfigError("n_clusters and samples_per_cluster must be positive")
        if not self.modality_dims or min(self.modality_dims) < 1:
            raise ConfigError("modality_dims must list positive dimensions")
        if self.noise_sigma < 0 or not 0 <= self.outlier_fraction < 1:
            raise ConfigError("noise_sigma must be >= 0 and outlier_fraction in [0, 1)")
        groups = self.blob_groups()
        if self.separable_by_fusion:
            # clusters are recoverable iff their blob ids across modalities differ
            signature = {}
            for c in range(self.n_clusters):
                key = tuple(next(b for b, g in enumerate(blobs) if c in g) for blobs in groups)
                if key in signature:
                    raise ConfigError(
                        f"clusters {signature[key]} and {c} share a blob in every modality")
                signature[key] = c
        return groups


def complementary_spec(n_modalities=2, n_clusters=3, samples_per_cluster=100, modality_dims=None,
                       noise_sigma=1.0, outlier_fraction=0.0, seed=0):
    """Modality ``v`` merges clusters ``v`` and ``v + 1`` (mod ``n_clusters``)."""
    if modality_dims is None:
        modality_dims = (60, 40, 50, 30)[:n_modalities] if n_modalities <= 4 else (40,) * n_modalities
    merge = [[[v % n_clusters, (v + 1) % n_clusters]] for v in range(n_modalities)]
    return SynthSpec(n_clusters=n_clusters, samples_per_cluster=samples_per_cluster,
                     modality_dims=tuple(modality_dims), merge_map=merge, noise_sigma=noise_sigma,
                     outlier_fraction=outlier_fraction, seed=seed)


def _centers(d, n_blobs, distance, rng):
    """Scaled simplex vertices: blob ``b`` lives on its own block of coordinates."""
    C = np.zeros((d, n_blobs))
    if d >= n_blobs:
        blocks = np.array_split(rng.permutation(d), n_blobs)
        for b, idx in enumerate(blocks):
            C[idx, b] = 1.0 / np.sqrt(len(idx))
        return C * distance / np.sqrt(2.0)
    # too few features for disjoint blocks: random nonnegative unit directions
    C = rng.uniform(0.0, 1.0, size=(d, n_blobs))
    return C / np.linalg.norm(C, axis=0) * distance / np.sqrt(2.0)


def generate(spec):
    """Draw ``(modalities, truth)`` from ``spec``; deterministic in ``spec.seed``.

    Samples are ordered by cluster.  Centers of distinct blobs are
    ``separation * sigma * sqrt(d)`` apart, where ``sigma`` is ``noise_sigma``
    (or 1 when the data are noise-free).
    """
    groups = spec.validate()
    rng = np.random.default_rng(spec.seed)
    k, per = spec.n_clusters, spec.samples_per_cluster
    truth = np.repeat(np.arange(k), per)
    n = truth.size
    ref_sigma = spec.noise_sigma if spec.noise_sigma > 0 else 1.0
    modalities = []
    for v, (d, blobs) in enumerate(zip(spec.modality_dims, groups)):
        blob_of = np.empty(k, dtype=int)
        for b, members in enumerate(blobs):
            blob_of[members] = b
        C = _centers(d, len(blobs), spec.separation * ref_sigma * np.sqrt(d), rng)
        X = C[:, blob_of[truth]] + spec.noise_sigma * rng.standard_normal((d, n))
        X = X - np.minimum(X.min(axis=1), 0.0)[:, None]
        n_out = int(np.floor(spec.outlier_fraction * n))
        if n_out:
            idx = rng.choice(n, size=n_out, replace=False)
            X[:, idx] = rng.uniform(0.0, X.max(), size=(d, n_out))
        modalities.append(ModalityData(X, name=f"view{v}"))
    return modalities, truth
