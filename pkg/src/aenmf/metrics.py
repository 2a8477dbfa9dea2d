"""External clustering metrics: ACC, NMI, ARI and pair-counting P/R/F.

All functions take two label sequences of equal length and are invariant to
renaming the cluster ids in either one.
"""

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractError


@dataclass(frozen=True)
class MetricReport:
    acc: float
    nmi: float
    ari: float
    f_score: float
    precision: float
    recall: float

    def as_dict(self):
        return asdict(self)


def _check(truth, pred, min_n=1):
    truth = np.asarray(truth).ravel()
    pred = np.asarray(pred).ravel()
    if truth.shape != pred.shape:
        raise ContractError(f"label vectors differ in length: {truth.size} vs {pred.size}")
    if truth.size < min_n:
        raise ContractError(f"need at least {min_n} labelled sample(s), got {truth.size}")
    return truth, pred


def contingency(truth, pred):
    """Counts ``C[a, b]`` of samples with truth class ``a`` and predicted cluster ``b``."""
    _, t = np.unique(truth, return_inverse=True)
    _, p = np.unique(pred, return_inverse=True)
    C = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(C, (t, p), 1)
    return C


def accuracy(truth, pred):
    """Fraction of samples matched under the best one-to-one cluster relabeling."""
    truth, pred = _check(truth, pred)
    C = contingency(truth, pred)
    rows, cols = linear_sum_assignment(-C)
    return float(C[rows, cols].sum()) / truth.size


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(truth, pred):
    """Mutual information normalized by the geometric mean of the entropies.

    Natural logarithms; returns 0 whenever either partition has one cluster.
    """
    truth, pred = _check(truth, pred)
    n = truth.size
    C = contingency(truth, pred).astype(float)
    a, b = C.sum(axis=1), C.sum(axis=0)
    h_t, h_p = _entropy(a, n), _entropy(b, n)
    if h_t == 0.0 or h_p == 0.0:
        # a single-cluster partition carries no information (0/0 -> 0)
        return 0.0
    nz = C > 0
    outer = np.outer(a, b)
    mi = float(np.sum(C[nz] / n * np.log(C[nz] * n / outer[nz])))
    return max(mi, 0.0) / np.sqrt(h_t * h_p)


def _pair_counts(truth, pred):
    """(pairs together in both, together in pred, together in truth, all pairs)."""
    C = contingency(truth, pred)

    def pairs(c):
        return float(np.sum(c * (c - 1) // 2))

    n = truth.size
    return pairs(C), pairs(C.sum(axis=0)), pairs(C.sum(axis=1)), float(n * (n - 1) // 2)


def adjusted_rand(truth, pred):
    """Adjusted Rand index from the pair-counting contingency formula."""
    truth, pred = _check(truth, pred, min_n=2)
    both, in_pred, in_truth, total = _pair_counts(truth, pred)
    expected = in_pred * in_truth / total
    max_index = 0.5 * (in_pred + in_truth)
    if max_index == expected:
        # both partitions trivial (all singletons or one cluster) and equal
        return 1.0 if in_pred == in_truth else 0.0
    return (both - expected) / (max_index - expected)


def pairwise_prf(truth, pred, flags=None):
    """Pair-counting precision, recall and F-score.

    A pair is positive when both samples share a predicted cluster.  Empty
    denominators give 0; their names are appended to ``flags`` when a list is
    supplied.
    """
    truth, pred = _check(truth, pred, min_n=2)
    both, in_pred, in_truth, _ = _pair_counts(truth, pred)
    if in_pred > 0:
        precision = both / in_pred
    else:
        precision = 0.0
        if flags is not None:
            flags.append("precision")
    if in_truth > 0:
        recall = both / in_truth
    else:
        recall = 0.0
        if flags is not None:
            flags.append("recall")
    f = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f


def evaluate(truth, pred):
    precision, recall, f = pairwise_prf(truth, pred)
    return MetricReport(
        acc=accuracy(truth, pred), nmi=nmi(truth, pred), ari=adjusted_rand(truth, pred),
        f_score=f, precision=precision, recall=recall)
