"""Model-comparison statistics: Friedman test, exact Wilcoxon signed-rank,
Holm step-down correction, and clique formation for ranking diagrams."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import DataError


def friedman_test(scores: np.ndarray) -> tuple[float, float]:
    """Friedman chi-square over a [models x datasets] score matrix (lower is
    better); ties get average ranks within each dataset."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2:
        raise DataError("scores must be a [models x datasets] matrix")
    k, n = scores.shape
    if k < 2 or n < 2:
        raise DataError(f"need at least 2 models and 2 datasets, got {k}x{n}")
    ranks = np.empty_like(scores)
    for j in range(n):
        ranks[:, j] = sps.rankdata(scores[:, j])
    avg = ranks.mean(axis=1)
    statistic = 12.0 * n / (k * (k + 1)) * (np.sum(avg ** 2) - k * (k + 1) ** 2 / 4.0)
    statistic = max(statistic, 0.0)
    p = float(sps.chi2.sf(statistic, k - 1))
    return float(statistic), p


def average_ranks(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    ranks = np.empty_like(scores)
    for j in range(scores.shape[1]):
        ranks[:, j] = sps.rankdata(scores[:, j])
    return ranks.mean(axis=1)


def wilcoxon_signed_rank(a, b, exact_threshold: int = 12) -> float:
    """Two-sided signed-rank p-value; exact by full sign enumeration up to
    ``exact_threshold`` non-zero differences, tie-corrected normal beyond.
    All-zero differences give p = 1."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError("inputs must be equal-length vectors")
    diff = a - b
    diff = diff[diff != 0]
    n = len(diff)
    if n == 0:
        return 1.0
    if n < 5:
        raise DataError(f"need at least 5 non-zero differences, got {n}")
    ranks = sps.rankdata(np.abs(diff))
    t_plus = float(ranks[diff > 0].sum())
    if n <= exact_threshold:
        signs = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
        sums = signs @ ranks
        p_ge = float(np.mean(sums >= t_plus - 1e-9))
        p_le = float(np.mean(sums <= t_plus + 1e-9))
        return min(1.0, 2.0 * min(p_ge, p_le))
    mu = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(diff), return_counts=True)
    tie_term = float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie_term)
    z = (t_plus - mu) / sigma
    return math.erfc(abs(z) / math.sqrt(2))


def holm_adjust(pvalues: list[float]) -> list[float]:
    """Holm step-down adjusted p-values, returned in the input order."""
    m = len(pvalues)
    order = np.argsort(pvalues, kind="stable")
    adjusted = np.empty(m)
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, min(1.0, (m - rank) * pvalues[idx]))
        adjusted[idx] = running
    return adjusted.tolist()


@dataclass
class ComparisonResult:
    models: list[str]
    friedman_statistic: float
    friedman_p: float
    average_ranks: dict[str, float]
    pairwise_p: dict[tuple[str, str], float]
    adjusted_p: dict[tuple[str, str], float]
    cliques: list[list[str]]
    alpha: float = 0.05

    def to_payload(self) -> dict:
        return {
            "models": self.models,
            "friedman_statistic": self.friedman_statistic,
            "friedman_p": self.friedman_p,
            "average_ranks": self.average_ranks,
            "pairwise_p": {f"{a}|{b}": p for (a, b), p in self.pairwise_p.items()},
            "holm_adjusted_p": {f"{a}|{b}": p for (a, b), p in self.adjusted_p.items()},
            "cliques": self.cliques,
            "alpha": self.alpha,
        }


def holm_cliques(pairwise_p: dict[tuple[str, str], float], ranks: dict[str, float],
                 alpha: float = 0.05) -> tuple[list[list[str]], dict[tuple[str, str], float]]:
    """Maximal rank-adjacent groups with no Holm-rejected pair inside."""
    pairs = list(pairwise_p)
    adjusted = holm_adjust([pairwise_p[p] for p in pairs])
    adj_map = dict(zip(pairs, adjusted))

    def rejected(a: str, b: str) -> bool:
        p = adj_map.get((a, b), adj_map.get((b, a)))
        if p is None:
            raise DataError(f"missing pairwise test for ({a}, {b})")
        return p < alpha

    ordered = sorted(ranks, key=lambda mdl: (ranks[mdl], mdl))
    k = len(ordered)
    intervals = []
    for i in range(k):
        j = i
        while j + 1 < k and all(not rejected(ordered[a], ordered[j + 1])
                                for a in range(i, j + 1)):
            j += 1
        intervals.append((i, j))
    cliques = []
    seen = set()
    for i, j in intervals:
        # keep only maximal intervals, once each
        if any(o_i <= i and j <= o_j and (o_i, o_j) != (i, j) for o_i, o_j in intervals):
            continue
        if (i, j) not in seen:
            seen.add((i, j))
            cliques.append(ordered[i:j + 1])
    return cliques, adj_map


def compare_models(model_scores: dict[str, list[float]], alpha: float = 0.05) -> ComparisonResult:
    """Full comparison over per-model score vectors on common evaluation cells."""
    models = sorted(model_scores)
    if len(models) < 2:
        raise DataError("need at least two models to compare")
    lengths = {len(model_scores[m]) for m in models}
    if len(lengths) != 1:
        raise DataError(f"models have unequal score counts: {sorted(lengths)}")
    matrix = np.array([model_scores[m] for m in models], dtype=float)
    statistic, p = friedman_test(matrix)
    ranks = dict(zip(models, average_ranks(matrix).tolist()))
    pairwise = {}
    for i in range(len(models)):
        for j in range(i + 1, len(models)):
            a, b = models[i], models[j]
            pairwise[(a, b)] = wilcoxon_signed_rank(matrix[i], matrix[j])
    cliques, adjusted = holm_cliques(pairwise, ranks, alpha)
    return ComparisonResult(models=models, friedman_statistic=statistic, friedman_p=p,
                            average_ranks=ranks, pairwise_p=pairwise,
                            adjusted_p=adjusted, cliques=cliques, alpha=alpha)
