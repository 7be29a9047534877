"""Independent oracles the test suite checks implementations against.

These deliberately avoid the code paths they validate: the regression
oracle fits the two-group binomial GLM iteratively, the rank-correlation
oracle computes average ranks by counting, and the grouping oracle runs
a plain breadth-first transitive closure over a similarity matrix.
"""

from __future__ import annotations

import math

import numpy as np


def irls_two_group_binomial(
    a: int, n1: int, b: int, n0: int, tol: float = 1e-14, max_iter: int = 200
) -> tuple[float, float, float, float]:
    """Newton-Raphson MLE of ``events, totals ~ intercept + group``.

    Group 0 sees ``b`` events of ``n0``; group 1 sees ``a`` of ``n1``.
    Returns (beta0, beta1, se_beta0, se_beta1).
    """
    X = np.array([[1.0, 0.0], [1.0, 1.0]])
    y = np.array([float(b), float(a)])
    m = np.array([float(n0), float(n1)])
    beta = np.zeros(2)
    for _ in range(max_iter):
        eta = X @ beta
        p = 1.0 / (1.0 + np.exp(-eta))
        w = m * p * (1.0 - p)
        score = X.T @ (y - m * p)
        info = X.T @ (w[:, None] * X)
        step = np.linalg.solve(info, score)
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            break
    eta = X @ beta
    p = 1.0 / (1.0 + np.exp(-eta))
    info = X.T @ ((m * p * (1.0 - p))[:, None] * X)
    cov = np.linalg.inv(info)
    return beta[0], beta[1], math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])


def naive_average_ranks(values) -> list[float]:
    """Average rank by counting: smaller-count + (tie-count + 1) / 2."""
    ranks = []
    for x in values:
        smaller = sum(1 for v in values if v < x)
        ties = sum(1 for v in values if v == x)
        ranks.append(smaller + (ties + 1) / 2.0)
    return ranks


def naive_spearman(xs, ys) -> float:
    rx = naive_average_ranks(xs)
    ry = naive_average_ranks(ys)
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


def brute_force_groups(sims: np.ndarray, threshold: float) -> set[frozenset[int]]:
    """Connected components of the >=threshold similarity graph via BFS."""
    n = sims.shape[0]
    unvisited = set(range(n))
    groups: set[frozenset[int]] = set()
    while unvisited:
        start = unvisited.pop()
        component = {start}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            neighbors = [
                j
                for j in list(unvisited)
                if sims[node, j] >= threshold
            ]
            for j in neighbors:
                unvisited.remove(j)
                component.add(j)
                frontier.append(j)
        groups.add(frozenset(component))
    return groups
