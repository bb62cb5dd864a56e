"""Independent reference implementations shared by the test modules."""
import numpy as np


def brute_force(cost, s, d):
    """Minimum cost over every integer plan with row sums s and column sums d."""
    m, k = len(s), len(d)
    cheapest = [min(row) for row in cost]
    best = float("inf")

    def compositions(total, cap, j=0):
        if j == len(cap) - 1:
            if total <= cap[j]:
                yield (total,)
            return
        for x in range(min(total, cap[j]) + 1):
            for rest in compositions(total - x, cap, j + 1):
                yield (x,) + rest

    def rows(i, cap, acc):
        nonlocal best
        if acc + sum(s[r] * cheapest[r] for r in range(i, m)) >= best:
            return
        if i == m:
            best = acc
            return
        for row in compositions(s[i], cap):
            cost_row = sum(cost[i][j] * row[j] for j in range(k))
            rows(i + 1, [c - r for c, r in zip(cap, row)], acc + cost_row)

    rows(0, list(d), 0)
    return best


def random_instance(rng):
    """Disjoint supply and demand nodes with small integer masses."""
    m, k = (int(v) for v in rng.integers(1, 6, 2))
    s = rng.integers(1, 6, m)
    d = np.ones(k, dtype=int)
    for _ in range(s.sum() - k):
        d[rng.integers(k)] += 1
    if d.sum() != s.sum():  # more sinks than units: shrink the sink set
        k = int(s.sum())
        d = np.ones(k, dtype=int)
    n = m + k
    cost = rng.integers(0, 10, (n, n))
    sv = np.concatenate([s, np.zeros(k, int)])
    dv = np.concatenate([np.zeros(m, int), d])
    return cost, sv, dv, m, k
