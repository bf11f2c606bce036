"""Slow reference implementations written straight from the definitions.

They use plain loops over dense matrices and Python sets and share no code
with the package, so agreement between the two is a real check.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def degrees(W):
    W = np.asarray(W, dtype=float)
    return [sum(W[u, v] for v in range(len(W))) for u in range(len(W))]


def modularity(W, x):
    """Ordered-pair double loop, diagonal included."""
    W = np.asarray(W, dtype=float)
    p = len(W)
    d = degrees(W)
    two_m = sum(d)
    total = 0.0
    for u in range(p):
        for v in range(p):
            if x[u] == x[v]:
                total += W[u, v] - d[u] * d[v] / two_m
    return total / two_m


def modularity_exact(W, x):
    """Same sum in rational arithmetic (integer weights)."""
    p = len(W)
    d = [sum(Fraction(int(W[u][v])) for v in range(p)) for u in range(p)]
    two_m = sum(d)
    total = Fraction(0)
    for u in range(p):
        for v in range(p):
            if x[u] == x[v]:
                total += Fraction(int(W[u][v])) - d[u] * d[v] / two_m
    return total / two_m


def community_volume(f, x, v):
    return sum(f[u] for u in range(len(x)) if x[u] == x[v])


def infeasible(f, x, tau):
    return int(min(community_volume(f, x, v) for v in range(len(x))) <= tau)


def chi(f, x, v, tau):
    F = community_volume(f, x, v)
    return int(F <= tau) + infeasible(f, x, tau) * int(f[v] > 0 and F - f[v] > tau)


def hamiltonian(W, f, x, tau, lam):
    W = np.asarray(W, dtype=float)
    d = degrees(W)
    two_m = sum(d)
    m = two_m / 2
    pen = sum(abs(W[v, v] - d[v] ** 2 / two_m) for v in range(len(x)) if community_volume(f, x, v) <= tau)
    return modularity(W, x) - lam / m * pen


def conditional_log_weight(W, f, x, v, c, tau, lam, theta):
    W = np.asarray(W, dtype=float)
    d = degrees(W)
    two_m = sum(d)
    m = two_m / 2
    inter = sum(W[u, v] - d[u] * d[v] / two_m for u in range(len(x)) if u != v and x[u] == c)
    y = list(x)
    y[v] = c
    pen = lam * abs(W[v, v] - d[v] ** 2 / two_m) * chi(f, y, v, tau)
    return theta / m * (inter - pen)


def set_partitions(items):
    """Recursive enumeration of all set partitions of a list."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def partition_labels(p):
    for part in set_partitions(range(p)):
        x = [0] * p
        for k, block in enumerate(part):
            for v in block:
                x[v] = k
        yield x


def brute_force(W, f=None, tau=0, constrained=False):
    best = None
    for x in partition_labels(len(W)):
        if constrained and infeasible(f, x, tau):
            continue
        q = modularity(W, x)
        if best is None or q > best[1]:
            best = (x, q)
    return best


def stirling2_table(n_max):
    """Counting surjections by inclusion-exclusion, no recurrence."""
    S = [[0] * (n_max + 1) for _ in range(n_max + 1)]
    for n in range(n_max + 1):
        for k in range(n + 1):
            S[n][k] = sum((-1) ** j * math.comb(k, j) * (k - j) ** n for j in range(k + 1)) // math.factorial(k)
    return S


def count_feasible(p, r):
    """Partitions of range(p) where every block meets the first r items."""
    return sum(all(min(block) < r for block in part) for part in set_partitions(range(p)))


def jaccard(a, b):
    out = []
    for v in range(len(a)):
        A = {u for u in range(len(a)) if a[u] == a[v]}
        B = {u for u in range(len(b)) if b[u] == b[v]}
        out.append(len(A & B) / len(A | B))
    return out


def pair_classes(a, b):
    both = only_a = only_b = 0
    for u in range(len(a)):
        for v in range(u + 1, len(a)):
            sa, sb = a[u] == a[v], b[u] == b[v]
            both += sa and sb
            only_a += sa and not sb
            only_b += sb and not sa
    return both, only_a, only_b


def fold_dense(W, x):
    labels = []
    for c in x:
        if c not in labels:
            labels.append(c)
    k = len(labels)
    out = np.zeros((k, k))
    for u in range(len(x)):
        for v in range(len(x)):
            out[labels.index(x[u]), labels.index(x[v])] += W[u][v]
    return out, labels
