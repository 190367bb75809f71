"""Brute-force oracle: exhaustive hidden-path enumeration, plain Python floats.

Deliberately independent of the package's transfer-operator machinery. All
probabilities come from explicit sums over hidden state paths s_0 .. s_{n+1},
and all entropies from math.log2 over aggregated dictionaries.
"""

import math


def _lists(chain):
    P = [[float(x) for x in row] for row in chain.transition]
    mu = [float(x) for x in chain.stationary]
    out = [int(x) for x in chain.outputs]
    return P, mu, out


def enumerate_paths(chain, n):
    """Aggregate P(Y0=b0, Y1..Yn=w, S_{n+1}=s) over all hidden paths.

    Returns a dict (word, b0, s_last) -> probability.
    """
    P, mu, out = _lists(chain)
    m = len(mu)
    succ = [[j for j in range(m) if P[i][j] > 0.0] for i in range(m)]
    agg = {}

    def rec(s, depth, prob, word, b0):
        if depth == n + 1:
            key = (word, b0, s)
            agg[key] = agg.get(key, 0.0) + prob
            return
        row = P[s]
        for t in succ[s]:
            rec(t, depth + 1, prob * row[t], word + (out[t],) if depth < n else word, b0)

    for s0 in range(m):
        if mu[s0] > 0.0:
            rec(s0, 0, mu[s0], (), out[s0])
    return agg


def block_probabilities(chain, n):
    """P(Y1..Yn = w) for every positive-probability word, by path enumeration."""
    probs = {}
    for (word, _b0, _s), p in enumerate_paths(chain, n).items():
        probs[word] = probs.get(word, 0.0) + p
    return probs


def conditional_entropy_pair(chain, n):
    """(lower, upper) = (H(Y0|Y1..Yn, S_{n+1}), H(Y0|Y1..Yn)) in bits."""
    agg = enumerate_paths(chain, n)
    p_w = {}
    p_wb = {}
    p_ws = {}
    for (word, b0, s), p in agg.items():
        p_w[word] = p_w.get(word, 0.0) + p
        p_wb[(word, b0)] = p_wb.get((word, b0), 0.0) + p
        p_ws[(word, s)] = p_ws.get((word, s), 0.0) + p
    upper = 0.0
    for (word, _b0), p in p_wb.items():
        if p > 0.0:
            upper -= p * math.log2(p / p_w[word])
    lower = 0.0
    for (word, _b0, s), p in agg.items():
        if p > 0.0:
            lower -= p * math.log2(p / p_ws[(word, s)])
    return lower, upper
