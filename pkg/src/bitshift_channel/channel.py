"""The bit-shift (jitter) channel as a function of a finite Markov chain.

A (d,k) run-length source emits iid lengths in {d,...,k}. Each transition is
detected one unit early, on time, or one unit late with probabilities
(eps, 1-2eps, eps), and consecutive runs share their boundary shift. The
observed length is y = x + a - b where a is the left shift and b the right
shift of the run, so the output letter lives in {d-2,...,k+2}. The hidden
state (x, a, b) is Markov and the output process is a function of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BadParams, BadProbabilities, DomainError
from .markov import MarkovChainModel, build_chain

SHIFTS = (-1, 0, 1)


class HiddenState(NamedTuple):
    """Hidden channel state: run length x with left shift a and right shift b."""

    x: int
    a: int
    b: int


@dataclass(frozen=True)
class SourceDist:
    """iid run-length distribution p_d..p_k on {d,...,k}."""

    d: int
    k: int
    p: np.ndarray

    @property
    def letters(self) -> list[int]:
        return list(range(self.d, self.k + 1))

    def prob(self, length: int) -> float:
        return float(self.p[length - self.d])

    def entropy(self) -> float:
        """Shannon entropy -sum p log2 p in bits per run."""
        p = self.p[self.p > 0]
        return float(-(p * np.log2(p)).sum())


@dataclass(frozen=True)
class JitterParams:
    """Per-transition shift distribution parameter, 0 <= eps <= 1/2."""

    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= 0.5:
            raise DomainError(f"eps={self.eps} outside [0, 1/2]")

    def shift_prob(self, w: int) -> float:
        if w == 0:
            return 1.0 - 2.0 * self.eps
        if w in (-1, 1):
            return self.eps
        return 0.0


def _check_dk(d: int, k: int) -> None:
    if d < 2 or k <= d:
        raise BadParams(f"need d >= 2 and k > d, got (d, k) = ({d}, {k})")


def make_source(d: int, k: int, probs=None, geometric: float | None = None) -> SourceDist:
    """Build a run-length distribution on {d,...,k}.

    Exactly one of probs / geometric may be given; with neither the source is
    uniform. geometric=g yields p_l = p_d * g**(l-d) normalized to sum 1
    (g=1 is the uniform limit).
    """
    _check_dk(d, k)
    if probs is not None and geometric is not None:
        raise BadProbabilities("give explicit probabilities or a geometric ratio, not both")
    n = k - d + 1
    if probs is not None:
        p = np.array(probs, dtype=float)
        if p.shape != (n,):
            raise BadProbabilities(f"expected {n} probabilities for lengths {d}..{k}")
        if p.min() < 0:
            raise BadProbabilities("negative probability")
        total = p.sum()
        if total <= 0 or not math.isfinite(total):
            raise BadProbabilities("probabilities cannot be normalized")
        p = p / total
    elif geometric is not None:
        g = float(geometric)
        if g <= 0 or not math.isfinite(g):
            raise BadProbabilities(f"geometric ratio must be positive, got {g}")
        if g == 1.0:
            p = np.full(n, 1.0 / n)
        else:
            # p_d = (1-g) / (1-g**n) normalizes the truncated geometric tail.
            p = g ** np.arange(n)
            p = p * (1.0 - g) / (1.0 - g**n)
    else:
        p = np.full(n, 1.0 / n)
    p.flags.writeable = False
    return SourceDist(d, k, p)


def jitter_entropy(eps: float) -> float:
    """Entropy of the per-transition shift, -2e log2 e - (1-2e) log2(1-2e), in bits."""
    if not 0.0 <= eps <= 0.5:
        raise DomainError(f"eps={eps} outside [0, 1/2]")
    h = 0.0
    if eps > 0:
        h -= 2.0 * eps * math.log2(eps)
    rest = 1.0 - 2.0 * eps
    if rest > 0:
        h -= rest * math.log2(rest)
    return h


def output_alphabet(d: int, k: int) -> list[int]:
    """Output letters {d-2,...,k+2} in increasing order."""
    _check_dk(d, k)
    return list(range(d - 2, k + 3))


def build_joint_chain(source: SourceDist, jitter: JitterParams) -> MarkovChainModel:
    """Joint hidden chain on states (x, a, b) with output letter x + a - b.

    Transitions ((x,a,b) -> (x',a',b')) = 1[a'=b] * p(x') * j(b'): the right
    shift of one run is the left shift of the next, and fresh run length and
    boundary shift are drawn independently. Zero-probability states (eps at 0
    or 1/2, or zero source mass) never enter the state list.
    """
    jp = [jitter.shift_prob(w) for w in SHIFTS]
    states = [
        HiddenState(x, a, b)
        for x in source.letters
        if source.prob(x) > 0
        for a in SHIFTS
        if jitter.shift_prob(a) > 0
        for b in SHIFTS
        if jitter.shift_prob(b) > 0
    ]
    index = {s: i for i, s in enumerate(states)}
    m = len(states)
    P = np.zeros((m, m))
    for s in states:
        i = index[s]
        for x2 in source.letters:
            px = source.prob(x2)
            if px <= 0:
                continue
            for b2 in SHIFTS:
                jb = jitter.shift_prob(b2)
                if jb <= 0:
                    continue
                P[i, index[HiddenState(x2, s.b, b2)]] = px * jb
    return build_chain(states, P, lambda s: s.x + s.a - s.b)


def output_marginal(chain: MarkovChainModel) -> dict[int, float]:
    """Stationary law of the output letter, P(Y=y) = sum of mu over emitting states."""
    law: dict[int, float] = {}
    for letter, mass in zip(chain.outputs.tolist(), chain.stationary.tolist()):
        law[letter] = law.get(letter, 0.0) + mass
    return dict(sorted(law.items()))
