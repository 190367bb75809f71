"""Entropy cross-check through first returns to the renewal letter.

When the smallest output letter occurs, the hidden state is forced (run
length d, shifts (-1, +1)), so past and future decouple there. The entropy
rate then equals a series over first-return cylinders

    h = -sum_r sum_w Q([r0, w, r0]) log2 Q([r0, w, r0]) + Q([r0]) log2 Q([r0])

with r0 the renewal letter and w ranging over words avoiding it. The series
is evaluated by exact breadth-first enumeration of return words, which is
exponential in the excursion length; the truncated partial sum is reported
together with the captured return mass (coverage) and is a diagnostic, not a
certified bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRenewal, ResourceLimit
from .markov import MarkovChainModel

DEFAULT_MAX_WORDS = 500_000


@dataclass(frozen=True)
class ReturnWordTable:
    """Enumerated first-return cylinders [r0, y1..yr, r0] with probabilities.

    coverage is the captured conditional return mass, nondecreasing in r_max.
    """

    entries: tuple
    coverage: float
    r_max: int
    renewal_letter: int
    base_probability: float


def _renewal_state_index(joint: MarkovChainModel) -> tuple[int, int]:
    """Index of the forced renewal state and its output letter."""
    if all(s.a == 0 and s.b == 0 for s in joint.states):
        raise DegenerateRenewal("eps = 0: the renewal letter never occurs")
    letter = int(joint.outputs.min())
    hits = np.flatnonzero(joint.outputs == letter)
    if hits.size != 1:
        raise DegenerateRenewal(
            f"letter {letter} does not force a unique hidden state"
        )
    return int(hits[0]), letter


def renewal_base_probability(joint: MarkovChainModel) -> float:
    """Stationary probability of the renewal letter; equals p_d * eps**2."""
    idx, _ = _renewal_state_index(joint)
    return float(joint.stationary[idx])


def return_word_probabilities(
    joint: MarkovChainModel,
    r_max: int,
    floor: float = 0.0,
    max_words: int = DEFAULT_MAX_WORDS,
) -> ReturnWordTable:
    """Enumerate return words up to excursion length r_max, breadth-first.

    Beliefs are propagated by transfer-operator products from the forced
    renewal state. A positive floor drops excursion prefixes whose conditional
    probability falls below it (losing coverage); exceeding max_words retained
    prefixes on any level raises ResourceLimit.
    """
    if r_max < 0:
        raise ValueError("r_max must be >= 0")
    ridx, rletter = _renewal_state_index(joint)
    mu_ren = float(joint.stationary[ridx])
    P = joint.transition
    m = P.shape[0]
    col_ren = P[:, ridx].copy()
    other_letters = sorted(set(joint.outputs.tolist()) - {rletter})
    cols = {b: np.flatnonzero(joint.outputs == b) for b in other_letters}

    words: list[tuple] = [()]
    V = np.zeros((1, m))
    V[0, ridx] = 1.0

    entries: list[tuple[tuple, float]] = []
    coverage = 0.0
    for r in range(r_max + 1):
        returns = V @ col_ren
        for w, p_ret in zip(words, returns.tolist()):
            entries.append(((rletter,) + w + (rletter,), mu_ren * p_ret))
            coverage += p_ret
        if r == r_max:
            break
        V_next = V @ P
        new_words: list[tuple] = []
        chunks: list[np.ndarray] = []
        for b in other_letters:
            Vb = V_next[:, cols[b]]
            mass = Vb.sum(axis=1)
            keep = np.flatnonzero(mass > floor) if floor > 0 else np.flatnonzero(mass > 0)
            if keep.size == 0:
                continue
            padded = np.zeros((keep.size, m))
            padded[:, cols[b]] = Vb[keep]
            chunks.append(padded)
            for i in keep.tolist():
                new_words.append(words[i] + (b,))
        if not new_words:
            V = np.zeros((0, m))
            words = []
            break
        if len(new_words) > max_words:
            raise ResourceLimit(
                f"{len(new_words)} retained excursion prefixes at length {r + 1} "
                f"exceed the cap {max_words}; coverage so far {coverage:.6f}"
            )
        V = np.vstack(chunks)
        words = new_words
    return ReturnWordTable(tuple(entries), float(coverage), r_max, rletter, mu_ren)


def renewal_entropy_estimate(
    joint: MarkovChainModel,
    r_max: int,
    floor: float = 0.0,
    max_words: int = DEFAULT_MAX_WORDS,
) -> tuple[float, float]:
    """Truncated first-return entropy series in bits, plus achieved coverage.

    The first (positive-term) sum is truncated at r_max, so the estimate is
    monotone nondecreasing in r_max; no tail extrapolation is applied.
    """
    table = return_word_probabilities(joint, r_max, floor=floor, max_words=max_words)
    total = 0.0
    for _, q in table.entries:
        if q > 0.0:
            total -= q * math.log2(q)
    base = table.base_probability
    total += base * math.log2(base)
    return total, table.coverage
