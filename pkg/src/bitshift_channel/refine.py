"""Certified entropy-rate bounds for functions of Markov chains.

The output process Y is a deterministic letter-by-letter function of a hidden
Markov chain. For any partition of sequence space into cylinders [w],

    sum_w P(w) H(Y0 | w, S_{|w|+1})  <=  h(Y)  <=  sum_w P(w) H(Y0 | w),

where S_{n+1} is the full hidden state one step past the observed word. Both
sums converge onto h(Y) as the partition refines. A cylinder is refined by
replacing it with its one-letter extensions; the greedy strategy always splits
the leaf with the largest contribution gap, the uniform strategy always splits
a shortest leaf (which reproduces the classical depth-n conditional-entropy
bounds at saturation).

Each leaf carries the normalized joint law G(b, s) = P(Y0=b, S_n=s | w) plus a
scalar weight P(w), which keeps deep cylinders away from underflow. A single
transfer step G @ P yields both the lower-bound conditioning and all children.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import EmptyPartition, NotALeaf, ResourceLimit
from .markov import MarkovChainModel

STRATEGIES = ("greedy", "uniform")


class _Kahan:
    """Compensated accumulator; keeps long refinement runs reproducible."""

    __slots__ = ("_s", "_c")

    def __init__(self, value: float = 0.0):
        self._s = value
        self._c = 0.0

    def add(self, x: float) -> None:
        y = x - self._c
        t = self._s + y
        self._c = (t - self._s) - y
        self._s = t

    @property
    def value(self) -> float:
        return self._s


def _entropy_bits(a: np.ndarray) -> float:
    """-sum x log2 x over positive entries of a (any shape)."""
    a = a[a > 0.0]
    if a.size == 0:
        return 0.0
    return float(-(a * np.log2(a)).sum())


class _TransferEngine:
    """Letter-blocked transfer operators for one joint chain.

    States are permuted so that states sharing an output letter are
    contiguous; every cylinder table is then a (letters x block) array and one
    matrix product per step moves it forward.
    """

    def __init__(self, chain: MarkovChainModel):
        order = np.argsort(chain.outputs, kind="stable")
        self.P = np.ascontiguousarray(chain.transition[order][:, order])
        self.mu = chain.stationary[order].copy()
        self.out = chain.outputs[order]
        self.states = tuple(chain.states[i] for i in order)
        uniq, starts = np.unique(self.out, return_index=True)
        self.letters = [int(v) for v in uniq]
        self.L = len(self.letters)
        self.starts = starts
        stops = np.append(starts[1:], self.out.size)
        self.blocks = [slice(int(a), int(b)) for a, b in zip(starts, stops)]
        self.letter_index = {v: j for j, v in enumerate(self.letters)}
        self.P_rows = [np.ascontiguousarray(self.P[blk]) for blk in self.blocks]
        # Joint law of (Y0, S1); also the one-step table of the empty word.
        self.A0 = np.add.reduceat(self.mu[:, None] * self.P, starts, axis=0)

    def children(self, T: np.ndarray, weight: float):
        """Split a one-step joint T(b0, s') into per-letter children.

        Returns (stats, dropped) with stats a list of tuples
        (letter_index, weight, h, h1, table); h and h1 are already weighted
        contributions. Children with zero probability are dropped and counted.
        """
        R = np.add.reduceat(T, self.starts, axis=1)
        q = R.sum(axis=0)
        stats = []
        dropped = 0
        for j in range(self.L):
            qj = float(q[j])
            if qj <= 0.0:
                dropped += 1
                continue
            Gj = T[:, self.blocks[j]] / qj
            h_cond = _entropy_bits(R[:, j] / qj)
            Tj = Gj @ self.P_rows[j]
            # H(Y0 | w, S_{n+1}) = H(Y0, S_{n+1} | w) - H(S_{n+1} | w)
            h1_cond = _entropy_bits(Tj) - _entropy_bits(Tj.sum(axis=0))
            wj = weight * qj
            stats.append((j, wj, wj * h_cond, wj * h1_cond, Gj))
        return stats, dropped

    def fold(self, word: tuple):
        """Normalized table of (Y0, S_n) given the word, columns = last-letter block.

        Returns (G, weight); (None, 0.0) if the cylinder has zero probability.
        """
        j = self.letter_index.get(word[0])
        if j is None:
            return None, 0.0
        U = self.A0[:, self.blocks[j]]
        w = float(U.sum())
        if w <= 0.0:
            return None, 0.0
        G = U / w
        prev = j
        for letter in word[1:]:
            j = self.letter_index.get(letter)
            if j is None:
                return None, 0.0
            T = G @ self.P[self.blocks[prev], self.blocks[j]]
            q = float(T.sum())
            if q <= 0.0:
                return None, 0.0
            G = T / q
            w *= q
            prev = j
        return G, w


@dataclass(slots=True)
class CylinderStat:
    """One partition leaf: the cylinder word, its probability, and its two
    weighted entropy contributions (upper h, lower h1, gap = h - h1)."""

    word: tuple
    weight: float
    h: float
    h1: float
    gap: float


@dataclass(frozen=True)
class EntropyInterval:
    """Certified sandwich lower <= h(Y) <= upper, in bits per symbol."""

    lower: float
    upper: float
    cells: int
    strategy: str
    converged: bool

    @property
    def gap(self) -> float:
        return self.upper - self.lower


class PartitionState:
    """Current cylinder partition with greedy/uniform priority queues.

    Leaves live in self.leaves (word -> CylinderStat). Heap entries are
    immutable; a leaf's contributions never change once computed, leaves are
    only removed by refinement. Ties break on the lexicographically smallest
    word, so runs are deterministic.
    """

    def __init__(self, joint: MarkovChainModel):
        self._engine = _TransferEngine(joint)
        self.joint = joint
        self.leaves: dict[tuple, CylinderStat] = {}
        self._gap_heap: list = []
        self._len_heap: list = []
        self._sum_h = _Kahan()
        self._sum_h1 = _Kahan()
        self.dropped_children = 0
        stats, dropped = self._engine.children(self._engine.A0, 1.0)
        self.dropped_children += dropped
        for j, w, h, h1, _ in stats:
            self._insert((self._engine.letters[j],), w, h, h1)

    @property
    def cells(self) -> int:
        return len(self.leaves)

    @property
    def sum_h(self) -> float:
        return self._sum_h.value

    @property
    def sum_h1(self) -> float:
        return self._sum_h1.value

    @property
    def gap(self) -> float:
        return self.sum_h - self.sum_h1

    def _insert(self, word: tuple, weight: float, h: float, h1: float) -> None:
        stat = CylinderStat(word, weight, h, h1, h - h1)
        self.leaves[word] = stat
        heapq.heappush(self._gap_heap, (-stat.gap, word))
        heapq.heappush(self._len_heap, (len(word), word))
        self._sum_h.add(h)
        self._sum_h1.add(h1)

    def select_next(self, strategy: str) -> tuple:
        """Leaf to refine next: max gap (greedy) or shortest word (uniform)."""
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        if not self.leaves:
            raise EmptyPartition("no leaves to select")
        heap = self._gap_heap if strategy == "greedy" else self._len_heap
        while heap and heap[0][1] not in self.leaves:
            heapq.heappop(heap)
        if not heap:
            raise EmptyPartition("no leaves to select")
        return heap[0][1]

    def refine_leaf(self, word) -> "PartitionState":
        """Replace the leaf [word] by its positive-probability one-letter extensions."""
        word = tuple(word)
        stat = self.leaves.pop(word, None)
        if stat is None:
            raise NotALeaf(f"{word} is not a current leaf")
        G, _ = self._engine.fold(word)
        j = self._engine.letter_index[word[-1]]
        T = G @ self._engine.P_rows[j]
        stats, dropped = self._engine.children(T, stat.weight)
        self.dropped_children += dropped
        self._sum_h.add(-stat.h)
        self._sum_h1.add(-stat.h1)
        for j2, w2, h, h1, _ in stats:
            self._insert(word + (self._engine.letters[j2],), w2, h, h1)
        return self

    def cylinder_table(self, word):
        """Recompute a leaf table: (normalized joint over (Y0, S_n), column states)."""
        G, _ = self._engine.fold(tuple(word))
        if G is None:
            return None, ()
        blk = self._engine.blocks[self._engine.letter_index[word[-1]]]
        return G, self._engine.states[blk]

    def interval(self, strategy: str, converged: bool) -> EntropyInterval:
        """Report the current sandwich, re-summed leaf-by-leaf in lexicographic order."""
        lo = _Kahan()
        hi = _Kahan()
        for word in sorted(self.leaves):
            stat = self.leaves[word]
            lo.add(stat.h1)
            hi.add(stat.h)
        return EntropyInterval(lo.value, hi.value, self.cells, strategy, converged)


def root_partition(joint: MarkovChainModel) -> PartitionState:
    """Partition into the positive-probability length-1 cylinders."""
    return PartitionState(joint)


def refine_leaf(partition: PartitionState, word) -> PartitionState:
    return partition.refine_leaf(word)


def select_next(partition: PartitionState, strategy: str) -> tuple:
    return partition.select_next(strategy)


def run_bounds(
    joint: MarkovChainModel,
    strategy: str,
    tol_bits: float | None = None,
    max_cells: int | None = None,
    trace: list | None = None,
    selection_log: list | None = None,
) -> EntropyInterval:
    """Refine until the gap drops to tol_bits or the cell budget is reached.

    Exhausting the cell budget is not an error: the certified interval is
    returned with converged=False. If trace is a list it receives one
    (cells, lower, upper) row for the root partition and after every
    refinement; selection_log receives (word, gap) per refinement.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if tol_bits is None and max_cells is None:
        raise ValueError("a stopping rule is required: tol_bits and/or max_cells")
    if tol_bits is not None and tol_bits <= 0:
        raise ValueError("tol_bits must be positive")
    part = root_partition(joint)
    if max_cells is not None and max_cells < part.cells:
        raise ValueError(f"max_cells must be at least the root size {part.cells}")
    if trace is not None:
        trace.append((part.cells, part.sum_h1, part.sum_h))
    converged = False
    while True:
        if tol_bits is not None and part.gap <= tol_bits:
            converged = True
            break
        if max_cells is not None and part.cells >= max_cells:
            break
        word = part.select_next(strategy)
        if selection_log is not None:
            selection_log.append((word, part.leaves[word].gap))
        part.refine_leaf(word)
        if trace is not None:
            trace.append((part.cells, part.sum_h1, part.sum_h))
    return part.interval(strategy, converged)


def birch_profile(
    joint: MarkovChainModel, n_max: int, max_cylinders: int = 20_000_000
) -> list[tuple[float, float]]:
    """Exact depth-n conditional-entropy bounds for every n = 1..n_max.

    Entry n-1 is (lower, upper) = (H(Y0|Y1..Yn, S_{n+1}), H(Y0|Y1..Yn)),
    obtained by summing over all positive-probability length-n cylinders in
    one depth-first sweep. Raises ResourceLimit if more than max_cylinders
    cylinder tables would be produced.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    engine = _TransferEngine(joint)
    acc = [(_Kahan(), _Kahan()) for _ in range(n_max + 1)]
    created = 0
    stack: list = []

    def _expand(T, weight, depth):
        nonlocal created
        stats, _ = engine.children(T, weight)
        created += len(stats)
        if created > max_cylinders:
            raise ResourceLimit(
                f"more than {max_cylinders} cylinders at depth <= {depth}"
            )
        a_h, a_h1 = acc[depth]
        for j, w, h, h1, G in stats:
            a_h.add(h)
            a_h1.add(h1)
            if depth < n_max:
                stack.append((depth, j, w, G))

    _expand(engine.A0, 1.0, 1)
    while stack:
        depth, j, w, G = stack.pop()
        _expand(G @ engine.P_rows[j], w, depth + 1)
    return [(acc[n][1].value, acc[n][0].value) for n in range(1, n_max + 1)]


def birch_bounds(
    joint: MarkovChainModel, n: int, max_cylinders: int = 20_000_000
) -> tuple[float, float]:
    """The depth-n sandwich (lower, upper); equals uniform refinement saturated at depth n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return birch_profile(joint, n, max_cylinders=max_cylinders)[-1]


class CylinderCalculator:
    """Single-cylinder queries against one joint chain (probabilities, tables)."""

    def __init__(self, joint: MarkovChainModel):
        self._engine = _TransferEngine(joint)

    def probability(self, word) -> float:
        """P(Y1..Yn = word); 0.0 for letters the chain never emits."""
        word = tuple(word)
        if not word:
            return 1.0
        _, w = self._engine.fold(word)
        return w

    def table(self, word):
        """Normalized joint over (Y0, S_n) given the word, plus column states."""
        word = tuple(word)
        G, _ = self._engine.fold(word)
        if G is None:
            return None, ()
        blk = self._engine.blocks[self._engine.letter_index[word[-1]]]
        return G, self._engine.states[blk]

    @property
    def letters(self) -> list[int]:
        return list(self._engine.letters)
