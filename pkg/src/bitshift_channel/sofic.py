"""Automata analysis of the channel output subshift.

The output sequences form a sofic shift: they are exactly the label sequences
of bi-infinite paths through the hidden-state graph, where every vertex
(x, a, b) emits the letter x + a - b. The graph has in- and out-degree >= 1 at
every vertex, so a finite word occurs in some bi-infinite output iff it labels
some finite path, which the determinized (subset-construction) presentation
decides in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SHIFTS, HiddenState, output_alphabet
from .errors import BadParams, ConvergenceFailure, LetterOutOfRange
from .markov import _strongly_connected_components


@dataclass(frozen=True)
class LabeledPresentation:
    """Finite labeled graph presenting a sofic shift.

    edges are (source_index, target_index, label) triples; every vertex must
    have at least one outgoing and one incoming edge so that finite paths
    extend to bi-infinite ones.
    """

    vertices: tuple
    edges: tuple
    letters: tuple

    def __post_init__(self):
        n = len(self.vertices)
        out_deg = [0] * n
        in_deg = [0] * n
        letters = set(self.letters)
        for s, t, lab in self.edges:
            out_deg[s] += 1
            in_deg[t] += 1
            if lab not in letters:
                raise LetterOutOfRange(f"edge label {lab} not in the alphabet")
        if n and (min(out_deg) == 0 or min(in_deg) == 0):
            raise ValueError("every vertex needs in- and out-degree >= 1")


@dataclass(frozen=True)
class DeterministicPresentation:
    """Label-deterministic presentation from the subset construction.

    trans has one row per subset-state plus a trailing sink row; entry
    [q, j] is the successor on letter letters[j] (the sink index if none).
    adjacency[i, j] counts the letters leading from subset-state i to j.
    """

    letters: tuple
    subset_states: tuple
    trans: np.ndarray
    adjacency: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.subset_states)

    @property
    def sink(self) -> int:
        return self.n_states

    @property
    def initial(self) -> int:
        return 0


def presentation(d: int, k: int) -> LabeledPresentation:
    """Labeled graph over all hidden states (x, a, b), independent of eps.

    Edges (x,a,b) -> (x',a',b') exist iff a' = b (the shared boundary shift),
    labeled by the target's output letter x' + a' - b'.
    """
    if d < 2 or k <= d:
        raise BadParams(f"need d >= 2 and k > d, got (d, k) = ({d}, {k})")
    vertices = tuple(
        HiddenState(x, a, b) for x in range(d, k + 1) for a in SHIFTS for b in SHIFTS
    )
    index = {v: i for i, v in enumerate(vertices)}
    edges = []
    for v in vertices:
        for x2 in range(d, k + 1):
            for b2 in SHIFTS:
                t = HiddenState(x2, v.b, b2)
                edges.append((index[v], index[t], x2 + v.b - b2))
    return LabeledPresentation(vertices, tuple(edges), tuple(output_alphabet(d, k)))


def determinize(pres: LabeledPresentation) -> DeterministicPresentation:
    """Subset construction from the all-vertices set; accepts exactly the words of the shift."""
    L = len(pres.letters)
    lidx = {v: j for j, v in enumerate(pres.letters)}
    succ: list[list[list[int]]] = [[[] for _ in range(L)] for _ in pres.vertices]
    for s, t, lab in pres.edges:
        succ[s][lidx[lab]].append(t)

    init = frozenset(range(len(pres.vertices)))
    ids: dict[frozenset, int] = {init: 0}
    order = [init]
    rows: list[list[int]] = []
    queue = [init]
    while queue:
        current = queue.pop(0)
        row = []
        for j in range(L):
            nxt = frozenset(t for v in current for t in succ[v][j])
            if not nxt:
                row.append(-1)
                continue
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            row.append(ids[nxt])
        rows.append(row)

    n = len(order)
    trans = np.full((n + 1, L), n, dtype=np.int64)
    adjacency = np.zeros((n, n), dtype=np.int64)
    for q, row in enumerate(rows):
        for j, t in enumerate(row):
            if t >= 0:
                trans[q, j] = t
                adjacency[q, t] += 1
    trans.flags.writeable = False
    adjacency.flags.writeable = False
    return DeterministicPresentation(tuple(pres.letters), tuple(order), trans, adjacency)


def _letter_indices(dfa: DeterministicPresentation, word) -> list[int]:
    lidx = {v: j for j, v in enumerate(dfa.letters)}
    out = []
    for letter in word:
        if letter not in lidx:
            raise LetterOutOfRange(f"letter {letter} not in alphabet {list(dfa.letters)}")
        out.append(lidx[letter])
    return out

def word_admissible(dfa: DeterministicPresentation, word) -> bool:
    """True iff the word occurs in some bi-infinite output sequence."""
    q = dfa.initial
    for j in _letter_indices(dfa, word):
        q = int(dfa.trans[q, j])
        if q == dfa.sink:
            return False
    return True


def minimal_forbidden_words(dfa: DeterministicPresentation, max_len: int) -> list[tuple]:
    """All forbidden words of length <= max_len whose proper subwords are admissible.

    A candidate w = v + (b,) with v admissible is minimal iff w is forbidden
    and w[1:] is admissible: every other proper subword sits inside v or
    inside w[1:], and subwords of admissible words are admissible. Levels are
    swept with vectorized transition gathers.
    """
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    T = dfa.trans
    sink = dfa.sink
    L = len(dfa.letters)
    letters = np.array(dfa.letters)

    results: list[tuple] = []
    first = T[dfa.initial]
    for j in np.flatnonzero(first == sink):
        results.append((int(letters[j]),))
    alive = first != sink
    qf = first[alive]
    qs = np.full(qf.shape, dfa.initial, dtype=np.int64)
    history = [(np.flatnonzero(alive), np.full(qf.shape, -1, dtype=np.int64))]

    def word_of(level: int, i: int) -> tuple:
        out = []
        for lev in range(level, 0, -1):
            lett, parents = history[lev - 1]
            out.append(int(letters[lett[i]]))
            i = int(parents[i])
        return tuple(reversed(out))

    for n in range(2, max_len + 1):
        if qf.size == 0:
            break
        qf_next = T[qf]
        qs_next = T[qs]
        minimal = (qf_next == sink) & (qs_next != sink)
        for i, j in zip(*np.nonzero(minimal)):
            results.append(word_of(n - 1, int(i)) + (int(letters[j]),))
        alive = qf_next != sink
        parents, lett = np.nonzero(alive)
        qf = qf_next[alive]
        qs = qs_next[alive]
        history.append((lett.astype(np.int64), parents.astype(np.int64)))
    return sorted(results)


def count_words(dfa: DeterministicPresentation, n: int) -> int:
    """Number of admissible length-n words, by walking the adjacency counts (exact integers)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    A = dfa.adjacency.tolist()
    v = [0] * dfa.n_states
    v[dfa.initial] = 1
    for _ in range(n):
        v = [sum(v[i] * A[i][j] for i in range(dfa.n_states)) for j in range(dfa.n_states)]
    return sum(v)


def _essential(adjacency: np.ndarray) -> np.ndarray:
    """Restrict to states with both in- and out-degree > 0, iterated to a fixed point."""
    A = adjacency
    while A.shape[0]:
        alive = (A.sum(axis=1) > 0) & (A.sum(axis=0) > 0)
        if alive.all():
            break
        idx = np.flatnonzero(alive)
        A = A[np.ix_(idx, idx)]
    return A


def _perron_radius(B: np.ndarray, tol: float, max_iter: int) -> float:
    """Spectral radius of a nonnegative irreducible block by power iteration.

    Iterates on B + I, which is primitive whenever B is irreducible, so the
    loop converges geometrically even for periodic adjacency blocks.
    """
    n = B.shape[0]
    if n == 1 and B[0, 0] == 0:
        return 0.0
    v = np.full(n, 1.0 / n)
    lam = 0.0
    for _ in range(max_iter):
        w = B @ v + v
        s = float(w.sum())
        w /= s
        if abs(s - lam) <= tol * max(s, 1.0):
            return s - 1.0
        lam = s
        v = w
    raise ConvergenceFailure(
        f"power iteration did not reach rel. tol {tol} in {max_iter} iterations",
        iterate=lam - 1.0,
    )


def topological_entropy(
    dfa: DeterministicPresentation, tol: float = 1e-12, max_iter: int = 200_000
) -> float:
    """log2 of the Perron eigenvalue of the essential part of the adjacency matrix.

    Computed SCC by SCC: the growth rate of the full graph is the maximum of
    the spectral radii of its strongly connected blocks.
    """
    A = _essential(dfa.adjacency.astype(float))
    if A.shape[0] == 0:
        return 0.0
    best = 0.0
    for comp in _strongly_connected_components(A > 0):
        block = A[np.ix_(comp, comp)]
        best = max(best, _perron_radius(block, tol, max_iter))
    if best <= 0.0:
        return 0.0
    return float(np.log2(best))
