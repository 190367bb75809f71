"""Finite stationary Markov chains with per-state output letters.

Provides construction with validation (row-stochasticity, unique recurrent
class), exact stationary vectors via a dense linear solve, entropy rates in
bits per symbol, and deterministic path sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonStochastic, Reducible

ROW_SUM_TOL = 1e-9
STATIONARY_TOL = 1e-10


@dataclass(frozen=True)
class MarkovChainModel:
    """An ergodic finite Markov chain together with a state -> letter map.

    states holds opaque identifiers, transition is row-stochastic, stationary
    is the unique invariant vector, outputs[i] is the output letter of
    states[i]. Zero-probability states are pruned at construction, so every
    retained state has positive stationary mass. Instances are immutable and
    safe to share across threads.
    """

    states: tuple
    transition: np.ndarray
    stationary: np.ndarray
    outputs: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.states)

    def state_index(self, state) -> int:
        return self.states.index(state)

    def output(self, state) -> int:
        return int(self.outputs[self.state_index(state)])


def _strongly_connected_components(adj: np.ndarray) -> list[list[int]]:
    """Iterative Tarjan SCC on a boolean adjacency matrix."""
    n = adj.shape[0]
    succ = [np.flatnonzero(adj[i]).tolist() for i in range(n)]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while pi < len(succ[v]):
                w = succ[v][pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def _recurrent_classes(transition: np.ndarray) -> list[list[int]]:
    """SCCs with no positive-probability edge leaving them."""
    adj = transition > 0.0
    comps = _strongly_connected_components(adj)
    comp_of = np.empty(adj.shape[0], dtype=int)
    for ci, comp in enumerate(comps):
        comp_of[comp] = ci
    recurrent = []
    for ci, comp in enumerate(comps):
        rows = adj[comp]
        leaves = np.flatnonzero(rows.any(axis=0))
        if all(comp_of[j] == ci for j in leaves):
            recurrent.append(comp)
    return recurrent


def _solve_stationary(P: np.ndarray) -> np.ndarray:
    """Solve mu P = mu, sum(mu) = 1 on an irreducible chain via least squares."""
    n = P.shape[0]
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    mu, *_ = np.linalg.lstsq(A, b, rcond=None)
    mu = np.where(np.abs(mu) < 1e-14, 0.0, mu)
    if mu.min() < 0:
        raise NonStochastic(f"stationary solve produced negative mass {mu.min():.3e}")
    mu = mu / mu.sum()
    resid = np.abs(mu @ P - mu).max()
    if resid > STATIONARY_TOL:
        raise NonStochastic(f"stationary residual {resid:.3e} exceeds {STATIONARY_TOL}")
    return mu


def build_chain(states, transition, output_map) -> MarkovChainModel:
    """Build a validated chain model, pruning states with zero stationary mass.

    transition must be square with rows summing to 1 within 1e-9, and the
    positive-transition graph must have a unique recurrent class. Raises
    NonStochastic or Reducible otherwise.
    """
    states = list(states)
    P = np.array(transition, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] != len(states):
        raise NonStochastic("transition matrix must be square and match the state list")
    if P.min() < 0:
        raise NonStochastic("negative transition probability")
    row_err = np.abs(P.sum(axis=1) - 1.0).max()
    if row_err > ROW_SUM_TOL:
        raise NonStochastic(f"row sums off by {row_err:.3e} (> {ROW_SUM_TOL})")

    recurrent = _recurrent_classes(P)
    if len(recurrent) != 1:
        raise Reducible(f"{len(recurrent)} recurrent classes found; need exactly one")
    keep = recurrent[0]

    P_kept = P[np.ix_(keep, keep)]
    # Rows inside a recurrent class keep their full mass; renormalize rounding dust.
    P_kept = P_kept / P_kept.sum(axis=1, keepdims=True)
    mu = _solve_stationary(P_kept)
    kept_states = tuple(states[i] for i in keep)
    outputs = np.array([int(output_map(s)) for s in kept_states], dtype=int)

    P_kept.flags.writeable = False
    mu.flags.writeable = False
    outputs.flags.writeable = False
    return MarkovChainModel(kept_states, P_kept, mu, outputs)


def entropy_rate_markov(chain: MarkovChainModel) -> float:
    """Entropy rate of the chain itself, -sum_s mu(s) sum_t P(s,t) log2 P(s,t), in bits."""
    P = chain.transition
    mu = chain.stationary
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(P > 0, P * np.log2(np.where(P > 0, P, 1.0)), 0.0)
    return float(-(mu @ plogp.sum(axis=1)))


def sample_path(chain: MarkovChainModel, n: int, seed: int) -> np.ndarray:
    """Sample n output letters, deterministically for a fixed (chain, n, seed).

    The initial state is drawn from the stationary vector, so the emitted
    process is stationary from the first letter.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    cum_rows = np.cumsum(chain.transition, axis=1)
    cum_init = np.cumsum(chain.stationary)
    u = rng.random(n)
    path = np.empty(n, dtype=int)
    s = int(np.searchsorted(cum_init, u[0], side="right"))
    s = min(s, chain.n_states - 1)
    path[0] = s
    for t in range(1, n):
        s = int(np.searchsorted(cum_rows[s], u[t], side="right"))
        s = min(s, chain.n_states - 1)
        path[t] = s
    return chain.outputs[path]
