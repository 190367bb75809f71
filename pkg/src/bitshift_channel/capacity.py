"""Mutual information curves and capacity lower bounds.

Per run, the mutual information between channel input and output is the
output entropy rate minus the jitter entropy, so a certified interval for the
output entropy gives a certified MI interval at no extra cost. The capacity
search maximizes the certified lower end over iid input distributions only,
which yields an honest capacity lower bound (the true supremum runs over all
translation-invariant inputs and is open).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import JitterParams, SourceDist, build_joint_chain, jitter_entropy, make_source
from .errors import BitshiftError
from .refine import EntropyInterval, run_bounds


@dataclass(frozen=True)
class MiResult:
    """Certified mutual information interval at one jitter level, bits per run."""

    eps: float
    mi_lower: float
    mi_upper: float
    h_out: EntropyInterval
    h_jitter: float


@dataclass(frozen=True)
class SweepPoint:
    """One grid point of an eps sweep; error is set when the point failed."""

    eps: float
    result: MiResult | None
    error: str | None

    @property
    def ok(self) -> bool:
        return self.result is not None


@dataclass(frozen=True)
class CapacitySearchConfig:
    """Budget and start points for the derivative-free capacity search."""

    evaluations: int = 200
    tol_bits: float | None = None
    max_cells: int | None = 20_000
    initial_sources: tuple = ()
    spread: float = 0.5
    seed: int = 0
    f_tol: float = 1e-9


@dataclass(frozen=True)
class CapacitySearchResult:
    best_source: SourceDist
    best: MiResult
    evaluations: int
    trace: tuple


def mutual_information(
    source: SourceDist,
    eps: float,
    tol_bits: float | None = None,
    max_cells: int | None = None,
    strategy: str = "greedy",
) -> MiResult:
    """Certified MI interval: run the entropy engine, subtract the jitter entropy."""
    joint = build_joint_chain(source, JitterParams(eps))
    h_out = run_bounds(joint, strategy, tol_bits=tol_bits, max_cells=max_cells)
    hj = jitter_entropy(eps)
    return MiResult(eps, h_out.lower - hj, h_out.upper - hj, h_out, hj)


def _sweep_point(args) -> SweepPoint:
    source, eps, tol_bits, max_cells, strategy = args
    try:
        return SweepPoint(eps, mutual_information(source, eps, tol_bits, max_cells, strategy), None)
    except BitshiftError as exc:
        return SweepPoint(eps, None, f"{type(exc).__name__}: {exc}")


def mi_sweep(
    source: SourceDist,
    eps_grid,
    tol_bits: float | None = None,
    max_cells: int | None = None,
    strategy: str = "greedy",
    workers: int | None = None,
) -> list[SweepPoint]:
    """One MiResult per grid point; failed points are marked, not fatal.

    Points are independent; with workers > 1 they are evaluated in separate
    processes, and rows are returned in grid order either way.
    """
    jobs = [(source, float(e), tol_bits, max_cells, strategy) for e in eps_grid]
    if workers is None:
        workers = int(os.environ.get("BITSHIFT_THREADS", "1"))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(job) for job in jobs]


def _to_params(p: np.ndarray) -> np.ndarray:
    q = np.maximum(p, 1e-12)
    q = q / q.sum()
    return np.log(q[1:]) - math.log(q[0])


def _to_probs(theta: np.ndarray) -> np.ndarray:
    z = np.concatenate(([0.0], theta))
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


class _BudgetDone(Exception):
    pass


def capacity_lower_bound(
    d: int, k: int, eps: float, cfg: CapacitySearchConfig | None = None
) -> CapacitySearchResult:
    """Maximize the certified MI lower bound over iid inputs on {d,...,k}.

    Nelder-Mead style reflect/expand/contract/shrink steps run on a softmax
    parameterization of the probability simplex, so iterates stay strictly
    interior. The incumbent is the best evaluated point, never an
    extrapolation, and its interval is returned unchanged; the result is a
    true capacity lower bound at any budget. Deterministic for a fixed seed.
    """
    cfg = cfg or CapacitySearchConfig()
    starts = list(cfg.initial_sources) or [
        make_source(d, k, geometric=0.658),
        make_source(d, k),
    ]
    dim = k - d
    rng = np.random.default_rng(cfg.seed)

    evaluations = 0
    trace: list[tuple] = []
    incumbent: tuple[float, SourceDist, MiResult] | None = None

    def objective(theta: np.ndarray) -> float:
        nonlocal evaluations, incumbent
        if evaluations >= cfg.evaluations:
            raise _BudgetDone
        p = _to_probs(theta)
        src = make_source(d, k, probs=p)
        res = mutual_information(src, eps, cfg.tol_bits, cfg.max_cells)
        evaluations += 1
        if incumbent is None or res.mi_lower > incumbent[0]:
            incumbent = (res.mi_lower, src, res)
        trace.append((tuple(src.p.tolist()), res.mi_lower, incumbent[0]))
        return -res.mi_lower

    simplex = [_to_params(np.asarray(s.p, dtype=float)) for s in starts]
    base = simplex[0]
    i = 0
    while len(simplex) < dim + 1:
        step = np.zeros(dim)
        step[i % dim] = cfg.spread * (1.0 + 0.01 * rng.standard_normal())
        simplex.append(base + step)
        i += 1
    simplex = simplex[: dim + 1]

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    try:
        fvals = [objective(theta) for theta in simplex]
        while True:
            order = sorted(range(len(simplex)), key=lambda idx: (fvals[idx], idx))
            simplex = [simplex[idx] for idx in order]
            fvals = [fvals[idx] for idx in order]
            if fvals[-1] - fvals[0] < cfg.f_tol:
                break
            centroid = np.mean(simplex[:-1], axis=0)
            reflected = centroid + alpha * (centroid - simplex[-1])
            fr = objective(reflected)
            if fr < fvals[0]:
                expanded = centroid + gamma * (reflected - centroid)
                fe = objective(expanded)
                if fe < fr:
                    simplex[-1], fvals[-1] = expanded, fe
                else:
                    simplex[-1], fvals[-1] = reflected, fr
            elif fr < fvals[-2]:
                simplex[-1], fvals[-1] = reflected, fr
            else:
                contracted = centroid + rho * (simplex[-1] - centroid)
                fc = objective(contracted)
                if fc < fvals[-1]:
                    simplex[-1], fvals[-1] = contracted, fc
                else:
                    for idx in range(1, len(simplex)):
                        simplex[idx] = simplex[0] + sigma * (simplex[idx] - simplex[0])
                        fvals[idx] = objective(simplex[idx])
    except _BudgetDone:
        pass

    if incumbent is None:
        raise BitshiftError("capacity search made no evaluations")
    return CapacitySearchResult(incumbent[1], incumbent[2], evaluations, tuple(trace))
