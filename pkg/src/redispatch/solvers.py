"""Classical QUBO samplers: exhaustive search, tabu search, simulated annealing.

All samplers are deterministic for a fixed seed and iteration budget, track
the best score ever visited, and share the O(degree) single-flip score update
implemented by incremental_delta.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .qubo import Qubo

__all__ = [
    "TooLargeError",
    "Budget",
    "SolveRequest",
    "SolveResult",
    "incremental_delta",
    "brute_force",
    "tabu_search",
    "simulated_annealing",
    "write_trace_csv",
]

BRUTE_FORCE_LIMIT = 24


class TooLargeError(ValueError):
    """Exhaustive enumeration was requested beyond the hard dimension cap."""


@dataclass(frozen=True)
class Budget:
    """Stopping rule shared by the iterative samplers.

    max_iterations bounds attempted flips (sweeps * dim for annealing);
    time_limit is wall-clock seconds checked between iterations.  Runs capped
    by time alone are not reproducible; use max_iterations when byte-stable
    outputs matter.
    """

    max_iterations: int = 100_000
    time_limit: float = math.inf

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass
class SolveRequest:
    """One sampler invocation: problem, start point, seed and tuning knobs."""

    qubo: Qubo
    initial: np.ndarray | None = None
    seed: int = 0
    budget: Budget = field(default_factory=Budget)
    tabu_tenure: int | None = None
    sa_sweeps: int | None = None
    sa_t_start: float | None = None
    sa_t_end: float | None = None
    keep_trace: bool = False


@dataclass
class SolveResult:
    """Best vector found plus bookkeeping.

    trace holds (iteration, best_score) rows recorded whenever the incumbent
    improved, starting with the initial point; scores are non-increasing.
    wall_seconds is informational and excluded from determinism guarantees.
    """

    best: np.ndarray
    score: float
    iterations: int
    wall_seconds: float
    trace: list[tuple[int, float]] | None = None


def incremental_delta(qubo: Qubo, x: np.ndarray, flip: int) -> float:
    """Score change from flipping one bit, in O(degree of the variable)."""
    if not 0 <= flip < qubo.dim:
        raise IndexError(f"flip index {flip} outside 0..{qubo.dim - 1}")
    diag, neighbors, weights = qubo.adjacency()
    x = np.asarray(x)
    inner = diag[flip]
    if neighbors[flip].size:
        inner += float(weights[flip] @ x[neighbors[flip]].astype(float))
    return float((1 - 2 * int(x[flip])) * inner)


def _all_deltas(qubo: Qubo, x: np.ndarray) -> np.ndarray:
    """Vector of incremental_delta for every variable at once."""
    diag, neighbors, weights = qubo.adjacency()
    xf = np.asarray(x, dtype=float)
    inner = diag.copy()
    for i in range(qubo.dim):
        if neighbors[i].size:
            inner[i] += weights[i] @ xf[neighbors[i]]
    return (1.0 - 2.0 * xf) * inner


def _apply_flip(qubo: Qubo, x: np.ndarray, deltas: np.ndarray, flip: int) -> float:
    """Flip one bit in place, keep the delta vector consistent, return the delta."""
    _, neighbors, weights = qubo.adjacency()
    d = float(deltas[flip])
    sign = 1.0 - 2.0 * x[flip]
    nb = neighbors[flip]
    if nb.size:
        deltas[nb] += (1.0 - 2.0 * x[nb]) * weights[flip] * sign
    deltas[flip] = -d
    x[flip] = 1 - x[flip]
    return d


def _initial_vector(req: SolveRequest, rng: np.random.Generator) -> np.ndarray:
    if req.initial is not None:
        x = np.asarray(req.initial).astype(np.int8)
        if x.shape != (req.qubo.dim,):
            raise ValueError(
                f"initial vector has shape {x.shape}, expected ({req.qubo.dim},)"
            )
        if np.any((x != 0) & (x != 1)):
            raise ValueError("initial vector must be 0/1")
        return x.copy()
    return rng.integers(0, 2, size=req.qubo.dim).astype(np.int8)


def brute_force(req: SolveRequest) -> SolveResult:
    """Enumerate all bit vectors; ties break toward the smallest encoding.

    Bit i of the enumeration counter is variable i, so among equal scorers
    the vector whose integer value sum(x_i * 2^i) is smallest wins.  Capped
    at dim <= 24.
    """
    q = req.qubo
    if q.dim > BRUTE_FORCE_LIMIT:
        raise TooLargeError(f"dim {q.dim} exceeds brute-force cap {BRUTE_FORCE_LIMIT}")
    started = time.monotonic()
    total = 1 << q.dim
    chunk = 1 << min(q.dim, 16)
    bits = np.arange(q.dim, dtype=np.uint32)
    best_score = math.inf
    best_v = 0
    for start in range(0, total, chunk):
        vs = np.arange(start, min(start + chunk, total), dtype=np.uint32)
        X = ((vs[:, None] >> bits[None, :]) & 1).astype(np.int8)
        scores = q.evaluate_many(X)
        idx = int(np.argmin(scores))
        if scores[idx] < best_score:
            best_score = float(scores[idx])
            best_v = int(vs[idx])
    best = ((best_v >> bits) & 1).astype(np.int8)
    wall = time.monotonic() - started
    trace = [(0, best_score)] if req.keep_trace else None
    return SolveResult(best=best, score=best_score, iterations=total,
                       wall_seconds=wall, trace=trace)


def tabu_search(req: SolveRequest) -> SolveResult:
    """Single-flip tabu search with aspiration.

    Recently flipped variables are tabu for `tenure` iterations (default
    max(10, dim // 50)) unless flipping them would beat the incumbent.  The
    incumbent starts at the initial point, so the result is never worse.
    """
    q = req.qubo
    rng = np.random.default_rng(req.seed)
    x = _initial_vector(req, rng)
    tenure = req.tabu_tenure if req.tabu_tenure is not None else max(10, q.dim // 50)
    if tenure < 1:
        raise ValueError("tabu tenure must be at least 1")
    started = time.monotonic()
    deltas = _all_deltas(q, x)
    score = q.evaluate(x)
    best = x.copy()
    best_score = score
    trace = [(0, best_score)] if req.keep_trace else None
    tabu_until = np.zeros(q.dim, dtype=np.int64)
    deadline = started + req.budget.time_limit
    it = 0
    while it < req.budget.max_iterations:
        it += 1
        if time.monotonic() > deadline:
            it -= 1
            break
        allowed = tabu_until < it
        aspiring = score + deltas < best_score - 1e-12
        candidates = allowed | aspiring
        if not candidates.any():
            candidates = tabu_until == tabu_until.min()
        masked = np.where(candidates, deltas, math.inf)
        flip = int(np.argmin(masked))
        score += _apply_flip(q, x, deltas, flip)
        tabu_until[flip] = it + tenure
        if score < best_score - 1e-12:
            best_score = score
            best = x.copy()
            if trace is not None:
                trace.append((it, best_score))
    wall = time.monotonic() - started
    # re-anchor: report the exact score of the returned vector, not summed deltas
    return SolveResult(best=best, score=q.evaluate(best), iterations=it,
                       wall_seconds=wall, trace=trace)


def _estimate_t_start(q: Qubo, x: np.ndarray, rng: np.random.Generator) -> float:
    """Temperature giving roughly 0.8 acceptance for random uphill flips."""
    probe = rng.integers(0, q.dim, size=min(100, 4 * q.dim))
    ups = []
    for i in probe.tolist():
        d = incremental_delta(q, x, i)
        if d > 0:
            ups.append(d)
    if not ups:
        return 1.0
    return float(np.mean(ups) / math.log(1.0 / 0.8))


def simulated_annealing(req: SolveRequest) -> SolveResult:
    """Metropolis single-flip annealing on a geometric temperature ladder.

    The start temperature is tuned so about 80 percent of sampled uphill
    moves would be accepted at the initial point; the final temperature
    defaults to start * 1e-3.  Iterations count attempted flips.
    """
    q = req.qubo
    rng = np.random.default_rng(req.seed)
    x = _initial_vector(req, rng)
    started = time.monotonic()
    deltas = _all_deltas(q, x)
    score = q.evaluate(x)
    best = x.copy()
    best_score = score
    trace = [(0, best_score)] if req.keep_trace else None
    sweeps = req.sa_sweeps if req.sa_sweeps is not None else max(2, min(
        1000, req.budget.max_iterations // max(1, q.dim)))
    t_start = req.sa_t_start if req.sa_t_start is not None else _estimate_t_start(q, x, rng)
    t_start = max(t_start, 1e-12)
    t_end = req.sa_t_end if req.sa_t_end is not None else 1e-3 * t_start
    t_end = min(max(t_end, 1e-15), t_start)
    deadline = started + req.budget.time_limit
    it = 0
    stop = False
    for sweep in range(sweeps):
        frac = sweep / (sweeps - 1) if sweeps > 1 else 1.0
        temp = t_start * (t_end / t_start) ** frac
        order = rng.permutation(q.dim)
        accept_draws = rng.random(q.dim)
        for pos, flip in enumerate(order.tolist()):
            if it >= req.budget.max_iterations:
                stop = True
                break
            it += 1
            d = deltas[flip]
            if d <= 0 or accept_draws[pos] < math.exp(-d / temp):
                score += _apply_flip(q, x, deltas, flip)
                if score < best_score - 1e-12:
                    best_score = score
                    best = x.copy()
                    if trace is not None:
                        trace.append((it, best_score))
        if stop or time.monotonic() > deadline:
            break
    wall = time.monotonic() - started
    return SolveResult(best=best, score=q.evaluate(best), iterations=it,
                       wall_seconds=wall, trace=trace)


def write_trace_csv(path, trace: list[tuple[int, float]]) -> None:
    """Persist an improvement trace as `iteration,best_score` rows."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("iteration,best_score\n")
        for it, s in trace:
            fh.write(f"{it},{s:.12g}\n")
