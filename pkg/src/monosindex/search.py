# Derivative-free minimizers tolerant of discontinuous objectives.
#
# Both methods are deterministic given the start and options, never request
# gradients, and never return a point worse than the start. Coefficients
# are the textbook defaults: reflection 1, expansion 2, contraction 0.5,
# shrink 0.5 for the simplex; step halving for the pattern search.

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["SearchOptions", "SearchResult", "nelder_mead", "hooke_jeeves", "random_unit_starts"]

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class SearchOptions:
    """Stopping and stepping controls shared by both searches.

    `tolerance` bounds the simplex diameter (Nelder-Mead) or the pattern
    step (Hooke-Jeeves) at which the search stops; `max_evals` caps the
    number of objective evaluations.
    """

    max_evals: int = 5000
    initial_step: float = 0.1
    tolerance: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.max_evals < 2:
            raise ValueError("max_evals must allow at least an initial simplex")
        if not (self.initial_step > 0 and np.isfinite(self.initial_step)):
            raise ValueError("initial_step must be positive")
        if not (self.tolerance > 0 and np.isfinite(self.tolerance)):
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class SearchResult:
    """Best point found, its objective value, and bookkeeping."""

    argmin: np.ndarray
    value: float
    evals: int
    converged: bool

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.argmin, dtype=float))
        a.setflags(write=False)
        object.__setattr__(self, "argmin", a)


def _start_value(objective: Objective, start: np.ndarray) -> float:
    f0 = float(objective(start))
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the start point")
    return f0


def nelder_mead(objective: Objective, start, opts: SearchOptions = SearchOptions()) -> SearchResult:
    """Minimize by the reflect/expand/contract/shrink simplex iteration.

    The initial simplex is the start plus `initial_step` along each axis;
    iteration stops when every vertex is within `tolerance` of the best
    vertex or the evaluation budget is spent. Returns the best vertex.
    """
    x0 = np.asarray(start, dtype=float)
    d = x0.size
    if opts.max_evals < d + 1:
        raise ValueError("max_evals must be at least d + 1")
    f0 = _start_value(objective, x0)

    simplex = np.repeat(x0[None, :], d + 1, axis=0)
    values = np.empty(d + 1)
    values[0] = f0
    for i in range(d):
        simplex[i + 1, i] += opts.initial_step
        values[i + 1] = objective(simplex[i + 1])
    evals = d + 1

    converged = False
    while True:
        order = np.argsort(values, kind="stable")
        simplex = simplex[order]
        values = values[order]
        diameter = np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1))
        if diameter <= opts.tolerance:
            converged = True
            break
        if evals >= opts.max_evals:
            break

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = objective(xr)
        evals += 1

        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = objective(xe)
            evals += 1
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + 0.5 * (centroid - worst)
                fc = objective(xc)
                evals += 1
                accept = fc <= fr
            else:
                xc = centroid - 0.5 * (centroid - worst)
                fc = objective(xc)
                evals += 1
                accept = fc < values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
            else:
                # shrink toward the best vertex
                for i in range(1, d + 1):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    values[i] = objective(simplex[i])
                evals += d

    best = int(np.argmin(values))
    return SearchResult(argmin=simplex[best].copy(), value=float(values[best]), evals=evals, converged=converged)


def _explore(objective: Objective, base: np.ndarray, fbase: float, step: float, evals: int, budget: int):
    """Axis-by-axis exploratory moves; accepts strict improvements."""
    x = base.copy()
    fx = fbase
    for i in range(x.size):
        if evals >= budget:
            break
        trial = x.copy()
        trial[i] += step
        ft = objective(trial)
        evals += 1
        if ft < fx:
            x, fx = trial, ft
            continue
        if evals >= budget:
            break
        trial = x.copy()
        trial[i] -= step
        ft = objective(trial)
        evals += 1
        if ft < fx:
            x, fx = trial, ft
    return x, fx, evals


def hooke_jeeves(objective: Objective, start, opts: SearchOptions = SearchOptions()) -> SearchResult:
    """Pattern search with exploratory and pattern moves, halving the step
    whenever exploration fails; stops when the step drops below tolerance
    or the evaluation budget is spent."""
    base = np.asarray(start, dtype=float).copy()
    fbase = _start_value(objective, base)
    evals = 1
    step = opts.initial_step
    converged = False

    while True:
        if step <= opts.tolerance:
            converged = True
            break
        if evals >= opts.max_evals:
            break
        trial, ftrial, evals = _explore(objective, base, fbase, step, evals, opts.max_evals)
        if ftrial < fbase:
            # pattern moves: keep stepping along the improving direction
            while evals < opts.max_evals:
                pattern = trial + (trial - base)
                base, fbase = trial, ftrial
                fp = objective(pattern)
                evals += 1
                cand, fcand, evals = _explore(objective, pattern, fp, step, evals, opts.max_evals)
                if fcand < fbase:
                    trial, ftrial = cand, fcand
                else:
                    break
            base, fbase = trial, ftrial
        else:
            step *= 0.5

    return SearchResult(argmin=base.copy(), value=float(fbase), evals=evals, converged=converged)


def random_unit_starts(d: int, count: int, seed: int) -> np.ndarray:
    """Independent standard normal d-vectors normalized to unit length.

    Deterministic per seed; rows are uniform on the unit sphere.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(int(seed))
    out = np.empty((count, d))
    k = 0
    while k < count:
        v = rng.standard_normal(d)
        nrm = np.linalg.norm(v)
        if nrm < 1e-12:
            continue
        out[k] = v / nrm
        k += 1
    return out
