"""Bookkeeping shared by the general and binary feasible-triplet loops."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError

log = logging.getLogger(__name__)


def lower_bound_from(r: float, epsilon: float, d: int) -> float:
    """Bound on gamma certified by a feasible triplet: ``d * (r - epsilon)``."""
    if epsilon < 0:
        raise InvalidInputError("epsilon must be non-negative")
    return d * (r - epsilon)


@dataclass
class StopRule:
    """When to stop iterating.

    With ``n`` set, the loop runs the fixed index range ``d..n``. Otherwise it
    stops once the best ``R - E`` has improved by less than ``tol`` for
    ``patience`` consecutive iterations (counting starts after the first
    positive candidate), or after ``max_iterations``.

    ``R - E`` can oscillate with a period of about ``2d`` before it settles,
    so the default patience is ``max(10, 4d)``.
    """

    n: Optional[int] = None
    tol: float = 1e-9
    patience: Optional[int] = None
    max_iterations: int = 100_000

    def patience_for(self, d: int) -> int:
        return self.patience if self.patience is not None else max(10, 4 * d)

    def validate(self, d: int) -> None:
        if self.n is not None and self.n < d:
            raise InvalidInputError(f"iteration count n={self.n} must be >= d={d}")
        if (self.patience is not None and self.patience < 1) or self.max_iterations < 1:
            raise InvalidInputError("patience and max_iterations must be positive")


@dataclass
class TripletResult:
    """Best feasible triplet found, with the bound it certifies."""

    r: float
    epsilon: float
    lower_bound: float
    iterations_run: int
    best_iteration: int
    converged: bool = False
    u: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class Tracker:
    d: int
    rule: StopRule
    r: float = 0.0
    epsilon: float = 0.0
    best_iteration: int = 0
    iterations_run: int = 0
    stall: int = 0
    started: bool = False
    converged: bool = False
    u: Optional[np.ndarray] = None

    @property
    def best(self) -> float:
        return self.r - self.epsilon

    def first_index(self) -> int:
        return self.d + self.iterations_run

    def done(self) -> bool:
        i = self.first_index()
        if self.rule.n is not None:
            return i > self.rule.n
        return self.converged or self.iterations_run >= self.rule.max_iterations

    def record(self, i: int, R: float, E: float, u=None) -> bool:
        """Fold one iteration into the running best. Returns True if it became the best."""
        self.iterations_run += 1
        previous = self.best
        improved = R - E >= previous
        if improved:
            self.r, self.epsilon, self.best_iteration = R, E, i
            if u is not None:
                self.u = u
        gain = (R - E) - previous if improved else 0.0
        if self.best > 0:
            self.started = True
        if self.started:
            self.stall = self.stall + 1 if gain < self.rule.tol else 0
            if self.rule.n is None and self.stall >= self.rule.patience_for(self.d):
                self.converged = True
        log.info("iter %d  R=%.12f  E=%.3e  best=%.9f", i, R, E, self.d * self.best)
        return improved

    def result(self) -> TripletResult:
        return TripletResult(
            r=self.r,
            epsilon=self.epsilon,
            lower_bound=lower_bound_from(self.r, self.epsilon, self.d),
            iterations_run=self.iterations_run,
            best_iteration=self.best_iteration,
            converged=self.converged,
            u=self.u,
        )
