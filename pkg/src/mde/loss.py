"""Limit-based ranking loss with a dynamic limit controller.

Positive triples are pushed below an effective limit ``L+ = gamma1 - delta``
and negative triples above ``L- = gamma2 - delta_prime``:

    loss_pos = sum_tau   [ f(tau)  - L+ ]_+
    loss_neg = sum_tau'  [ L- - f(tau') ]_+
    total    = beta1 * loss_pos + beta2 * loss_neg

``f`` is the aggregate model score including its constant offset. The
controller moves ``delta`` and ``delta_prime`` once per training iteration:
whenever the positive loss reaches exactly zero the positive limit tightens
by ``xi`` (and, if the negative loss still exceeds ``threshold``, the
negative limit is relaxed by ``xi`` too); whenever the negative loss reaches
exactly zero the negative limit is pushed further out. Any move that would
leave ``L- < L+`` is skipped, so a nonnegative effective margin is
preserved. Setting ``xi = 0`` freezes the controller and recovers the plain
fixed-limit loss.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class LossState:
    """Limits, shifts, controller constants, and sample weights."""

    gamma1: float = 2.0
    gamma2: float = 2.0
    delta: float = 0.0
    delta_prime: float = 0.0
    xi: float = 0.1
    threshold: float = 0.05
    beta1: float = 1.0
    beta2: float = 1.0

    def __post_init__(self):
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ConfigError("limits gamma1 and gamma2 must be positive")
        if self.gamma2 < self.gamma1:
            raise ConfigError(
                f"gamma2={self.gamma2} must be >= gamma1={self.gamma1}")
        if self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        if self.xi < 0:
            raise ConfigError("xi must be nonnegative")
        if self.threshold <= 0:
            raise ConfigError("threshold must be positive")
        if self.beta1 <= 0 or self.beta2 <= 0:
            raise ConfigError("beta1 and beta2 must be positive")
        if self.negative_limit < self.positive_limit:
            raise ConfigError(
                f"effective limits out of order: L-={self.negative_limit} "
                f"< L+={self.positive_limit}")

    @property
    def positive_limit(self) -> float:
        return self.gamma1 - self.delta

    @property
    def negative_limit(self) -> float:
        return self.gamma2 - self.delta_prime

    @property
    def alpha_margin(self) -> float:
        """Margin between the two base limits, kept for reporting."""
        return self.gamma2 - self.gamma1


def limit_loss(pos_scores, neg_scores,
               state: LossState) -> tuple[float, float, float]:
    """Hinge losses for one batch: (loss_pos, loss_neg, total).

    The per-side losses are plain sums; the sample weights beta1/beta2 enter
    only the total. Either side may be empty and then contributes zero.
    """
    pos = np.asarray(pos_scores, dtype=float).ravel()
    neg = np.asarray(neg_scores, dtype=float).ravel()
    loss_pos = float(np.maximum(pos - state.positive_limit, 0.0).sum())
    loss_neg = float(np.maximum(state.negative_limit - neg, 0.0).sum())
    total = state.beta1 * loss_pos + state.beta2 * loss_neg
    return loss_pos, loss_neg, total


def update_limits(state: LossState, loss_pos: float, loss_neg: float) -> LossState:
    """One controller step over iteration-aggregated losses.

    Zero tests are exact: the hinges produce exact zeros, so no epsilon is
    involved. Returns a new state; the input is never mutated.
    """
    delta, delta_prime = state.delta, state.delta_prime
    if loss_pos == 0.0 and state.gamma1 >= state.xi:
        # tightening the positive limit can only widen the margin
        delta = delta + state.xi
        if loss_neg > state.threshold and state.gamma2 >= state.xi:
            candidate = delta_prime + state.xi
            if state.gamma2 - candidate >= state.gamma1 - delta:
                delta_prime = candidate
    if loss_neg == 0.0:
        delta_prime = delta_prime - state.xi
    return dataclasses.replace(state, delta=delta, delta_prime=delta_prime)
