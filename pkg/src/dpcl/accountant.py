"""Moments accountant for the subsampled Gaussian mechanism, plus the two
continual composition policies (naive per-block charging vs single-block
sampling).

The per-step log moment is the closed-form integer-order moment of the
privacy-loss random variable of the mechanism that releases
g + N(0, sigma^2) after Bernoulli(q) subsampling (sensitivity 1):

    alpha_step(lam) = log E_{z ~ mu}[(mu(z) / mu0(z))^lam]

with mu = (1-q) N(0, sigma^2) + q N(1, sigma^2) and mu0 = N(0, sigma^2).
Moments add across steps; the (eps, delta) conversion is the standard tail
bound eps = min_lam (alpha(lam) - ln delta) / lam.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ConfigError, InputError, StateError

DEFAULT_LAMBDA_MAX = 64


class Policy(Enum):
    LEMMA1 = "lemma1"  # every stored block charged at every later task
    LEMMA2 = "lemma2"  # one randomly chosen block charged per task


def step_log_moment(q, sigma, lam) -> float:
    """Per-step log moment alpha_step(lam) at integer order lam >= 1."""
    if not 0.0 < q <= 1.0:
        raise ConfigError("sampling rate q must be in (0, 1]")
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    lam = int(lam)
    if lam < 1:
        raise ConfigError("moment order must be >= 1")
    m = lam + 1  # E_mu[(mu/mu0)^lam] == E_mu0[(mu/mu0)^(lam+1)]
    if q == 1.0:
        return m * (m - 1) / (2.0 * sigma * sigma)
    i = np.arange(m + 1)
    log_binom = gammaln(m + 1) - gammaln(i + 1) - gammaln(m - i + 1)
    terms = log_binom + i * np.log(q) + (m - i) * np.log1p(-q) + (i * i - i) / (2.0 * sigma * sigma)
    return float(logsumexp(terms))


@dataclass
class MomentState:
    """Cumulative log moments alpha(lam) for lam = 1..lambda_max."""

    lambda_max: int = DEFAULT_LAMBDA_MAX
    log_moments: np.ndarray = None
    steps: int = 0

    def __post_init__(self):
        if self.lambda_max < 1:
            raise ConfigError("lambda_max must be >= 1")
        if self.log_moments is None:
            self.log_moments = np.zeros(self.lambda_max)

    def add_step(self, q, sigma):
        self.log_moments = self.log_moments + np.array(
            [step_log_moment(q, sigma, lam) for lam in range(1, self.lambda_max + 1)]
        )
        self.steps += 1


def compose_epsilon(state: MomentState, delta) -> float:
    """Tail-bound conversion: eps = min over lam of (alpha(lam) - ln delta)/lam.

    A state with zero steps has released nothing and composes to eps = 0.
    """
    if not 0.0 < delta < 1.0:
        raise ConfigError("delta must be in (0, 1)")
    if state.steps == 0:
        return 0.0
    lams = np.arange(1, state.lambda_max + 1)
    return float(np.min((state.log_moments - np.log(delta)) / lams))


@dataclass
class TaskBudget:
    task_id: int
    eps_train: float  # budget spent on the task's own training data
    eps_ref: float    # budget spent computing reference gradients at this task


@dataclass
class BudgetReport:
    per_task: list
    total: float
    delta: float
    policy: Policy

    def write_csv(self, path, budgets):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["task_id", "eps_train", "eps_ref", "eps_task_at_T", "total"])
            for b, eps_at_t in zip(budgets, self.per_task):
                w.writerow([b.task_id, repr(b.eps_train), repr(b.eps_ref),
                            repr(eps_at_t), repr(self.total)])


def _check_budgets(budgets, t):
    if [b.task_id for b in budgets[:t]] != list(range(1, t + 1)):
        raise InputError(f"need budgets for tasks 1..{t} in order")


def budget_lemma1(budgets, t, delta=1e-4) -> BudgetReport:
    """Naive composition: eps_i(T) = eps_i + (T - i) * eps'_i."""
    _check_budgets(budgets, t)
    per_task = [b.eps_train + (t - b.task_id) * b.eps_ref for b in budgets[:t]]
    return BudgetReport(per_task, float(sum(per_task)), delta, Policy.LEMMA1)


def budget_lemma2(budgets, t, delta=1e-4, strict=False) -> BudgetReport:
    """Single-block composition: eps_i(T) = eps_i + eps'_i.

    By default task 1 is charged no reference budget (the memory is empty
    when task 1 trains); strict=True applies the literal formula to every
    task, including the first.
    """
    _check_budgets(budgets, t)
    per_task = []
    for b in budgets[:t]:
        ref = b.eps_ref if (strict or b.task_id > 1) else 0.0
        per_task.append(b.eps_train + ref)
    return BudgetReport(per_task, float(sum(per_task)), delta, Policy.LEMMA2)


@dataclass
class PrivacyLedger:
    """Per-task and per-block moment states for one training run.

    Training steps charge the current task's train state. Reference steps
    charge both the task that consumed the block (feeding eps'_i as the
    single-block policy defines it) and the block itself (the inspectable
    per-block view).
    """

    sigma: float
    lambda_max: int = DEFAULT_LAMBDA_MAX
    train_states: dict = field(default_factory=dict)
    ref_states_by_task: dict = field(default_factory=dict)
    ref_states_by_block: dict = field(default_factory=dict)

    def _state(self, table, key):
        if key not in table:
            table[key] = MomentState(self.lambda_max)
        return table[key]

    def register_task(self, task_id):
        self._state(self.train_states, task_id)
        self._state(self.ref_states_by_task, task_id)

    def track_training_step(self, task_id, q_train):
        if task_id not in self.train_states:
            raise StateError(f"unknown task {task_id}")
        self.train_states[task_id].add_step(q_train, self.sigma)

    def track_ref_step(self, task_id, chosen_block_id, q_ref_effective):
        if task_id not in self.ref_states_by_task:
            raise StateError(f"unknown task {task_id}")
        if chosen_block_id >= task_id:
            raise StateError("reference block must belong to an earlier task")
        self.ref_states_by_task[task_id].add_step(q_ref_effective, self.sigma)
        self._state(self.ref_states_by_block, chosen_block_id).add_step(
            q_ref_effective, self.sigma)

    def task_budgets(self, delta) -> list:
        return [
            TaskBudget(
                task_id,
                compose_epsilon(self.train_states[task_id], delta),
                compose_epsilon(self.ref_states_by_task[task_id], delta),
            )
            for task_id in sorted(self.train_states)
        ]

    def block_epsilons(self, delta) -> dict:
        return {bid: compose_epsilon(s, delta)
                for bid, s in sorted(self.ref_states_by_block.items())}

    def report(self, delta, policy: Policy) -> BudgetReport:
        budgets = self.task_budgets(delta)
        t = len(budgets)
        if policy is Policy.LEMMA1:
            return budget_lemma1(budgets, t, delta)
        return budget_lemma2(budgets, t, delta)
