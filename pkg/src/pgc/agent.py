"""One local agent: roll out an episode in its private environment,
differentiate the episode loss against the snapshot it was handed, and
release nothing but the randomized gradient and the plain score.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cartpole
from .cartpole import EnvConfig
from .mechanisms import (BudgetLedger, MechanismConfig, MechanismKind, clip_l1,
                         laplace_perturb, prs_perturb, spend_budget)
from .model import (EpisodeHistory, LossConfig, ModelParams, loss_gradient,
                    select_action)


@dataclass
class AgentTask:
    """Everything one agent activation needs.

    params is the snapshot copied from the aggregator; alpha the
    exploration rate frozen at snapshot time.  The env config, and with
    it the gravity coefficient, never leaves the task.
    """

    agent_id: int
    env: EnvConfig
    mechanism: MechanismConfig
    alpha: float
    params: ModelParams
    loss: LossConfig = field(default_factory=LossConfig)
    ledger: BudgetLedger | None = None  # only multi-round agents carry one


@dataclass(frozen=True)
class Submission:
    """The only thing an agent sends out."""

    noisy_gradient: np.ndarray
    score: int
    agent_id: int


def run_episode(task: AgentTask,
                rng: np.random.Generator) -> tuple[EpisodeHistory, int]:
    """Play one episode under the task's snapshot; the score is the
    number of steps the pole stayed up."""
    state = cartpole.reset(task.env, rng)
    states, actions, rewards = [], [], []
    terminal = False
    while not terminal:
        action = select_action(task.params, state, task.alpha, rng)
        nxt, reward, terminal = cartpole.step(state, action, task.env)
        states.append(state.as_array())
        actions.append(int(action))
        rewards.append(reward)
        state = nxt
    hist = EpisodeHistory(states=np.array(states), actions=np.array(actions),
                          rewards=np.array(rewards),
                          terminal_state=state.as_array())
    return hist, int(hist.rewards.sum())


def craft_submission(task: AgentTask, hist: EpisodeHistory, score: int,
                     rng: np.random.Generator) -> Submission:
    """Randomize the episode gradient per the task's mechanism.

    When the task carries a ledger the per-round budget is charged
    first; an exhausted ledger raises and nothing is released.
    """
    if task.ledger is not None:
        spend_budget(task.ledger, task.mechanism.epsilon_per_round)
    grad = loss_gradient(task.params, hist, task.loss)
    kind = task.mechanism.kind
    if kind is MechanismKind.NONE:
        # zero-noise limit: clipped but otherwise untouched
        noisy = clip_l1(grad, task.mechanism.clip_size)
    elif kind is MechanismKind.LAPLACE:
        noisy = laplace_perturb(grad, task.mechanism, rng)
    else:
        noisy = prs_perturb(grad, task.mechanism, rng)
    return Submission(noisy_gradient=noisy, score=score, agent_id=task.agent_id)
