"""Locally private gradient collection for distributed actor-critic
training: randomization mechanisms, a cart-pole environment with a
private gravity coefficient, the shared two-head network, and a trial
harness with its summary metrics."""

__version__ = "0.1.0"

from .agent import AgentTask, Submission, craft_submission, run_episode
from .aggregator import CentralAggregator
from .cartpole import (GRAVITY_CHOICES, Action, CartPoleState, EnvConfig,
                       is_terminal, reset, step)
from .harness import (TrialConfig, TrialMetrics, average_score,
                      first_success_time, relative_auc, run_trial, run_trials,
                      success_curve, success_ratio, trial_seed,
                      windowed_scores)
from .mechanisms import (BudgetExhaustedError, BudgetLedger, MechanismConfig,
                         MechanismKind, bit_flip, clip_elementwise, clip_l1,
                         derived_reduced_dim, flip_probability,
                         laplace_perturb, make_projection_matrix, prs_perturb,
                         spend_budget)
from .model import (HIDDEN_DIM, N_ACTIONS, PARAM_DIM, STATE_DIM,
                    EpisodeHistory, LossConfig, ModelParams, empirical_loss,
                    exploration_rate, forward, init_params, loss_gradient,
                    select_action, unflatten)

__all__ = [
    "AgentTask", "Submission", "craft_submission", "run_episode",
    "CentralAggregator",
    "GRAVITY_CHOICES", "Action", "CartPoleState", "EnvConfig", "is_terminal",
    "reset", "step",
    "TrialConfig", "TrialMetrics", "average_score", "first_success_time",
    "relative_auc", "run_trial", "run_trials", "success_curve",
    "success_ratio", "trial_seed", "windowed_scores",
    "BudgetExhaustedError", "BudgetLedger", "MechanismConfig", "MechanismKind",
    "bit_flip", "clip_elementwise", "clip_l1", "derived_reduced_dim",
    "flip_probability", "laplace_perturb", "make_projection_matrix",
    "prs_perturb", "spend_budget",
    "HIDDEN_DIM", "N_ACTIONS", "PARAM_DIM", "STATE_DIM", "EpisodeHistory",
    "LossConfig", "ModelParams", "empirical_loss", "exploration_rate",
    "forward", "init_params", "loss_gradient", "select_action", "unflatten",
]
