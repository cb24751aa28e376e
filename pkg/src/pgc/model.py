"""Two-head policy/value network on the cart-pole state, the episode
loss, and a hand-derived gradient of that loss.

The network is tiny and bias-free: one shared ReLU layer (16x4) feeding
a softmax policy head (2x16) and a linear value head (1x16), 112
parameters in total.  Parameters travel as one flat vector in a fixed
order: shared layer, policy head, value head, each row-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cartpole import Action, CartPoleState

STATE_DIM = 4
HIDDEN_DIM = 16
N_ACTIONS = 2
PARAM_DIM = HIDDEN_DIM * STATE_DIM + N_ACTIONS * HIDDEN_DIM + HIDDEN_DIM  # 112

_TINY = np.finfo(float).tiny  # log() guard for saturated policies


@dataclass
class ModelParams:
    """Weight blocks: shared layer, policy head, value head."""

    theta_c: np.ndarray  # (16, 4)
    theta_p: np.ndarray  # (2, 16)
    theta_v: np.ndarray  # (1, 16)

    def __post_init__(self) -> None:
        self.theta_c = np.asarray(self.theta_c, dtype=float)
        self.theta_p = np.asarray(self.theta_p, dtype=float)
        self.theta_v = np.asarray(self.theta_v, dtype=float)
        expect = [(HIDDEN_DIM, STATE_DIM), (N_ACTIONS, HIDDEN_DIM), (1, HIDDEN_DIM)]
        got = [self.theta_c.shape, self.theta_p.shape, self.theta_v.shape]
        if got != expect:
            raise ValueError(f"bad block shapes {got}, expected {expect}")

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [self.theta_c.ravel(), self.theta_p.ravel(), self.theta_v.ravel()])

    def copy(self) -> "ModelParams":
        return ModelParams(self.theta_c.copy(), self.theta_p.copy(),
                           self.theta_v.copy())


def unflatten(flat) -> ModelParams:
    """Rebuild the weight blocks from a length-112 vector."""
    flat = np.asarray(flat, dtype=float)
    if flat.shape != (PARAM_DIM,):
        raise ValueError(f"expected shape ({PARAM_DIM},), got {flat.shape}")
    a = HIDDEN_DIM * STATE_DIM
    b = a + N_ACTIONS * HIDDEN_DIM
    return ModelParams(
        theta_c=flat[:a].reshape(HIDDEN_DIM, STATE_DIM).copy(),
        theta_p=flat[a:b].reshape(N_ACTIONS, HIDDEN_DIM).copy(),
        theta_v=flat[b:].reshape(1, HIDDEN_DIM).copy(),
    )


def init_params(rng: np.random.Generator) -> ModelParams:
    """Uniform init on [-1/sqrt(fan_in), +1/sqrt(fan_in)] per block."""
    def block(rows, cols):
        bound = 1.0 / math.sqrt(cols)
        return rng.uniform(-bound, bound, size=(rows, cols))
    return ModelParams(theta_c=block(HIDDEN_DIM, STATE_DIM),
                       theta_p=block(N_ACTIONS, HIDDEN_DIM),
                       theta_v=block(1, HIDDEN_DIM))


@dataclass(frozen=True)
class LossConfig:
    gamma: float = 0.99          # discount
    value_scale: float = 0.5     # weight of the squared value error
    entropy_scale: float = 0.01  # weight of the entropy bonus

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass
class EpisodeHistory:
    """Per-step record of one rollout under a fixed parameter snapshot.

    states holds the state each action was taken in, one row per step;
    terminal_state is the state that ended the episode and only feeds
    the bootstrapped tail value.
    """

    states: np.ndarray          # (T, 4)
    actions: np.ndarray         # (T,) ints
    rewards: np.ndarray         # (T,)
    terminal_state: np.ndarray  # (4,)

    def __post_init__(self) -> None:
        self.states = np.asarray(self.states, dtype=float)
        self.actions = np.asarray(self.actions, dtype=int)
        self.rewards = np.asarray(self.rewards, dtype=float)
        self.terminal_state = np.asarray(self.terminal_state, dtype=float)
        n = len(self.actions)
        if n == 0:
            raise ValueError("history must contain at least one step")
        if self.states.shape != (n, STATE_DIM) or self.rewards.shape != (n,):
            raise ValueError("states, actions and rewards must have equal length")
        if self.terminal_state.shape != (STATE_DIM,):
            raise ValueError(f"terminal_state must have shape ({STATE_DIM},)")

    def __len__(self) -> int:
        return len(self.actions)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def forward(params: ModelParams, state) -> tuple[np.ndarray, float]:
    """Action distribution and value estimate for one state."""
    if isinstance(state, CartPoleState):
        s = state.as_array()
    else:
        s = np.asarray(state, dtype=float)
    h = np.maximum(params.theta_c @ s, 0.0)
    policy = _softmax(params.theta_p @ h)
    value = float(params.theta_v[0] @ h)
    return policy, value


def _episode_forward(params: ModelParams, hist: EpisodeHistory):
    h_pre = hist.states @ params.theta_c.T           # (T, 16)
    h = np.maximum(h_pre, 0.0)
    probs = _softmax(h @ params.theta_p.T)           # (T, 2)
    values = h @ params.theta_v[0]                   # (T,)
    # A fall has no continuation, so the bootstrap is zero; only a run cut
    # off at the step cap carries its terminal state's value forward.  The
    # final reward distinguishes the two (0 on a fall, 1 otherwise).
    if hist.rewards[-1] > 0.0:
        h_term = np.maximum(params.theta_c @ hist.terminal_state, 0.0)
        tail_value = float(params.theta_v[0] @ h_term)
    else:
        tail_value = 0.0
    return h_pre, h, probs, values, tail_value


def _value_targets(rewards: np.ndarray, gamma: float, tail_value: float) -> np.ndarray:
    """Discounted return-to-go per step, bootstrapped with the tail value."""
    out = np.empty(len(rewards))
    acc = tail_value
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def empirical_loss(params: ModelParams, hist: EpisodeHistory,
                   cfg: LossConfig) -> float:
    """Episode loss: advantage-weighted log-probabilities minus an
    entropy bonus, plus the scaled squared value error.

    All sums run over the steps of the episode; the terminal state only
    contributes its bootstrapped value to the targets.
    """
    _, _, probs, values, tail_value = _episode_forward(params, hist)
    targets = _value_targets(hist.rewards, cfg.gamma, tail_value)
    advantages = targets - values
    logp = np.log(np.maximum(probs, _TINY))
    picked = logp[np.arange(len(hist)), hist.actions]
    entropy = -(probs * logp).sum(axis=1)
    policy_loss = -(picked * advantages).sum() - cfg.entropy_scale * entropy.sum()
    value_loss = (advantages ** 2).sum()
    return float(policy_loss + cfg.value_scale * value_loss)


def loss_gradient(params: ModelParams, hist: EpisodeHistory,
                  cfg: LossConfig) -> np.ndarray:
    """Gradient of the episode loss, flattened in the canonical order.

    Advantages and value targets are held constant: no gradient flows
    through them or through the tail value.  The value estimate inside
    the squared error does get one.
    """
    h_pre, h, probs, values, tail_value = _episode_forward(params, hist)
    targets = _value_targets(hist.rewards, cfg.gamma, tail_value)
    advantages = targets - values
    n = len(hist)

    logp = np.log(np.maximum(probs, _TINY))
    entropy = -(probs * logp).sum(axis=1)
    onehot = np.zeros((n, N_ACTIONS))
    onehot[np.arange(n), hist.actions] = 1.0
    d_logits = (-advantages[:, None] * (onehot - probs)
                + cfg.entropy_scale * probs * (logp + entropy[:, None]))
    d_theta_p = d_logits.T @ h

    d_value = -2.0 * cfg.value_scale * advantages    # (T,)
    d_theta_v = (d_value @ h)[None, :]

    d_h = d_logits @ params.theta_p + np.outer(d_value, params.theta_v[0])
    d_h_pre = d_h * (h_pre > 0.0)
    d_theta_c = d_h_pre.T @ hist.states

    return np.concatenate(
        [d_theta_c.ravel(), d_theta_p.ravel(), d_theta_v.ravel()])


def exploration_rate(n: int) -> float:
    """Linearly decaying exploration: 0.5 at the start, 0 from 900 on."""
    return max(0.0, 0.5 - n / 1800.0)


def select_action(params: ModelParams, state, alpha: float,
                  rng: np.random.Generator) -> Action:
    """Action sampled from the policy, or a uniform one with chance alpha.

    Stochastic rollouts keep every action's probability moving; a greedy
    rule here locks onto whichever action the initial weights prefer and
    the learner never recovers once exploration has decayed.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha > 0.0 and rng.random() < alpha:
        return Action(int(rng.integers(N_ACTIONS)))
    if isinstance(state, CartPoleState):
        s = state.as_array()
    else:
        s = np.asarray(state, dtype=float)
    probs, _ = forward(params, s)
    return Action(int(rng.random() < probs[1]))
