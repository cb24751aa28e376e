"""Pole balancing on a 1-D track, with a configurable gravity constant.

Classic cart-pole dynamics (10 N push left or right, Euler integration
at 20 ms) written directly from the equations of motion.  Gravity is the
per-environment coefficient each agent keeps to itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class Action(IntEnum):
    PUSH_LEFT = 0
    PUSH_RIGHT = 1


# the values a private gravity coefficient is drawn from
GRAVITY_CHOICES = (9.7, 9.8, 9.9)


@dataclass(frozen=True)
class EnvConfig:
    """Physical constants; gravity is the private one."""

    gravity: float = 9.8
    max_steps: int = 200
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    pole_half_length: float = 0.5
    force_mag: float = 10.0
    tau: float = 0.02  # integration step, seconds
    x_threshold: float = 2.4
    theta_threshold: float = 12 * 2 * math.pi / 360  # radians

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be at least 1, got {self.max_steps}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class CartPoleState:
    cart_position: float
    cart_velocity: float
    pole_angle: float
    pole_tip_velocity: float
    t: int = 0  # steps taken to reach this state

    def as_array(self) -> np.ndarray:
        return np.array([self.cart_position, self.cart_velocity,
                         self.pole_angle, self.pole_tip_velocity])


def is_terminal(state: CartPoleState, cfg: EnvConfig) -> bool:
    return (abs(state.cart_position) > cfg.x_threshold
            or abs(state.pole_angle) > cfg.theta_threshold
            or state.t >= cfg.max_steps)


def reset(cfg: EnvConfig, rng: np.random.Generator) -> CartPoleState:
    """Fresh state with every component uniform on [-0.05, 0.05]."""
    x, x_dot, theta, theta_dot = rng.uniform(-0.05, 0.05, size=4)
    return CartPoleState(float(x), float(x_dot), float(theta), float(theta_dot), t=0)


def step(state: CartPoleState, action: Action | int,
         cfg: EnvConfig) -> tuple[CartPoleState, float, bool]:
    """One Euler step; reward 1 while the pole stays up, 0 on a fall.

    A state is terminal once a position or angle threshold is crossed or
    the step cap is reached; stepping a terminal state is an error.
    """
    if is_terminal(state, cfg):
        raise ValueError("cannot step a terminal state")
    force = cfg.force_mag if action == Action.PUSH_RIGHT else -cfg.force_mag
    x = state.cart_position
    x_dot = state.cart_velocity
    theta = state.pole_angle
    theta_dot = state.pole_tip_velocity

    cos_theta = math.cos(theta)
    sin_theta = math.sin(theta)
    total_mass = cfg.cart_mass + cfg.pole_mass
    polemass_length = cfg.pole_mass * cfg.pole_half_length
    temp = (force + polemass_length * theta_dot ** 2 * sin_theta) / total_mass
    theta_acc = (cfg.gravity * sin_theta - cos_theta * temp) / (
        cfg.pole_half_length
        * (4.0 / 3.0 - cfg.pole_mass * cos_theta ** 2 / total_mass))
    x_acc = temp - polemass_length * theta_acc * cos_theta / total_mass

    nxt = CartPoleState(
        cart_position=x + cfg.tau * x_dot,
        cart_velocity=x_dot + cfg.tau * x_acc,
        pole_angle=theta + cfg.tau * theta_dot,
        pole_tip_velocity=theta_dot + cfg.tau * theta_acc,
        t=state.t + 1,
    )
    fell = (abs(nxt.cart_position) > cfg.x_threshold
            or abs(nxt.pole_angle) > cfg.theta_threshold)
    reward = 0.0 if fell else 1.0
    terminal = fell or nxt.t >= cfg.max_steps
    return nxt, reward, terminal
