"""Randomizers that make a submitted gradient locally private.

Two mechanisms are provided.  The additive one clips the gradient to an
L1 ball and adds per-coordinate Laplace noise.  The projected-random-sign
one compresses the gradient through a sparse random projection, clips
each projected coordinate, and releases only a random sign per
coordinate, mapped back through the transpose of the projection.  A
small per-agent budget ledger covers agents that submit more than once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class MechanismKind(Enum):
    LAPLACE = "laplace"
    PRS = "prs"
    NONE = "none"


class BudgetExhaustedError(RuntimeError):
    """A spend would push a ledger past its total budget."""


# slack for accumulated floating-point error in repeated equal spends
_BUDGET_SLACK = 1e-12

_SQRT3 = math.sqrt(3.0)


def derived_reduced_dim(epsilon: float, dim: int) -> int:
    """Projection width used when none is given: max{1, min{dim, floor(epsilon / 2.5)}}.

    The per-coordinate sign flip needs a budget share of at least 2.5 to
    carry signal, so the width scales with the per-round budget.
    """
    if dim < 1:
        raise ValueError(f"dim must be at least 1, got {dim}")
    if math.isinf(epsilon):
        return dim
    return max(1, min(dim, int(epsilon / 2.5)))


@dataclass(frozen=True)
class MechanismConfig:
    """Privacy settings shared by an agent and its randomizer.

    epsilon is the whole per-agent budget; each of the `rounds`
    submissions spends epsilon / rounds.  reduced_dim only matters for
    the PRS kind and is derived from the per-round budget when not set.
    """

    epsilon: float
    clip_size: float
    dim: int
    kind: MechanismKind = MechanismKind.LAPLACE
    reduced_dim: int | None = None
    rounds: int = 1

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.clip_size > 0:
            raise ValueError(f"clip_size must be positive, got {self.clip_size}")
        if self.dim < 1:
            raise ValueError(f"dim must be at least 1, got {self.dim}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be at least 1, got {self.rounds}")
        if self.reduced_dim is None:
            object.__setattr__(
                self, "reduced_dim",
                derived_reduced_dim(self.epsilon_per_round, self.dim))
        if not 1 <= self.reduced_dim <= self.dim:
            raise ValueError(
                f"reduced_dim must lie in [1, {self.dim}], got {self.reduced_dim}")

    @property
    def epsilon_per_round(self) -> float:
        return self.epsilon / self.rounds

    @property
    def eps_per_dim(self) -> float:
        """Budget share of one projected coordinate under PRS."""
        return self.epsilon_per_round / self.reduced_dim


@dataclass
class BudgetLedger:
    """Running account of one agent's privacy spending."""

    agent_id: int
    total_epsilon: float
    spent: float = 0.0
    submissions: int = 0

    @property
    def remaining(self) -> float:
        return self.total_epsilon - self.spent


def spend_budget(ledger: BudgetLedger, amount: float) -> BudgetLedger:
    """Charge one submission's worth of budget; the ledger mutates in place.

    Raises BudgetExhaustedError when the spend would exceed the total
    beyond a small floating-point slack.
    """
    if not amount > 0:
        raise ValueError(f"spend must be positive, got {amount}")
    if ledger.spent + amount > ledger.total_epsilon + _BUDGET_SLACK:
        raise BudgetExhaustedError(
            f"agent {ledger.agent_id}: spend of {amount} exceeds remaining "
            f"budget {ledger.remaining}")
    ledger.spent += amount
    ledger.submissions += 1
    return ledger


def _as_finite_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a flat vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must contain only finite entries")
    return v


def clip_l1(g, clip_size: float) -> np.ndarray:
    """Scale g down so its L1 norm is at most clip_size / 2.

    Any two clipped vectors then sit within clip_size of each other in
    L1 distance, which is what the additive noise is calibrated to.
    Vectors already inside the ball pass through unchanged.
    """
    g = _as_finite_vector(g, "gradient")
    if not clip_size > 0:
        raise ValueError(f"clip_size must be positive, got {clip_size}")
    norm = float(np.abs(g).sum())
    return g / max(1.0, norm / (clip_size / 2.0))


def _laplace_noise(scale: float, size: int, rng: np.random.Generator) -> np.ndarray:
    # inverse CDF applied to one uniform per coordinate; reproducible
    # across platforms for a fixed generator state
    u = rng.random(size)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    p = u - 0.5
    return -scale * np.sign(p) * np.log1p(-2.0 * np.abs(p))


def laplace_perturb(g, cfg: MechanismConfig, rng: np.random.Generator) -> np.ndarray:
    """Clip to the L1 ball of radius clip_size/2 and add Laplace noise.

    The noise scale is clip_size divided by the per-round budget, so one
    release of a clipped gradient satisfies the per-round guarantee.
    """
    if cfg.kind is not MechanismKind.LAPLACE:
        raise ValueError(f"config kind is {cfg.kind}, expected LAPLACE")
    g = _as_finite_vector(g, "gradient")
    if g.shape[0] != cfg.dim:
        raise ValueError(f"gradient has length {g.shape[0]}, config says {cfg.dim}")
    clipped = clip_l1(g, cfg.clip_size)
    scale = cfg.clip_size / cfg.epsilon_per_round
    return clipped + _laplace_noise(scale, cfg.dim, rng)


def make_projection_matrix(dim: int, reduced_dim: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Sparse random projection of shape (reduced_dim, dim).

    Entries are -sqrt(3), 0, +sqrt(3) with probabilities 1/6, 2/3, 1/6:
    zero mean, unit second moment, so transpose(M) M / reduced_dim is
    the identity in expectation.
    """
    if dim < 1 or not 1 <= reduced_dim <= dim:
        raise ValueError(
            f"need 1 <= reduced_dim <= dim, got reduced_dim={reduced_dim} dim={dim}")
    u = rng.random((reduced_dim, dim))
    return np.where(u < 1.0 / 6.0, -_SQRT3, np.where(u < 1.0 / 3.0, _SQRT3, 0.0))


def clip_elementwise(u, clip_size: float) -> np.ndarray:
    """Clamp every coordinate into [-clip_size, +clip_size]."""
    u = _as_finite_vector(u, "projected gradient")
    if not clip_size > 0:
        raise ValueError(f"clip_size must be positive, got {clip_size}")
    return np.clip(u, -clip_size, clip_size)


def flip_probability(u_bar, clip_size: float, eps_per_dim: float) -> np.ndarray:
    """Chance that a coordinate comes out as +clip_size, vectorized.

    Linear in the input, anchored so the likelihood ratio between any
    two admissible inputs is at most exp(eps_per_dim), with equality at
    the endpoints.
    """
    e = math.exp(eps_per_dim)
    u_bar = np.asarray(u_bar, dtype=float)
    return 1.0 / (e + 1.0) + (u_bar + clip_size) / (2.0 * clip_size) * (e - 1.0) / (e + 1.0)


def bit_flip(u_bar, clip_size: float, eps_per_dim: float,
             rng: np.random.Generator) -> np.ndarray:
    """Randomize each coordinate of u_bar to -clip_size or +clip_size.

    Inputs must already be clamped to [-clip_size, +clip_size]; the
    expected output is the input shrunk by a factor
    (e^eps - 1) / (e^eps + 1).
    """
    u_bar = _as_finite_vector(u_bar, "clipped projection")
    if not clip_size > 0:
        raise ValueError(f"clip_size must be positive, got {clip_size}")
    if not 0 < eps_per_dim < math.inf:
        raise ValueError(f"eps_per_dim must be positive and finite, got {eps_per_dim}")
    if np.any(np.abs(u_bar) > clip_size):
        raise ValueError("coordinates must be clamped to the clip range before flipping")
    p_plus = flip_probability(u_bar, clip_size, eps_per_dim)
    return np.where(rng.random(u_bar.shape[0]) < p_plus, clip_size, -clip_size)


def prs_perturb(g, cfg: MechanismConfig, rng: np.random.Generator) -> np.ndarray:
    """Project, clamp, flip signs coordinate-wise, and map back.

    A fresh projection matrix is drawn on every call and never leaves
    this function; only the back-projected sign vector is released.
    Each of the reduced_dim sign flips spends an equal share of the
    per-round budget.
    """
    if cfg.kind is not MechanismKind.PRS:
        raise ValueError(f"config kind is {cfg.kind}, expected PRS")
    g = _as_finite_vector(g, "gradient")
    if g.shape[0] != cfg.dim:
        raise ValueError(f"gradient has length {g.shape[0]}, config says {cfg.dim}")
    m = make_projection_matrix(cfg.dim, cfg.reduced_dim, rng)
    u = m @ g
    u_bar = clip_elementwise(u, cfg.clip_size)
    u_tilde = bit_flip(u_bar, cfg.clip_size, cfg.eps_per_dim, rng)
    return m.T @ u_tilde
