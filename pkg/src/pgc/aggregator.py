"""Host of the global parameters: buffers incoming gradients, applies
the averaged descent step once the buffer is full, and hands out
consistent snapshots.

The update reads nothing an agent sent except the gradient itself;
scores and agent ids stop at the caller.
"""

from __future__ import annotations

import threading

import numpy as np

from .agent import Submission
from .model import ModelParams, unflatten


class CentralAggregator:
    """Thread-safe: every mutation runs inside one critical section."""

    def __init__(self, params: ModelParams, eta: float = 0.5, max_buf: int = 1):
        if not eta > 0:
            raise ValueError(f"learning rate must be positive, got {eta}")
        if max_buf < 1:
            raise ValueError(f"max_buf must be at least 1, got {max_buf}")
        self.eta = eta
        self.max_buf = max_buf
        self._params = params.copy()
        self._buffer: list[np.ndarray] = []
        self._count = 0
        self._updates = 0
        self._lock = threading.Lock()

    def receive(self, submission: Submission) -> int:
        """Buffer one gradient and return its arrival index (1-based).

        Filling the buffer to max_buf triggers the averaged update and
        flushes it; arrivals during an update wait on the lock.
        """
        grad = np.asarray(submission.noisy_gradient, dtype=float)
        with self._lock:
            self._buffer.append(grad)
            self._count += 1
            if len(self._buffer) >= self.max_buf:
                self._apply_update_locked()
            return self._count

    def apply_update(self) -> None:
        """Force the averaged descent step on a non-empty buffer."""
        with self._lock:
            if not self._buffer:
                raise ValueError("cannot update from an empty buffer")
            self._apply_update_locked()

    def _apply_update_locked(self) -> None:
        mean_grad = np.mean(self._buffer, axis=0)
        self._params = unflatten(self._params.flatten() - self.eta * mean_grad)
        self._buffer.clear()
        self._updates += 1

    def snapshot(self) -> tuple[ModelParams, int]:
        """Copy of the parameters plus the submission count, atomically."""
        with self._lock:
            return self._params.copy(), self._count

    @property
    def submission_count(self) -> int:
        with self._lock:
            return self._count

    @property
    def update_count(self) -> int:
        with self._lock:
            return self._updates

    @property
    def buffer_size(self) -> int:
        with self._lock:
            return len(self._buffer)
