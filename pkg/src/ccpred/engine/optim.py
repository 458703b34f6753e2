"""Adam optimizer and step learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import ParameterSet


@dataclass
class AdamState:
    """Per-parameter moment estimates plus the step counter."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: ParameterSet, lr: float = 1e-3) -> "AdamState":
        state = cls(lr=lr)
        for name, tensor in params.tensors.items():
            state.first_moment[name] = np.zeros_like(tensor.data)
            state.second_moment[name] = np.zeros_like(tensor.data)
        return state


def adam_step(params: ParameterSet, state: AdamState,
              lr: float | None = None) -> None:
    """One Adam update with bias correction, in place.

    ``lr`` overrides the stored rate for this step (used by schedules);
    parameters with missing gradients are treated as zero-gradient.
    """
    rate = state.lr if lr is None else lr
    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for name, tensor in params.tensors.items():
        grad = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        tensor.data = tensor.data - rate * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass(frozen=True)
class StepLR:
    """Geometric decay every ``step_size`` epochs, floored at ``final_lr``."""

    initial_lr: float
    gamma: float = 0.5
    step_size: int = 100
    final_lr: float = 1e-4

    def __post_init__(self):
        if self.step_size < 1:
            raise ValueError("step_size must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")

    def lr(self, epoch: int) -> float:
        value = self.initial_lr * self.gamma ** (epoch // self.step_size)
        return max(value, self.final_lr)
